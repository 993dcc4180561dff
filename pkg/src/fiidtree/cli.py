"""Command line front end.

Subcommands: ``spectrum``, ``synthesize``, ``simulate``, ``dbar``,
``classify``. Exit status is 0 when every check passes, 1 when a check fails
(or a request is refused on mathematical grounds), 2 on usage or parse errors.

Measures are read from a JSON document (``--spec FILE``) or given inline as
comma-separated terms, e.g. ``--measure gauss_markov=0.5`` or
``--measure atom=2.0:0.5,constant=1``. Inline terms:

    atom=LOC[:MASS]          point mass (default mass 1)
    constant=C               density C with respect to nu
    gauss_markov=RHO         Gauss-Markov density
    green                    Gaussian free field density d/(d-x)
    dunau_series=C0;C1;...   density sum_n c_n r_n
    squared_dunau_series=... density (sum_n c_n r_n)^2
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import dbar as dbar_mod
from .dunau import sphere_size
from .graph_spectrum import TreeModel, build_quadrature, closed_walk_counts, integrate, kesten_mckay_density
from .measures import (
    Atom,
    Classification,
    Constant,
    DunauSeries,
    GaussMarkov,
    GreenFunction,
    SpecParseError,
    SpectralMeasure,
    SquaredDunauSeries,
    classify,
    gauss_markov_is_fiid,
    hellinger_affinity,
    total_mass,
    tv_distance,
)
from .simulate import (
    BranchingMarkovSampler,
    GaussMarkovSampler,
    IIDSampler,
    LinearFactorSampler,
    MarkovSpec,
    build_tree,
    covariance_table,
    format_covariance_table,
)
from .transforms import DEFAULT_RADIUS, covariance_sequence, read_coefficients, synthesize_coefficients, \
    truncation_error, write_coefficients

EXIT_OK, EXIT_CHECK_FAILED, EXIT_USAGE = 0, 1, 2
MOMENT_TOLERANCE = 1e-8


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    """Validated parameters shared by the subcommands."""

    command: str
    d: int
    seed: int = 0
    samples: int = 100_000
    depth: int = 8
    radius: int = DEFAULT_RADIUS
    nodes: int = 4096
    format: str = "table"
    out: str | None = None

    def validate(self):
        if self.d < 2:
            raise UsageError(f"--d must be >= 2, got {self.d}")
        if self.seed < 0 or self.seed >= 2 ** 64:
            raise UsageError("--seed must lie in [0, 2**64)")
        if self.samples < 2:
            raise UsageError("--samples must be >= 2")
        if self.depth < 0:
            raise UsageError("--depth must be >= 0")
        if self.radius < 0:
            raise UsageError("--radius must be >= 0")
        if self.nodes < 2:
            raise UsageError("--nodes must be >= 2")
        if self.format not in ("table", "doc"):
            raise UsageError("--format must be 'table' or 'doc'")
        return self


# measure input -----------------------------------------------------------------

def _float(text, what):
    try:
        value = float(text)
    except ValueError:
        raise SpecParseError(f"expected a number, got {text!r}", field=what) from None
    if not math.isfinite(value):
        raise SpecParseError(f"expected a finite number, got {text!r}", field=what)
    return value


def parse_inline_measure(d: int, text: str) -> SpectralMeasure:
    """Parse the inline measure syntax described in the module docstring."""
    atoms = []
    density = None
    for i, term in enumerate(t.strip() for t in text.split(",")):
        if not term:
            continue
        key, _, value = term.partition("=")
        key = key.strip()
        where = f"term {i + 1} ({key})"
        if key == "atom":
            loc, _, mass = value.partition(":")
            atoms.append(Atom(_float(loc, where), _float(mass, where) if mass else 1.0))
            continue
        if density is not None:
            raise SpecParseError("at most one density term is allowed", field=where)
        try:
            if key == "constant":
                density = Constant(_float(value, where))
            elif key == "gauss_markov":
                density = GaussMarkov(_float(value, where))
            elif key == "green":
                density = GreenFunction()
            elif key in ("dunau_series", "squared_dunau_series"):
                coeffs = tuple(_float(c, where) for c in value.split(";") if c.strip())
                if not coeffs:
                    raise SpecParseError("empty coefficient list", field=where)
                density = (DunauSeries if key == "dunau_series" else SquaredDunauSeries)(coeffs)
            else:
                raise SpecParseError(f"unknown term {key!r}", field=where)
        except SpecParseError:
            raise
        except ValueError as exc:
            raise SpecParseError(str(exc), field=where) from exc
    if not atoms and density is None:
        raise SpecParseError("empty measure")
    try:
        return SpectralMeasure(d, tuple(atoms), density if density is not None else Constant(0.0))
    except ValueError as exc:
        raise SpecParseError(str(exc)) from exc


def load_measure(d: int | None, spec_path: str | None, inline: str | None, label: str = "") -> SpectralMeasure:
    if (spec_path is None) == (inline is None):
        raise UsageError(f"give exactly one of --spec{label} FILE or --{label.strip('-') or 'measure'} TEXT")
    if spec_path is not None:
        try:
            text = Path(spec_path).read_text()
        except OSError as exc:
            raise UsageError(f"cannot read {spec_path}: {exc.strerror}") from None
        mu = SpectralMeasure.loads(text)
        if d is not None and mu.degree != d:
            raise UsageError(f"{spec_path} has degree {mu.degree} but --d is {d}")
        return mu
    if d is None:
        raise UsageError("--d is required with inline measures")
    return parse_inline_measure(d, inline)


# output ------------------------------------------------------------------------

def _emit(cfg: RunConfig, table: str, doc: dict, out=None):
    text = table if cfg.format == "table" else json.dumps(doc, indent=2) + "\n"
    if cfg.out and out is None:
        Path(cfg.out).write_text(text)
    else:
        (out or sys.stdout).write(text)


def _fmt(x: float) -> str:
    return f"{x:.10g}"


# commands ----------------------------------------------------------------------

def cmd_spectrum(cfg: RunConfig, args) -> int:
    model = TreeModel(cfg.d)
    rule = build_quadrature(model, cfg.nodes)
    lines, doc, ok = [], {"degree": cfg.d, "spectral_radius": model.spectral_radius}, True
    if args.moments is not None:
        lines.append("k\tquadrature\twalk_count\tabs_err\trel_err\tpass")
        rows = []
        walks = closed_walk_counts(model, args.moments + 1)
        for k in range(args.moments + 1):
            w = walks[k]
            try:
                with np.errstate(over="ignore"):
                    q = integrate(rule, lambda t, k=k: t ** k)
                float(w)
            except (ValueError, OverflowError):
                raise UsageError(f"moment k={k} exceeds the float range; use a smaller --moments") from None
            err = abs(q - w)
            # odd moments vanish; measure their error against the even neighbour's scale
            scale = max(1, w, walks[k + 1] if k % 2 else 0)
            passed = err / scale <= MOMENT_TOLERANCE
            ok &= passed
            rows.append({"k": k, "quadrature": q, "walk_count": w, "abs_err": err, "rel_err": err / scale,
                         "pass": passed})
            lines.append(f"{k}\t{_fmt(q)}\t{w}\t{err:.3e}\t{err / scale:.3e}\t{str(passed).lower()}")
        doc["moments"] = rows
        doc["tolerance"] = MOMENT_TOLERANCE
    if args.density:
        if args.points < 2:
            raise UsageError("--points must be >= 2")
        r = model.spectral_radius
        ts = np.linspace(-r, r, args.points)
        hs = kesten_mckay_density(model, ts)
        if lines:
            lines.append("")
        lines.append("t\th")
        lines.extend(f"{_fmt(t)}\t{_fmt(h)}" for t, h in zip(ts, hs))
        doc["density"] = [{"t": float(t), "h": float(h)} for t, h in zip(ts, hs)]
    if args.moments is None and not args.density:
        raise UsageError("spectrum needs --moments K and/or --density")
    _emit(cfg, "\n".join(lines) + "\n", doc)
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def _refusal(mu: SpectralMeasure, cls: Classification) -> str:
    return (f"classification: {cls.value}: no factor-of-i.i.d. realization "
            f"(spectral measure has atoms at {[a.location for a in mu.atoms]}, so it is not absolutely "
            f"continuous with respect to the Kesten-McKay measure)")


def cmd_synthesize(cfg: RunConfig, args) -> int:
    mu = load_measure(cfg.d, args.spec, args.measure)
    rule = build_quadrature(mu.degree, cfg.nodes)
    cls = classify(mu, rule)
    if cls is not Classification.FACTOR_OF_IID:
        print(_refusal(mu, cls), file=sys.stderr)
        return EXIT_CHECK_FAILED
    coeffs = synthesize_coefficients(mu.density, cfg.radius, rule)
    err = truncation_error(mu.density, cfg.radius, rule, coefficients=coeffs)
    if cfg.format == "table":
        text = write_coefficients(coeffs, err)
    else:
        text = json.dumps({
            "degree": coeffs.degree, "radius": coeffs.radius, "truncation_error": err,
            "coefficients": [{"n": n, "a_n": float(a), "sphere_size": sphere_size(coeffs.degree, n)}
                             for n, a in enumerate(coeffs.values)],
        }, indent=2) + "\n"
    if cfg.out:
        Path(cfg.out).write_text(text)
        print(f"wrote {coeffs.radius + 1} coefficients to {cfg.out}; truncation_error {err:.3e}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _build_sampler(cfg: RunConfig, args):
    process = args.process
    if process in ("gauss-markov", "ising") and args.rho is None:
        raise UsageError(f"--rho is required for --process {process}")
    if process == "linear-factor":
        if args.coeffs is None:
            raise UsageError("--coeffs FILE is required for --process linear-factor")
        try:
            coeffs, _ = read_coefficients(Path(args.coeffs).read_text())
        except OSError as exc:
            raise UsageError(f"cannot read {args.coeffs}: {exc.strerror}") from None
        except ValueError as exc:
            raise SpecParseError(str(exc), field=args.coeffs) from exc
        if coeffs.degree != cfg.d:
            raise UsageError(f"coefficient file has degree {coeffs.degree} but --d is {cfg.d}")
        if coeffs.radius > cfg.depth:
            raise UsageError(f"--depth {cfg.depth} is smaller than the coefficient radius {coeffs.radius}")
        sampler = LinearFactorSampler(coeffs, cfg.depth)
        analytic = covariance_sequence(coeffs.spectral_measure(), sampler.valid_radius,
                                       build_quadrature(cfg.d, cfg.nodes)).values
        return sampler, analytic
    tree = build_tree(cfg.d, cfg.depth)
    n = np.arange(cfg.depth + 1)
    if process == "iid":
        return IIDSampler(tree), (n == 0).astype(float)
    if abs(args.rho) > 1:
        raise UsageError("--rho must satisfy |rho| <= 1")
    if process == "gauss-markov":
        return GaussMarkovSampler(tree, args.rho), args.rho ** n
    if process == "ising":
        spec = MarkovSpec.ising(args.rho)
        return BranchingMarkovSampler(tree, spec), spec.rho ** n
    raise UsageError(f"unknown process {process!r}")


def cmd_simulate(cfg: RunConfig, args) -> int:
    sampler, analytic = _build_sampler(cfg, args)
    max_n = sampler.valid_radius if args.max_n is None else args.max_n
    if max_n > sampler.valid_radius:
        raise UsageError(f"--max-n {max_n} exceeds the valid radius {sampler.valid_radius}")
    rows = covariance_table(sampler, analytic, cfg.samples, cfg.seed, max_n=max_n, workers=args.workers)
    doc = {"process": args.process, "degree": cfg.d, "depth": cfg.depth, "samples": cfg.samples,
           "seed": cfg.seed, "rows": [dict(asdict(r), tolerance=r.tolerance, passed=r.passed) for r in rows]}
    _emit(cfg, format_covariance_table(rows), doc)
    return EXIT_OK if all(r.passed for r in rows) else EXIT_CHECK_FAILED


def cmd_dbar(cfg: RunConfig, args) -> int:
    mx = load_measure(cfg.d, args.spec_x, args.x, "-x")
    my = load_measure(cfg.d, args.spec_y, args.y, "-y")
    if mx.degree != my.degree:
        raise UsageError(f"degree mismatch: {mx.degree} vs {my.degree}")
    rule = build_quadrature(mx.degree, cfg.nodes)
    vx, vy = total_mass(mx, rule), total_mass(my, rule)
    dtv = tv_distance(mx, my, rule)
    affinity = hellinger_affinity(mx, my, rule)
    bound = dbar_mod.dbar_lower_bound(vx, vy, min(dtv, 0.5 * (vx + vy)))
    orthogonal = affinity == 0.0
    doc = {"degree": mx.degree, "var_x": vx, "var_y": vy, "tv_distance": dtv, "hellinger_affinity": affinity,
           "dbar_lower_bound": bound, "orthogonal_in_every_coupling": orthogonal}
    table = "\n".join(f"{k}\t{v if isinstance(v, (bool, int)) else _fmt(v)}" for k, v in doc.items()) + "\n"
    _emit(cfg, table.replace("True", "true").replace("False", "false"), doc)
    return EXIT_OK


def _criterion(mu: SpectralMeasure, cls: Classification) -> str:
    r = TreeModel(mu.degree).spectral_radius
    if cls is Classification.FACTOR_OF_IID:
        return "no atoms: absolutely continuous with respect to the Kesten-McKay measure"
    locs = [a.location for a in mu.atoms]
    if cls is Classification.WEAK_LIMIT_ONLY:
        return f"atoms at {locs} all lie in the support [-{r:.6f}, {r:.6f}] but the measure is not absolutely continuous"
    outside = [t for t in locs if abs(t) > r]
    return f"atoms at {outside} lie outside the support [-{r:.6f}, {r:.6f}]"


def cmd_classify(cfg: RunConfig, args) -> int:
    mu = load_measure(cfg.d, args.spec, args.measure)
    cls = classify(mu, build_quadrature(mu.degree, cfg.nodes))
    doc = {"degree": mu.degree, "classification": cls.value, "criterion": _criterion(mu, cls)}
    if isinstance(mu.density, GaussMarkov) and mu.degree >= 3:
        doc["gauss_markov_threshold"] = 1 / math.sqrt(mu.degree - 1)
        doc["gauss_markov_is_fiid"] = gauss_markov_is_fiid(mu.degree, mu.density.rho)
    table = f"{cls.value}\n{doc['criterion']}\n"
    _emit(cfg, table, doc)
    return EXIT_OK


# parser ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--d", type=int, help="tree degree (>= 2)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--samples", type=int, default=100_000)
    common.add_argument("--depth", type=int, default=8)
    common.add_argument("--radius", type=int, default=DEFAULT_RADIUS, help="truncation radius R")
    common.add_argument("--nodes", type=int, default=4096, help="quadrature nodes")
    common.add_argument("--format", choices=("table", "doc"), default="table")
    common.add_argument("--out", metavar="PATH")

    parser = argparse.ArgumentParser(prog="fiidtree", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", parents=[common], help="Kesten-McKay density and moment check")
    p.add_argument("--moments", type=int, metavar="K")
    p.add_argument("--density", action="store_true")
    p.add_argument("--points", type=int, default=100)

    for name, helptext in (("synthesize", "linear factor coefficients for a density"),
                           ("classify", "factor-of-i.i.d. classification of a measure")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("--spec", metavar="FILE")
        p.add_argument("--measure", metavar="TEXT")

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo covariance check")
    p.add_argument("--process", choices=("iid", "gauss-markov", "ising", "linear-factor"), required=True)
    p.add_argument("--rho", type=float)
    p.add_argument("--coeffs", metavar="FILE")
    p.add_argument("--max-n", type=int)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("dbar", parents=[common], help="d-bar-2 lower bound for two measures")
    p.add_argument("--x", metavar="TEXT")
    p.add_argument("--y", metavar="TEXT")
    p.add_argument("--spec-x", metavar="FILE")
    p.add_argument("--spec-y", metavar="FILE")
    return parser


COMMANDS = {
    "spectrum": cmd_spectrum,
    "synthesize": cmd_synthesize,
    "simulate": cmd_simulate,
    "dbar": cmd_dbar,
    "classify": cmd_classify,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        d = args.d
        if d is None:
            if args.command in ("spectrum", "simulate"):
                raise UsageError("--d is required")
            spec = getattr(args, "spec", None) or getattr(args, "spec_x", None)
            d = SpectralMeasure.loads(Path(spec).read_text()).degree if spec else None
            if d is None:
                raise UsageError("--d is required with inline measures")
        cfg = RunConfig(args.command, d, args.seed, args.samples, args.depth, args.radius, args.nodes,
                        args.format, args.out).validate()
        if getattr(args, "workers", 1) < 1:
            raise UsageError("--workers must be >= 1")
        return COMMANDS[args.command](cfg, args)
    except (UsageError, SpecParseError) as exc:
        print(f"fiidtree {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"fiidtree {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"fiidtree {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
