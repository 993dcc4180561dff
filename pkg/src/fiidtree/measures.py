"""Finite spectral measures on [-d, d] for the d-regular tree.

A :class:`SpectralMeasure` is a finite list of atoms plus a density with
respect to the Kesten-McKay measure ``nu``. Since ``nu`` has no atoms the two
parts are mutually singular, which makes total variation and Hellinger
affinity computable in closed form (up to quadrature of the density part).
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import ClassVar, NamedTuple

import numpy as np

from .dunau import dunau_series
from .graph_spectrum import QuadratureRule, TreeModel, default_rule, integrate

__all__ = [
    "Atom",
    "Classification",
    "Constant",
    "DensitySpec",
    "DunauSeries",
    "GaussMarkov",
    "GreenFunction",
    "SpecParseError",
    "SpectralMeasure",
    "SquaredDunauSeries",
    "classify",
    "density_from_document",
    "gauss_markov_density",
    "gauss_markov_is_fiid",
    "green_density",
    "hellinger_affinity",
    "moment",
    "total_mass",
    "tv_distance",
]

# rounding slack when checking a density for nonnegativity at quadrature nodes
NEGATIVE_TOLERANCE = 1e-12


class SpecParseError(ValueError):
    """A measure document is malformed; ``field`` locates the bad entry."""

    def __init__(self, message, field=None, line=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
        self.field = field
        self.line = line


# closed-form densities ---------------------------------------------------------

def _gm_admissible(d: int, rho: float) -> bool:
    if d == 2:
        return abs(rho) < 1.0
    return abs(rho) <= 1.0 / math.sqrt(d - 1)


def gauss_markov_is_fiid(d: int, rho: float) -> bool:
    """Whether the Gauss-Markov process with ``cov(X_o, X_v) = rho^|v|`` is
    a factor of i.i.d. on T_d, i.e. ``|rho| <= 1/sqrt(d-1)``."""
    if d == 2:
        raise ValueError(
            "d = 2 is unsupported: the Gauss-Markov threshold is established for d >= 3, "
            "and on the line the endpoint density is not integrable against the arcsine law"
        )
    if d < 2:
        raise ValueError(f"degree must be >= 3, got {d}")
    if abs(rho) > 1:
        raise ValueError(f"|rho| must be <= 1, got {rho}")
    return abs(rho) <= 1.0 / math.sqrt(d - 1)


def gauss_markov_density(d: int, rho: float, x):
    """Density w.r.t. ``nu`` of the spectral measure of the Gauss-Markov process.

    Equals ``sum_k rho^k r_k(x) = (1 - rho^2) / (1 + rho^2 (d-1) - rho x)``,
    so that the covariance at distance n is exactly ``rho^n`` and the total
    mass is 1. At ``|rho| = 1/sqrt(d-1)`` the density blows up at one edge of
    the support but stays ``nu``-integrable.
    """
    TreeModel(d)
    if not _gm_admissible(d, rho):
        raise ValueError(f"rho={rho} outside the admissible range for d={d}")
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        v = (1.0 - rho * rho) / (1.0 + rho * rho * (d - 1) - rho * x)
    return float(v) if v.ndim == 0 else v


def green_density(d: int, x):
    """``d / (d - x)``: density of the Gaussian free field's spectral measure."""
    if d < 3:
        raise ValueError(f"green_density needs a transient tree (d >= 3), got d={d}")
    x = np.asarray(x, dtype=float)
    v = d / (d - x)
    return float(v) if v.ndim == 0 else v


# density specifications --------------------------------------------------------

class DensitySpec:
    """Base class of densities with respect to ``nu``.

    Subclasses are frozen dataclasses; ``evaluate(d, x)`` is vectorised.
    """

    kind: ClassVar[str]

    def evaluate(self, d: int, x):
        raise NotImplementedError

    def validate(self, d: int) -> None:
        """Raise ``ValueError`` if the parameters make no sense for degree d."""

    def parameters(self) -> dict:
        raise NotImplementedError

    def is_zero(self) -> bool:
        return False

    def to_document(self) -> dict:
        return {"kind": self.kind, "parameters": self.parameters()}


@dataclass(frozen=True)
class Constant(DensitySpec):
    value: float = 1.0
    kind: ClassVar[str] = "constant"

    def __post_init__(self):
        if not math.isfinite(self.value) or self.value < 0:
            raise ValueError(f"constant density must be finite and >= 0, got {self.value}")
        object.__setattr__(self, "value", float(self.value))

    def evaluate(self, d, x):
        return np.full(np.shape(x), self.value)

    def parameters(self):
        return {"value": self.value}

    def is_zero(self):
        return self.value == 0.0


@dataclass(frozen=True)
class GaussMarkov(DensitySpec):
    rho: float
    kind: ClassVar[str] = "gauss_markov"

    def __post_init__(self):
        object.__setattr__(self, "rho", float(self.rho))

    def validate(self, d):
        if not _gm_admissible(d, self.rho):
            bound = "1" if d == 2 else f"1/sqrt({d - 1})"
            raise ValueError(
                f"GaussMarkov(rho={self.rho}) is not a finite spectral density for d={d}: need |rho| <= {bound}"
            )

    def evaluate(self, d, x):
        return gauss_markov_density(d, self.rho, x)

    def parameters(self):
        return {"rho": self.rho}


@dataclass(frozen=True)
class GreenFunction(DensitySpec):
    kind: ClassVar[str] = "green"

    def validate(self, d):
        if d < 3:
            raise ValueError("the Green function density needs a transient tree (d >= 3)")

    def evaluate(self, d, x):
        return green_density(d, x)

    def parameters(self):
        return {}


def _coefficient_tuple(coefficients) -> tuple[float, ...]:
    c = tuple(float(v) for v in coefficients)
    if not all(math.isfinite(v) for v in c):
        raise ValueError("series coefficients must be finite")
    return c


@dataclass(frozen=True)
class DunauSeries(DensitySpec):
    """``sum_n c_n r_n``. Not sign-definite in general."""

    coefficients: tuple[float, ...]
    kind: ClassVar[str] = "dunau_series"

    def __post_init__(self):
        object.__setattr__(self, "coefficients", _coefficient_tuple(self.coefficients))

    def evaluate(self, d, x):
        return dunau_series(d, self.coefficients, x)

    def parameters(self):
        return {"coefficients": list(self.coefficients)}

    def is_zero(self):
        return not any(self.coefficients)


@dataclass(frozen=True)
class SquaredDunauSeries(DensitySpec):
    """``(sum_n c_n r_n)^2``; the spectral density of the linear factor with
    radial coefficients ``c_n``."""

    coefficients: tuple[float, ...]
    kind: ClassVar[str] = "squared_dunau_series"

    def __post_init__(self):
        object.__setattr__(self, "coefficients", _coefficient_tuple(self.coefficients))

    def evaluate(self, d, x):
        return dunau_series(d, self.coefficients, x) ** 2

    def parameters(self):
        return {"coefficients": list(self.coefficients)}

    def is_zero(self):
        return not any(self.coefficients)


_DENSITY_KINDS = {cls.kind: cls for cls in (Constant, GaussMarkov, GreenFunction, DunauSeries, SquaredDunauSeries)}


def density_from_document(doc, path="density") -> DensitySpec:
    if not isinstance(doc, dict):
        raise SpecParseError("density must be an object", field=path)
    kind = doc.get("kind")
    if kind not in _DENSITY_KINDS:
        raise SpecParseError(f"unknown density kind {kind!r}; expected one of {sorted(_DENSITY_KINDS)}",
                             field=f"{path}.kind")
    params = doc.get("parameters", {})
    if not isinstance(params, dict):
        raise SpecParseError("parameters must be an object", field=f"{path}.parameters")
    cls = _DENSITY_KINDS[kind]
    try:
        if cls is Constant:
            return Constant(_number(params.get("value", 1.0), f"{path}.parameters.value"))
        if cls is GaussMarkov:
            if "rho" not in params:
                raise SpecParseError("missing rho", field=f"{path}.parameters.rho")
            return GaussMarkov(_number(params["rho"], f"{path}.parameters.rho"))
        if cls is GreenFunction:
            return GreenFunction()
        coeffs = params.get("coefficients")
        if not isinstance(coeffs, list) or not coeffs:
            raise SpecParseError("coefficients must be a non-empty list", field=f"{path}.parameters.coefficients")
        return cls(tuple(_number(c, f"{path}.parameters.coefficients[{i}]") for i, c in enumerate(coeffs)))
    except SpecParseError:
        raise
    except ValueError as exc:
        raise SpecParseError(str(exc), field=f"{path}.parameters") from exc


def _number(value, path) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SpecParseError(f"expected a number, got {value!r}", field=path)
    return float(value)


# measures ----------------------------------------------------------------------

class Atom(NamedTuple):
    location: float
    mass: float


class Classification(str, enum.Enum):
    FACTOR_OF_IID = "FactorOfIID"
    WEAK_LIMIT_ONLY = "WeakLimitOnly"
    NOT_WEAK_LIMIT = "NotWeakLimit"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class SpectralMeasure:
    """Atoms plus a density with respect to the Kesten-McKay measure.

    Construction validates the atoms and checks, on the default quadrature
    rule, that the density is finite and nonnegative at every node.
    """

    degree: int
    atoms: tuple[Atom, ...] = ()
    density: DensitySpec = field(default_factory=lambda: Constant(0.0))

    def __post_init__(self):
        d = TreeModel(self.degree).degree
        object.__setattr__(self, "degree", d)
        atoms = tuple(Atom(float(a[0]), float(a[1])) for a in self.atoms)
        locs = [a.location for a in atoms]
        if len(set(locs)) != len(locs):
            raise ValueError("atom locations must be pairwise distinct")
        for a in atoms:
            if not (math.isfinite(a.location) and abs(a.location) <= d):
                raise ValueError(f"atom location {a.location} outside [-{d}, {d}]")
            if not (math.isfinite(a.mass) and a.mass > 0):
                raise ValueError(f"atom mass must be positive and finite, got {a.mass}")
        object.__setattr__(self, "atoms", tuple(sorted(atoms)))
        if not isinstance(self.density, DensitySpec):
            raise TypeError(f"density must be a DensitySpec, got {type(self.density).__name__}")
        self.density.validate(d)
        if not self.density.is_zero():
            rule = default_rule(d)
            vals = np.asarray(self.density.evaluate(d, rule.nodes), dtype=float)
            if not np.all(np.isfinite(vals)):
                raise ValueError("density is not finite at every quadrature node")
            if vals.min() < -NEGATIVE_TOLERANCE:
                i = int(np.argmin(vals))
                raise ValueError(f"density is negative ({vals[i]:.3e}) at t={rule.nodes[i]:.6f}")

    # constructors
    @classmethod
    def kesten_mckay(cls, d: int) -> "SpectralMeasure":
        return cls(d, (), Constant(1.0))

    @classmethod
    def dirac(cls, d: int, location: float, mass: float = 1.0) -> "SpectralMeasure":
        return cls(d, (Atom(location, mass),), Constant(0.0))

    @classmethod
    def gauss_markov(cls, d: int, rho: float) -> "SpectralMeasure":
        return cls(d, (), GaussMarkov(rho))

    @classmethod
    def green(cls, d: int) -> "SpectralMeasure":
        return cls(d, (), GreenFunction())

    @classmethod
    def from_density(cls, d: int, density: DensitySpec) -> "SpectralMeasure":
        return cls(d, (), density)

    def density_values(self, t) -> np.ndarray:
        """Density clipped at 0 (removes rounding-level negative values)."""
        if self.density.is_zero():
            return np.zeros(np.shape(t))
        return np.maximum(np.asarray(self.density.evaluate(self.degree, t), dtype=float), 0.0)

    # serialisation
    def to_document(self) -> dict:
        return {
            "degree": self.degree,
            "atoms": [{"location": a.location, "mass": a.mass} for a in self.atoms],
            "density": self.density.to_document(),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_document(), indent=2)

    @classmethod
    def from_document(cls, doc) -> "SpectralMeasure":
        if not isinstance(doc, dict):
            raise SpecParseError("measure document must be an object")
        unknown = set(doc) - {"degree", "atoms", "density"}
        if unknown:
            raise SpecParseError(f"unknown keys {sorted(unknown)}", field=sorted(unknown)[0])
        if "degree" not in doc:
            raise SpecParseError("missing degree", field="degree")
        d = doc["degree"]
        if isinstance(d, bool) or not isinstance(d, int) or d < 2:
            raise SpecParseError(f"degree must be an integer >= 2, got {d!r}", field="degree")
        raw_atoms = doc.get("atoms", [])
        if not isinstance(raw_atoms, list):
            raise SpecParseError("atoms must be a list", field="atoms")
        atoms = []
        for i, a in enumerate(raw_atoms):
            if not isinstance(a, dict) or set(a) != {"location", "mass"}:
                raise SpecParseError("atom must be an object with location and mass", field=f"atoms[{i}]")
            atoms.append(Atom(_number(a["location"], f"atoms[{i}].location"), _number(a["mass"], f"atoms[{i}].mass")))
        density = density_from_document(doc["density"]) if "density" in doc else Constant(0.0)
        try:
            return cls(d, tuple(atoms), density)
        except ValueError as exc:
            raise SpecParseError(str(exc)) from exc

    @classmethod
    def loads(cls, text: str) -> "SpectralMeasure":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SpecParseError(f"invalid JSON: {exc.msg}", line=exc.lineno) from exc
        return cls.from_document(doc)


def _rule_for(mu: SpectralMeasure, rule: QuadratureRule | None) -> QuadratureRule:
    if rule is None:
        return default_rule(mu.degree)
    if rule.degree != mu.degree:
        raise ValueError(f"rule degree {rule.degree} != measure degree {mu.degree}")
    return rule


def _check_same_degree(mu1: SpectralMeasure, mu2: SpectralMeasure):
    if mu1.degree != mu2.degree:
        raise ValueError(f"degree mismatch: {mu1.degree} vs {mu2.degree}")


def total_mass(mu: SpectralMeasure, rule: QuadratureRule | None = None) -> float:
    """Atom masses plus the integral of the density; equals ``E X_o^2``."""
    rule = _rule_for(mu, rule)
    mass = sum(a.mass for a in mu.atoms)
    if not mu.density.is_zero():
        mass += integrate(rule, mu.density_values)
    return mass


def moment(mu: SpectralMeasure, k: int, rule: QuadratureRule | None = None) -> float:
    """``integral t^k dmu``."""
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    rule = _rule_for(mu, rule)
    value = sum(a.mass * a.location ** k for a in mu.atoms)
    if not mu.density.is_zero():
        value += integrate(rule, lambda t: t ** k * mu.density_values(t))
    return value


def tv_distance(mu1: SpectralMeasure, mu2: SpectralMeasure, rule: QuadratureRule | None = None) -> float:
    """Total variation distance ``(1/2) integral |f - g| dkappa``."""
    _check_same_degree(mu1, mu2)
    rule = _rule_for(mu1, rule)
    m1 = dict(mu1.atoms)
    m2 = dict(mu2.atoms)
    atomic = sum(abs(m1.get(t, 0.0) - m2.get(t, 0.0)) for t in set(m1) | set(m2))
    continuous = 0.0
    if not (mu1.density.is_zero() and mu2.density.is_zero()):
        continuous = integrate(rule, lambda t: np.abs(mu1.density_values(t) - mu2.density_values(t)))
    return 0.5 * (atomic + continuous)


def hellinger_affinity(mu1: SpectralMeasure, mu2: SpectralMeasure, rule: QuadratureRule | None = None) -> float:
    """``integral sqrt(f g) dkappa`` over a common dominating measure."""
    _check_same_degree(mu1, mu2)
    rule = _rule_for(mu1, rule)
    m2 = dict(mu2.atoms)
    atomic = sum(math.sqrt(m * m2[t]) for t, m in mu1.atoms if t in m2)
    continuous = 0.0
    if not (mu1.density.is_zero() or mu2.density.is_zero()):
        continuous = integrate(rule, lambda t: np.sqrt(mu1.density_values(t) * mu2.density_values(t)))
    return atomic + continuous


def classify(mu: SpectralMeasure, rule: QuadratureRule | None = None) -> Classification:
    """Which invariant processes can have spectral measure ``mu``.

    * no atoms (``mu`` absolutely continuous w.r.t. ``nu``): factor of i.i.d.;
    * atoms, all inside ``[-2 sqrt(d-1), 2 sqrt(d-1)]``: weak limit of factors only;
    * an atom outside the support of ``nu``: not even a weak limit.
    """
    if total_mass(mu, rule) <= 0:
        raise ValueError("classification of the zero measure is undefined")
    if not mu.atoms:
        return Classification.FACTOR_OF_IID
    radius = TreeModel(mu.degree).spectral_radius
    if all(abs(a.location) <= radius for a in mu.atoms):
        return Classification.WEAK_LIMIT_ONLY
    return Classification.NOT_WEAK_LIMIT
