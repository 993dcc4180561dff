"""Covariance structures, spectral densities and radial coefficients.

The Dunau polynomials turn the three objects into one another:

* a radial covariance ``c_n`` has spectral density ``sum_n c_n r_n``, and
  conversely ``c_n = (1/|S_n|) integral r_n dmu``;
* a nonnegative density ``g`` is realised by the linear factor of i.i.d.
  noise whose radial coefficients are the Dunau coefficients of ``sqrt(g)``;
  truncating at radius R gives spectral density ``(sum_{n<=R} a_n r_n)^2``.
"""
from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .dunau import dunau_values, sphere_size, sphere_sizes
from .graph_spectrum import QuadratureRule, TreeModel, default_rule, integrate, walk_distance_counts
from .measures import (
    NEGATIVE_TOLERANCE,
    DensitySpec,
    DunauSeries,
    SpectralMeasure,
    SquaredDunauSeries,
)

__all__ = [
    "BESSEL_SLACK",
    "DEFAULT_RADIUS",
    "CovarianceSequence",
    "RadialCoefficients",
    "covariance_from_measure",
    "covariance_sequence",
    "density_from_covariance",
    "dunau_expand",
    "moments_from_covariance",
    "read_coefficients",
    "synthesize_coefficients",
    "truncation_error",
    "write_coefficients",
]

DEFAULT_RADIUS = 40
BESSEL_SLACK = 1e-9


@dataclass(frozen=True)
class RadialCoefficients:
    """Radial function ``beta(v) = a_{|v|}`` supported in the ball of radius R."""

    degree: int
    values: np.ndarray

    def __post_init__(self):
        TreeModel(self.degree)
        v = np.array(self.values, dtype=float)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("coefficients must be a non-empty 1-d sequence")
        if not np.all(np.isfinite(v)):
            raise ValueError("coefficients must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def radius(self) -> int:
        return self.values.size - 1

    def l2_norm_squared(self) -> float:
        """``a_0^2 + sum_{n>=1} a_n^2 |S_n|``."""
        return float(np.dot(self.values ** 2, sphere_sizes(self.degree, self.radius)))

    def spectral_density(self) -> SquaredDunauSeries:
        return SquaredDunauSeries(tuple(self.values))

    def spectral_measure(self) -> SpectralMeasure:
        return SpectralMeasure.from_density(self.degree, self.spectral_density())

    def __sub__(self, other: "RadialCoefficients") -> "RadialCoefficients":
        if self.degree != other.degree:
            raise ValueError("degree mismatch")
        n = max(self.values.size, other.values.size)
        a = np.pad(self.values, (0, n - self.values.size))
        b = np.pad(other.values, (0, n - other.values.size))
        return RadialCoefficients(self.degree, a - b)


@dataclass(frozen=True)
class CovarianceSequence:
    """``c_n = cov(X_o, X_v)`` for ``|v| = n``, ``n = 0..N``."""

    degree: int
    values: np.ndarray

    def __post_init__(self):
        TreeModel(self.degree)
        v = np.array(self.values, dtype=float)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("covariances must be a non-empty 1-d sequence")
        if np.any(np.abs(v) > abs(v[0]) * (1 + 1e-12) + 1e-15):
            raise ValueError("covariance sequence violates |c_n| <= c_0")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def radius(self) -> int:
        return self.values.size - 1

    def l2_norm_squared(self) -> float:
        return float(np.dot(self.values ** 2, sphere_sizes(self.degree, self.radius)))


def _rule(d: int, rule: QuadratureRule | None) -> QuadratureRule:
    if rule is None:
        return default_rule(d)
    if rule.degree != d:
        raise ValueError(f"rule degree {rule.degree} != {d}")
    return rule


def covariance_from_measure(mu: SpectralMeasure, n: int, rule: QuadratureRule | None = None) -> float:
    """``c(n) = (1/|S_n|) integral r_n dmu``."""
    return float(covariance_sequence(mu, n, rule).values[n])


def covariance_sequence(mu: SpectralMeasure, max_n: int, rule: QuadratureRule | None = None) -> CovarianceSequence:
    """All covariances ``c(0..max_n)`` of a process with spectral measure ``mu``."""
    if max_n < 0:
        raise ValueError(f"n must be >= 0, got {max_n}")
    d = mu.degree
    rule = _rule(d, rule)
    totals = np.zeros(max_n + 1)
    for a in mu.atoms:
        totals += a.mass * dunau_values(d, max_n, a.location)
    if not mu.density.is_zero():
        r = dunau_values(d, max_n, rule.nodes)
        totals += r @ (rule.weights * mu.density_values(rule.nodes))
    return CovarianceSequence(d, totals / sphere_sizes(d, max_n))


def moments_from_covariance(c: CovarianceSequence, k: int) -> float:
    """``<A^k delta_o, c> = sum_n W_k(n) c_n`` with exact walk counts ``W_k``.

    ``W_k(n)`` is the number of length-k walks from the root ending at
    distance n; this equals ``integral t^k dmu`` for the process with
    covariance ``c``.
    """
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    if k > c.radius:
        raise ValueError(f"k={k} exceeds the covariance radius {c.radius}")
    counts = walk_distance_counts(c.degree, k)
    try:
        # parity: only n with n = k (mod 2) are reachable
        return float(sum(w * float(c.values[n]) for n, w in enumerate(counts) if w))
    except OverflowError:
        raise OverflowError(f"walk counts for k={k} exceed the float range") from None


def dunau_expand(f: Callable, N: int, rule: QuadratureRule) -> np.ndarray:
    """Dunau coefficients ``c_n = (integral f r_n dnu) / |S_n|`` for n = 0..N.

    ``f`` is evaluated at the rule's nodes (vectorised). The result is the
    ``L^2(nu)`` projection of ``f`` onto polynomials of degree <= N.
    """
    if N < 0:
        raise ValueError(f"N must be >= 0, got {N}")
    values = np.asarray(f(rule.nodes), dtype=float)
    if values.ndim == 0:
        values = np.full(rule.nodes.shape, float(values))
    bad = ~np.isfinite(values)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise ValueError(f"function is not finite at node t={rule.nodes[i]!r}")
    integrate(rule, lambda _: values ** 2)  # raises on overflow
    r = dunau_values(rule.degree, N, rule.nodes)
    return (r @ (rule.weights * values)) / sphere_sizes(rule.degree, N)


def _density_on_nodes(g: DensitySpec, rule: QuadratureRule) -> np.ndarray:
    d = rule.degree
    g.validate(d)
    vals = np.asarray(g.evaluate(d, rule.nodes), dtype=float)
    if vals.ndim == 0:
        vals = np.full(rule.nodes.shape, float(vals))
    if not np.all(np.isfinite(vals)):
        raise ValueError("density is not finite at every quadrature node")
    if vals.min() < -NEGATIVE_TOLERANCE:
        i = int(np.argmin(vals))
        raise ValueError(f"invalid density: value {vals[i]:.3e} < 0 at t={rule.nodes[i]:.6f}")
    return np.maximum(vals, 0.0)


def synthesize_coefficients(g: DensitySpec, R: int = DEFAULT_RADIUS, rule: QuadratureRule | None = None,
                            *, degree: int | None = None) -> RadialCoefficients:
    """Radial coefficients of a linear factor of i.i.d. with spectral density ``~g``.

    The coefficients are the Dunau coefficients of ``sqrt(g)`` up to radius
    ``R``: because ``r_n(A) delta_o`` is the sphere indicator, the expansion
    coefficient of ``r_n`` is the weight given to every vertex at distance n.
    The realised spectral density is ``(sum_{n<=R} a_n r_n)^2``.

    Either ``rule`` or ``degree`` must identify the tree.
    """
    if rule is None:
        if degree is None:
            raise ValueError("pass a quadrature rule or a degree")
        rule = default_rule(degree)
    elif degree is not None and degree != rule.degree:
        raise ValueError(f"degree {degree} != rule degree {rule.degree}")
    root = np.sqrt(_density_on_nodes(g, rule))
    return RadialCoefficients(rule.degree, dunau_expand(lambda _: root, R, rule))


def truncation_error(g: DensitySpec, R: int = DEFAULT_RADIUS, rule: QuadratureRule | None = None,
                     *, degree: int | None = None, coefficients: RadialCoefficients | None = None) -> float:
    """Parseval residual ``integral g dnu - sum_{n<=R} a_n^2 |S_n|`` (clamped at 0).

    By Bessel's inequality this is nonnegative up to quadrature error and
    nonincreasing in ``R``; it is the squared ``L^2(nu)`` distance between
    ``sqrt(g)`` and its degree-R projection.
    """
    if rule is None:
        if degree is None:
            raise ValueError("pass a quadrature rule or a degree")
        rule = default_rule(degree)
    vals = _density_on_nodes(g, rule)
    if coefficients is None:
        coefficients = synthesize_coefficients(g, R, rule)
    mass = float(np.dot(rule.weights, vals))
    residual = mass - coefficients.l2_norm_squared()
    if residual < -BESSEL_SLACK * max(1.0, mass):
        raise ArithmeticError(f"Bessel inequality violated by {residual:.3e}; refine the quadrature rule")
    return max(residual, 0.0)


def density_from_covariance(c: CovarianceSequence, budget: float | None = None) -> DunauSeries:
    """Density ``sum_n c_n r_n`` of the spectral measure with covariance ``c``.

    The series represents an ``L^2(nu)`` function only while
    ``sum_n c_n^2 |S_n|`` stays bounded (see
    :meth:`CovarianceSequence.l2_norm_squared`); with ``budget`` set, a
    larger value raises ``ValueError``.
    """
    if budget is not None:
        norm = c.l2_norm_squared()
        if not norm < budget:
            raise ValueError(f"sum c_n^2 |S_n| = {norm:.6g} exceeds the budget {budget:.6g}")
    return DunauSeries(tuple(c.values))


# coefficient export ------------------------------------------------------------

def write_coefficients(coeffs: RadialCoefficients, truncation_err: float, stream=None) -> str:
    """Tab-separated table ``n, a_n, sphere_size`` with ``#`` header lines."""
    out = io.StringIO()
    out.write(f"# degree\t{coeffs.degree}\n")
    out.write(f"# radius\t{coeffs.radius}\n")
    out.write(f"# truncation_error\t{truncation_err!r}\n")
    out.write("n\ta_n\tsphere_size\n")
    for n, a in enumerate(coeffs.values):
        out.write(f"{n}\t{float(a)!r}\t{sphere_size(coeffs.degree, n)}\n")
    text = out.getvalue()
    if stream is not None:
        stream.write(text)
    return text


def read_coefficients(text: str) -> tuple[RadialCoefficients, float]:
    """Inverse of :func:`write_coefficients`."""
    header = {}
    rows = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("\t")
            header[key.strip()] = value.strip()
            continue
        if line.startswith("n\t"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise ValueError(f"line {lineno}: expected 3 tab-separated fields")
        n, a = int(parts[0]), float(parts[1])
        if n != len(rows):
            raise ValueError(f"line {lineno}: expected n={len(rows)}, got {n}")
        rows.append(a)
    try:
        d = int(header["degree"])
        err = float(header["truncation_error"])
    except KeyError as exc:
        raise ValueError(f"missing header field {exc.args[0]!r}") from None
    coeffs = RadialCoefficients(d, rows)
    if "radius" in header and int(header["radius"]) != coeffs.radius:
        raise ValueError("radius header does not match the number of rows")
    return coeffs, err
