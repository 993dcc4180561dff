"""Computable bounds around the d-bar-2 distance of invariant processes.

``dbar_2(X, Y)^2`` is the infimum of ``E[(X_o - Y_o)^2]`` over invariant
couplings. It is not computed here; instead this module provides

* the lower bound in terms of variances and the total variation distance
  of the spectral measures (:func:`dbar_lower_bound`),
* the universal bound on ``|E X_o Y_o|`` (:func:`coupling_product_bound`),
* Monte Carlo upper-bound witnesses from explicit couplings
  (:func:`empirical_dbar_witness`).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graph_spectrum import QuadratureRule, integrate
from .measures import DensitySpec, SpectralMeasure, hellinger_affinity
from .simulate import BLOCK_SIZE, PASS_SIGMAS, LinearFactorSampler, _map_blocks, _mean_se
from .transforms import RadialCoefficients

__all__ = [
    "Delta1Result",
    "LinearFactorPair",
    "coupling_product_bound",
    "dbar_lower_bound",
    "delta1_check",
    "empirical_dbar_witness",
    "sandwich_holds",
]

DELTA1_SLACK = 1e-10
_INDEPENDENT_SEED_SHIFT = 0x5851F42D4C957F2D


def _gap(s: float, t: float) -> float:
    """``s - sqrt(s^2 - t^2)`` without cancellation, for ``0 <= t <= s``."""
    if t == 0:
        return 0.0
    return t * t / (s + math.sqrt(max(s * s - t * t, 0.0)))


def dbar_lower_bound(var_x: float, var_y: float, dtv: float) -> float:
    """``sqrt(s - sqrt(s^2 - 4 dtv^2))`` with ``s = var_x + var_y``.

    A lower bound on ``dbar_2(X, Y)`` for mean-zero invariant processes whose
    spectral measures have masses ``var_x``, ``var_y`` and total variation
    distance ``dtv``. Mutually singular unit-mass measures give ``sqrt(2)``.
    """
    if var_x < 0 or var_y < 0 or dtv < 0:
        raise ValueError("variances and dtv must be >= 0")
    s = var_x + var_y
    if 2 * dtv > s * (1 + 1e-12):
        raise ValueError(f"2*dtv = {2 * dtv} exceeds var_x + var_y = {s}")
    return math.sqrt(_gap(s, min(2 * dtv, s)))


@dataclass(frozen=True)
class Delta1Result:
    lhs: float
    rhs: float

    @property
    def passed(self) -> bool:
        return self.lhs >= self.rhs - DELTA1_SLACK


def _on_nodes(f, rule: QuadratureRule) -> np.ndarray:
    vals = f.evaluate(rule.degree, rule.nodes) if isinstance(f, DensitySpec) else f(rule.nodes)
    vals = np.asarray(vals, dtype=float)
    if vals.ndim == 0:
        vals = np.full(rule.nodes.shape, float(vals))
    if vals.min() < -1e-12:
        raise ValueError("density takes negative values")
    return np.maximum(vals, 0.0)


def delta1_check(f, g, rule: QuadratureRule) -> Delta1Result:
    """Check ``integral (sqrt f - sqrt g)^2 >= s - sqrt(s^2 - Delta_1^2)``.

    Here ``s = integral (f + g)`` and ``Delta_1 = integral |f - g|``, all
    against the rule's measure. ``f`` and ``g`` are vectorised callables or
    :class:`DensitySpec` instances.
    """
    fv, gv = _on_nodes(f, rule), _on_nodes(g, rule)
    lhs = integrate(rule, lambda _: (np.sqrt(fv) - np.sqrt(gv)) ** 2)
    s = integrate(rule, lambda _: fv + gv)
    delta1 = integrate(rule, lambda _: np.abs(fv - gv))
    return Delta1Result(lhs, _gap(s, min(delta1, s)))


def coupling_product_bound(mu_x: SpectralMeasure, mu_y: SpectralMeasure, rule: QuadratureRule | None = None) -> float:
    """Upper bound on ``|E X_o Y_o|`` valid for every invariant coupling.

    Zero exactly when the spectral measures are mutually singular, in which
    case the two processes are uncorrelated in every coupling.
    """
    return hellinger_affinity(mu_x, mu_y, rule)


class LinearFactorPair:
    """Root values of two linear factors of i.i.d. noise, jointly sampled.

    With ``independent=False`` both factors read the same noise field (the
    coupling of interest); otherwise ``Y`` reads an independent copy.
    """

    def __init__(self, coeffs_x: RadialCoefficients, coeffs_y: RadialCoefficients, *, independent: bool = False):
        if coeffs_x.degree != coeffs_y.degree:
            raise ValueError("degree mismatch")
        R = max(coeffs_x.radius, coeffs_y.radius)
        pad = lambda c: RadialCoefficients(c.degree, np.pad(c.values, (0, R - c.radius)))
        self.coeffs_x, self.coeffs_y = pad(coeffs_x), pad(coeffs_y)
        self.independent = independent
        self._sx = LinearFactorSampler(self.coeffs_x, R, core_radius=0)
        self._sy = LinearFactorSampler(self.coeffs_y, R, core_radius=0)

    def sample_pairs(self, seed: int, start: int, stop: int) -> tuple[np.ndarray, np.ndarray]:
        x = self._sx.sample_block(seed, start, stop)[:, 0]
        seed_y = (seed + _INDEPENDENT_SEED_SHIFT) % 2 ** 64 if self.independent else seed
        y = self._sy.sample_block(seed_y, start, stop)[:, 0]
        return x, y

    def exact_witness(self, rule: QuadratureRule | None = None) -> float:
        """``E (X_o - Y_o)^2`` in closed form for the shared-noise coupling."""
        if self.independent:
            return self.coeffs_x.l2_norm_squared() + self.coeffs_y.l2_norm_squared()
        return (self.coeffs_x - self.coeffs_y).l2_norm_squared()


def empirical_dbar_witness(coupled_sampler, n_samples: int, seed: int = 0, *, workers: int = 1,
                           block: int = BLOCK_SIZE) -> tuple[float, float]:
    """Monte Carlo ``E[(X_o - Y_o)^2]`` for one coupling, with standard error.

    Any coupling gives an upper bound on ``dbar_2^2``, so the estimate
    should not fall below ``dbar_lower_bound(...)^2`` by more than
    ``PASS_SIGMAS`` standard errors.
    """

    def block_fn(start, stop):
        x, y = coupled_sampler.sample_pairs(seed, start, stop)
        return (x - y) ** 2

    return _mean_se(_map_blocks(block_fn, n_samples, workers, block))


def sandwich_holds(lower: float, witness: float, std_error: float) -> bool:
    return lower ** 2 <= witness + PASS_SIGMAS * std_error
