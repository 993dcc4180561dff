"""Dunau polynomials of the d-regular tree.

``r_n`` is the degree-n polynomial with ``r_n(A) delta_o`` equal to the
indicator of the distance-n sphere. They obey

    r_0 = 1,  r_1 = t,  r_2 = t^2 - d,
    r_{n+1} = t r_n - (d - 1) r_{n-1}   (n >= 2),

are orthogonal for the Kesten-McKay measure, and ``||r_n||^2 = |S_n|``.
The step producing ``r_2`` subtracts ``d`` (the root has d neighbours);
every later step subtracts ``d - 1``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph_spectrum import QuadratureRule, TreeModel, integrate

__all__ = [
    "DunauTable",
    "dunau_eval",
    "dunau_values",
    "dunau_series",
    "sphere_size",
    "sphere_sizes",
    "sphere_indicator_check",
    "dunau_inner",
]


@dataclass(frozen=True)
class DunauTable:
    degree: int
    max_n: int

    def __post_init__(self):
        TreeModel(self.degree)
        if self.max_n < 0:
            raise ValueError(f"max_n must be >= 0, got {self.max_n}")

    def eval(self, n, t):
        return dunau_eval(self, n, t)

    def values(self, t):
        return dunau_values(self.degree, self.max_n, t)


def _recurrence_coefficient(d: int, n: int) -> int:
    # t r_n = b_n r_{n-1} + r_{n+1}
    return d if n == 1 else d - 1


def dunau_values(d: int, max_n: int, t) -> np.ndarray:
    """All of ``r_0(t), ..., r_max_n(t)``, stacked along a new leading axis."""
    t = np.asarray(t, dtype=float)
    out = np.empty((max_n + 1,) + t.shape)
    out[0] = 1.0
    if max_n >= 1:
        out[1] = t
    for n in range(1, max_n):
        out[n + 1] = t * out[n] - _recurrence_coefficient(d, n) * out[n - 1]
    return out


def dunau_eval(table: DunauTable, n: int, t):
    """Evaluate ``r_n(t)`` by forward recurrence."""
    if not 0 <= n <= table.max_n:
        raise ValueError(f"n={n} outside 0..{table.max_n}")
    v = dunau_values(table.degree, n, t)[n]
    return float(v) if v.ndim == 0 else v


def dunau_series(d: int, coefficients, t):
    """Evaluate ``sum_n c_n r_n(t)``."""
    c = np.asarray(coefficients, dtype=float)
    if c.size == 0:
        return np.zeros_like(np.asarray(t, dtype=float))
    vals = dunau_values(d, c.size - 1, t)
    return np.tensordot(c, vals, axes=1)


def sphere_size(d: int, n: int) -> int:
    """``|S_n|``: 1 for n = 0, else ``d (d-1)^(n-1)`` (exact integer)."""
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    return 1 if n == 0 else d * (d - 1) ** (n - 1)


def sphere_sizes(d: int, max_n: int) -> np.ndarray:
    """Sphere sizes ``|S_0|..|S_max_n|`` as floats."""
    return np.array([float(sphere_size(d, n)) for n in range(max_n + 1)])


def sphere_indicator_check(d: int, n: int, depth: int) -> bool:
    """Check ``r_n(A) delta_o == 1_{S_n}`` on a truncated tree.

    The polynomial is applied through repeated adjacency on a generic field
    (no use is made of the finite support of ``delta_o``), so after ``n``
    applications only vertices at level ``<= depth - n`` are trustworthy;
    comparison is restricted to those.
    """
    from .simulate import FieldSample, apply_adjacency, build_tree

    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    if depth < 2 * n:
        raise ValueError(f"depth={depth} too shallow for n={n}; need depth >= {2 * n}")
    tree = build_tree(d, depth)
    delta = np.zeros(tree.n_vertices, dtype=np.int64)
    delta[0] = 1
    prev = None
    cur = FieldSample(tree, delta, valid_radius=depth)
    for k in range(n):
        nxt = apply_adjacency(tree, cur)
        if prev is not None:
            b = _recurrence_coefficient(d, k)
            vals = nxt.values - b * prev.values
        else:
            vals = nxt.values
        prev, cur = cur, FieldSample(tree, vals, valid_radius=nxt.valid_radius)
    region = tree.levels <= depth - n
    expected = (tree.levels == n).astype(np.int64)
    return bool(np.array_equal(cur.values[region], expected[region]))


def dunau_inner(table: DunauTable, rule: QuadratureRule, n: int, m: int) -> float:
    """``integral r_n r_m dnu`` by quadrature."""
    if table.degree != rule.degree:
        raise ValueError(f"table degree {table.degree} != rule degree {rule.degree}")
    for k in (n, m):
        if not 0 <= k <= table.max_n:
            raise ValueError(f"index {k} outside 0..{table.max_n}")
    vals = dunau_values(table.degree, max(n, m), rule.nodes)
    product = vals[n] * vals[m]
    return integrate(rule, lambda _: product)
