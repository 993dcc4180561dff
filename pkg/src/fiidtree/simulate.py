"""Monte Carlo realisations of invariant processes on truncated trees.

Vertices of a :class:`TruncatedTree` are numbered level by level, so the
ball of radius L is always the index prefix ``[0, n_L)``. Random inputs are
counter-based: the noise at a vertex is a function of
``(seed, sample index, vertex index)`` only (see :mod:`fiidtree._keyed`).

Samplers produce blocks of samples as arrays of shape
``(n_samples, n_vertices)``. :func:`empirical_covariance` and friends split
work into fixed-size blocks, so results do not depend on the worker count.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from . import _keyed
from .dunau import dunau_series, sphere_size
from .graph_spectrum import QuadratureRule, default_rule, integrate
from .measures import SpectralMeasure
from .transforms import RadialCoefficients

__all__ = [
    "BLOCK_SIZE",
    "MAX_VERTICES",
    "PASS_SIGMAS",
    "BranchingMarkovSampler",
    "CovarianceRow",
    "FieldSample",
    "GaussMarkovSampler",
    "IIDSampler",
    "IsometryResult",
    "LinearFactorSampler",
    "MarkovSpec",
    "Sampler",
    "TruncatedTree",
    "apply_adjacency",
    "apply_linear_factor",
    "build_tree",
    "covariance_table",
    "empirical_covariance",
    "empirical_covariances",
    "empirical_isometry_check",
    "format_covariance_table",
    "sample_branching_markov",
    "sample_gauss_markov",
    "sample_iid_gaussian",
    "sphere_sums",
]

MAX_VERTICES = 10 ** 8
BLOCK_SIZE = 2048
PASS_SIGMAS = 4.0


class TruncatedTree:
    """The ball of radius ``depth`` around the root of T_d."""

    def __init__(self, d: int, depth: int):
        if d < 2:
            raise ValueError(f"degree must be >= 2, got {d}")
        if depth < 0:
            raise ValueError(f"depth must be >= 0, got {depth}")
        count = 1 + sum(sphere_size(d, n) for n in range(1, depth + 1))
        if count > MAX_VERTICES:
            raise ValueError(f"tree with d={d}, depth={depth} has {count} vertices (limit {MAX_VERTICES})")
        self.degree = d
        self.depth = depth
        sizes = [sphere_size(d, n) for n in range(depth + 1)]
        self.level_offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
        self.levels = np.repeat(np.arange(depth + 1), sizes)
        parent = np.full(count, -1, dtype=np.int64)
        for n in range(1, depth + 1):
            lo, hi = self.level_offsets[n], self.level_offsets[n + 1]
            per_parent = d if n == 1 else d - 1
            parent[lo:hi] = self.level_offsets[n - 1] + np.arange(hi - lo) // per_parent
        self.parent = parent
        for arr in (self.level_offsets, self.levels, self.parent):
            arr.setflags(write=False)

    @property
    def n_vertices(self) -> int:
        return int(self.level_offsets[-1])

    def __repr__(self):
        return f"TruncatedTree(d={self.degree}, depth={self.depth}, n_vertices={self.n_vertices})"

    def level_slice(self, n: int) -> slice:
        return slice(int(self.level_offsets[n]), int(self.level_offsets[n + 1]))

    def ball_size(self, radius: int) -> int:
        return int(self.level_offsets[min(radius, self.depth) + 1])

    def children(self, v: int) -> range:
        n = int(self.levels[v])
        if n == self.depth:
            return range(0)
        if n == 0:
            return range(1, 1 + self.degree)
        pos = v - int(self.level_offsets[n])
        start = int(self.level_offsets[n + 1]) + pos * (self.degree - 1)
        return range(start, start + self.degree - 1)

    def ancestors(self, v: int) -> list[int]:
        """``[v, parent(v), ..., root]``."""
        out = [v]
        while self.parent[out[-1]] >= 0:
            out.append(int(self.parent[out[-1]]))
        return out

    def distance(self, u: int, v: int) -> int:
        """Graph distance through the lowest common ancestor."""
        lu, lv = int(self.levels[u]), int(self.levels[v])
        a, b = u, v
        while lu > lv:
            a, lu = int(self.parent[a]), lu - 1
        while lv > lu:
            b, lv = int(self.parent[b]), lv - 1
        while a != b:
            a, b = int(self.parent[a]), int(self.parent[b])
            lu -= 1
        return int(self.levels[u]) + int(self.levels[v]) - 2 * lu

    def distances_from(self, v: int, limit: int | None = None) -> np.ndarray:
        """Distances from ``v`` to every vertex (vectorised LCA walk).

        Only the first ``limit`` vertices (a level-prefix) are covered when
        ``limit`` is given.
        """
        n = self.n_vertices if limit is None else limit
        levels = self.levels[:n]
        anc_v = self.ancestors(v)[::-1]  # anc_v[l] is v's ancestor at level l
        lv = len(anc_v) - 1
        up = np.arange(n)
        up_level = levels.copy()
        lca_level = np.full(n, -1)
        for lev in range(int(levels.max()) if n else 0, -1, -1):
            move = up_level > lev
            up[move] = self.parent[up[move]]
            up_level[move] = lev
            if lev <= lv:
                hit = (lca_level < 0) & (levels >= lev) & (up == anc_v[lev])
                lca_level[hit] = lev
        return levels + lv - 2 * lca_level


def build_tree(d: int, depth: int) -> TruncatedTree:
    return TruncatedTree(d, depth)


@dataclass
class FieldSample:
    """Values on the vertices of a truncated tree.

    Only vertices at level ``<= valid_radius`` carry values equal to those of
    the process on the infinite tree; the rest are truncation artefacts.
    ``support_radius``, when known, says the field vanishes beyond that
    level on the infinite tree (finitely supported inputs such as
    ``delta_o``).
    """

    tree: TruncatedTree
    values: np.ndarray
    valid_radius: int
    support_radius: int | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.shape != (self.tree.n_vertices,):
            raise ValueError(f"expected {self.tree.n_vertices} values, got shape {self.values.shape}")
        if not 0 <= self.valid_radius <= self.tree.depth:
            raise ValueError(f"valid_radius {self.valid_radius} outside 0..{self.tree.depth}")

    @property
    def valid_values(self) -> np.ndarray:
        return self.values[: self.tree.ball_size(self.valid_radius)]


def apply_adjacency(tree: TruncatedTree, f: FieldSample) -> FieldSample:
    """``(A f)(v) = sum of f over the neighbours of v``.

    A generic field loses one level of validity. A finitely supported field
    whose support grows to at most ``depth`` stays exact on the whole tree.
    """
    if f.tree is not tree and (f.tree.degree, f.tree.depth) != (tree.degree, tree.depth):
        raise ValueError("field lives on a different tree")
    vals = f.values
    out = np.zeros_like(vals)
    par = tree.parent[1:]
    np.add.at(out, par, vals[1:])
    out[1:] += vals[par]
    if f.support_radius is not None and f.support_radius + 1 <= tree.depth:
        return FieldSample(tree, out, f.valid_radius, f.support_radius + 1)
    if f.valid_radius == 0:
        raise ValueError("field has valid_radius 0; adjacency would leave no valid vertex")
    return FieldSample(tree, out, f.valid_radius - 1)


def sphere_sums(tree: TruncatedTree, values: np.ndarray, n: int) -> np.ndarray:
    """Sum of ``values[..., v]`` over the distance-n sphere around the root."""
    return values[..., tree.level_slice(n)].sum(axis=-1)


# linear factors on a full truncated tree ----------------------------------------

def linear_factor_matrix(tree: TruncatedTree, coeffs: RadialCoefficients) -> sparse.csr_matrix:
    """Sparse ``K`` with ``K[v, u] = a_{dist(u, v)}`` for v in the valid ball."""
    R = coeffs.radius
    if R > tree.depth:
        raise ValueError(f"coefficient radius {R} exceeds tree depth {tree.depth}")
    if coeffs.degree != tree.degree:
        raise ValueError(f"coefficient degree {coeffs.degree} != tree degree {tree.degree}")
    n_valid = tree.ball_size(tree.depth - R)
    rows, cols, data = [], [], []
    a = coeffs.values
    for v in range(n_valid):
        dist = tree.distances_from(v)
        near = np.flatnonzero(dist <= R)
        w = a[dist[near]]
        keep = w != 0
        rows.append(np.full(keep.sum(), v))
        cols.append(near[keep])
        data.append(w[keep])
    return sparse.csr_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n_valid, tree.n_vertices),
    )


def apply_linear_factor(tree: TruncatedTree, coeffs: RadialCoefficients, z: FieldSample) -> FieldSample:
    """``X_v = sum_{dist(u,v) <= R} a_{dist(u,v)} Z_u`` on the valid ball.

    Vertices outside the ball of radius ``depth - R`` are set to NaN.
    """
    R = coeffs.radius
    if R > tree.depth:
        raise ValueError(f"coefficient radius {R} exceeds tree depth {tree.depth}")
    if z.valid_radius != tree.depth:
        raise ValueError("input noise must be valid on the whole tree")
    K = linear_factor_matrix(tree, coeffs)
    out = np.full(tree.n_vertices, np.nan)
    out[: K.shape[0]] = K @ np.asarray(z.values, dtype=float)
    return FieldSample(tree, out, tree.depth - R)


# samplers -------------------------------------------------------------------------

class Sampler:
    """Generates independent realisations of a process on ``self.tree``.

    Subclasses implement :meth:`sample_block`, returning the fields of
    samples ``start .. stop-1`` for the given seed as rows of an array.
    Sample ``i`` depends only on ``(seed, i)``.
    """

    tree: TruncatedTree
    valid_radius: int

    def sample_block(self, seed: int, start: int, stop: int) -> np.ndarray:
        raise NotImplementedError

    def sample(self, seed: int, index: int = 0) -> FieldSample:
        return FieldSample(self.tree, self.sample_block(seed, index, index + 1)[0], self.valid_radius)


def _vertex_normals(tree: TruncatedTree, seed: int, start: int, stop: int, n_vertices=None) -> np.ndarray:
    n = tree.n_vertices if n_vertices is None else n_vertices
    return _keyed.normals(seed, np.arange(start, stop), np.arange(n), _keyed.STREAM_VERTEX_NORMAL)


class IIDSampler(Sampler):
    def __init__(self, tree: TruncatedTree):
        self.tree = tree
        self.valid_radius = tree.depth

    def sample_block(self, seed, start, stop):
        return _vertex_normals(self.tree, seed, start, stop)


class GaussMarkovSampler(Sampler):
    """Root ``N(0,1)``; each child ``rho * parent + sqrt(1 - rho^2) * noise``."""

    def __init__(self, tree: TruncatedTree, rho: float):
        if abs(rho) > 1:
            raise ValueError(f"|rho| must be <= 1, got {rho}")
        self.tree = tree
        self.rho = float(rho)
        self.valid_radius = tree.depth

    def sample_block(self, seed, start, stop):
        x = _vertex_normals(self.tree, seed, start, stop)
        scale = math.sqrt(max(0.0, 1.0 - self.rho ** 2))
        for n in range(1, self.tree.depth + 1):
            sl = self.tree.level_slice(n)
            x[:, sl] = self.rho * x[:, self.tree.parent[sl]] + scale * x[:, sl]
        return x


@dataclass(frozen=True)
class MarkovSpec:
    """Reversible chain with uniform stationary law plus an observable.

    ``M`` must be symmetric and stochastic (detailed balance for the uniform
    distribution). When ``phi`` is omitted, the eigenvector of the
    non-trivial eigenvalue of largest modulus is used, centred and scaled to
    unit variance under the uniform law, so that
    ``corr(phi(X_o), phi(X_v)) = rho^|v|``.
    """

    M: np.ndarray
    phi: np.ndarray | None = None
    tol: float = field(default=1e-12, repr=False)

    def __post_init__(self):
        M = np.array(self.M, dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 2:
            raise ValueError("transition matrix must be square with at least 2 states")
        if np.any(M < 0):
            raise ValueError("transition probabilities must be >= 0")
        if np.max(np.abs(M.sum(axis=1) - 1)) > self.tol:
            raise ValueError("rows of the transition matrix must sum to 1")
        if np.max(np.abs(M - M.T)) > self.tol:
            raise ValueError("chain is not reversible w.r.t. the uniform distribution (M not symmetric)")
        if self.phi is None:
            evals, evecs = np.linalg.eigh(0.5 * (M + M.T))
            s = M.shape[0]
            const = np.ones(s) / math.sqrt(s)
            # drop the constant eigenvector, keep the largest-modulus remaining one
            overlap = np.abs(const @ evecs)
            candidates = [i for i in range(s) if overlap[i] < 1 - 1e-9]
            i = max(candidates, key=lambda j: (abs(evals[j]), evals[j]))
            phi = evecs[:, i] - evecs[:, i].mean()
            phi = phi / math.sqrt(np.mean(phi ** 2))
            if phi[np.flatnonzero(np.abs(phi) > 1e-12)[0]] < 0:
                phi = -phi
        else:
            phi = np.array(self.phi, dtype=float)
            if phi.shape != (M.shape[0],):
                raise ValueError("phi must have one value per state")
        M.setflags(write=False)
        phi.setflags(write=False)
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "phi", phi)

    @classmethod
    def ising(cls, rho: float) -> "MarkovSpec":
        if abs(rho) > 1:
            raise ValueError(f"|rho| must be <= 1, got {rho}")
        p, q = (1 + rho) / 2, (1 - rho) / 2
        return cls(np.array([[p, q], [q, p]]), np.array([-1.0, 1.0]))

    @property
    def n_states(self) -> int:
        return self.M.shape[0]

    @property
    def rho(self) -> float:
        """``<phi, M phi> / <phi, phi>`` under the uniform law (the eigenvalue of ``phi``)."""
        return float(self.phi @ self.M @ self.phi / (self.phi @ self.phi))


class BranchingMarkovSampler(Sampler):
    """Uniform root state; children drawn from ``M`` given the parent, independently."""

    def __init__(self, tree: TruncatedTree, spec: MarkovSpec):
        self.tree = tree
        self.spec = spec
        self.valid_radius = tree.depth
        self._cum = np.cumsum(spec.M, axis=1)

    def states_block(self, seed, start, stop) -> np.ndarray:
        u = _keyed.uniforms(seed, np.arange(start, stop), np.arange(self.tree.n_vertices),
                            _keyed.STREAM_MARKOV_UNIFORM)
        s = self.spec.n_states
        states = np.empty(u.shape, dtype=np.int64)
        states[:, 0] = np.minimum((u[:, 0] * s).astype(np.int64), s - 1)
        for n in range(1, self.tree.depth + 1):
            sl = self.tree.level_slice(n)
            cum = self._cum[states[:, self.tree.parent[sl]]]  # (B, width, s)
            states[:, sl] = np.minimum((u[:, sl, None] > cum).sum(axis=-1), s - 1)
        return states

    def sample_block(self, seed, start, stop):
        return self.spec.phi[self.states_block(seed, start, stop)]


class LinearFactorSampler(Sampler):
    """Linear factor of i.i.d. standard normals with radial coefficients ``a``.

    ``method="full"`` draws noise on every vertex of a tree of the given
    depth and applies :func:`apply_linear_factor`; values are available on
    the ball of radius ``depth - R``.

    ``method="lumped"`` produces the same joint law on the ball of radius
    ``core_radius`` (default ``depth - R``) while drawing far fewer
    variables: noise inside that ball is drawn per vertex (with the same
    keys as the full method), and each subtree hanging off the ball enters
    only through its level sums, drawn directly as independent
    ``N(0, (d-1)^j)`` variables.
    """

    def __init__(self, coeffs: RadialCoefficients, depth: int, *, method: str = "lumped",
                 core_radius: int | None = None):
        R = coeffs.radius
        if R > depth:
            raise ValueError(f"coefficient radius {R} exceeds tree depth {depth}")
        self.coeffs = coeffs
        self.depth = depth
        self.method = method
        d = coeffs.degree
        if method == "full":
            if core_radius not in (None, depth - R):
                raise ValueError("core_radius is fixed to depth - R for the full method")
            self.tree = build_tree(d, depth)
            self.valid_radius = depth - R
            self._K = linear_factor_matrix(self.tree, coeffs)
        elif method == "lumped":
            L = depth - R if core_radius is None else core_radius
            if not 0 <= L <= depth - R:
                raise ValueError(f"core_radius must lie in 0..{depth - R} (depth - R), got {core_radius}")
            self.tree = build_tree(d, L)
            self.valid_radius = L
            self._build_lumped()
        else:
            raise ValueError(f"unknown method {method!r}")

    def _build_lumped(self):
        tree, a, R = self.tree, self.coeffs.values, self.coeffs.radius
        d, L = tree.degree, tree.depth
        n = tree.n_vertices
        dist = np.array([tree.distances_from(v) for v in range(n)])
        core = np.where(dist <= R, a[np.minimum(dist, R)], 0.0)
        # slot (w, c, j): level-j sum of the subtree under the c-th child of boundary vertex w
        boundary = np.arange(tree.level_offsets[L], tree.level_offsets[L + 1])
        per = d if L == 0 else d - 1
        depths = np.arange(R)  # j with dist(v, w) + 1 + j <= R needs j <= R - 1
        blocks = []
        for w in boundary:
            dw = dist[:, w][:, None] + 1 + depths[None, :]
            col = np.where(dw <= R, a[np.minimum(dw, R)], 0.0)
            blocks.extend([col] * per)
        lumped = np.concatenate(blocks, axis=1) if blocks and R > 0 else np.zeros((n, 0))
        self._core = core
        self._lumped = lumped
        self._lumped_scale = np.tile((d - 1.0) ** (depths / 2.0), len(boundary) * per) if R > 0 else np.zeros(0)

    @property
    def n_lumped(self) -> int:
        return self._lumped.shape[1] if self.method == "lumped" else 0

    def exact_covariance(self) -> np.ndarray:
        """Covariance matrix of the sampled values on the valid ball, in closed form."""
        if self.method == "full":
            K = self._K
            return (K @ K.T).toarray()
        cov = self._core @ self._core.T
        if self.n_lumped:
            scaled = self._lumped * self._lumped_scale
            cov += scaled @ scaled.T
        return cov

    def sample_block(self, seed, start, stop):
        if self.method == "full":
            z = _vertex_normals(self.tree, seed, start, stop)
            out = np.full(z.shape, np.nan)
            out[:, : self._K.shape[0]] = (self._K @ z.T).T
            return out
        z = _vertex_normals(self.tree, seed, start, stop)
        x = z @ self._core.T
        if self.n_lumped:
            b = _keyed.normals(seed, np.arange(start, stop), np.arange(self.n_lumped),
                               _keyed.STREAM_LUMPED_NORMAL) * self._lumped_scale
            x += b @ self._lumped.T
        return x


def sample_iid_gaussian(tree: TruncatedTree, seed: int, sample: int = 0) -> FieldSample:
    """Independent standard normals keyed on ``(seed, sample, vertex)``."""
    return IIDSampler(tree).sample(seed, sample)


def sample_gauss_markov(tree: TruncatedTree, rho: float, seed: int, sample: int = 0) -> FieldSample:
    return GaussMarkovSampler(tree, rho).sample(seed, sample)


def sample_branching_markov(tree: TruncatedTree, spec: MarkovSpec, seed: int, sample: int = 0) -> FieldSample:
    """Field of ``phi(state)`` values of a branching Markov chain."""
    return BranchingMarkovSampler(tree, spec).sample(seed, sample)


# estimators ------------------------------------------------------------------------

def _blocks(n_samples: int, block: int):
    return [(s, min(s + block, n_samples)) for s in range(0, n_samples, block)]


def _map_blocks(fn, n_samples: int, workers: int, block: int) -> np.ndarray:
    if n_samples < 2:
        raise ValueError("need at least 2 samples for a standard error")
    spans = _blocks(n_samples, block)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda span: fn(*span), spans))
    else:
        parts = [fn(*span) for span in spans]
    return np.concatenate(parts, axis=0)


def _mean_se(values: np.ndarray) -> tuple[float, float]:
    return float(values.mean(axis=0)), float(values.std(axis=0, ddof=1) / math.sqrt(values.shape[0]))


def sphere_products(sampler: Sampler, max_n: int, seed: int, start: int, stop: int) -> np.ndarray:
    """Per-sample ``X_o * mean_{|v|=n} X_v`` for ``n = 0..max_n``; shape ``(B, max_n+1)``."""
    x = sampler.sample_block(seed, start, stop)
    tree = sampler.tree
    cols = [x[:, 0] * x[:, tree.level_slice(n)].mean(axis=1) for n in range(max_n + 1)]
    return np.stack(cols, axis=1)


def empirical_covariance(sampler: Sampler, n: int, N_samples: int, base_seed: int, *,
                         workers: int = 1, block: int = BLOCK_SIZE) -> tuple[float, float]:
    """Monte Carlo ``cov(X_o, X_v)`` for ``|v| = n`` with its standard error.

    Each sample contributes ``X_o`` times the average of ``X_v`` over the
    distance-n sphere; the standard error is taken across samples.
    """
    est, se = empirical_covariances(sampler, n, N_samples, base_seed, workers=workers, block=block)
    return float(est[n]), float(se[n])


def empirical_covariances(sampler: Sampler, max_n: int, N_samples: int, base_seed: int, *,
                          workers: int = 1, block: int = BLOCK_SIZE) -> tuple[np.ndarray, np.ndarray]:
    """Vector version of :func:`empirical_covariance` for ``n = 0..max_n``."""
    if max_n > sampler.valid_radius:
        raise ValueError(f"n={max_n} exceeds the sampler's valid radius {sampler.valid_radius}")
    prods = _map_blocks(lambda a, b: sphere_products(sampler, max_n, base_seed, a, b), N_samples, workers, block)
    return prods.mean(axis=0), prods.std(axis=0, ddof=1) / math.sqrt(N_samples)


@dataclass(frozen=True)
class CovarianceRow:
    n: int
    estimate: float
    std_error: float
    analytic: float
    bias: float = 0.0

    @property
    def tolerance(self) -> float:
        return PASS_SIGMAS * self.std_error + self.bias

    @property
    def passed(self) -> bool:
        return abs(self.estimate - self.analytic) <= self.tolerance


def covariance_table(sampler: Sampler, analytic, N_samples: int, base_seed: int, *, max_n: int | None = None,
                     bias=None, workers: int = 1, block: int = BLOCK_SIZE) -> list[CovarianceRow]:
    """Empirical vs analytic covariance for ``n = 0..max_n``.

    ``analytic`` and the optional ``bias`` allowance are indexable by n.
    """
    max_n = sampler.valid_radius if max_n is None else max_n
    est, se = empirical_covariances(sampler, max_n, N_samples, base_seed, workers=workers, block=block)
    return [
        CovarianceRow(n, float(est[n]), float(se[n]), float(analytic[n]), 0.0 if bias is None else float(bias[n]))
        for n in range(max_n + 1)
    ]


def format_covariance_table(rows: list[CovarianceRow]) -> str:
    lines = ["n\testimate\tstd_error\tanalytic\ttolerance\tpass"]
    for r in rows:
        lines.append(f"{r.n}\t{r.estimate:.6f}\t{r.std_error:.6f}\t{r.analytic:.6f}\t{r.tolerance:.6f}\t"
                     f"{'true' if r.passed else 'false'}")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class IsometryResult:
    lhs: float
    std_error: float
    rhs: float

    @property
    def passed(self) -> bool:
        return abs(self.lhs - self.rhs) <= PASS_SIGMAS * self.std_error


def empirical_isometry_check(p_coeffs, sampler: Sampler, mu: SpectralMeasure, N_samples: int,
                             base_seed: int = 0, rule: QuadratureRule | None = None, *,
                             workers: int = 1, block: int = BLOCK_SIZE) -> IsometryResult:
    """Compare ``E[(p(A)X)_o^2]`` (Monte Carlo) with ``integral p^2 dmu``.

    ``p`` is given in the Dunau basis, ``p = sum_n b_n r_n``; then
    ``(p(A)X)_o = sum_n b_n sum_{|v|=n} X_v`` because ``r_n(A) delta_o`` is
    the sphere indicator.
    """
    b = np.asarray(p_coeffs.values if isinstance(p_coeffs, RadialCoefficients) else p_coeffs, dtype=float)
    deg = b.size - 1
    if deg > sampler.valid_radius:
        raise ValueError(f"degree {deg} of p exceeds the sampler's valid radius {sampler.valid_radius}")
    tree = sampler.tree

    def block_fn(start, stop):
        x = sampler.sample_block(base_seed, start, stop)
        px = sum(b[n] * sphere_sums(tree, x, n) for n in range(deg + 1))
        return px ** 2

    sq = _map_blocks(block_fn, N_samples, workers, block)
    lhs, se = _mean_se(sq)
    rule = default_rule(mu.degree) if rule is None else rule
    rhs = sum(a.mass * float(dunau_series(mu.degree, b, a.location)) ** 2 for a in mu.atoms)
    if not mu.density.is_zero():
        rhs += integrate(rule, lambda t: dunau_series(mu.degree, b, t) ** 2 * mu.density_values(t))
    return IsometryResult(lhs, se, rhs)
