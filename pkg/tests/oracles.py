"""Brute-force references, independent of the code paths they check."""
import numpy as np
from scipy import sparse

from fiidtree.simulate import build_tree


def adjacency_matrix(tree):
    """Sparse adjacency of a truncated tree, built only from parent pointers."""
    child = np.arange(1, tree.n_vertices)
    par = np.asarray(tree.parent[1:])
    rows = np.concatenate([child, par])
    cols = np.concatenate([par, child])
    return sparse.csr_matrix((np.ones(rows.size, dtype=np.int64), (rows, cols)),
                             shape=(tree.n_vertices, tree.n_vertices))


def brute_force_walks(d, k):
    """(A^k)_{oo} on a tree deep enough that closed walks never feel the cut."""
    tree = build_tree(d, k // 2 + 1)
    A = adjacency_matrix(tree).astype(object) if k > 30 else adjacency_matrix(tree)
    v = np.zeros(tree.n_vertices, dtype=object if k > 30 else np.int64)
    v[0] = 1
    for _ in range(k):
        v = A @ v
    return int(v[0])


def dunau_tree_vectors(d, max_n, depth):
    """r_n(A) delta_o for n = 0..max_n via sparse matrix products on a tree."""
    tree = build_tree(d, depth)
    A = adjacency_matrix(tree)
    vecs = [np.zeros(tree.n_vertices, dtype=np.int64)]
    vecs[0][0] = 1
    vecs.append(A @ vecs[0])
    for n in range(1, max_n):
        b = d if n == 1 else d - 1
        vecs.append(A @ vecs[n] - b * vecs[n - 1])
    return tree, vecs[: max_n + 1]


def return_probability_series(d, k_max):
    """Partial sums of P(simple random walk is at the root at step k), k <= k_max.

    Equals sum_k walk_count(k) / d^k; floats because the terms are probabilities.
    """
    p = np.zeros(k_max + 2)
    p[0] = 1.0
    total = [1.0]
    for _ in range(k_max):
        new = np.zeros_like(p)
        new[1] += p[0]
        new[:-2] += p[1:-1] / d
        new[2:] += p[1:-1] * (d - 1) / d
        p = new
        total.append(total[-1] + p[0])
    return np.array(total)
