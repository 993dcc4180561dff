import math

import numpy as np
import pytest
from scipy.sparse.csgraph import shortest_path

from fiidtree.measures import SpectralMeasure
from fiidtree.simulate import (
    MAX_VERTICES,
    BranchingMarkovSampler,
    FieldSample,
    GaussMarkovSampler,
    IIDSampler,
    LinearFactorSampler,
    MarkovSpec,
    apply_adjacency,
    apply_linear_factor,
    build_tree,
    covariance_table,
    empirical_covariance,
    empirical_covariances,
    empirical_isometry_check,
    format_covariance_table,
    sample_branching_markov,
    sample_gauss_markov,
    sample_iid_gaussian,
)
from fiidtree.transforms import RadialCoefficients, covariance_sequence

from .oracles import adjacency_matrix

N = 20_000


def test_tree_sizes():
    assert build_tree(3, 2).n_vertices == 10
    assert build_tree(2, 5).n_vertices == 11
    assert build_tree(4, 0).n_vertices == 1
    with pytest.raises(ValueError, match="limit"):
        build_tree(3, 30)
    assert MAX_VERTICES == 10 ** 8


@pytest.mark.parametrize("d,depth", [(2, 4), (3, 4), (4, 3)])
def test_distances_match_bfs(d, depth):
    tree = build_tree(d, depth)
    bfs = shortest_path(adjacency_matrix(tree), unweighted=True, directed=False).astype(int)
    for v in range(tree.n_vertices):
        np.testing.assert_array_equal(tree.distances_from(v), bfs[v])
    rng = np.random.default_rng(0)
    for u, v in rng.integers(0, tree.n_vertices, size=(50, 2)):
        assert tree.distance(int(u), int(v)) == bfs[u, v]


def test_tree_structure():
    tree = build_tree(3, 3)
    assert list(tree.children(0)) == [1, 2, 3]
    assert all(tree.parent[c] == 2 for c in tree.children(2))
    assert tree.ancestors(int(tree.level_offsets[3]))[-1] == 0
    assert len(tree.children(tree.n_vertices - 1)) == 0


def test_iid_is_deterministic_and_standard():
    tree = build_tree(3, 3)
    a = sample_iid_gaussian(tree, seed=5, sample=2)
    b = sample_iid_gaussian(tree, seed=5, sample=2)
    c = sample_iid_gaussian(tree, seed=6, sample=2)
    np.testing.assert_array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)
    x = IIDSampler(tree).sample_block(1, 0, N)
    assert abs(x.mean()) < 4 / math.sqrt(x.size)
    assert abs(x.var() - 1) < 4 * math.sqrt(2 / x.size)
    # sample i does not depend on the block it was drawn in
    np.testing.assert_array_equal(IIDSampler(tree).sample_block(1, 7, 9)[1], x[8])


def test_adjacency_of_root_indicator():
    tree = build_tree(3, 3)
    delta = np.zeros(tree.n_vertices)
    delta[0] = 1
    f = apply_adjacency(tree, FieldSample(tree, delta, tree.depth, support_radius=0))
    np.testing.assert_array_equal(f.values[:4], [0, 1, 1, 1])
    assert f.values[4:].sum() == 0 and f.valid_radius == 3
    g = apply_adjacency(tree, f)
    assert g.values[0] == 3 and g.values[4:10].sum() == 6


def test_adjacency_loses_validity_on_generic_fields():
    tree = build_tree(3, 2)
    f = FieldSample(tree, np.ones(tree.n_vertices), 2)
    g = apply_adjacency(tree, f)
    assert g.valid_radius == 1
    np.testing.assert_array_equal(g.valid_values, [3, 3, 3, 3])
    with pytest.raises(ValueError):
        apply_adjacency(tree, apply_adjacency(tree, g))


def test_linear_factor_examples():
    tree = build_tree(3, 3)
    z = sample_iid_gaussian(tree, seed=0)
    same = apply_linear_factor(tree, RadialCoefficients(3, [1.0]), z)
    np.testing.assert_array_equal(same.values, z.values)
    nbr = apply_linear_factor(tree, RadialCoefficients(3, [0.0, 1.0]), z)
    assert nbr.valid_radius == 2
    assert nbr.values[0] == pytest.approx(z.values[1:4].sum())
    assert np.isnan(nbr.values[-1])
    x = LinearFactorSampler(RadialCoefficients(3, [0.0, 1.0]), 2, method="full").sample_block(3, 0, N)[:, 0]
    assert abs(x.var() - 3) < 4 * 3 * math.sqrt(2 / N)


@pytest.mark.parametrize("coeffs,depth,core", [
    ([1.0, 0.5, 0.25], 5, None),
    ([0.3, -0.2, 0.1, 0.05], 6, 1),
    ([1.0, 0.4], 3, 0),
])
def test_lumped_covariance_is_exact(coeffs, depth, core):
    a = RadialCoefficients(3, coeffs)
    s = LinearFactorSampler(a, depth, core_radius=core)
    c = covariance_sequence(a.spectral_measure(), 2 * s.valid_radius).values
    tree = s.tree
    dist = np.array([tree.distances_from(v) for v in range(tree.n_vertices)])
    np.testing.assert_allclose(s.exact_covariance(), c[dist], atol=1e-10)


def test_full_covariance_is_exact():
    a = RadialCoefficients(3, [1.0, 0.5, 0.25])
    s = LinearFactorSampler(a, 4, method="full")
    c = covariance_sequence(a.spectral_measure(), 4).values
    dist = np.array([s.tree.distances_from(v, limit=s.tree.ball_size(2)) for v in range(s.tree.ball_size(2))])
    np.testing.assert_allclose(s.exact_covariance(), c[dist], atol=1e-10)


def test_lumped_and_full_agree_empirically():
    a = RadialCoefficients(3, [1.0, 0.5, 0.25])
    est_l, se_l = empirical_covariances(LinearFactorSampler(a, 4), 2, N, 1)
    est_f, se_f = empirical_covariances(LinearFactorSampler(a, 4, method="full"), 2, N, 2)
    assert np.all(np.abs(est_l - est_f) <= 4 * np.hypot(se_l, se_f))


def test_linear_factor_validation():
    a = RadialCoefficients(3, [1.0, 0.5, 0.25])
    with pytest.raises(ValueError):
        LinearFactorSampler(a, 1)
    with pytest.raises(ValueError):
        LinearFactorSampler(a, 4, core_radius=3)
    with pytest.raises(ValueError):
        LinearFactorSampler(a, 4, method="other")


@pytest.mark.parametrize("rho", [-0.5, 0.3, 1 / math.sqrt(2)])
def test_gauss_markov_covariances(rho):
    est, se = empirical_covariances(GaussMarkovSampler(build_tree(3, 5), rho), 5, N, 11)
    assert np.all(np.abs(est - rho ** np.arange(6)) <= 4 * se)


def test_gauss_markov_single_sample_matches_block():
    tree = build_tree(3, 3)
    f = sample_gauss_markov(tree, 0.5, seed=3, sample=4)
    np.testing.assert_array_equal(f.values, GaussMarkovSampler(tree, 0.5).sample_block(3, 4, 5)[0])
    with pytest.raises(ValueError):
        GaussMarkovSampler(tree, 1.5)


@pytest.mark.parametrize("rho", [0.2, -0.4])
def test_ising_covariances(rho):
    rows = covariance_table(BranchingMarkovSampler(build_tree(3, 4), MarkovSpec.ising(rho)),
                            rho ** np.arange(5), N, 3)
    assert all(r.passed for r in rows)


def test_ising_values_are_spins():
    f = sample_branching_markov(build_tree(3, 3), MarkovSpec.ising(0.4), seed=1)
    assert set(np.unique(f.values)) <= {-1.0, 1.0}


def test_three_state_chain():
    M = np.array([[0.6, 0.3, 0.1], [0.3, 0.4, 0.3], [0.1, 0.3, 0.6]])
    spec = MarkovSpec(M)
    assert np.mean(spec.phi) == pytest.approx(0, abs=1e-12)
    assert np.mean(spec.phi ** 2) == pytest.approx(1)
    assert spec.rho == pytest.approx(max(abs(np.linalg.eigvalsh(M)[:2])))
    est, se = empirical_covariances(BranchingMarkovSampler(build_tree(3, 3), spec), 3, N, 4)
    assert np.all(np.abs(est - spec.rho ** np.arange(4)) <= 4 * se)


def test_markov_spec_validation():
    with pytest.raises(ValueError, match="sum to 1"):
        MarkovSpec(np.array([[0.5, 0.4], [0.5, 0.5]]))
    with pytest.raises(ValueError, match="symmetric"):
        MarkovSpec(np.array([[0.5, 0.5], [0.2, 0.8]]))
    with pytest.raises(ValueError):
        MarkovSpec(np.array([[1.0]]))
    assert MarkovSpec.ising(0.3).rho == pytest.approx(0.3)


def test_estimates_do_not_depend_on_workers():
    s = GaussMarkovSampler(build_tree(3, 3), 0.5)
    one = empirical_covariances(s, 3, 5000, 9, workers=1)
    four = empirical_covariances(s, 3, 5000, 9, workers=4)
    np.testing.assert_array_equal(one[0], four[0])
    np.testing.assert_array_equal(one[1], four[1])


def test_empirical_covariance_guards():
    s = IIDSampler(build_tree(3, 2))
    with pytest.raises(ValueError):
        empirical_covariance(s, 3, 100, 0)
    with pytest.raises(ValueError):
        empirical_covariance(s, 1, 1, 0)


def test_format_covariance_table():
    rows = covariance_table(IIDSampler(build_tree(3, 2)), [1, 0, 0], 2000, 0)
    lines = format_covariance_table(rows).splitlines()
    assert lines[0].split("\t") == ["n", "estimate", "std_error", "analytic", "tolerance", "pass"]
    assert len(lines) == 4


@pytest.mark.parametrize("p", [[1.0], [0.0, 1.0], [0.0, 0.0, 1.0], [0.5, -1.0, 0.25]])
def test_isometry(p):
    tree = build_tree(3, 3)
    iid = empirical_isometry_check(p, IIDSampler(tree), SpectralMeasure.kesten_mckay(3), N, 1)
    gm = empirical_isometry_check(p, GaussMarkovSampler(tree, 0.5), SpectralMeasure.gauss_markov(3, 0.5), N, 2)
    assert iid.passed and gm.passed


def test_isometry_examples_exact_rhs():
    tree = build_tree(3, 2)
    nu = SpectralMeasure.kesten_mckay(3)
    # integral r_1^2 dnu = |S_1| = 3
    assert empirical_isometry_check([0.0, 1.0], IIDSampler(tree), nu, 100, 0).rhs == pytest.approx(3.0)
    with pytest.raises(ValueError):
        empirical_isometry_check([0, 0, 0, 1.0], IIDSampler(tree), nu, 100, 0)
