import io
import math

import numpy as np
import pytest

from fiidtree.dunau import dunau_values, sphere_size
from fiidtree.graph_spectrum import build_quadrature, closed_walk_count, integrate
from fiidtree.measures import (
    Constant,
    GaussMarkov,
    GreenFunction,
    SpectralMeasure,
    moment,
)
from fiidtree.transforms import (
    CovarianceSequence,
    RadialCoefficients,
    covariance_from_measure,
    covariance_sequence,
    density_from_covariance,
    dunau_expand,
    moments_from_covariance,
    read_coefficients,
    synthesize_coefficients,
    truncation_error,
    write_coefficients,
)


def test_covariance_of_kesten_mckay_is_delta(rule3):
    c = covariance_sequence(SpectralMeasure.kesten_mckay(3), 15, rule3).values
    assert c[0] == pytest.approx(1.0, abs=1e-12)
    assert np.max(np.abs(c[1:])) <= 1e-10


@pytest.mark.parametrize("rho", [-0.5, 0.3, 0.5])
def test_gauss_markov_covariance(rule3, rho):
    c = covariance_sequence(SpectralMeasure.gauss_markov(3, rho), 8, rule3).values
    np.testing.assert_allclose(c, rho ** np.arange(9), atol=1e-7, rtol=0)


def test_dirac_covariance(rule3):
    mu = SpectralMeasure.dirac(3, 2.0)
    for n in range(6):
        expected = dunau_values(3, n, 2.0)[n] / sphere_size(3, n)
        assert covariance_from_measure(mu, n, rule3) == pytest.approx(expected, rel=1e-14)


def test_covariance_rejects_negative_n(rule3):
    with pytest.raises(ValueError):
        covariance_from_measure(SpectralMeasure.kesten_mckay(3), -1, rule3)


def test_moments_from_delta_covariance():
    c = CovarianceSequence(3, [1.0] + [0.0] * 12)
    for k in range(13):
        assert moments_from_covariance(c, k) == closed_walk_count(3, k)
    with pytest.raises(ValueError):
        moments_from_covariance(c, 13)


@pytest.mark.parametrize("mu", [
    SpectralMeasure.gauss_markov(3, 0.5),
    SpectralMeasure.dirac(3, 2.0),
    SpectralMeasure.green(3),
], ids=["gauss_markov", "dirac", "green"])
def test_moment_round_trip(rule3, mu):
    c = covariance_sequence(mu, 12, rule3)
    for k in range(13):
        direct = moment(mu, k, rule3)
        assert moments_from_covariance(c, k) == pytest.approx(direct, rel=1e-8, abs=1e-8)


def test_dunau_expand_recovers_basis_polynomial(rule3):
    coeffs = dunau_expand(lambda t: dunau_values(3, 3, t)[3], 6, rule3)
    expected = np.zeros(7)
    expected[3] = 1.0
    np.testing.assert_allclose(coeffs, expected, atol=1e-12)


def test_dunau_expand_rejects_nonfinite(rule3):
    with pytest.raises(ValueError):
        dunau_expand(lambda t: np.where(t > 0, np.inf, 1.0), 3, rule3)


def test_parseval_for_root_gauss_markov(rule3):
    g = GaussMarkov(0.5)
    a = synthesize_coefficients(g, 40, rule3)
    mass = integrate(rule3, lambda t: g.evaluate(3, t))
    assert a.l2_norm_squared() == pytest.approx(mass, abs=1e-10)


def test_synthesize_constant_is_identity(rule3):
    a = synthesize_coefficients(Constant(1.0), 10, rule3).values
    expected = np.zeros(11)
    expected[0] = 1.0
    np.testing.assert_allclose(a, expected, atol=1e-12)


def test_synthesize_needs_tree():
    with pytest.raises(ValueError):
        synthesize_coefficients(Constant(1.0), 3)
    a = synthesize_coefficients(Constant(4.0), 3, degree=4)
    assert a.degree == 4 and a.values[0] == pytest.approx(2.0)


def test_gauss_markov_truncation_error(rule3):
    assert truncation_error(GaussMarkov(0.5), 40, rule3) <= 1e-4


def test_green_norm(rule3):
    a = synthesize_coefficients(GreenFunction(), 40, rule3)
    assert a.l2_norm_squared() == pytest.approx(2.0, abs=1e-3)


@pytest.mark.parametrize("g", [GaussMarkov(0.5), GaussMarkov(-0.7), GreenFunction()], ids=repr)
def test_truncation_error_is_nonincreasing(rule3, g):
    errs = [truncation_error(g, R, rule3) for R in range(0, 41, 2)]
    assert all(b <= a + 1e-12 for a, b in zip(errs, errs[1:]))
    assert all(e >= 0 for e in errs)


def test_endpoint_converges_slower(rule3):
    edge = 1 / math.sqrt(2)
    inner = truncation_error(GaussMarkov(0.5), 20, rule3)
    at_edge = truncation_error(GaussMarkov(edge), 20, rule3)
    assert at_edge > 0
    assert at_edge > 10 * inner


def test_synthesized_density_matches_target(rule3):
    g = GaussMarkov(0.5)
    a = synthesize_coefficients(g, 40, rule3)
    realized = a.spectral_density()
    gap = integrate(rule3, lambda t: np.abs(realized.evaluate(3, t) - g.evaluate(3, t)))
    assert gap <= 1e-3


def test_negative_density_rejected(rule3):
    from fiidtree.measures import DunauSeries
    with pytest.raises(ValueError, match="invalid density"):
        synthesize_coefficients(DunauSeries((0.0, 1.0)), 5, rule3)


def test_density_from_delta_covariance(rule3):
    dens = density_from_covariance(CovarianceSequence(3, [1.0, 0.0, 0.0]))
    np.testing.assert_allclose(dens.evaluate(3, rule3.nodes), 1.0)


def test_density_from_covariance_norm_budget():
    # rho^2 (d-1) > 1: the coefficient norm grows with the radius
    norms = [CovarianceSequence(3, 0.8 ** np.arange(R + 1)).l2_norm_squared() for R in (10, 20, 40)]
    assert norms[0] < norms[1] < norms[2]
    with pytest.raises(ValueError, match="budget"):
        density_from_covariance(CovarianceSequence(3, 0.8 ** np.arange(41)), budget=1e3)
    density_from_covariance(CovarianceSequence(3, 0.5 ** np.arange(41)), budget=1e3)


def test_covariance_sequence_validation():
    with pytest.raises(ValueError):
        CovarianceSequence(3, [1.0, 1.5])


def test_radial_coefficients_difference():
    a = RadialCoefficients(3, [1.0, 0.5])
    b = RadialCoefficients(3, [1.0, 0.0, 0.25])
    np.testing.assert_array_equal((a - b).values, [0.0, 0.5, -0.25])
    assert (a - b).l2_norm_squared() == pytest.approx(0.25 * 3 + 0.0625 * 6)


def test_coefficient_file_round_trip(rule3):
    a = synthesize_coefficients(GaussMarkov(0.5), 12, rule3)
    err = truncation_error(GaussMarkov(0.5), 12, rule3, coefficients=a)
    buf = io.StringIO()
    text = write_coefficients(a, err, buf)
    assert buf.getvalue() == text
    again, err2 = read_coefficients(text)
    np.testing.assert_array_equal(again.values, a.values)
    assert again.degree == 3 and err2 == err
    assert text.splitlines()[3] == "n\ta_n\tsphere_size"
    assert text.splitlines()[-1].endswith("\t" + str(sphere_size(3, 12)))


def test_coefficient_file_errors():
    with pytest.raises(ValueError, match="degree"):
        read_coefficients("# radius\t0\nn\ta_n\tsphere_size\n0\t1.0\t1\n")
    with pytest.raises(ValueError, match="line"):
        read_coefficients("# degree\t3\n# truncation_error\t0.0\n1\t1.0\t3\n")


def test_moments_overflow_names_k():
    c = CovarianceSequence(3, [1.0] + [0.0] * 900)
    with pytest.raises(OverflowError, match="k=900"):
        moments_from_covariance(c, 900)
