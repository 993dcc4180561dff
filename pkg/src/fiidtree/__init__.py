"""Spectral measures and factor-of-i.i.d. processes on the d-regular tree.

Submodules
----------
graph_spectrum
    Kesten-McKay measure, closed-walk counts, quadrature against it.
dunau
    Dunau polynomials (sphere-indicator polynomials of the adjacency operator).
measures
    Spectral measures as atoms plus densities; total variation, Hellinger
    affinity and factor-of-i.i.d. classification.
transforms
    Covariance <-> spectral density dictionary; synthesis of linear
    factor-of-i.i.d. coefficients from a target density.
simulate
    Monte Carlo on truncated trees: i.i.d., linear factors, Gauss-Markov and
    branching Markov chains; empirical covariances and isometry checks.
dbar
    Lower bounds and coupling witnesses for the d-bar-2 distance.
cli
    ``fiidtree`` command line front end.
"""
from .dbar import (
    LinearFactorPair,
    coupling_product_bound,
    dbar_lower_bound,
    delta1_check,
    empirical_dbar_witness,
    sandwich_holds,
)
from .dunau import DunauTable, dunau_eval, dunau_inner, sphere_indicator_check, sphere_size
from .graph_spectrum import (
    QuadratureRule,
    TreeModel,
    build_quadrature,
    closed_walk_count,
    closed_walk_counts,
    default_rule,
    integrate,
    kesten_mckay_density,
)
from .measures import (
    Classification,
    Constant,
    DunauSeries,
    GaussMarkov,
    GreenFunction,
    SpectralMeasure,
    SquaredDunauSeries,
    classify,
    gauss_markov_density,
    gauss_markov_is_fiid,
    green_density,
    hellinger_affinity,
    moment,
    total_mass,
    tv_distance,
)
from .simulate import (
    BranchingMarkovSampler,
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
from .transforms import (
    CovarianceSequence,
    RadialCoefficients,
    covariance_from_measure,
    covariance_sequence,
    density_from_covariance,
    dunau_expand,
    moments_from_covariance,
    synthesize_coefficients,
    truncation_error,
)

__version__ = "0.1.0"
