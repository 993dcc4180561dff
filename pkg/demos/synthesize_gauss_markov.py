"""
From a spectral density to a linear factor of i.i.d. noise
===========================================================

A Gauss-Markov process with correlation rho along each edge is a factor of
i.i.d. on T_3 exactly when |rho| <= 1/sqrt(2). Below the threshold its
spectral density can be realised by a radial linear factor whose weights
are the Dunau coefficients of the square root of the density.
"""
import numpy as np

from fiidtree import (
    GaussMarkov,
    LinearFactorSampler,
    covariance_sequence,
    default_rule,
    empirical_covariances,
    gauss_markov_is_fiid,
    synthesize_coefficients,
    truncation_error,
)

d, rho = 3, 0.5
print("factor of i.i.d.?", gauss_markov_is_fiid(d, rho))

rule = default_rule(d)
g = GaussMarkov(rho)

# how fast the truncated expansion converges
for R in (2, 5, 12, 20, 40):
    print(f"R={R:2d}  truncation_error={truncation_error(g, R, rule):.3e}")

coeffs = synthesize_coefficients(g, 12, rule)
print("first weights:", np.round(coeffs.values[:5], 5))

# the covariance the truncated factor actually has, next to rho^n
realised = covariance_sequence(coeffs.spectral_measure(), 4, rule).values
print("realised covariance:", np.round(realised, 6))
print("target rho^n:       ", rho ** np.arange(5))

# and what Monte Carlo sees on a depth-16 tree
sampler = LinearFactorSampler(coeffs, 16, core_radius=3)
est, se = empirical_covariances(sampler, 3, 50_000, base_seed=1)
for n in range(4):
    print(f"n={n}  estimate={est[n]:.4f} +- {se[n]:.4f}  realised={realised[n]:.4f}")
