"""
Branching Markov chains
=======================

A symmetric Markov kernel run down the tree from a uniform root gives an
invariant process; any eigenfunction observable has correlations
lambda^distance. The Ising broadcast is the two-state case.
"""
import numpy as np

from fiidtree import BranchingMarkovSampler, MarkovSpec, build_tree, covariance_table, format_covariance_table

tree = build_tree(3, 4)

spec = MarkovSpec.ising(0.4)
rows = covariance_table(BranchingMarkovSampler(tree, spec), spec.rho ** np.arange(5), 50_000, base_seed=3)
print("Ising, rho = 0.4")
print(format_covariance_table(rows))

# a three-state chain; the observable defaults to the leading non-trivial eigenvector
M = np.array([[0.6, 0.3, 0.1], [0.3, 0.4, 0.3], [0.1, 0.3, 0.6]])
spec = MarkovSpec(M)
print(f"three states, phi = {np.round(spec.phi, 4)}, lambda = {spec.rho:.4f}")
rows = covariance_table(BranchingMarkovSampler(tree, spec), spec.rho ** np.arange(5), 50_000, base_seed=4)
print(format_covariance_table(rows))
