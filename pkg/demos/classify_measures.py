"""
Which spectral measures come from factors of i.i.d.?
====================================================

Absolutely continuous measures are realised by linear factors. Atoms inside
the spectrum are reachable only as weak limits; atoms outside are not even
that.
"""
import math

from fiidtree import SpectralMeasure, classify, gauss_markov_is_fiid

d = 3
for name, mu in [
    ("Gauss-Markov 0.5", SpectralMeasure.gauss_markov(d, 0.5)),
    ("free field", SpectralMeasure.green(d)),
    ("atom at 2.0", SpectralMeasure.dirac(d, 2.0)),
    ("atom at 2.8", SpectralMeasure.dirac(d, 2.8)),
    ("atom at 3.0", SpectralMeasure.dirac(d, 3.0)),
]:
    print(f"{name:18s} {classify(mu).value}")

# the Gauss-Markov threshold, probed either side
edge = 1 / math.sqrt(d - 1)
for rho in (0.5, edge, 0.71, 0.8):
    print(f"rho={rho:.6f}  factor of i.i.d.: {gauss_markov_is_fiid(d, rho)}")

# measures serialise to a small JSON document
print(SpectralMeasure.gauss_markov(d, 0.5).dumps())
