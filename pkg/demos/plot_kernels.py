"""
Twisted elliptic kernels
========================

The kernels w_{a,b} have a simple pole of residue 1 on the lattice and pick
up roots of unity under the two periods.
"""

import numpy as np

from elliptika.elliptic import IndexPair, nonzero_pairs, w, w_coeffs
from elliptika.liealg import eps
from elliptika.numcore import laurent_coeff

N, tau = 3, 0.1 + 1.2j
t = 0.21 - 0.17j

for ix in nonzero_pairs(N):
    v = w(ix, t, tau)
    res = laurent_coeff(lambda u: w(ix, u, tau), 0.0, -1, 0.1)
    print(f"({ix.a},{ix.b})  residue {res.real:+.12f}"
          f"  |w(t+1) - eps^a w| = {abs(w(ix, t + 1, tau) - eps(N, ix.a) * v):.1e}"
          f"  |w(t+tau) - eps^b w| = {abs(w(ix, t + tau, tau) - eps(N, ix.b) * v):.1e}")

###############################################################################
# The first Laurent coefficients sum to zero over all index pairs

print(abs(sum(w_coeffs(ix, tau).w1 for ix in nonzero_pairs(N))))

###############################################################################
# |w| on a grid shows the pole at the origin and its images

xs = np.linspace(-0.45, 0.45, 6)
grid = np.array([[abs(w(IndexPair(1, 0, N), x + y * tau, tau)) for x in xs] for y in xs])
print(np.round(grid, 2))
