"""
Modular covariance
==================

The intertwiner x_S realizes the modular S-transformation on the twist
matrices.  With it, the classical r-matrix and the tau-equation of the
connection transform covariantly.
"""

import numpy as np

from elliptika.kz import modular_check
from elliptika.liealg import S, T, intertwiner_x, intertwining_residual
from elliptika.selftest import standard_scene

np.set_printoptions(precision=4, suppress=True)
x = intertwiner_x(S, 3)
print(x / x[0, 0])  # a finite Fourier matrix
print(intertwining_residual(S, 3, x))

###############################################################################
# r-matrix and tau-equation residuals for S and T

for name in ("sl2-pair", "sl3-pair"):
    scene = standard_scene(name)
    for g, label in ((S, "S"), (T, "T")):
        r_r, r_w = modular_check(scene, None, g)
        print(name, label, f"{r_r:.1e} {r_w:.1e}")
