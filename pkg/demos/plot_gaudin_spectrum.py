"""
Spectrum of an XYZ Gaudin model
===============================

Three spins on an elliptic curve.  The generating function is decomposed
into Casimirs and Hamiltonians, which are then diagonalized jointly.
"""

import numpy as np

from elliptika.gaudin import extract_integrals, h_explicit_sl2, joint_spectrum, tau_hat
from elliptika.selftest import standard_scene

scene = standard_scene("sl2-mixed")  # spins 1/2, 1/2, 1
print(scene.dim, scene.z)

###############################################################################
# The generating function commutes with itself at different points

A, B = tau_hat(scene, 0.3 - 0.2j), tau_hat(scene, -0.1 + 0.6j)
print(np.linalg.norm(A @ B - B @ A) / (np.linalg.norm(A) * np.linalg.norm(B)))

###############################################################################
# Contour extraction against the closed form

data = extract_integrals(scene)
H, H0 = h_explicit_sl2(scene)
print(max(np.max(np.abs(a - b)) for a, b in zip(H, data.H)))
print(np.linalg.norm(sum(data.H)))

###############################################################################
# Joint eigenvalues (mu_1, mu_2, mu_3, mu_0) and multiplicities

for e in joint_spectrum(scene, data=data):
    print(np.round(e.mu, 5), e.multiplicity)
