"""
Flatness and holonomy of the elliptic KZ connection
===================================================

The curvature vanishes in every pair of directions, so transport around a
small loop is trivial.  Going around another marked point instead gives a
holonomy close to exp(2 pi i r / kappa) at large level.
"""

import itertools

import numpy as np

from elliptika.kz import TAU, TransportPath, circle_segment, flatness_residual, residue_operator, transport
from elliptika.selftest import standard_scene

scene = standard_scene("sl2-triple")
for pair in itertools.combinations((0, 1, 2, TAU), 2):
    print(pair, f"{flatness_residual(scene, None, pair):.1e}")

###############################################################################
# Holonomy of z_1 running clockwise around z_2 for growing level

pair = standard_scene("sl2-pair")
z = np.array(pair.z)
start = float(np.angle(z[0] - z[1]))
loop = TransportPath([circle_segment((pair.tau, z), 0, z[1], abs(z[0] - z[1]), 600, -1.0, start)])
r = residue_operator(pair, None, 0, 1)
for kappa in (25, 50, 100):
    T = transport(pair, None, loop, kappa=kappa)
    print(kappa, f"{np.linalg.norm(T - np.eye(4) - 2j * np.pi / kappa * r):.3e}")
