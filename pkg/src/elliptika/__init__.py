"""Twisted sl_N numerics on elliptic curves.

Theta functions with characteristics, the elliptic kernels ``w_{a,b}`` and
``Z_{a,b}``, the twisted basis of sl_N, XYZ Gaudin Hamiltonians, the KZ/KZB
connection with parallel transport, and its modular covariance.
"""
from .numcore import (DEFAULT_CFG, AccuracyError, ElliptikaError, ToleranceConfig, ValidationError,
                      joint_eigenspaces, laurent_coeff)
from .theta import BracketIndex, Characteristic, theta_bracket, theta_eval
from .elliptic import IndexPair, Z11, Z_ab, w, w_coeffs, w_n, wp, zeta_w
from .liealg import (S, T, HeisenbergElement, ModularElement, TwistBasis, TwistRepresentation, casimir,
                     intertwiner_x, make_twist_basis, parse_rep_spec, rep_adjoint, rep_defining, rep_dual,
                     rep_sl2_spin, rep_tensor)
from .gaudin import (GaudinData, Scene, cb_dimension, extract_integrals, h_explicit_sl2, joint_spectrum,
                     q_profile, scene_from_json, scene_to_json, tau_hat)
from .kz import (TransportPath, circle_segment, connection_matrix, curvature, flatness_residual, kz_matrix_tau,
                 kz_matrix_z, line_segment, modular_check, residue_operator, rmatrix, transport)
from .selftest import run_selftest, standard_scene

__version__ = "0.1.0"
