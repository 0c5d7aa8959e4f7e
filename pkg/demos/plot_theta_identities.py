"""
Theta functions with rational characteristics
=============================================

Evaluate a theta function, then check its quasi-periods and the two
modular laws at a random point.
"""

from fractions import Fraction

import numpy as np

from elliptika.theta import Characteristic, modular_residual, quasi_period_residual, theta_eval

tau = 0.23 + 1.07j
ch = Characteristic(Fraction(1, 3), Fraction(-1, 4))

# values along a horizontal line of the torus
t = np.linspace(-0.5, 0.5, 9) + 0.2j
print(np.round(theta_eval(ch, t, tau), 6))

###############################################################################
# The odd characteristic (1/2, 1/2) vanishes at the origin

print(abs(theta_eval(Characteristic(Fraction(1, 2), Fraction(1, 2)), 0, tau)))

###############################################################################
# Residuals of the shifts t -> t+1, t -> t+tau and of tau -> tau+1, tau -> -1/tau

t0 = 0.17 - 0.08j
print([abs(r) for r in quasi_period_residual(ch, t0, tau)])
print([abs(r) for r in modular_residual(ch, t0, tau)])
