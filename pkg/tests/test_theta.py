from fractions import Fraction as F

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from elliptika.numcore import ValidationError
from elliptika.theta import (BracketIndex, Characteristic, heat_residual, jacobi_lhs, modular_residual,
                             product_formula_residual, quasi_period_residual, shift_residual, theta_bracket,
                             theta_eval, zero_residual)

TAU = 0.23 + 1.07j


def brute(ch, t, tau, d=0, nmax=60):
    """Plain double-width series, no windowing."""
    k, kp = float(ch.kappa), float(ch.kappa_prime)
    n = np.arange(-nmax, nmax + 1) + k
    return complex(np.sum((2j * np.pi * n) ** d * np.exp(1j * np.pi * n * n * tau + 2j * np.pi * n * (t + kp))))


def jt(k, t, tau):
    return complex(mp.jtheta(k, mp.pi * t, mp.exp(1j * mp.pi * tau)))


@pytest.mark.parametrize("ch,k,sign", [
    (Characteristic(0, 0), 3, 1), (Characteristic(F(1, 2), 0), 2, 1),
    (Characteristic(0, F(1, 2)), 4, 1), (Characteristic(F(1, 2), F(1, 2)), 1, -1),
])
def test_matches_classical_jacobi_thetas(ch, k, sign):
    for t in (0.3, 0.17 + 0.31j, -0.4 + 0.5j):
        assert abs(theta_eval(ch, t, TAU) - sign * jt(k, t, TAU)) < 1e-13


def test_theta_00_against_doubled_series():
    ref = brute(Characteristic(0, 0), 0.3, 0.8j, nmax=80)
    assert abs(theta_eval(Characteristic(0, 0), 0.3, 0.8j) - ref) <= 1e-13 * abs(ref)


@pytest.mark.parametrize("d", [1, 2, 3, 5, 8])
def test_derivatives_against_series(d):
    ch = Characteristic(F(1, 3), F(-2, 5))
    t = 0.12 - 0.2j
    ref = brute(ch, t, TAU, d)
    assert abs(theta_eval(ch, t, TAU, d) - ref) <= 1e-12 * max(1.0, abs(ref))


def test_array_argument_broadcasts():
    ch = Characteristic(F(1, 4), F(1, 2))
    ts = np.array([[0.1, 0.2j], [-0.3 + 0.4j, 0.0]])
    vals = theta_eval(ch, ts, TAU)
    assert vals.shape == ts.shape
    for idx in np.ndindex(ts.shape):
        assert abs(vals[idx] - theta_eval(ch, ts[idx], TAU)) < 1e-14


def test_odd_characteristic_vanishes_at_zero():
    for tau in (1j, 0.3 + 0.6j, -0.45 + 2.2j):
        assert abs(theta_eval(Characteristic(F(1, 2), F(1, 2)), 0, tau)) < 1e-14


def test_bracket_reduction_and_center():
    assert BracketIndex(5, -1, 3) == BracketIndex(2, 2, 3)
    c = BracketIndex(0, 0, 4).characteristic
    assert (c.kappa, c.kappa_prime) == (F(-1, 2), F(1, 2))
    # [0,0] agrees with the (1/2, 1/2) characteristic
    t = 0.21 + 0.1j
    assert abs(theta_bracket(BracketIndex(0, 0, 3), t, TAU)
               - theta_eval(Characteristic(F(1, 2), F(1, 2)), t, TAU)) < 1e-14
    assert abs(theta_bracket(BracketIndex(4, 1, 3), t, TAU) - theta_bracket(BracketIndex(1, 1, 3), t, TAU)) < 1e-14


def test_nonzero_brackets_do_not_vanish_at_zero():
    for a, b in ((0, 1), (1, 0), (1, 1)):
        assert abs(theta_bracket(BracketIndex(a, b, 2), 0, TAU)) > 1e-3


def test_rejects_bad_input():
    with pytest.raises(ValidationError):
        theta_eval(Characteristic(0, 0), 0, -1j)
    with pytest.raises(ValidationError):
        Characteristic(0.5, 0)
    with pytest.raises(ValidationError):
        theta_eval(Characteristic(0, 0), 0, 1j, d=9)
    with pytest.raises(ValidationError):
        BracketIndex(0, 0, 1)


def test_fixed_point_of_s():
    # at tau = i the S-law relates theta_{k,k'} and theta_{k',-k} at the same modulus
    ch = Characteristic(F(1, 6), F(1, 3))
    _, rS = modular_residual(ch, 0.2 + 0.1j, 1j)
    assert abs(rS) < 1e-13


chars = st.builds(lambda p, q, r, s: Characteristic(F(p, q), F(r, s)),
                  st.integers(-6, 6), st.integers(1, 6), st.integers(-6, 6), st.integers(1, 6))
taus = st.builds(complex, st.floats(-0.5, 0.5), st.floats(0.4, 2.5))
cell = st.tuples(st.floats(-0.5, 0.5), st.floats(-0.5, 0.5))


def _pt(xy, tau):
    return xy[0] + xy[1] * tau


@settings(max_examples=60, deadline=None)
@given(chars, taus, cell)
def test_quasi_periodicity_and_modular_law(ch, tau, xy):
    t = _pt(xy, tau)
    scale = max(1.0, abs(theta_eval(ch, t, tau)))
    r1, rt = quasi_period_residual(ch, t, tau)
    assert abs(r1) <= 1e-10 * scale
    assert abs(rt) <= 1e-10 * max(scale, abs(theta_eval(ch, t + tau, tau)))
    rT, rS = modular_residual(ch, t, tau)
    assert abs(rT) <= 1e-10 * max(scale, abs(theta_eval(ch, t, tau + 1)))
    assert abs(rS) <= 1e-10 * max(1.0, abs(theta_eval(ch, t / tau, -1 / tau)))


@settings(max_examples=40, deadline=None)
@given(chars, chars, taus, cell)
def test_characteristic_shift_and_heat(ch1, ch2, tau, xy):
    t = _pt(xy, tau)
    lhs = theta_eval(ch1 + ch2, t, tau)
    assert abs(shift_residual(ch1, ch2, t, tau)) <= 1e-9 * max(1.0, abs(lhs))
    assert abs(heat_residual(ch1, t, tau)) <= 1e-9 * max(1.0, abs(theta_eval(ch1, t, tau, 2)))


@settings(max_examples=40, deadline=None)
@given(chars, taus)
def test_zero_set(ch, tau):
    t0 = 0.5 - float(ch.kappa_prime) + (0.5 - float(ch.kappa)) * tau
    # measured against the size of theta next to the zero
    scale = max(abs(theta_eval(ch, t0 + 0.25, tau)), abs(theta_eval(ch, t0 + 0.25j, tau)))
    assert abs(zero_residual(ch, tau)) <= 1e-10 * max(1.0, scale)


@pytest.mark.parametrize("N,tau", [(2, 0.3 + 1.1j), (3, 1j), (5, 0.17 + 1.3j)])
def test_jacobi_identity(N, tau):
    assert abs(jacobi_lhs(N, tau)) < 1e-9


@pytest.mark.parametrize("N", [2, 3])
def test_product_formula(N):
    assert abs(product_formula_residual(N, 0.0, TAU)) < 1e-13
    t = 0.19 - 0.23j
    scale = abs(theta_bracket(BracketIndex(0, 0, N), N * t, TAU))
    assert abs(product_formula_residual(N, t, TAU)) <= 1e-9 * max(1.0, scale)
