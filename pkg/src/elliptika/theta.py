"""Theta functions with rational characteristics and their identities.

.. math::

    \\theta_{\\kappa,\\kappa'}(t;\\tau) = \\sum_{n\\in\\mathbb Z}
        e^{\\pi i (n+\\kappa)^2\\tau + 2\\pi i (n+\\kappa)(t+\\kappa')}

Characteristics are exact :class:`fractions.Fraction` pairs, so the phase
``exp(2πi (n+κ)κ')`` is evaluated from an exactly reduced angle.  Derivatives
in ``t`` and ``τ`` are taken term by term.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import product

import numpy as np

from .numcore import DEFAULT_CFG, ToleranceConfig, ValidationError

__all__ = [
    "Characteristic",
    "BracketIndex",
    "check_tau",
    "theta_eval",
    "theta_bracket",
    "quasi_period_residual",
    "modular_residual",
    "shift_residual",
    "zero_residual",
    "jacobi_lhs",
    "product_formula_residual",
    "heat_residual",
    "MAX_T_ORDER",
]

# t-derivative orders beyond 3 are needed internally: each τ-derivative
# costs two t-orders through the heat equation.
MAX_T_ORDER = 8


def _frac(x) -> Fraction:
    if isinstance(x, float):
        raise ValidationError("characteristics must be exact rationals, not floats")
    return Fraction(x)


@dataclass(frozen=True)
class Characteristic:
    kappa: Fraction
    kappa_prime: Fraction

    def __init__(self, kappa, kappa_prime):
        object.__setattr__(self, "kappa", _frac(kappa))
        object.__setattr__(self, "kappa_prime", _frac(kappa_prime))

    def __neg__(self):
        return Characteristic(-self.kappa, -self.kappa_prime)

    def __add__(self, other: "Characteristic"):
        return Characteristic(self.kappa + other.kappa, self.kappa_prime + other.kappa_prime)

    def __str__(self):
        return f"({self.kappa},{self.kappa_prime})"


@dataclass(frozen=True)
class BracketIndex:
    """Index ``[a, b]`` with entries reduced into ``{0..N-1}``."""

    a: int
    b: int
    N: int

    def __init__(self, a: int, b: int, N: int):
        if int(N) < 2:
            raise ValidationError("N must be at least 2")
        N = int(N)
        object.__setattr__(self, "N", N)
        object.__setattr__(self, "a", int(a) % N)
        object.__setattr__(self, "b", int(b) % N)

    @property
    def characteristic(self) -> Characteristic:
        return _bracket_char(self.a, self.b, self.N)

    def is_zero(self) -> bool:
        return self.a == 0 and self.b == 0


@lru_cache(maxsize=None)
def _bracket_char(a: int, b: int, N: int) -> Characteristic:
    half = Fraction(1, 2)
    return Characteristic(Fraction(a, N) - half, Fraction(-b, N) + half)


def check_tau(tau) -> complex:
    tau = complex(tau)
    if not tau.imag > 0:
        raise ValidationError(f"tau={tau} is not in the upper half plane")
    return tau


def _window(kappa: float, im_t: np.ndarray, im_tau: float, d: int, target: float):
    """Integer range of n covering all terms above ``target`` relative to the peak."""
    # |term| ∝ exp(-π Imτ (m - c)^2) with m = n+κ and c = -Im t / Im τ
    c = -im_t / im_tau
    half = math.sqrt(-math.log(target) / (math.pi * im_tau))
    # polynomial prefactor (2π|m|)^d shifts the effective cutoff; generous guard
    guard = 2 + d
    lo = math.floor(float(c.min()) - half - guard - kappa)
    hi = math.ceil(float(c.max()) + half + guard - kappa)
    return np.arange(lo, hi + 1)


def theta_eval(ch: Characteristic, t, tau, d: int = 0, cfg: ToleranceConfig = DEFAULT_CFG, dtau: int = 0):
    """Evaluate ``∂_t^d ∂_τ^dtau θ_{κ,κ'}(t; τ)``.

    Parameters
    ----------
    ch : Characteristic
    t : complex or array_like
        Evaluation point(s); arrays are broadcast.
    tau : complex
        Modulus with ``Im τ > 0``.
    d : int
        Order of the ``t`` derivative (0 through ``MAX_T_ORDER``).
    dtau : int
        Order of the ``τ`` derivative, taken term by term.

    Returns
    -------
    complex or ndarray
    """
    tau = check_tau(tau)
    d, dtau = int(d), int(dtau)
    if not 0 <= d <= MAX_T_ORDER or not 0 <= dtau <= 2:
        raise ValidationError(f"unsupported derivative order d={d}, dtau={dtau}")
    t_arr = np.asarray(t, dtype=complex)
    scalar = t_arr.ndim == 0
    t_flat = t_arr.reshape(-1)

    k, kp = ch.kappa, ch.kappa_prime
    n = _window(float(k), t_flat.imag, tau.imag, d + 2 * dtau, cfg.series_target)
    # exact phase (n+κ)κ' mod 1 from integer arithmetic
    q = k.denominator * kp.denominator
    num = ((n * k.denominator + k.numerator) * kp.numerator) % q
    phase_angle = 2 * np.pi * num / q
    m = n + float(k)
    base = 1j * np.pi * m * m * tau + 1j * phase_angle
    pref = (2j * np.pi * m) ** d * (1j * np.pi * m * m) ** dtau
    expo = base[None, :] + 2j * np.pi * np.outer(t_flat, m)
    vals = np.exp(expo) @ pref
    if scalar:
        return complex(vals[0])
    return vals.reshape(t_arr.shape)


def theta_bracket(ix: BracketIndex, t, tau, d: int = 0, cfg: ToleranceConfig = DEFAULT_CFG, dtau: int = 0):
    """``θ_[a,b](t; τ) = θ_{a/N - 1/2, -b/N + 1/2}(t; τ)``."""
    return theta_eval(ix.characteristic, t, tau, d, cfg, dtau)


def _scale(*vals) -> float:
    return max(1.0, *(abs(v) for v in vals))


def quasi_period_residual(ch: Characteristic, t, tau, cfg: ToleranceConfig = DEFAULT_CFG):
    """Residuals of the shifts ``t → t+1`` and ``t → t+τ``."""
    t, tau = complex(t), check_tau(tau)
    th = theta_eval(ch, t, tau, 0, cfg)
    r1 = theta_eval(ch, t + 1, tau, 0, cfg) - cmath.exp(2j * math.pi * float(ch.kappa)) * th
    rt = theta_eval(ch, t + tau, tau, 0, cfg) - cmath.exp(
        -1j * math.pi * tau - 2j * math.pi * (t + float(ch.kappa_prime))) * th
    return r1, rt


def modular_residual(ch: Characteristic, t, tau, cfg: ToleranceConfig = DEFAULT_CFG):
    """Residuals of ``τ → τ+1`` and ``(t, τ) → (t/τ, -1/τ)``.

    The square root ``(-iτ)^{1/2}`` is the principal branch.
    """
    t, tau = complex(t), check_tau(tau)
    k, kp = ch.kappa, ch.kappa_prime
    shifted = Characteristic(k, k + kp + Fraction(1, 2))
    rT = theta_eval(ch, t, tau + 1, 0, cfg) - cmath.exp(-1j * math.pi * float(k * (k + 1))) * theta_eval(
        shifted, t, tau, 0, cfg)
    swapped = Characteristic(kp, -k)
    rS = theta_eval(ch, t / tau, -1 / tau, 0, cfg) - (
        cmath.sqrt(-1j * tau) * cmath.exp(2j * math.pi * float(k * kp)) * cmath.exp(1j * math.pi * t * t / tau)
        * theta_eval(swapped, t, tau, 0, cfg))
    return rT, rS


def shift_residual(ch1: Characteristic, ch2: Characteristic, t, tau, cfg: ToleranceConfig = DEFAULT_CFG):
    """Residual of the characteristic-shift relation ``θ_{c1+c2}(t) = e^{...} θ_{c1}(t + κ2 τ + κ2')``."""
    t, tau = complex(t), check_tau(tau)
    k2, kp2 = float(ch2.kappa), float(ch2.kappa_prime)
    lhs = theta_eval(ch1 + ch2, t, tau, 0, cfg)
    factor = cmath.exp(1j * math.pi * k2 * k2 * tau + 2j * math.pi * k2 * (t + float(ch1.kappa_prime) + kp2))
    return lhs - factor * theta_eval(ch1, t + k2 * tau + kp2, tau, 0, cfg)


def zero_residual(ch: Characteristic, tau, cfg: ToleranceConfig = DEFAULT_CFG) -> complex:
    """``θ_{κ,κ'}`` evaluated at its predicted zero ``1/2 - κ' + (1/2 - κ)τ``."""
    tau = check_tau(tau)
    t0 = 0.5 - float(ch.kappa_prime) + (0.5 - float(ch.kappa)) * tau
    return theta_eval(ch, t0, tau, 0, cfg)


def _nonzero_indices(N: int):
    return [(a, b) for a, b in product(range(N), repeat=2) if (a, b) != (0, 0)]


def jacobi_lhs(N: int, tau, cfg: ToleranceConfig = DEFAULT_CFG) -> complex:
    """``(N²-1)/6 · θ'''_[0,0]/θ'_[0,0] - ½ Σ θ''_[a,b]/θ_[a,b]``; vanishes identically."""
    tau = check_tau(tau)
    z = BracketIndex(0, 0, N)
    total = (N * N - 1) / 6 * theta_bracket(z, 0, tau, 3, cfg) / theta_bracket(z, 0, tau, 1, cfg)
    for a, b in _nonzero_indices(N):
        ix = BracketIndex(a, b, N)
        total -= 0.5 * theta_bracket(ix, 0, tau, 2, cfg) / theta_bracket(ix, 0, tau, 0, cfg)
    return complex(total)


def product_formula_residual(N: int, t, tau, cfg: ToleranceConfig = DEFAULT_CFG) -> complex:
    """``N ∏_{a,b} θ_[a,b](t) - (∏_{(a,b)≠0} θ_[a,b](0)) θ_[0,0](Nt)``."""
    t, tau = complex(t), check_tau(tau)
    lhs = complex(N)
    consts = 1.0 + 0j
    for a, b in product(range(N), repeat=2):
        ix = BracketIndex(a, b, N)
        lhs *= theta_bracket(ix, t, tau, 0, cfg)
        if (a, b) != (0, 0):
            consts *= theta_bracket(ix, 0, tau, 0, cfg)
    return lhs - consts * theta_bracket(BracketIndex(0, 0, N), N * t, tau, 0, cfg)


def heat_residual(ch: Characteristic, t, tau, cfg: ToleranceConfig = DEFAULT_CFG) -> complex:
    """``∂_τ θ - (1/4πi) ∂_t² θ`` with ``∂_τ`` from the term-wise series."""
    t, tau = complex(t), check_tau(tau)
    return theta_eval(ch, t, tau, 0, cfg, dtau=1) - theta_eval(ch, t, tau, 2, cfg) / (4j * math.pi)
