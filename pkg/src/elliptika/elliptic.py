"""Twisted kernels ``w_{a,b}``, the KZB kernel ``Z_{a,b}`` and Weierstrass functions.

All kernels are assembled from :func:`elliptika.theta.theta_bracket`.  The
functions accept scalar or array ``t``; index pairs are reduced mod ``N``.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .numcore import DEFAULT_CFG, AccuracyError, ToleranceConfig, ValidationError, laurent_coeff
from .theta import BracketIndex, check_tau, theta_bracket

__all__ = [
    "IndexPair",
    "LaurentData",
    "lattice_coords",
    "lattice_distance",
    "reduce_to_cell",
    "w",
    "w_n",
    "w_prime",
    "w_dtau",
    "w_coeffs",
    "Z_ab",
    "Z_ab_prime",
    "Z_ab_dtau",
    "Z11",
    "wp",
    "zeta_w",
    "eta1",
    "nonzero_pairs",
]

LATTICE_EPS = 1e-9
Z_GUARD = 1e-6
TWO_PI_I = 2j * math.pi
FOUR_PI_I = 4j * math.pi


@dataclass(frozen=True)
class IndexPair:
    a: int
    b: int
    N: int

    def __init__(self, a: int, b: int, N: int):
        N = int(N)
        if N < 2:
            raise ValidationError("N must be at least 2")
        a, b = int(a) % N, int(b) % N
        if (a, b) == (0, 0):
            raise ValidationError("kernel index (0,0) is excluded")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "N", N)

    def __neg__(self):
        return IndexPair(-self.a, -self.b, self.N)

    @property
    def bracket(self) -> BracketIndex:
        return BracketIndex(self.a, self.b, self.N)


def nonzero_pairs(N: int) -> list[IndexPair]:
    return [IndexPair(a, b, N) for a in range(N) for b in range(N) if (a, b) != (0, 0)]


@dataclass(frozen=True)
class LaurentData:
    """Regular-part coefficients ``w_{a,b,ν}`` of ``w_{a,b}`` at ``t = 0``."""

    w0: complex
    w1: complex
    higher: tuple = field(default=())


# ---------------------------------------------------------------- lattice

def lattice_coords(t, tau):
    """Real ``(x, y)`` with ``t = x + y τ``."""
    t = np.asarray(t, dtype=complex)
    y = t.imag / tau.imag
    x = t.real - y * tau.real
    return x, y


_DX, _DY = (a.ravel() for a in np.meshgrid((-1, 0, 1), (-1, 0, 1)))


def lattice_distance(t, tau) -> np.ndarray:
    """Distance from ``t`` to the nearest point of ``Z + τZ``."""
    tau = complex(tau)
    t = np.asarray(t, dtype=complex)
    x, y = lattice_coords(t, tau)
    # nearest of the 3x3 neighbouring lattice points
    near = np.round(x)[..., None] + _DX + (np.round(y)[..., None] + _DY) * tau
    return np.abs(t[..., None] - near).min(axis=-1)


def _check_off_lattice(t, tau):
    if np.any(lattice_distance(t, tau) < LATTICE_EPS):
        raise ValidationError("argument lies on the period lattice (pole)")


def reduce_to_cell(t, tau):
    """Return ``(t', m, n)`` with ``t = t' + m + nτ`` and lattice coordinates of ``t'`` in ``[-1/2, 1/2)``."""
    tau = check_tau(tau)
    t = complex(t)
    x, y = lattice_coords(t, tau)
    n = math.floor(float(y) + 0.5)
    m = math.floor(float(x) + 0.5)
    return t - m - n * tau, m, n


# ---------------------------------------------------------------- constants

@lru_cache(maxsize=4096)
def _consts(a: int, b: int, N: int, tau: complex, cfg: ToleranceConfig, dtau: int = 0):
    ix = BracketIndex(a, b, N)
    return tuple(theta_bracket(ix, 0.0, tau, d, cfg, dtau) for d in range(5))


def _zero(N, tau, cfg, dtau=0):
    return _consts(0, 0, N, tau, cfg, dtau)


def _taylor(ix: BracketIndex, t, tau, order, cfg):
    """Taylor coefficients ``θ^{(k)}(t)/k!`` for ``k = 0..order``."""
    return [theta_bracket(ix, t, tau, k, cfg) / math.factorial(k) for k in range(order + 1)]


def _series_quotient(num, den):
    c = []
    for k in range(len(num)):
        acc = num[k]
        for j in range(1, k + 1):
            acc = acc - den[j] * c[k - j]
        c.append(acc / den[0])
    return c


def _prep(ix: IndexPair, t, tau):
    tau = check_tau(tau)
    scalar = np.ndim(t) == 0
    t_arr = np.asarray(t, dtype=complex)
    _check_off_lattice(t_arr, tau)
    return tau, t_arr, scalar


def _out(val, scalar):
    return complex(val) if scalar else np.asarray(val)


# ---------------------------------------------------------------- w family

def w(ix: IndexPair, t, tau, cfg: ToleranceConfig = DEFAULT_CFG):
    """``w_{a,b}(t) = (θ'_[0,0]/θ_[a,b]) · θ_[a,b](t)/θ_[0,0](t)``.

    Simple poles with residue 1 on ``Z + τZ``; ``w(t+1) = ε^a w(t)`` and
    ``w(t+τ) = ε^b w(t)``.
    """
    tau, t_arr, scalar = _prep(ix, t, tau)
    z0 = _zero(ix.N, tau, cfg)
    c = _consts(ix.a, ix.b, ix.N, tau, cfg)
    val = (z0[1] / c[0]) * theta_bracket(ix.bracket, t_arr, tau, 0, cfg) / theta_bracket(
        BracketIndex(0, 0, ix.N), t_arr, tau, 0, cfg)
    return _out(val, scalar)


def w_n(ix: IndexPair, n: int, t, tau, cfg: ToleranceConfig = DEFAULT_CFG):
    """``w^n_{a,b}(t) = ((-1)^n / n!) ∂_t^n w_{a,b}(t)`` for ``0 <= n <= 3``."""
    n = int(n)
    if not 0 <= n <= 3:
        raise ValidationError("w_n supports 0 <= n <= 3")
    tau, t_arr, scalar = _prep(ix, t, tau)
    z0 = _zero(ix.N, tau, cfg)
    c = _consts(ix.a, ix.b, ix.N, tau, cfg)
    num = _taylor(ix.bracket, t_arr, tau, n, cfg)
    den = _taylor(BracketIndex(0, 0, ix.N), t_arr, tau, n, cfg)
    coeff = _series_quotient(num, den)[n]
    return _out((-1) ** n * (z0[1] / c[0]) * coeff, scalar)


def w_prime(ix: IndexPair, t, tau, cfg: ToleranceConfig = DEFAULT_CFG):
    """``∂_t w_{a,b}(t) = w (θ'_[a,b](t)/θ_[a,b](t) - θ'_[0,0](t)/θ_[0,0](t))``."""
    tau, t_arr, scalar = _prep(ix, t, tau)
    zb = BracketIndex(0, 0, ix.N)
    la = theta_bracket(ix.bracket, t_arr, tau, 1, cfg) / theta_bracket(ix.bracket, t_arr, tau, 0, cfg)
    l0 = theta_bracket(zb, t_arr, tau, 1, cfg) / theta_bracket(zb, t_arr, tau, 0, cfg)
    return _out(w(ix, t_arr, tau, cfg) * (la - l0), scalar)


def _log_dtau(ix: BracketIndex, t, tau, d, cfg):
    return theta_bracket(ix, t, tau, d, cfg, dtau=1) / theta_bracket(ix, t, tau, d, cfg)


def w_dtau(ix: IndexPair, t, tau, cfg: ToleranceConfig = DEFAULT_CFG):
    """``∂_τ w_{a,b}(τ; t)`` at fixed ``t`` from term-wise differentiated series."""
    tau, t_arr, scalar = _prep(ix, t, tau)
    zb = BracketIndex(0, 0, ix.N)
    z0, z0t = _zero(ix.N, tau, cfg), _zero(ix.N, tau, cfg, 1)
    c, ct = _consts(ix.a, ix.b, ix.N, tau, cfg), _consts(ix.a, ix.b, ix.N, tau, cfg, 1)
    dlog = (z0t[1] / z0[1] - ct[0] / c[0] + _log_dtau(ix.bracket, t_arr, tau, 0, cfg)
            - _log_dtau(zb, t_arr, tau, 0, cfg))
    return _out(w(ix, t_arr, tau, cfg) * dlog, scalar)


def _closed_coeffs(ix: IndexPair, tau, cfg):
    z0 = _zero(ix.N, tau, cfg)
    c = _consts(ix.a, ix.b, ix.N, tau, cfg)
    w0 = c[1] / c[0]
    w1 = c[2] / (2 * c[0]) - z0[3] / (6 * z0[1])
    return w0, w1


def w_coeffs(ix: IndexPair, tau, cfg: ToleranceConfig = DEFAULT_CFG, check: bool = True,
             radius: float | None = None) -> LaurentData:
    """Closed-form ``w_{a,b,0}`` and ``w_{a,b,1}`` at ``t = 0``.

    With ``check`` the values are compared with contour-extracted
    coefficients on a circle of ``radius`` (default: a quarter of the
    shortest period); disagreement beyond ``cfg.residual_tol`` raises
    :class:`AccuracyError`.
    """
    tau = check_tau(tau)
    w0, w1 = _closed_coeffs(ix, tau, cfg)
    if check:
        r = radius if radius is not None else 0.25 * min(1.0, abs(tau), abs(tau - 1), abs(tau + 1))
        f = lambda u: w(ix, u, tau, cfg)
        e0 = laurent_coeff(f, 0.0, 0, r, cfg)
        e1 = laurent_coeff(f, 0.0, 1, r, cfg)
        if abs(e0 - w0) > cfg.residual_tol * max(1, abs(w0)) or abs(e1 - w1) * r > cfg.residual_tol * max(1, abs(w1)):
            raise AccuracyError(f"Laurent coefficients of w{ix.a, ix.b} disagree with closed form")
    return LaurentData(complex(w0), complex(w1))


# ---------------------------------------------------------------- KZB kernel

def _check_cell(t_arr, tau):
    x, y = lattice_coords(t_arr, tau)
    if np.any(np.abs(x) >= 1) or np.any(np.abs(y) >= 1):
        raise ValidationError("Z_ab argument outside the fundamental cell around 0; reduce first")
    if np.any((np.abs(t_arr) > 0) & (np.abs(t_arr) < Z_GUARD)):
        raise ValidationError("Z_ab argument in the ill-conditioned band 0 < |t| < 1e-6")


def _z_at_zero(c):
    return (c[2] / c[0] - (c[1] / c[0]) ** 2) / FOUR_PI_I


def _z_parts(ix: IndexPair, t_arr, tau, cfg):
    """Return masks and the generic-evaluation pieces shared by ``Z_ab`` and its derivatives."""
    th = [theta_bracket(ix.bracket, t_arr, tau, d, cfg) for d in range(3)]
    return th


def Z_ab(ix: IndexPair, t, tau, cfg: ToleranceConfig = DEFAULT_CFG):
    """``Z_{a,b}(t) = w_{a,b}(t)/(4πi) · (θ'_[a,b](t)/θ_[a,b](t) - θ'_[a,b]/θ_[a,b])``.

    ``t = 0`` (exactly) uses the analytic continuation
    ``(θ''_[a,b]/θ_[a,b] - (θ'_[a,b]/θ_[a,b])²)/(4πi)``.
    """
    tau = check_tau(tau)
    scalar = np.ndim(t) == 0
    t_arr = np.atleast_1d(np.asarray(t, dtype=complex))
    _check_cell(t_arr, tau)
    c = _consts(ix.a, ix.b, ix.N, tau, cfg)
    out = np.full(t_arr.shape, _z_at_zero(c), dtype=complex)
    nz = t_arr != 0
    if np.any(nz):
        tt = t_arr[nz]
        th0, th1, _ = _z_parts(ix, tt, tau, cfg)
        out[nz] = w(ix, tt, tau, cfg) / FOUR_PI_I * (th1 / th0 - c[1] / c[0])
    return _out(out[0] if scalar else out, scalar)


def Z_ab_prime(ix: IndexPair, t, tau, cfg: ToleranceConfig = DEFAULT_CFG):
    """``∂_t Z_{a,b}(t)``; requires ``t ≠ 0`` (the connection only differentiates off-diagonal terms)."""
    tau = check_tau(tau)
    scalar = np.ndim(t) == 0
    t_arr = np.asarray(t, dtype=complex)
    _check_cell(np.atleast_1d(t_arr), tau)
    _check_off_lattice(t_arr, tau)
    c = _consts(ix.a, ix.b, ix.N, tau, cfg)
    th0, th1, th2 = _z_parts(ix, t_arr, tau, cfg)
    L = th1 / th0
    dL = th2 / th0 - L * L
    val = (w_prime(ix, t_arr, tau, cfg) * (L - c[1] / c[0]) + w(ix, t_arr, tau, cfg) * dL) / FOUR_PI_I
    return _out(val, scalar)


def Z_ab_dtau(ix: IndexPair, t, tau, cfg: ToleranceConfig = DEFAULT_CFG):
    """``∂_τ Z_{a,b}(τ; t)`` at fixed ``t`` (``t = 0`` allowed) from term-wise series."""
    tau = check_tau(tau)
    scalar = np.ndim(t) == 0
    t_arr = np.atleast_1d(np.asarray(t, dtype=complex))
    _check_cell(t_arr, tau)
    c = _consts(ix.a, ix.b, ix.N, tau, cfg)
    ct = _consts(ix.a, ix.b, ix.N, tau, cfg, 1)
    L0, L0t = c[1] / c[0], ct[1] / c[0] - c[1] * ct[0] / c[0] ** 2
    out = np.empty(t_arr.shape, dtype=complex)
    # derivative of the t = 0 continuation
    th2t = ct[2] / c[0] - c[2] * ct[0] / c[0] ** 2
    out[...] = (th2t - 2 * L0 * L0t) / FOUR_PI_I
    nz = t_arr != 0
    if np.any(nz):
        tt = t_arr[nz]
        th0, th1, _ = _z_parts(ix, tt, tau, cfg)
        th0t = theta_bracket(ix.bracket, tt, tau, 0, cfg, dtau=1)
        th1t = theta_bracket(ix.bracket, tt, tau, 1, cfg, dtau=1)
        L = th1 / th0
        Lt = th1t / th0 - th1 * th0t / th0 ** 2
        out[nz] = (w_dtau(ix, tt, tau, cfg) * (L - L0) + w(ix, tt, tau, cfg) * (Lt - L0t)) / FOUR_PI_I
    return _out(out[0] if scalar else out, scalar)


def Z11(t, tau, cfg: ToleranceConfig = DEFAULT_CFG):
    """``Z_{1,1}(τ; t) = -(1/2πi) θ'_[0,0](t)/θ_[0,0](t)``; gains ``+m`` under ``t → t + mτ + n``."""
    tau = check_tau(tau)
    scalar = np.ndim(t) == 0
    t_arr = np.asarray(t, dtype=complex)
    _check_off_lattice(t_arr, tau)
    zb = BracketIndex(0, 0, 2)
    val = -theta_bracket(zb, t_arr, tau, 1, cfg) / theta_bracket(zb, t_arr, tau, 0, cfg) / TWO_PI_I
    return _out(val, scalar)


# ---------------------------------------------------------------- Weierstrass

def eta1(tau, cfg: ToleranceConfig = DEFAULT_CFG) -> complex:
    """Quasi-period of ``ζ``: ``ζ(t+1) = ζ(t) + η₁`` with ``η₁ = -θ'''_[0,0]/(3θ'_[0,0])``."""
    tau = check_tau(tau)
    z0 = _zero(2, tau, cfg)
    return complex(-z0[3] / (3 * z0[1]))


def wp(t, tau, cfg: ToleranceConfig = DEFAULT_CFG):
    """Weierstrass ``℘(t) = t^-2 + O(t^2)`` for the lattice ``Z + τZ``."""
    tau = check_tau(tau)
    scalar = np.ndim(t) == 0
    t_arr = np.asarray(t, dtype=complex)
    _check_off_lattice(t_arr, tau)
    zb = BracketIndex(0, 0, 2)
    th = [theta_bracket(zb, t_arr, tau, d, cfg) for d in range(3)]
    L = th[1] / th[0]
    return _out(-(th[2] / th[0] - L * L) - eta1(tau, cfg), scalar)


def zeta_w(t, tau, cfg: ToleranceConfig = DEFAULT_CFG):
    """Weierstrass ``ζ(t) = t^-1 + O(t^3)``, ``ζ' = -℘``."""
    tau = check_tau(tau)
    scalar = np.ndim(t) == 0
    t_arr = np.asarray(t, dtype=complex)
    _check_off_lattice(t_arr, tau)
    zb = BracketIndex(0, 0, 2)
    val = theta_bracket(zb, t_arr, tau, 1, cfg) / theta_bracket(zb, t_arr, tau, 0, cfg) + eta1(tau, cfg) * t_arr
    return _out(val, scalar)
