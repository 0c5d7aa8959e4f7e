"""Elliptic KZ/KZB connection: coefficient matrices, curvature, transport, modularity.

The covariant connection is ``D_μ = ∂_μ + A_μ`` on ``V`` with

* ``A_{z_i} = -(1/κ) Σ_{j≠i} Σ_{(a,b)} w_{a,b}(z_j - z_i) ρ_j(J_{a,b}) ρ_i(J^{a,b})``
* ``A_τ = (1/κ) Σ_{i,j} Σ_{(a,b)} Z_{a,b}(z_j - z_i) ρ_j(J_{a,b}) ρ_i(J^{a,b})``

Flat sections solve ``∂_μ F = -A_μ F``.  The dual connection on ``V*`` uses
``ρ* = -ρ^T`` with the opposite overall signs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg as la

from .elliptic import (IndexPair, Z_ab, Z_ab_dtau, Z_ab_prime, lattice_coords, w, w_dtau, w_prime)
from .gaudin import Scene, _site_ops
from .liealg import (ModularElement, TwistBasis, casimir, intertwiner_x, make_twist_basis,
                     rep_group_element)
from .numcore import DEFAULT_CFG, AccuracyError, ToleranceConfig, ValidationError, fd_derivative

__all__ = [
    "ConnectionMatrix",
    "Segment",
    "TransportPath",
    "kz_matrix_z",
    "kz_matrix_tau",
    "connection_matrix",
    "connection_derivative",
    "curvature",
    "flatness_residual",
    "transport",
    "line_segment",
    "circle_segment",
    "path_from_json",
    "residue_operator",
    "rmatrix",
    "modular_check",
    "conformal_weight",
    "COVARIANT",
    "DUAL",
]

COVARIANT = "covariant"
DUAL = "dual"
TAU = "tau"


@dataclass
class ConnectionMatrix:
    direction: object  # site index (0-based) or "tau"
    matrix: np.ndarray
    kappa: complex
    variant: str = COVARIANT


def _kappa(scene: Scene, kappa=None) -> complex:
    k = scene.kappa if kappa is None else complex(kappa)
    if abs(k) < 1e-14:
        raise ValidationError("critical level: κ = k + N vanishes")
    return k


def _check_direction(scene: Scene, direction):
    if direction == TAU:
        return
    if not isinstance(direction, (int, np.integer)) or not 0 <= direction < scene.L:
        raise ValidationError(f"direction must be 'tau' or a site index 0..{scene.L - 1}")


def _ops(scene: Scene, basis, variant):
    key = ("ops", variant, None if basis is None else id(basis))
    hit = scene.op_cache.get(key)
    if hit is not None and hit[0] is basis:
        return hit[1]
    ops = _make_ops(scene, basis, variant)
    scene.op_cache[key] = (basis, ops)
    return ops


def _products(scene: Scene, basis, variant):
    """``{(j, i, p): ρ_j(J_p) ρ_i(J^p)}``, cached on the scene."""
    key = ("prod", variant, None if basis is None else id(basis))
    hit = scene.op_cache.get(key)
    if hit is not None and hit[0] is basis:
        return hit[1]
    ops = _ops(scene, basis, variant)
    prods = {(j, i, p): ops[(j, p)][0] @ ops[(i, p)][1]
             for j in range(scene.L) for i in range(scene.L) for p in _pairs(scene, basis)}
    scene.op_cache[key] = (basis, prods)
    return prods


def _make_ops(scene: Scene, basis, variant):
    ops = _site_ops(scene, basis)
    if variant == COVARIANT:
        return ops
    if variant != DUAL:
        raise ValidationError(f"unknown variant {variant!r}")
    return {k: (-J.T, -Jd.T) for k, (J, Jd) in ops.items()}


def _pairs(scene, basis):
    return (basis or scene.basis).pairs


def _z_sum(scene, basis, i, kernel, variant):
    """``Σ_{j≠i} Σ_{(a,b)} kernel(ix, z_j - z_i) ρ_j(J) ρ_i(J^)``."""
    prods = _products(scene, basis, variant)
    D = scene.dim
    out = np.zeros((D, D), dtype=complex)
    for j in range(scene.L):
        if j == i:
            continue
        t = scene.z[j] - scene.z[i]
        for p in _pairs(scene, basis):
            ix = IndexPair(*p, scene.N)
            out += kernel(ix, t) * prods[(j, i, p)]
    return out


def _check_reduced(scene: Scene):
    for i in range(scene.L):
        for j in range(scene.L):
            x, y = lattice_coords(scene.z[j] - scene.z[i], scene.tau)
            if abs(x) >= 1 or abs(y) >= 1:
                raise ValidationError("z_j - z_i must lie in the fundamental cell around 0 "
                                      "(translate the points into a common cell first)")


def _tau_sum(scene, basis, kernel, variant):
    """``Σ_{i,j} Σ_{(a,b)} kernel(ix, z_j - z_i) ρ_j(J) ρ_i(J^)`` (diagonal at t = 0)."""
    _check_reduced(scene)
    prods = _products(scene, basis, variant)
    D = scene.dim
    out = np.zeros((D, D), dtype=complex)
    for i in range(scene.L):
        for j in range(scene.L):
            t = scene.z[j] - scene.z[i] if i != j else 0.0
            for p in _pairs(scene, basis):
                ix = IndexPair(*p, scene.N)
                out += kernel(ix, t) * prods[(j, i, p)]
    return out


def kz_matrix_z(scene: Scene, basis: TwistBasis | None, i: int, variant: str = COVARIANT,
                cfg: ToleranceConfig = DEFAULT_CFG, kappa=None) -> ConnectionMatrix:
    """Coefficient of ``D_{∂z_i}`` (everything except ``∂_{z_i}``)."""
    k = _kappa(scene, kappa)
    _check_direction(scene, i)
    s = _z_sum(scene, basis, i, lambda ix, t: w(ix, t, scene.tau, cfg), variant)
    sign = -1 if variant == COVARIANT else 1
    return ConnectionMatrix(i, sign * s / k, k, variant)


def kz_matrix_tau(scene: Scene, basis: TwistBasis | None, variant: str = COVARIANT,
                  cfg: ToleranceConfig = DEFAULT_CFG, kappa=None) -> ConnectionMatrix:
    """Coefficient of ``D_{∂τ}``; requires every ``z_j - z_i`` in the cell around 0."""
    k = _kappa(scene, kappa)
    s = _tau_sum(scene, basis, lambda ix, t: Z_ab(ix, t, scene.tau, cfg), variant)
    sign = 1 if variant == COVARIANT else -1
    return ConnectionMatrix(TAU, sign * s / k, k, variant)


def connection_matrix(scene, basis, direction, variant=COVARIANT, cfg=DEFAULT_CFG, kappa=None) -> np.ndarray:
    if direction == TAU:
        return kz_matrix_tau(scene, basis, variant, cfg, kappa).matrix
    return kz_matrix_z(scene, basis, direction, variant, cfg, kappa).matrix


def connection_derivative(scene: Scene, basis, direction, wrt, cfg: ToleranceConfig = DEFAULT_CFG,
                          kappa=None) -> np.ndarray:
    """Analytic ``∂_{wrt} A_{direction}`` for the covariant connection."""
    k = _kappa(scene, kappa)
    _check_direction(scene, direction)
    _check_direction(scene, wrt)
    tau = scene.tau
    if direction == TAU:
        if wrt == TAU:
            return _tau_sum(scene, basis, lambda ix, t: Z_ab_dtau(ix, t, tau, cfg), COVARIANT) / k

        def kern_pair(i, j):
            return (j == wrt) - (i == wrt)

        ops = _site_ops(scene, basis)
        _check_reduced(scene)
        out = np.zeros((scene.dim, scene.dim), dtype=complex)
        for i in range(scene.L):
            for j in range(scene.L):
                f = kern_pair(i, j)
                if i == j or f == 0:
                    continue
                t = scene.z[j] - scene.z[i]
                for p in _pairs(scene, basis):
                    out += f * Z_ab_prime(IndexPair(*p, scene.N), t, tau, cfg) * ops[(j, p)][0] @ ops[(i, p)][1]
        return out / k
    i = direction
    if wrt == TAU:
        return -_z_sum(scene, basis, i, lambda ix, t: w_dtau(ix, t, tau, cfg), COVARIANT) / k
    ops = _site_ops(scene, basis)
    out = np.zeros((scene.dim, scene.dim), dtype=complex)
    for j in range(scene.L):
        f = (j == wrt) - (i == wrt)
        if j == i or f == 0:
            continue
        t = scene.z[j] - scene.z[i]
        for p in _pairs(scene, basis):
            out += f * w_prime(IndexPair(*p, scene.N), t, tau, cfg) * ops[(j, p)][0] @ ops[(i, p)][1]
    return -out / k


def _moved(scene: Scene, direction, delta) -> Scene:
    if direction == TAU:
        return scene.replace(tau=scene.tau + delta)
    z = list(scene.z)
    z[direction] += delta
    return scene.replace(z=tuple(z))


def _fd_connection_derivative(scene, basis, direction, wrt, h, cfg, kappa):
    f = lambda x: connection_matrix(_moved(scene, wrt, x - 0.0), basis, direction, COVARIANT, cfg, kappa)
    return fd_derivative(f, 0.0, h)


def curvature(scene: Scene, basis, mu, nu, cfg: ToleranceConfig = DEFAULT_CFG, kappa=None,
              fd_step: float | None = None) -> np.ndarray:
    """``F_{μν} = ∂_μ A_ν - ∂_ν A_μ + [A_μ, A_ν]``; derivatives analytic unless ``fd_step`` is given."""
    Am = connection_matrix(scene, basis, mu, COVARIANT, cfg, kappa)
    An = connection_matrix(scene, basis, nu, COVARIANT, cfg, kappa)
    if fd_step is None:
        dmAn = connection_derivative(scene, basis, nu, mu, cfg, kappa)
        dnAm = connection_derivative(scene, basis, mu, nu, cfg, kappa)
    else:
        dmAn = _fd_connection_derivative(scene, basis, nu, mu, fd_step, cfg, kappa)
        dnAm = _fd_connection_derivative(scene, basis, mu, nu, fd_step, cfg, kappa)
    return dmAn - dnAm + Am @ An - An @ Am


def flatness_residual(scene: Scene, basis, pair: Sequence, h: float = 1e-3, cfg: ToleranceConfig = DEFAULT_CFG,
                      kappa=None, fd_tol: float = 1e-5) -> float:
    """Norm of the curvature in the two directions of ``pair``.

    The reported value uses analytic derivatives.  The same curvature is
    recomputed with finite differences at step ``h``; if the two disagree by
    more than ``fd_tol`` relative to the connection scale an
    :class:`AccuracyError` is raised.
    """
    mu, nu = pair
    if mu == nu:
        return 0.0
    F = curvature(scene, basis, mu, nu, cfg, kappa)
    Ffd = curvature(scene, basis, mu, nu, cfg, kappa, fd_step=h)
    scale = max(1.0, np.linalg.norm(connection_matrix(scene, basis, mu, COVARIANT, cfg, kappa)),
                np.linalg.norm(connection_matrix(scene, basis, nu, COVARIANT, cfg, kappa)))
    if np.linalg.norm(F - Ffd) > fd_tol * scale ** 2:
        raise AccuracyError("analytic and finite-difference curvature disagree")
    return float(np.linalg.norm(F))


# ---------------------------------------------------------------- transport

@dataclass
class Segment:
    """A smooth curve ``s ∈ [0,1] ↦ (τ(s), z(s))`` with its velocity."""

    curve: Callable[[float], tuple]
    velocity: Callable[[float], tuple]
    steps: int = 100

    @property
    def start(self):
        return self.curve(0.0)

    @property
    def end(self):
        return self.curve(1.0)


@dataclass
class TransportPath:
    segments: list = field(default_factory=list)
    method: str = "rk4"

    @property
    def closed(self) -> bool:
        a, b = self.segments[0].start, self.segments[-1].end
        return abs(a[0] - b[0]) < 1e-12 and np.allclose(a[1], b[1], atol=1e-12)

    def __add__(self, other: "TransportPath") -> "TransportPath":
        return TransportPath(self.segments + other.segments, self.method)


def line_segment(p0: tuple, p1: tuple, steps: int = 100) -> Segment:
    """Straight segment between points ``(τ, z)`` of the parameter space."""
    t0, z0 = complex(p0[0]), np.asarray(p0[1], dtype=complex)
    t1, z1 = complex(p1[0]), np.asarray(p1[1], dtype=complex)
    return Segment(lambda s: (t0 + s * (t1 - t0), z0 + s * (z1 - z0)),
                   lambda s: (t1 - t0, z1 - z0), int(steps))


def circle_segment(point: tuple, site: int, center: complex, radius: float, steps: int = 200,
                   turns: float = 1.0, start_angle: float = 0.0) -> Segment:
    """``z_site`` runs ``turns`` times around ``center`` (negative ``turns``: clockwise)."""
    tau, z = complex(point[0]), np.asarray(point[1], dtype=complex)
    w_ = 2 * math.pi * turns

    def curve(s):
        zz = z.copy()
        zz[site] = center + radius * np.exp(1j * (start_angle + w_ * s))
        return tau, zz

    def vel(s):
        dz = np.zeros_like(z)
        dz[site] = 1j * w_ * radius * np.exp(1j * (start_angle + w_ * s))
        return 0.0, dz

    return Segment(curve, vel, int(steps))


def path_from_json(doc: dict) -> TransportPath:
    """Path document of straight segments between scene points."""
    def point(p):
        tau = complex(*p["tau"])
        return tau, np.array([complex(*q) for q in p["z"]])
    try:
        segs = [line_segment(point(s["from"]), point(s["to"]), int(s["steps"])) for s in doc["segments"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed path document: {exc}") from exc
    if not segs:
        raise ValidationError("path has no segments")
    return TransportPath(segs)


def _generator(scene0, basis, tau, z, dtau, dz, cfg, kappa, variant):
    sc = scene0.replace(tau=tau, z=tuple(z))
    G = np.zeros((sc.dim, sc.dim), dtype=complex)
    if dtau != 0:
        G += dtau * connection_matrix(sc, basis, TAU, variant, cfg, kappa)
    for i, dzi in enumerate(dz):
        if dzi != 0:
            G += dzi * connection_matrix(sc, basis, i, variant, cfg, kappa)
    return G


def transport(scene0: Scene, basis, path: TransportPath, kappa=None, variant: str = COVARIANT,
              cfg: ToleranceConfig = DEFAULT_CFG, return_error: bool = False):
    """Parallel transport operator ``T`` along ``path`` (classical RK4).

    Solves ``dF/ds = -A(s) F`` with ``F(0) = I``.  The representations,
    rank and level come from ``scene0``; the path supplies ``(τ, z)``.
    With ``return_error`` the integration is repeated at half the step and
    ``(T, |T_h - T_{h/2}|/15)`` is returned.
    """
    k = _kappa(scene0, kappa)

    def run(mult):
        F = np.eye(scene0.dim, dtype=complex)
        for seg in path.segments:
            n = seg.steps * mult
            h = 1.0 / n

            def rhs(s, Y):
                tau, z = seg.curve(s)
                dtau, dz = seg.velocity(s)
                return -_generator(scene0, basis, tau, z, dtau, dz, cfg, k, variant) @ Y

            for m in range(n):
                s = m * h
                k1 = rhs(s, F)
                k2 = rhs(s + h / 2, F + h / 2 * k1)
                k3 = rhs(s + h / 2, F + h / 2 * k2)
                k4 = rhs(s + h, F + h * k3)
                F = F + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            if not np.all(np.isfinite(F)) or np.linalg.norm(F) > 1e12:
                raise AccuracyError("transport diverged; refine the step count or avoid collisions")
        return F

    T = run(1)
    if return_error:
        T2 = run(2)
        return T2, float(np.linalg.norm(T - T2) / 15)
    return T


def residue_operator(scene: Scene, basis, i: int, j: int) -> np.ndarray:
    """``Σ_{(a,b)} ρ_i(J_{a,b}) ρ_j(J^{a,b})`` (the Casimir tensor at sites i, j)."""
    ops = _site_ops(scene, basis)
    return sum(ops[(i, p)][0] @ ops[(j, p)][1] for p in _pairs(scene, basis))


# ---------------------------------------------------------------- modularity

def rmatrix(tau, t, N: int, cfg: ToleranceConfig = DEFAULT_CFG, basis: TwistBasis | None = None) -> np.ndarray:
    """Classical r-matrix ``Σ w_{a,b}(τ; t) J_{a,b} ⊗ J^{a,b}`` in the defining representation."""
    basis = basis or make_twist_basis(N)
    return sum(w(IndexPair(*p, N), t, tau, cfg) * np.kron(basis.J[p], basis.Jdual[p]) for p in basis.pairs)


def conformal_weight(scene: Scene, kappa=None) -> complex:
    """``Δ = Σ_i c_i / κ`` with ``c_i`` the Casimir eigenvalue of ``V_i``."""
    k = _kappa(scene, kappa)
    total = 0.0
    for rep in scene.reps:
        C = casimir(rep, scene.basis)
        c = np.trace(C) / rep.dim
        if np.linalg.norm(C - c * np.eye(rep.dim)) > 1e-9 * max(1.0, abs(c)):
            raise ValidationError("conformal weight requires irreducible representations (scalar Casimir)")
        total += c
    return complex(total / k)


def _apply_gamma(scene: Scene, gamma: ModularElement) -> Scene:
    f = gamma.factor(scene.tau)
    return scene.replace(tau=gamma.act_tau(scene.tau), z=tuple(z / f for z in scene.z))


def modular_check(scene: Scene, basis, gamma: ModularElement, cfg: ToleranceConfig = DEFAULT_CFG,
                  kappa=None) -> tuple[float, float]:
    """Covariance residuals of the connection under ``γ``.

    ``r_rmatrix`` is the largest, over ordered site pairs, of
    ``‖r(τ̌; ž_j - ž_i) - (cτ+d)·Ad(x_γ⊗x_γ) r(τ; z_j - z_i)‖`` in the defining
    representation.  ``r_weight`` is the residual of the τ-equation under the
    gauge ``x_γ^{-1}(cτ+d)^Δ``:
    ``‖ρ(x)^{-1} A_τ(š) ρ(x) - (cτ+d)² A_τ(s) - c(cτ+d)(Δ + Σ_k z_k A_{z_k}(s))‖``.
    Both vanish identically; they are returned relative to the size of the
    compared operators.
    """
    if not isinstance(gamma, ModularElement):
        gamma = ModularElement(*gamma)
    k = _kappa(scene, kappa)
    N, tau = scene.N, scene.tau
    c, f = gamma.c, gamma.factor(tau)
    tau_c = gamma.act_tau(tau)
    x = intertwiner_x(gamma, N, cfg)
    X2 = np.kron(x, x)
    X2inv = np.linalg.inv(X2)
    r_r = 0.0
    for i in range(scene.L):
        for j in range(scene.L):
            if i == j:
                continue
            t = scene.z[j] - scene.z[i]
            lhs = rmatrix(tau_c, t / f, N, cfg)
            rhs = f * X2 @ rmatrix(tau, t, N, cfg) @ X2inv
            r_r = max(r_r, float(np.linalg.norm(lhs - rhs) / max(1.0, np.linalg.norm(rhs))))

    sc_c = _apply_gamma(scene, gamma)
    Xv = np.ones((1, 1), dtype=complex)
    for rep in scene.reps:
        Xv = np.kron(Xv, rep_group_element(rep, scene.basis, x))
    lhs = np.linalg.inv(Xv) @ connection_matrix(sc_c, basis, TAU, COVARIANT, cfg, k) @ Xv
    A_tau = connection_matrix(scene, basis, TAU, COVARIANT, cfg, k)
    zA = sum(scene.z[m] * connection_matrix(scene, basis, m, COVARIANT, cfg, k) for m in range(scene.L))
    Delta = conformal_weight(scene, k)
    rhs = f * f * A_tau + c * f * (Delta * np.eye(scene.dim) + zA)
    r_w = float(np.linalg.norm(lhs - rhs) / max(1.0, np.linalg.norm(rhs)))
    return r_r, r_w
