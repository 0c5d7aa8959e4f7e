"""XYZ Gaudin model: the generating function τ̂(u) and its commuting integrals.

.. math::

    \\hat\\tau(u) = \\tfrac12 \\sum_{i,j}\\sum_{(a,b)\\ne 0}
        w_{-a,-b}(u-z_i)\\, w_{a,b}(u-z_j)\\, \\rho_i(J_{a,b})\\rho_j(J^{a,b})
      = \\sum_i C_i \\wp(u-z_i) + \\sum_i H_i \\zeta(u-z_i) + H_0
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .elliptic import IndexPair, lattice_distance, w, wp, zeta_w
from .liealg import (TwistBasis, TwistRepresentation, casimir, make_twist_basis, parse_rep_spec,
                     rep_to_json)
from .numcore import (DEFAULT_CFG, AccuracyError, JointEigenspace, ToleranceConfig, ValidationError,
                      as_scalar, embed_site, joint_eigenspaces, laurent_coeff)
from .theta import check_tau

__all__ = [
    "Scene",
    "GaudinData",
    "SpectralEntry",
    "tau_hat",
    "extract_integrals",
    "h_explicit_sl2",
    "joint_spectrum",
    "cb_dimension",
    "q_profile",
    "scene_from_json",
    "scene_to_json",
    "MIN_RADIUS",
]

MIN_RADIUS = 1e-4
_PROBE_SEED = 7


def _pair_gaps(z, tau, i):
    """Smallest distance from ``z_i`` to the other points and to its own lattice translates."""
    gaps = [min(abs(tau), 1.0, abs(tau - 1), abs(tau + 1))]
    for j, zj in enumerate(z):
        if j != i:
            gaps.append(float(lattice_distance(z[i] - zj, tau)))
    return min(gaps)


@dataclass(frozen=True)
class Scene:
    """Modulus, marked points, rank, level and one representation per point."""

    tau: complex
    z: tuple
    N: int
    reps: tuple
    level_k: complex = 0.0

    def __post_init__(self):
        object.__setattr__(self, "tau", check_tau(self.tau))
        object.__setattr__(self, "z", tuple(as_scalar(x) for x in self.z))
        object.__setattr__(self, "reps", tuple(self.reps))
        object.__setattr__(self, "level_k", as_scalar(self.level_k))
        if len(self.z) < 1 or len(self.z) != len(self.reps):
            raise ValidationError("need L >= 1 points and one representation per point")
        if any(r.N != self.N for r in self.reps):
            raise ValidationError("all representations must share N")
        for i in range(len(self.z)):
            for j in range(i + 1, len(self.z)):
                if lattice_distance(self.z[i] - self.z[j], self.tau) < 1e-9:
                    raise ValidationError(f"z_{i} - z_{j} lies on the period lattice")

    @property
    def L(self) -> int:
        return len(self.z)

    @property
    def dims(self) -> list[int]:
        return [r.dim for r in self.reps]

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    @property
    def kappa(self) -> complex:
        return self.level_k + self.N

    def replace(self, **kw) -> "Scene":
        d = dict(tau=self.tau, z=self.z, N=self.N, reps=self.reps, level_k=self.level_k)
        d.update(kw)
        new = Scene(**d)
        if new.N == self.N and new.reps == self.reps:
            # operator caches depend only on N and the representations
            for key in ("basis", "site_ops", "op_cache"):
                new.__dict__[key] = getattr(self, key)
        return new

    @cached_property
    def basis(self) -> TwistBasis:
        return make_twist_basis(self.N)

    @cached_property
    def site_ops(self) -> dict:
        """``{(i, (a,b)): (ρ_i(J_{a,b}), ρ_i(J^{a,b}))}`` embedded in ``V``."""
        ops = {}
        for i, rep in enumerate(self.reps):
            for p in self.basis.pairs:
                ops[(i, p)] = (embed_site(rep(*p), self.dims, i),
                               embed_site(rep.dual_image(self.basis, *p), self.dims, i))
        return ops

    @cached_property
    def op_cache(self) -> dict:
        """Scratch cache for derived operator products, shared by :meth:`replace`."""
        return {}

    def casimirs(self) -> list[np.ndarray]:
        return [embed_site(casimir(r, self.basis), self.dims, i) for i, r in enumerate(self.reps)]


def _site_ops(scene: Scene, basis: TwistBasis | None):
    if basis is None or basis is scene.basis:
        return scene.site_ops
    if basis.N != scene.N:
        raise ValidationError("basis N differs from scene N")
    ops = {}
    for i, rep in enumerate(scene.reps):
        for p in basis.pairs:
            ops[(i, p)] = (embed_site(rep.act(basis.J[p], scene.basis), scene.dims, i),
                           embed_site(rep.act(basis.Jdual[p], scene.basis), scene.dims, i))
    return ops


def tau_hat(scene: Scene, u, basis: TwistBasis | None = None, cfg: ToleranceConfig = DEFAULT_CFG):
    """Evaluate τ̂ at ``u`` (scalar → matrix, 1-D array → stack of matrices).

    ``basis`` may be any dual pair ``{J, J^}`` spanning sl_N (for example a
    rescaled twist basis); it defaults to the scene's own twist basis.
    """
    scalar = np.ndim(u) == 0
    u_arr = np.atleast_1d(np.asarray(u, dtype=complex))
    for zi in scene.z:
        if np.any(lattice_distance(u_arr - zi, scene.tau) < 1e-9):
            raise ValidationError("u coincides with a marked point modulo the lattice")
    ops = _site_ops(scene, basis)
    pairs = (basis or scene.basis).pairs
    D = scene.dim
    out = np.zeros((len(u_arr), D, D), dtype=complex)
    for (a, b) in pairs:
        ix, mix = IndexPair(a, b, scene.N), IndexPair(-a, -b, scene.N)
        left = np.zeros_like(out)
        right = np.zeros_like(out)
        for i, zi in enumerate(scene.z):
            J, Jd = ops[(i, (a, b))]
            left += w(mix, u_arr - zi, scene.tau, cfg)[:, None, None] * J
            right += w(ix, u_arr - zi, scene.tau, cfg)[:, None, None] * Jd
        out += 0.5 * left @ right
    return out[0] if scalar else out


@dataclass
class GaudinData:
    C: list
    H: list
    H0: np.ndarray
    fit_residual: float
    radii: list = field(default_factory=list)

    def model(self, scene: Scene, u, cfg: ToleranceConfig = DEFAULT_CFG) -> np.ndarray:
        out = self.H0.astype(complex).copy()
        for i, zi in enumerate(scene.z):
            out = out + self.C[i] * wp(u - zi, scene.tau, cfg) + self.H[i] * zeta_w(u - zi, scene.tau, cfg)
        return out


def contour_radius(scene: Scene, i: int) -> float:
    gap = _pair_gaps(scene.z, scene.tau, i)
    if gap < 10 * MIN_RADIUS:
        raise ValidationError(f"z_{i} is too close to another pole (gap {gap:.2e}) for contour extraction")
    return 0.25 * gap


def _probe_points(scene: Scene, k: int):
    """Deterministic probe points away from every marked point."""
    rng = np.random.default_rng(_PROBE_SEED)
    pts = []
    zc = np.mean(scene.z)
    shift = (1 + scene.tau) / 7
    while len(pts) < k:
        u = zc + shift
        if all(lattice_distance(u - zi, scene.tau) > 0.05 for zi in scene.z):
            pts.append(complex(u))
        x, y = rng.uniform(-0.5, 0.5, size=2)
        shift = x + y * scene.tau + math.sqrt(2) / 97 * len(pts)
    return pts


def extract_integrals(scene: Scene, basis: TwistBasis | None = None,
                      cfg: ToleranceConfig = DEFAULT_CFG) -> GaudinData:
    """Read ``C_i``, ``H_i`` (Laurent coefficients at ``z_i``) and ``H_0`` off τ̂."""
    f = lambda u: tau_hat(scene, u, basis, cfg)
    C, H, radii = [], [], []
    for i, zi in enumerate(scene.z):
        r = contour_radius(scene, i)
        radii.append(r)
        C.append(laurent_coeff(f, zi, -2, r, cfg))
        H.append(laurent_coeff(f, zi, -1, r, cfg))
    probes = _probe_points(scene, 6)
    u0 = probes[0]
    partial = GaudinData(C, H, np.zeros((scene.dim, scene.dim), dtype=complex), 0.0, radii)
    H0 = tau_hat(scene, u0, basis, cfg) - partial.model(scene, u0, cfg)
    data = GaudinData(C, H, H0, 0.0, radii)
    data.fit_residual = max(float(np.linalg.norm(tau_hat(scene, u, basis, cfg) - data.model(scene, u, cfg)))
                            for u in probes[1:])
    return data


_SL2_PAIRS = ((0, 1), (1, 1), (1, 0))


def h_explicit_sl2(scene: Scene, basis: TwistBasis | None = None, cfg: ToleranceConfig = DEFAULT_CFG):
    """Closed-form ``H_i`` and ``H_0`` for ``N = 2``.

    ``H_0`` uses the half periods ``ω_{a,b}/2 = (aτ + b)/2`` and
    ``e_{a,b} = ℘(ω_{a,b}/2)``.
    """
    if scene.N != 2:
        raise ValidationError("explicit Hamiltonians are only available for N = 2")
    ops = _site_ops(scene, basis)
    tau = scene.tau
    D = scene.dim
    H = [np.zeros((D, D), dtype=complex) for _ in range(scene.L)]
    H0 = np.zeros((D, D), dtype=complex)
    for a, b in _SL2_PAIRS:
        ix = IndexPair(a, b, 2)
        half = (a * tau + b) / 2
        e_ab = wp(half, tau, cfg)
        zeta_half = zeta_w(half, tau, cfg)
        for i in range(scene.L):
            Ji, Jdi = ops[(i, (a, b))]
            H0 -= 0.5 * e_ab * Ji @ Jdi
            for j in range(scene.L):
                if j == i:
                    continue
                _, Jdj = ops[(j, (a, b))]
                t = scene.z[i] - scene.z[j]
                wij = w(ix, t, tau, cfg)
                H[i] += wij * Ji @ Jdj
                H0 += 0.5 * wij * (zeta_w(t + half, tau, cfg) - zeta_half) * Ji @ Jdj
    return H, H0


@dataclass
class SpectralEntry:
    mu: tuple
    multiplicity: int
    basis: np.ndarray
    defective: bool = False


def joint_spectrum(scene: Scene, basis: TwistBasis | None = None, cfg: ToleranceConfig = DEFAULT_CFG,
                   data: GaudinData | None = None, tol: float = 1e-7) -> list[SpectralEntry]:
    """Joint generalized eigenspaces of ``(H_1, ..., H_L, H_0)``."""
    data = data or extract_integrals(scene, basis, cfg)
    spaces = joint_eigenspaces(list(data.H) + [data.H0], tol)
    return [SpectralEntry(s.values, s.dim, s.basis, s.defective) for s in spaces]


def cb_dimension(scene: Scene, basis: TwistBasis | None, mu: Sequence, tol: float = 1e-7,
                 cfg: ToleranceConfig = DEFAULT_CFG, spectrum: list[SpectralEntry] | None = None) -> int:
    """Dimension of ``V / J^μ(V)``: the joint eigenspace matching ``μ = (μ_1..μ_L, μ_0)``.

    Equal to the conformal-block dimension when the family is diagonalizable;
    defective joint eigenspaces are reported through :func:`joint_spectrum`.
    """
    spectrum = spectrum if spectrum is not None else joint_spectrum(scene, basis, cfg)
    mu = np.asarray(mu, dtype=complex)
    for entry in spectrum:
        vals = np.asarray(entry.mu)
        if vals.shape == mu.shape and np.max(np.abs(vals - mu)) <= tol * max(1.0, np.max(np.abs(vals))):
            return entry.multiplicity
    return 0


def q_profile(scene: Scene, mu: Sequence, mu0, t, cfg: ToleranceConfig = DEFAULT_CFG) -> complex:
    """``q(t) = Σ l_i(l_i+1) ℘(t-z_i) + Σ μ_i ζ(t-z_i) + μ_0`` for an sl_2 scene."""
    if scene.N != 2:
        raise ValidationError("q_profile is defined for sl_2 scenes")
    mu = list(mu)
    if len(mu) != scene.L:
        raise ValidationError("need one μ_i per marked point")
    val = complex(mu0)
    for zi, rep, m in zip(scene.z, scene.reps, mu):
        l = (rep.dim - 1) / 2
        val += l * (l + 1) * wp(t - zi, scene.tau, cfg) + m * zeta_w(t - zi, scene.tau, cfg)
    return complex(val)


# ---------------------------------------------------------------- JSON

def _pair(v) -> complex:
    if isinstance(v, (list, tuple)):
        if len(v) != 2:
            raise ValidationError(f"complex numbers are [re, im] pairs, got {v!r}")
        return complex(float(v[0]), float(v[1]))
    return complex(v)


def scene_from_json(doc: dict) -> Scene:
    try:
        N = int(doc["N"])
        tau = _pair(doc["tau"])
        z = [_pair(p) for p in doc["z"]]
        reps = [parse_rep_spec(r, N) for r in doc["reps"]]
        level = _pair(doc.get("level_k", [0.0, 0.0]))
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed scene document: {exc}") from exc
    return Scene(tau, tuple(z), N, tuple(reps), level)


def scene_to_json(scene: Scene, rep_specs: Sequence | None = None) -> dict:
    return {
        "tau": [scene.tau.real, scene.tau.imag],
        "z": [[z.real, z.imag] for z in scene.z],
        "N": scene.N,
        "level_k": [scene.level_k.real, scene.level_k.imag],
        "reps": list(rep_specs) if rep_specs is not None else [rep_to_json(r) for r in scene.reps],
    }
