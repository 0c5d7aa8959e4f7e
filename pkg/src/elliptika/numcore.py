"""Dense complex linear algebra and contour quadrature shared by all modules.

Scalars are Python ``complex``; matrices are 2-D ``numpy`` arrays of dtype
``complex128``.  Everything here is a pure function of its arguments.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg as la

__all__ = [
    "ElliptikaError",
    "ValidationError",
    "AccuracyError",
    "ToleranceConfig",
    "DEFAULT_CFG",
    "as_matrix",
    "as_scalar",
    "kron",
    "kron_all",
    "embed_site",
    "laurent_coeff",
    "fd_derivative",
    "JointEigenspace",
    "joint_eigenspaces",
    "commutator",
    "rel_norm",
]


class ElliptikaError(Exception):
    """Base class of every error raised by the package."""


class ValidationError(ElliptikaError, ValueError):
    """Inputs violate a precondition (bad shape, pole, non-unimodular ...)."""


class AccuracyError(ElliptikaError, ArithmeticError):
    """A numerical procedure could not reach its requested accuracy."""


@dataclass(frozen=True)
class ToleranceConfig:
    """Numerical knobs.

    Attributes
    ----------
    series_target : float
        Relative truncation bound for theta series.
    residual_tol : float
        Agreement threshold for self-checks (contour doubling etc).
    contour_samples : int
        Trapezoid nodes on a circle; at least 16.
    """

    series_target: float = 1e-14
    residual_tol: float = 1e-9
    contour_samples: int = 256

    def __post_init__(self):
        if not (self.series_target > 0 and self.residual_tol > 0):
            raise ValidationError("tolerances must be strictly positive")
        if not self.series_target < 1:
            raise ValidationError("series_target must be below 1")
        if int(self.contour_samples) != self.contour_samples or self.contour_samples < 16:
            raise ValidationError("contour_samples must be an integer >= 16")


DEFAULT_CFG = ToleranceConfig()


def as_scalar(x) -> complex:
    z = complex(x)
    if not (np.isfinite(z.real) and np.isfinite(z.imag)):
        raise ValidationError(f"non-finite scalar {x!r}")
    return z


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2:
        raise ValidationError(f"{name} must be 2-D, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValidationError(f"{name} has non-finite entries")
    return m


def kron(a, b) -> np.ndarray:
    return np.kron(as_matrix(a, "A"), as_matrix(b, "B"))


def kron_all(mats: Sequence) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for m in mats:
        out = np.kron(out, as_matrix(m))
    return out


def embed_site(op, dims: Sequence[int], i: int) -> np.ndarray:
    """Return ``I ⊗ ... ⊗ op ⊗ ... ⊗ I`` with ``op`` acting on factor ``i``."""
    dims = [int(d) for d in dims]
    if any(d < 1 for d in dims):
        raise ValidationError("dimensions must be positive")
    if not 0 <= i < len(dims):
        raise ValidationError(f"site index {i} out of range for {len(dims)} sites")
    op = as_matrix(op, "op")
    if op.shape != (dims[i], dims[i]):
        raise ValidationError(f"op shape {op.shape} does not match dims[{i}]={dims[i]}")
    left = int(np.prod(dims[:i], dtype=np.int64))
    right = int(np.prod(dims[i + 1:], dtype=np.int64))
    return np.kron(np.kron(np.eye(left), op), np.eye(right))


def _circle_samples(f, center, radius, n):
    theta = 2 * np.pi * np.arange(n) / n
    offsets = radius * np.exp(1j * theta)
    points = center + offsets
    try:
        vals = np.asarray(f(points), dtype=complex)
        if vals.shape[:1] != (n,):
            raise TypeError
    except (TypeError, ValueError):
        vals = np.asarray([f(p) for p in points], dtype=complex)
    return offsets, vals


def _trapezoid_coeff(f, center, radius, m, n):
    offsets, vals = _circle_samples(f, center, radius, n)
    if not np.all(np.isfinite(vals)):
        raise AccuracyError("non-finite samples on the contour")
    weights = offsets ** (-m) / n
    return np.tensordot(weights, vals, axes=(0, 0))


def laurent_coeff(f: Callable, center, m: int, radius: float, cfg: ToleranceConfig = DEFAULT_CFG):
    """Laurent coefficient of ``(u - center)**m`` by trapezoidal quadrature.

    ``f`` is called with a 1-D array of contour points and may return either
    scalars or arrays with the sample axis first; matrix-valued functions
    therefore yield matrix coefficients.  Non-vectorised callables are
    evaluated point by point.

    The result is recomputed with twice the nodes; disagreement beyond
    ``cfg.residual_tol`` (relative to ``max(1, |coeff|·radius**m)``) raises
    :class:`AccuracyError`.
    """
    center = as_scalar(center)
    if not radius > 0:
        raise ValidationError("radius must be positive")
    n = int(cfg.contour_samples)
    c1 = _trapezoid_coeff(f, center, radius, m, n)
    c2 = _trapezoid_coeff(f, center, radius, m, 2 * n)
    # compare in the scale of the sampled values: |a_m| r^m
    scale = max(1.0, float(np.max(np.abs(c2))) * radius ** m)
    err = float(np.max(np.abs(c1 - c2))) * radius ** m
    if err > cfg.residual_tol * scale:
        raise AccuracyError(f"contour quadrature not converged (doubling gap {err:.3e})")
    if np.ndim(c2) == 0:
        return complex(c2)
    return c2


def fd_derivative(f: Callable, x, h: float):
    """Fourth-order central difference of ``f`` at ``x`` with step ``h``."""
    x = complex(x)
    return (f(x - 2 * h) - 8 * f(x - h) + 8 * f(x + h) - f(x + 2 * h)) / (12 * h)


def commutator(a, b) -> np.ndarray:
    return a @ b - b @ a


def rel_norm(a, scale) -> float:
    return float(np.linalg.norm(a) / max(1.0, scale))


@dataclass
class JointEigenspace:
    """One simultaneous generalized eigenspace of a commuting family."""

    values: tuple
    basis: np.ndarray
    defective: bool = False

    @property
    def dim(self) -> int:
        return self.basis.shape[1]


def _clusters(vals: np.ndarray, tol: float) -> list[list[int]]:
    # single linkage: indices whose eigenvalues chain within tol share a cluster
    n = len(vals)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(vals[i] - vals[j]) <= tol:
                parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return sorted(groups.values(), key=lambda g: (vals[g[0]].real, vals[g[0]].imag))


_MIX_SEED = 20250101


def joint_eigenspaces(ops: Sequence, tol: float = 1e-8) -> list[JointEigenspace]:
    """Partition the space into simultaneous generalized eigenspaces.

    A fixed pseudo-random complex combination of ``ops`` is Schur-reduced;
    eigenvalues closer than ``tol·max(1, ‖M‖)`` form one cluster, and the
    leading Schur vectors of the cluster (via reordered Schur form) span its
    invariant subspace.  The value of each operator on a cluster is the trace
    of its compression divided by the dimension.

    Raises
    ------
    ValidationError
        Operators are not square of one size, or fail to commute within tol.
    AccuracyError
        Two clusters are separated by less than ``10·tol`` (ambiguous split).
    """
    mats = [as_matrix(o, "op") for o in ops]
    if not mats:
        raise ValidationError("empty operator family")
    n = mats[0].shape[0]
    if any(m.shape != (n, n) for m in mats):
        raise ValidationError("operators must be square and of equal size")
    scale = max(1.0, max(np.linalg.norm(m) for m in mats))
    for i in range(len(mats)):
        for j in range(i + 1, len(mats)):
            c = np.linalg.norm(commutator(mats[i], mats[j]))
            if c > tol * scale ** 2:
                raise ValidationError(f"operators {i} and {j} do not commute (‖[A,B]‖={c:.3e})")

    rng = np.random.default_rng(_MIX_SEED)
    coeffs = rng.normal(size=len(mats)) + 1j * rng.normal(size=len(mats))
    coeffs[0] = 1.0 + 0.5j if len(mats) == 1 else coeffs[0]
    mix = sum(c * m for c, m in zip(coeffs, mats))
    ctol = tol * max(1.0, np.linalg.norm(mix))
    vals = la.eigvals(mix)
    groups = _clusters(vals, ctol)
    centers = [np.mean(vals[g]) for g in groups]
    for i in range(len(centers)):
        for j in range(i + 1, len(centers)):
            if abs(centers[i] - centers[j]) < 10 * ctol:
                raise AccuracyError("eigenvalue clusters too close to separate reliably")

    out = []
    for g, lam in zip(groups, centers):
        k = len(g)
        radius = ctol * (k + 1)
        _, Z, sdim = la.schur(mix, output="complex", sort=lambda x: abs(x - lam) <= radius)
        if sdim != k:
            raise AccuracyError("Schur reordering disagreed with eigenvalue clustering")
        Q = Z[:, :k]
        values = []
        defective = False
        for m in mats:
            comp = Q.conj().T @ m @ Q
            mu = np.trace(comp) / k
            values.append(complex(mu))
            if np.linalg.norm(comp - mu * np.eye(k)) > tol * scale * np.sqrt(k):
                defective = True
        out.append(JointEigenspace(tuple(values), Q, defective))
    return out
