"""Twisted basis of sl_N, representations, Casimirs and the SL(2,Z) intertwiner.

The basis is ``J_{a,b} = β^a α^{-b}`` where ``α`` is the cyclic shift and
``β = diag(1, ε, ..., ε^{N-1})`` with ``ε = exp(2πi/N)``.  Representations are
stored extensionally as the images ``ρ(J_{a,b})``.
"""
from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from pathlib import Path

import numpy as np
import scipy.linalg as la

from .numcore import DEFAULT_CFG, AccuracyError, ToleranceConfig, ValidationError, as_matrix

__all__ = [
    "eps",
    "TwistBasis",
    "TwistRepresentation",
    "HeisenbergElement",
    "ModularElement",
    "S",
    "T",
    "make_twist_basis",
    "rep_sl2_spin",
    "rep_defining",
    "rep_dual",
    "rep_adjoint",
    "rep_tensor",
    "rep_from_json",
    "rep_to_json",
    "load_rep",
    "parse_rep_spec",
    "commutation_residual",
    "casimir",
    "heis_aut",
    "heis_matrix",
    "apply_heis_aut",
    "intertwiner_x",
    "intertwining_residual",
    "rep_group_element",
]


def eps(N: int, power=1) -> complex:
    """``exp(2πi·power/N)`` from an exactly reduced angle."""
    frac = Fraction(power) / N
    frac -= math.floor(frac)
    return cmath.exp(2j * math.pi * float(frac))


def _pairs(N: int):
    return [(a, b) for a in range(N) for b in range(N) if (a, b) != (0, 0)]


@dataclass(frozen=True)
class TwistBasis:
    N: int
    alpha: np.ndarray
    beta: np.ndarray
    J: dict
    Jdual: dict

    @property
    def pairs(self) -> list[tuple[int, int]]:
        return _pairs(self.N)

    def coords(self, X) -> np.ndarray:
        """Coefficients of traceless ``X`` in the J basis (``tr(X·Jdual)``)."""
        X = np.asarray(X, dtype=complex)
        return np.array([np.trace(X @ self.Jdual[p]) for p in self.pairs])


def make_twist_basis(N: int) -> TwistBasis:
    N = int(N)
    if N < 2:
        raise ValidationError("N must be at least 2")
    alpha = np.zeros((N, N), dtype=complex)
    for i in range(N):
        alpha[i, (i + 1) % N] = 1
    beta = np.diag([eps(N, k) for k in range(N)])
    alpha_inv = alpha.T.copy()
    pairs = _pairs(N)
    J = {}
    for a, b in pairs:
        J[(a, b)] = np.linalg.matrix_power(beta, a) @ np.linalg.matrix_power(alpha_inv, b)
    gram = np.array([[np.trace(J[p] @ J[q]) for q in pairs] for p in pairs])
    ginv = np.linalg.inv(gram)
    Jdual = {q: sum(ginv[e, k] * J[pairs[e]] for e in range(len(pairs))) for k, q in enumerate(pairs)}
    return TwistBasis(N, alpha, beta, J, Jdual)


@dataclass
class TwistRepresentation:
    """A representation given by the images ``ρ(J_{a,b})`` of the twisted basis."""

    N: int
    dim: int
    images: dict
    label: str = ""

    def __post_init__(self):
        self.N, self.dim = int(self.N), int(self.dim)
        expected = set(_pairs(self.N))
        if set(self.images) != expected:
            raise ValidationError("images must be given for every nonzero index pair")
        self.images = {k: as_matrix(v, f"image{k}") for k, v in self.images.items()}
        for k, v in self.images.items():
            if v.shape != (self.dim, self.dim):
                raise ValidationError(f"image {k} has shape {v.shape}, expected {(self.dim, self.dim)}")

    def __call__(self, a: int, b: int) -> np.ndarray:
        return self.images[(a % self.N, b % self.N)]

    def act(self, X, basis: TwistBasis) -> np.ndarray:
        """Image of an arbitrary traceless ``X`` by linearity."""
        c = basis.coords(X)
        return sum(ci * self.images[p] for ci, p in zip(c, basis.pairs))

    def dual_image(self, basis: TwistBasis, a: int, b: int) -> np.ndarray:
        """``ρ(J^{a,b})`` for the trace-dual basis element."""
        return self.act(basis.Jdual[(a % self.N, b % self.N)], basis)


def structure_coefficient(N: int, a, b, c, d) -> complex:
    """``[J_{a,b}, J_{c,d}] = (ε^{-bc} - ε^{-ad}) J_{a+c, b+d}``."""
    return eps(N, -b * c) - eps(N, -a * d)


def commutation_residual(rep: TwistRepresentation) -> float:
    """Largest structure-constant violation over all pairs of images."""
    N = rep.N
    worst = 0.0
    for (a, b), (c, d) in product(_pairs(N), repeat=2):
        A, B = rep(a, b), rep(c, d)
        lhs = A @ B - B @ A
        s = ((a + c) % N, (b + d) % N)
        rhs = 0 if s == (0, 0) else structure_coefficient(N, a, b, c, d) * rep(*s)
        worst = max(worst, float(np.linalg.norm(lhs - rhs)))
    return worst


def validate_rep(rep: TwistRepresentation, tol: float | None = None) -> TwistRepresentation:
    tol = 1e-9 * max(1, rep.dim) if tol is None else tol
    for k, v in rep.images.items():
        if abs(np.trace(v)) > tol:
            raise ValidationError(f"image {k} is not traceless")
    r = commutation_residual(rep)
    if r > tol:
        raise ValidationError(f"representation violates the sl_N relations (residual {r:.3e})")
    return rep


def rep_defining(N: int) -> TwistRepresentation:
    basis = make_twist_basis(N)
    return TwistRepresentation(N, N, {p: m.copy() for p, m in basis.J.items()}, f"defining(N={N})")


def rep_dual(rep_or_N) -> TwistRepresentation:
    rep = rep_defining(rep_or_N) if isinstance(rep_or_N, int) else rep_or_N
    return TwistRepresentation(rep.N, rep.dim, {p: -m.T for p, m in rep.images.items()}, f"dual({rep.label})")


def rep_adjoint(N: int) -> TwistRepresentation:
    basis = make_twist_basis(N)
    pairs = basis.pairs
    images = {}
    for p in pairs:
        cols = [basis.coords(basis.J[p] @ basis.J[q] - basis.J[q] @ basis.J[p]) for q in pairs]
        images[p] = np.array(cols).T
    return TwistRepresentation(N, N * N - 1, images, f"adjoint(N={N})")


def rep_tensor(r1: TwistRepresentation, r2: TwistRepresentation) -> TwistRepresentation:
    if r1.N != r2.N:
        raise ValidationError("tensor product requires equal N")
    i1, i2 = np.eye(r1.dim), np.eye(r2.dim)
    images = {p: np.kron(r1.images[p], i2) + np.kron(i1, r2.images[p]) for p in r1.images}
    return TwistRepresentation(r1.N, r1.dim * r2.dim, images, f"({r1.label})x({r2.label})")


def rep_sl2_spin(l) -> TwistRepresentation:
    """Spin-``l`` irreducible of sl_2 in the twisted basis.

    With ``N = 2``: ``J_{1,0} = σ³ ↦ h``, ``J_{0,1} = σ¹ ↦ e + f`` and
    ``J_{1,1} = σ³σ¹ ↦ e - f``.
    """
    two_l = Fraction(l) * 2
    if two_l.denominator != 1 or two_l < 1:
        raise ValidationError(f"spin must be a positive half-integer, got {l}")
    n = int(two_l) + 1
    lf = float(Fraction(l))
    mvals = [lf - k for k in range(n)]
    h = np.diag([2 * m for m in mvals]).astype(complex)
    e = np.zeros((n, n), dtype=complex)
    for k in range(1, n):
        m = mvals[k]
        e[k - 1, k] = math.sqrt(lf * (lf + 1) - m * (m + 1))
    f = e.T.copy()
    images = {(1, 0): h, (0, 1): e + f, (1, 1): e - f}
    return TwistRepresentation(2, n, images, f"spin({Fraction(l)})")


# ---------------------------------------------------------------- JSON import

def _pair_key(key: str) -> tuple[int, int]:
    a, b = key.split(",")
    return int(a), int(b)


def rep_to_json(rep: TwistRepresentation) -> dict:
    return {
        "N": rep.N,
        "dim": rep.dim,
        "label": rep.label,
        "images": {f"{a},{b}": [[[float(z.real), float(z.imag)] for z in row] for row in m]
                   for (a, b), m in sorted(rep.images.items())},
    }


def rep_from_json(doc: dict, validate: bool = True) -> TwistRepresentation:
    try:
        N, dim = int(doc["N"]), int(doc["dim"])
        images = {}
        for key, rows in doc["images"].items():
            a, b = _pair_key(key)
            arr = np.asarray(rows, dtype=float)
            if arr.ndim == 3 and arr.shape[-1] == 2:
                images[(a % N, b % N)] = arr[..., 0] + 1j * arr[..., 1]
            else:
                images[(a % N, b % N)] = np.asarray(rows, dtype=complex)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed representation document: {exc}") from exc
    rep = TwistRepresentation(N, dim, images, doc.get("label", "imported"))
    return validate_rep(rep) if validate else rep


def load_rep(path) -> TwistRepresentation:
    with open(path) as fh:
        return rep_from_json(json.load(fh))


def parse_rep_spec(spec, N: int) -> TwistRepresentation:
    """Build a representation from a scene entry.

    Accepted forms: ``"spin:1/2"``, ``"defining"``, ``"dual"``, ``"adjoint"``,
    a path to a JSON representation, or an inline JSON representation object.
    """
    if isinstance(spec, dict):
        return rep_from_json(spec)
    s = str(spec).strip()
    if s.startswith("spin:"):
        if N != 2:
            raise ValidationError("spin representations need N = 2")
        return rep_sl2_spin(Fraction(s[5:]))
    if s == "defining":
        return rep_defining(N)
    if s == "dual":
        return rep_dual(N)
    if s == "adjoint":
        return rep_adjoint(N)
    if Path(s).suffix == ".json":
        return load_rep(s)
    raise ValidationError(f"unknown representation spec {spec!r}")


# ---------------------------------------------------------------- Casimir

def casimir(rep: TwistRepresentation, basis: TwistBasis) -> np.ndarray:
    """``C = ½ Σ ρ(J_{a,b}) ρ(J^{a,b})``."""
    if rep.N != basis.N:
        raise ValidationError("representation and basis have different N")
    return 0.5 * sum(rep(*p) @ rep.dual_image(basis, *p) for p in basis.pairs)


# ---------------------------------------------------------------- Heisenberg / SL(2,Z)

@dataclass(frozen=True)
class HeisenbergElement:
    """``(r; m, n) = r β^m α^n`` with ``(r;m,n)(r';m',n') = (r r' ε^{n m'}; m+m', n+n')``."""

    r: complex
    m: int
    n: int
    N: int

    def __post_init__(self):
        if self.r == 0:
            raise ValidationError("Heisenberg scalar must be nonzero")
        object.__setattr__(self, "m", self.m % self.N)
        object.__setattr__(self, "n", self.n % self.N)

    def __mul__(self, other: "HeisenbergElement") -> "HeisenbergElement":
        return HeisenbergElement(self.r * other.r * eps(self.N, self.n * other.m),
                                 self.m + other.m, self.n + other.n, self.N)

    def __pow__(self, k: int) -> "HeisenbergElement":
        out = HeisenbergElement(1.0, 0, 0, self.N)
        if k < 0:
            raise ValidationError("negative powers are not supported")
        for _ in range(int(k)):
            out = out * self
        return out

    def close(self, other: "HeisenbergElement", tol: float = 1e-12) -> bool:
        return self.m == other.m and self.n == other.n and abs(self.r - other.r) <= tol * max(1, abs(self.r))


@dataclass(frozen=True)
class ModularElement:
    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        if self.a * self.d - self.b * self.c != 1:
            raise ValidationError(f"{self} is not unimodular")

    def __matmul__(self, o: "ModularElement") -> "ModularElement":
        return ModularElement(self.a * o.a + self.b * o.c, self.a * o.b + self.b * o.d,
                              self.c * o.a + self.d * o.c, self.c * o.b + self.d * o.d)

    def inverse(self) -> "ModularElement":
        return ModularElement(self.d, -self.b, -self.c, self.a)

    def act_tau(self, tau: complex) -> complex:
        return (self.a * tau + self.b) / (self.c * tau + self.d)

    def factor(self, tau: complex) -> complex:
        """Automorphy factor ``cτ + d``."""
        return self.c * tau + self.d

    @classmethod
    def identity(cls) -> "ModularElement":
        return cls(1, 0, 0, 1)


S = ModularElement(0, 1, -1, 0)
T = ModularElement(1, 1, 0, 1)


def heis_aut(gamma: ModularElement, N: int) -> dict:
    """Images of the generators ``β̂ = (1;1,0)`` and ``α̂ = (1;0,1)`` under ``γ``.

    Odd ``N``: ``(1;1,0) ↦ (1;a,b)``, ``(1;0,1) ↦ (1;c,d)``.  Even ``N`` adds
    the phases ``(√ε)^{ab}`` and ``(√ε)^{cd}`` with ``√ε = exp(πi/N)``.
    """
    if not isinstance(gamma, ModularElement):
        gamma = ModularElement(*gamma)
    a, b, c, d = gamma.a, gamma.b, gamma.c, gamma.d
    if N % 2:
        rb, ra = 1.0 + 0j, 1.0 + 0j
    else:
        rb, ra = eps(2 * N, a * b), eps(2 * N, c * d)
    return {
        "beta": HeisenbergElement(rb, a, b, N),
        "alpha": HeisenbergElement(ra, c, d, N),
    }


def apply_heis_aut(images: dict, h: HeisenbergElement) -> HeisenbergElement:
    """Extend generator images multiplicatively to ``h = r β̂^m α̂^n``."""
    N = h.N
    out = HeisenbergElement(h.r, 0, 0, N)
    for _ in range(h.m):
        out = out * images["beta"]
    for _ in range(h.n):
        out = out * images["alpha"]
    return out


def heis_matrix(h: HeisenbergElement, basis: TwistBasis) -> np.ndarray:
    return h.r * np.linalg.matrix_power(basis.beta, h.m) @ np.linalg.matrix_power(basis.alpha, h.n)


def intertwiner_x(gamma: ModularElement, N: int, cfg: ToleranceConfig = DEFAULT_CFG) -> np.ndarray:
    """The ``x_γ ∈ SL_N`` with ``h x_γ = x_γ h^γ`` for every Heisenberg element ``h``.

    Solved as the null space of the stacked relations for ``α`` and ``β``.
    The ``N``-th-root-of-unity ambiguity left by ``det = 1`` is fixed by
    putting the argument of the first nonzero entry in ``[0, 2π/N)``.
    """
    if not isinstance(gamma, ModularElement):
        gamma = ModularElement(*gamma)
    basis = make_twist_basis(N)
    imgs = heis_aut(gamma, N)
    a, b = imgs["alpha"], imgs["beta"]
    if (b.m, b.n, a.m, a.n) == (1, 0, 0, 1) and abs(a.r - 1) < 1e-14 and abs(b.r - 1) < 1e-14:
        # trivial action: x is a scalar of determinant 1, normalized to 1
        return np.eye(N, dtype=complex)
    eye = np.eye(N)
    rows = []
    for gen, key in ((basis.alpha, "alpha"), (basis.beta, "beta")):
        target = heis_matrix(imgs[key], basis)
        # vec(G X - X M) = (I ⊗ G - M^T ⊗ I) vec(X), column-major vec
        rows.append(np.kron(eye, gen) - np.kron(target.T, eye))
    system = np.vstack(rows)
    _, s, vh = np.linalg.svd(system)
    null = int(np.sum(s < 1e-9 * max(1.0, s[0])))
    if null != 1:
        raise AccuracyError(f"intertwiner null space has dimension {null}, expected 1")
    x = vh[-1].conj().reshape(N, N, order="F")
    x = x / np.linalg.det(x) ** (1.0 / N)
    flat = x.reshape(-1)
    first = flat[np.argmax(np.abs(flat) > 1e-12)]
    k = math.floor((cmath.phase(first) % (2 * math.pi)) / (2 * math.pi / N) + 1e-12)
    x = x * eps(N, -k)
    return x


def intertwining_residual(gamma: ModularElement, N: int, x=None, cfg: ToleranceConfig = DEFAULT_CFG) -> float:
    """``max ‖g x - x M(g^γ)‖`` over the generators ``g ∈ {α, β}``."""
    if not isinstance(gamma, ModularElement):
        gamma = ModularElement(*gamma)
    x = intertwiner_x(gamma, N, cfg) if x is None else np.asarray(x, dtype=complex)
    basis = make_twist_basis(N)
    imgs = heis_aut(gamma, N)
    return max(float(np.linalg.norm(gen @ x - x @ heis_matrix(imgs[key], basis)))
               for gen, key in ((basis.alpha, "alpha"), (basis.beta, "beta")))


def rep_group_element(rep: TwistRepresentation, basis: TwistBasis, g) -> np.ndarray:
    """Action on ``rep`` of an invertible ``g`` up to a scalar, via ``exp(ρ(log g))``.

    The scalar part of ``log g`` is dropped, so only ``Ad``-type uses are meaningful.
    """
    X = la.logm(np.asarray(g, dtype=complex))
    X = X - np.trace(X) / basis.N * np.eye(basis.N)
    return la.expm(rep.act(X, basis))
