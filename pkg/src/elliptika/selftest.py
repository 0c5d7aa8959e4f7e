"""Seeded identity suite.

Every group checks one family of exact identities and reports the largest
residual seen, relative to the size of the compared quantities.  Random
samples come from :func:`numpy.random.default_rng` (PCG64), with one child
stream per group spawned from the run seed, so the numbers in a report do
not depend on which groups run or in what order.
"""
from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from . import elliptic as ell
from .gaudin import Scene, extract_integrals, h_explicit_sl2, joint_spectrum, q_profile, tau_hat
from .kz import (TAU, TransportPath, circle_segment, connection_matrix, flatness_residual, line_segment,
                 modular_check, residue_operator, transport)
from .liealg import (S, T, ModularElement, eps, intertwiner_x, intertwining_residual, rep_defining,
                     rep_sl2_spin)
from .numcore import DEFAULT_CFG, ToleranceConfig, ValidationError, laurent_coeff
from .theta import (BracketIndex, Characteristic, jacobi_lhs, modular_residual, product_formula_residual,
                    quasi_period_residual, theta_bracket, theta_eval)

__all__ = ["IdentityResult", "GroupResult", "SelftestReport", "GROUPS", "standard_scene", "run_selftest"]

QUICK, FULL = "quick", "full"


@dataclass
class IdentityResult:
    name: str
    max_residual: float
    tol: float
    samples: int

    @property
    def passed(self) -> bool:
        return bool(self.max_residual <= self.tol)


@dataclass
class GroupResult:
    group: str
    identities: list
    budget_s: float
    elapsed_s: float = 0.0

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.identities)


@dataclass
class SelftestReport:
    seed: int
    level: str
    groups: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(g.passed for g in self.groups)

    def to_json(self, timings: bool = False) -> dict:
        out = {"seed": self.seed, "level": self.level, "passed": self.passed, "groups": []}
        for g in self.groups:
            entry = {"group": g.group, "passed": g.passed, "budget_s": g.budget_s,
                     "identities": [dict(asdict(r), passed=r.passed) for r in g.identities]}
            if timings:
                entry["elapsed_s"] = g.elapsed_s
            out["groups"].append(entry)
        return out


# ---------------------------------------------------------------- scenes

_TAU = 0.23 + 1.07j
_Z3 = (0.1 + 0.05j, 0.45 + 0.3j, -0.2 + 0.35j)


def standard_scene(name: str, level_k=0.7) -> Scene:
    """Named reference scenes shared by the suite, the tests and the demos.

    ``sl2-pair``: two spin-1/2 sites; ``sl2-triple``: three spin-1/2 sites;
    ``sl2-mixed``: spins (1/2, 1/2, 1); ``sl3-pair``: two defining sl_3 sites.
    """
    h, one = rep_sl2_spin(Fraction(1, 2)), rep_sl2_spin(1)
    table = {
        "sl2-pair": ((_Z3[0], _Z3[1]), 2, (h, h)),
        "sl2-triple": (_Z3, 2, (h, h, h)),
        "sl2-mixed": (_Z3, 2, (h, h, one)),
        "sl3-pair": ((_Z3[0], _Z3[1]), 3, (rep_defining(3),) * 2),
    }
    if name not in table:
        raise ValidationError(f"unknown scene {name!r}; choose from {sorted(table)}")
    z, N, reps = table[name]
    return Scene(_TAU, z, N, reps, level_k)


def _rand_tau(rng, lo=0.4, hi=2.5) -> complex:
    return complex(rng.uniform(-0.5, 0.5), rng.uniform(lo, hi))


def _rand_cell(rng, tau, half=0.5) -> complex:
    x, y = rng.uniform(-half, half, size=2)
    return complex(x + y * tau)


def _rand_char(rng) -> Characteristic:
    q1, q2 = (int(v) for v in rng.integers(1, 7, size=2))
    p1, p2 = int(rng.integers(-2 * q1, 2 * q1 + 1)), int(rng.integers(-2 * q2, 2 * q2 + 1))
    return Characteristic(Fraction(p1, q1), Fraction(p2, q2))


class _Max:
    """Running maximum of relative residuals for one identity."""

    def __init__(self, name, tol):
        self.name, self.tol, self.val, self.n = name, tol, 0.0, 0

    def add(self, resid, scale=1.0):
        self.val = max(self.val, float(abs(resid)) / max(1.0, float(scale)))
        self.n += 1

    def result(self):
        return IdentityResult(self.name, self.val, self.tol, self.n)


# ---------------------------------------------------------------- groups

def _g_theta(rng, full, cfg):
    n = 200 if full else 40
    acc = {k: _Max(k, 1e-10) for k in ("quasi-period 1", "quasi-period tau", "modular T", "modular S",
                                      "odd", "char-period")}
    for _ in range(n):
        ch, tau = _rand_char(rng), _rand_tau(rng)
        t = _rand_cell(rng, tau)
        th = theta_eval(ch, t, tau, 0, cfg)
        r1, rt = quasi_period_residual(ch, t, tau, cfg)
        acc["quasi-period 1"].add(r1, abs(th))
        acc["quasi-period tau"].add(rt, max(abs(th), abs(theta_eval(ch, t + tau, tau, 0, cfg))))
        rT, rS = modular_residual(ch, t, tau, cfg)
        acc["modular T"].add(rT, max(abs(th), abs(theta_eval(ch, t, tau + 1, 0, cfg))))
        acc["modular S"].add(rS, abs(theta_eval(ch, t / tau, -1 / tau, 0, cfg)))
        acc["odd"].add(theta_eval(-ch, t, tau, 0, cfg) - theta_eval(ch, -t, tau, 0, cfg), abs(th))
        m, k = (int(v) for v in rng.integers(-3, 4, size=2))
        shifted = Characteristic(ch.kappa + m, ch.kappa_prime + k)
        rc = theta_eval(shifted, t, tau, 0, cfg) - eps(1, ch.kappa * k) * th
        acc["char-period"].add(rc, abs(th))
    return [a.result() for a in acc.values()]


def _g_jacobi(rng, full, cfg):
    acc = _Max("jacobi lhs", 1e-9)
    for N in (2, 3, 4, 5):
        for _ in range(10 if full else 3):
            acc.add(jacobi_lhs(N, _rand_tau(rng), cfg))
    return [acc.result()]


def _g_product(rng, full, cfg):
    acc = _Max("product formula", 1e-9)
    for N in (2, 3):
        for _ in range(20 if full else 5):
            tau = _rand_tau(rng)
            t = _rand_cell(rng, tau)
            lhs = N * np.prod([theta_bracket(BracketIndex(a, b, N), t, tau, 0, cfg)
                               for a in range(N) for b in range(N)])
            acc.add(product_formula_residual(N, t, tau, cfg), abs(lhs))
    return [acc.result()]


def _g_kernels(rng, full, cfg):
    acc = {k: _Max(k, 1e-10) for k in ("residue", "phase 1", "phase tau", "antisymmetry", "sum w1")}
    for N in (2, 3, 4):
        for _ in range(3 if full else 1):
            tau = _rand_tau(rng, 0.6, 2.0)
            total = 0j
            for ix in ell.nonzero_pairs(N):
                f = lambda u: ell.w(ix, u, tau, cfg)
                acc["residue"].add(laurent_coeff(f, 0.0, -1, 0.2, cfg) - 1.0)
                t = _rand_cell(rng, tau, 0.4)
                wt = ell.w(ix, t, tau, cfg)
                acc["phase 1"].add(ell.w(ix, t + 1, tau, cfg) - eps(N, ix.a) * wt, abs(wt))
                acc["phase tau"].add(ell.w(ix, t + tau, tau, cfg) - eps(N, ix.b) * wt, abs(wt))
                acc["antisymmetry"].add(ell.w(-ix, t, tau, cfg) + ell.w(ix, -t, tau, cfg), abs(wt))
                total += ell.w_coeffs(ix, tau, cfg).w1
            acc["sum w1"].add(total)
    return [a.result() for a in acc.values()]


def _pairs_uv(rng, scene, n):
    out = []
    while len(out) < n:
        u, v = (_rand_cell(rng, scene.tau) + complex(np.mean(scene.z)) for _ in range(2))
        if all(ell.lattice_distance(p - zi, scene.tau) > 0.05 for p in (u, v) for zi in scene.z):
            out.append((u, v))
    return out


def _g_commute(rng, full, cfg):
    acc = _Max("[tau_hat(u), tau_hat(u')]", 1e-9)
    for name in ("sl2-pair", "sl2-mixed", "sl3-pair"):
        sc = standard_scene(name)
        for u, v in _pairs_uv(rng, sc, 20 if full else 4):
            A, B = tau_hat(sc, u, cfg=cfg), tau_hat(sc, v, cfg=cfg)
            acc.add(np.linalg.norm(A @ B - B @ A) / (np.linalg.norm(A) * np.linalg.norm(B)))
    return [acc.result()]


def _g_decomp(rng, full, cfg):
    fit, hsum, cas = _Max("fit residual", 1e-8), _Max("sum H_i", 1e-10), _Max("C_i = l(l+1)", 1e-10)
    names = ("sl2-pair", "sl2-mixed") if full else ("sl2-pair",)
    for name in names:
        sc = standard_scene(name)
        d = extract_integrals(sc, cfg=cfg)
        probes = [u for u, _ in _pairs_uv(rng, sc, 3)]
        scale = max(np.linalg.norm(tau_hat(sc, u, cfg=cfg)) for u in probes)
        fit.add(max(np.linalg.norm(tau_hat(sc, u, cfg=cfg) - d.model(sc, u, cfg)) for u in probes), scale)
        hsum.add(np.linalg.norm(sum(d.H)), max(np.linalg.norm(H) for H in d.H))
        for C, rep in zip(d.C, sc.reps):
            l = (rep.dim - 1) / 2
            cas.add(np.max(np.abs(C - l * (l + 1) * np.eye(sc.dim))), l * (l + 1))
    return [fit.result(), hsum.result(), cas.result()]


def _g_explicit(rng, full, cfg):
    acc = _Max("explicit vs extracted", 1e-8)
    for name in ("sl2-pair", "sl2-mixed"):
        sc = standard_scene(name)
        d = extract_integrals(sc, cfg=cfg)
        H, H0 = h_explicit_sl2(sc, cfg=cfg)
        for A, B in list(zip(H, d.H)) + [(H0, d.H0)]:
            acc.add(np.max(np.abs(A - B)), np.max(np.abs(B)))
    return [acc.result()]


def _directions(scene):
    return list(range(scene.L)) + [TAU]


def _g_flat(rng, full, cfg):
    acc = _Max("curvature", 1e-7)
    sc = standard_scene("sl2-triple")
    kappas = (1.5, 2.7, -0.5 + 1j) if full else (2.7,)
    dirs = _directions(sc)
    for k in kappas:
        for i, mu in enumerate(dirs):
            for nu in dirs[i + 1:]:
                scale = max(np.linalg.norm(connection_matrix(sc, None, d_, cfg=cfg, kappa=k)) for d_ in (mu, nu))
                acc.add(flatness_residual(sc, None, (mu, nu), cfg=cfg, kappa=k), max(1.0, scale) ** 2)
    return [acc.result()]


def _g_link(rng, full, cfg):
    acc = _Max("kappa A_z_i = H_i", 1e-8)
    for name in ("sl2-pair", "sl2-mixed"):
        sc = standard_scene(name)
        d = extract_integrals(sc, cfg=cfg)
        for i in range(sc.L):
            A = connection_matrix(sc, None, i, cfg=cfg)
            acc.add(np.max(np.abs(sc.kappa * A - d.H[i])), np.max(np.abs(d.H[i])))
    return [acc.result()]


def _g_holonomy(rng, full, cfg):
    loop, ratio = _Max("contractible loop", 1e-6), _Max("large-kappa error ratio - 4", 1.0)
    steps = 2500 if full else 250
    sc = standard_scene("sl2-triple")
    z0 = np.array(sc.z)
    corners = [0, 0.05, 0.05 + 0.05j, 0.05j, 0]
    pt = lambda dz: (sc.tau, z0 + np.array([dz, 0, 0]))
    path = TransportPath([line_segment(pt(corners[k]), pt(corners[k + 1]), steps) for k in range(4)])
    loop.add(np.linalg.norm(transport(sc, None, path, cfg=cfg) - np.eye(sc.dim)))

    sc2 = standard_scene("sl2-pair")
    z2 = np.array(sc2.z)
    r = abs(z2[0] - z2[1])
    start = float(np.angle(z2[0] - z2[1]))
    # clockwise circle of z_0 around z_1
    circle = TransportPath([circle_segment((sc2.tau, z2), 0, z2[1], r, 2000 if full else 400, -1.0, start)])
    omega = residue_operator(sc2, None, 0, 1)
    errs = []
    for k in (50, 100):
        Tk = transport(sc2, None, circle, kappa=k, cfg=cfg)
        errs.append(np.linalg.norm(Tk - np.eye(sc2.dim) - 2j * np.pi / k * omega))
    ratio.add(errs[0] / errs[1] - 4.0)
    return [loop.result(), ratio.result()]


def _x_s_pattern(N):
    a = np.arange(N)
    return np.array([[eps(N, -int(i) * int(j)) for j in a] for i in a])


def _g_modular(rng, full, cfg):
    pat, inter, cov = (_Max("x_S pattern", 1e-10), _Max("intertwining", 1e-11),
                       _Max("r-matrix covariance", 1e-8))
    weight = _Max("tau-equation covariance", 1e-8)
    for N in (2, 3, 4):
        x = intertwiner_x(S, N, cfg)
        P = _x_s_pattern(N)
        c = np.vdot(P, x) / np.vdot(P, P)
        pat.add(np.max(np.abs(x - c * P)) / abs(c))
        for g in (S, T, S @ T, T.inverse() @ S):
            inter.add(intertwining_residual(g, N))
    scenes = [standard_scene("sl2-pair"), standard_scene("sl3-pair")]
    if full:
        scenes.append(standard_scene("sl2-triple"))
    for sc in scenes:
        for g in (S, T):
            r_r, r_w = modular_check(sc, None, g, cfg)
            cov.add(r_r)
            weight.add(r_w)
    return [pat.result(), inter.result(), cov.result(), weight.result()]


def _g_blocks(rng, full, cfg):
    mult, total, qid = _Max("multiplicities - 1", 1e-12), _Max("sum - dim", 1e-12), _Max("q profile", 1e-8)
    sc = standard_scene("sl2-pair")
    d = extract_integrals(sc, cfg=cfg)
    spec = joint_spectrum(sc, cfg=cfg, data=d)
    for e in spec:
        mult.add(e.multiplicity - 1)
    total.add(sum(e.multiplicity for e in spec) - sc.dim)
    for e in spec:
        v = e.basis[:, 0]
        mu, mu0 = e.mu[:-1], e.mu[-1]
        for t, _ in _pairs_uv(rng, sc, 3):
            lhs = np.vdot(v, tau_hat(sc, t, cfg=cfg) @ v)
            q = q_profile(sc, mu, mu0, t, cfg)
            qid.add(lhs - q * np.vdot(v, v), abs(q) * np.vdot(v, v).real)
    return [mult.result(), total.result(), qid.result()]


# (name, function, time budget in seconds at level "full")
GROUPS = (
    ("theta", _g_theta, 5.0),
    ("jacobi", _g_jacobi, 2.0),
    ("product", _g_product, 2.0),
    ("kernels", _g_kernels, 5.0),
    ("gaudin-commute", _g_commute, 30.0),
    ("gaudin-decomposition", _g_decomp, 10.0),
    ("gaudin-explicit", _g_explicit, 5.0),
    ("kz-flatness", _g_flat, 60.0),
    ("gaudin-kz-link", _g_link, 5.0),
    ("holonomy", _g_holonomy, 120.0),
    ("modular", _g_modular, 20.0),
    ("conformal-blocks", _g_blocks, 10.0),
)


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("ELLIPTIKA_THREADS", "1")))
    except ValueError:
        raise ValidationError("ELLIPTIKA_THREADS must be a positive integer") from None


def run_selftest(seed: int = 42, level: str = QUICK, cfg: ToleranceConfig = DEFAULT_CFG,
                 tol_override: float | None = None, groups=None) -> SelftestReport:
    """Run the identity groups and collect a report.

    Parameters
    ----------
    seed : int
        Root seed; group ``k`` draws from the ``k``-th spawned child stream.
    level : {"quick", "full"}
        ``full`` uses the sample counts and step numbers of the acceptance
        criteria; ``quick`` is a reduced sweep.
    tol_override : float, optional
        Replaces every identity tolerance (a tiny value forces failures).
    groups : sequence of str, optional
        Subset of group names to run.
    """
    if level not in (QUICK, FULL):
        raise ValidationError(f"level must be {QUICK!r} or {FULL!r}")
    if int(seed) < 0:
        raise ValidationError("seed must be a non-negative integer")
    names = [g[0] for g in GROUPS]
    wanted = names if groups is None else list(groups)
    unknown = set(wanted) - set(names)
    if unknown:
        raise ValidationError(f"unknown selftest groups: {sorted(unknown)}")
    children = np.random.SeedSequence(int(seed)).spawn(len(GROUPS))
    jobs = [(name, fn, budget, children[k]) for k, (name, fn, budget) in enumerate(GROUPS) if name in wanted]

    def one(job):
        name, fn, budget, ss = job
        t0 = time.perf_counter()
        ids = fn(np.random.default_rng(ss), level == FULL, cfg)
        if tol_override is not None:
            for r in ids:
                r.tol = float(tol_override)
        return GroupResult(name, ids, budget, time.perf_counter() - t0)

    n = min(_threads(), len(jobs)) or 1
    if n == 1:
        results = [one(j) for j in jobs]
    else:
        with ThreadPoolExecutor(n) as pool:
            results = list(pool.map(one, jobs))  # map keeps submission order
    return SelftestReport(int(seed), level, results)
