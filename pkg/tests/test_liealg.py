import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from elliptika.liealg import (S, T, HeisenbergElement, ModularElement, apply_heis_aut, casimir,
                              commutation_residual, eps, heis_aut, intertwiner_x, intertwining_residual,
                              make_twist_basis, parse_rep_spec, rep_adjoint, rep_defining, rep_dual,
                              rep_from_json, rep_sl2_spin, rep_tensor, rep_to_json)
from elliptika.numcore import ValidationError


@pytest.mark.parametrize("N", [2, 3, 4, 5])
def test_twist_basis_relations(N):
    B = make_twist_basis(N)
    I = np.eye(N)
    assert np.allclose(np.linalg.matrix_power(B.alpha, N), I)
    assert np.allclose(np.linalg.matrix_power(B.beta, N), I)
    assert np.allclose(B.alpha @ B.beta, eps(N) * B.beta @ B.alpha)
    worst = 0.0
    for p in B.pairs:
        assert abs(np.trace(B.J[p])) < 1e-14
        for q in B.pairs:
            g = np.trace(B.J[p] @ B.J[q])
            if (q[0] + p[0]) % N or (q[1] + p[1]) % N:
                assert abs(g) < 1e-13
            worst = max(worst, abs(np.trace(B.J[p] @ B.Jdual[q]) - (p == q)))
    assert worst <= 1e-13


def test_n2_basis_is_pauli():
    B = make_twist_basis(2)
    assert np.allclose(B.alpha, [[0, 1], [1, 0]])
    assert np.allclose(B.beta, [[1, 0], [0, -1]])


def test_gram_rather_than_closed_form_dual():
    # tr(J_ab J_{-a,-b}) = N ε^{ab}: the naive J_{-a,-b}/N is off by a phase
    N = 3
    B = make_twist_basis(N)
    J = B.J[(1, 1)]
    Jm = B.J[(2, 2)]
    assert abs(np.trace(J @ Jm) - N * eps(N, 1)) < 1e-13
    assert np.allclose(B.Jdual[(1, 1)], Jm / (N * eps(N, 1)))


@pytest.mark.parametrize("l", [Fraction(1, 2), 1, Fraction(3, 2), 2, Fraction(5, 2)])
def test_spin_reps(l):
    rep = rep_sl2_spin(l)
    assert rep.dim == int(2 * l + 1)
    assert commutation_residual(rep) <= 1e-12
    B = make_twist_basis(2)
    C = casimir(rep, B)
    assert np.allclose(C, float(l * (l + 1)) * np.eye(rep.dim), atol=1e-12)
    for p in B.pairs:
        assert np.linalg.norm(C @ rep(*p) - rep(*p) @ C) < 1e-12


def test_spin_half_is_defining():
    rep, B = rep_sl2_spin(Fraction(1, 2)), make_twist_basis(2)
    for p in B.pairs:
        assert np.allclose(rep(*p), B.J[p])


def test_invalid_spin():
    with pytest.raises(ValidationError):
        rep_sl2_spin(Fraction(1, 3))
    with pytest.raises(ValidationError):
        rep_sl2_spin(0)


@pytest.mark.parametrize("N", [2, 3, 4])
def test_builtin_reps(N):
    B = make_twist_basis(N)
    d, du, ad = rep_defining(N), rep_dual(N), rep_adjoint(N)
    assert ad.dim == N * N - 1
    for r in (d, du, ad):
        assert commutation_residual(r) <= 1e-11 * r.dim
    # characters of the double dual match the defining rep
    dd = rep_dual(du)
    for p in B.pairs:
        assert abs(np.trace(dd(*p)) - np.trace(d(*p))) < 1e-13
    assert np.allclose(casimir(d, B), (N * N - 1) / (2 * N) * np.eye(N), atol=1e-12)


def test_tensor_casimir_spectrum():
    h = rep_sl2_spin(Fraction(1, 2))
    tp = rep_tensor(h, h)
    ev = np.sort(np.linalg.eigvals(casimir(tp, make_twist_basis(2))).real)
    assert np.allclose(ev, [0, 2, 2, 2], atol=1e-12)
    with pytest.raises(ValidationError):
        rep_tensor(h, rep_defining(3))


def test_casimir_basis_independent():
    N = 3
    B = make_twist_basis(N)
    rng = np.random.default_rng(5)
    c = {p: complex(*rng.normal(size=2)) for p in B.pairs}
    scaled = type(B)(N, B.alpha, B.beta, {p: c[p] * B.J[p] for p in B.pairs},
                     {p: B.Jdual[p] / c[p] for p in B.pairs})
    ad = rep_adjoint(N)
    C1 = casimir(ad, B)
    C2 = 0.5 * sum(ad.act(scaled.J[p], B) @ ad.act(scaled.Jdual[p], B) for p in B.pairs)
    assert np.linalg.norm(C1 - C2) < 1e-12


def test_rep_json_roundtrip(tmp_path):
    rep = rep_sl2_spin(1)
    doc = rep_to_json(rep)
    text = json.dumps(doc)
    back = rep_from_json(json.loads(text))
    assert json.dumps(rep_to_json(back)) == text
    path = tmp_path / "spin1.json"
    path.write_text(text)
    loaded = parse_rep_spec(str(path), 2)
    assert loaded.dim == 3
    bad = json.loads(text)
    bad["images"]["1,0"][0][0] = [5.0, 0.0]
    with pytest.raises(ValidationError):
        rep_from_json(bad)


def test_parse_rep_spec_variants():
    assert parse_rep_spec("spin:3/2", 2).dim == 4
    assert parse_rep_spec("defining", 3).dim == 3
    assert parse_rep_spec("dual", 3).dim == 3
    assert parse_rep_spec("adjoint", 3).dim == 8
    with pytest.raises(ValidationError):
        parse_rep_spec("spin:1", 3)
    with pytest.raises(ValidationError):
        parse_rep_spec("nonsense", 2)


def test_heisenberg_group_law():
    N = 3
    x = HeisenbergElement(2.0, 1, 2, N)
    y = HeisenbergElement(1j, 2, 1, N)
    z = x * y
    assert (z.m, z.n) == (0, 0)
    assert abs(z.r - 2.0 * 1j * eps(N, 2 * 2)) < 1e-14


def test_modular_element():
    with pytest.raises(ValidationError):
        ModularElement(1, 1, 1, 1)
    g = S @ T
    assert (g @ g.inverse()) == ModularElement.identity()
    assert S.act_tau(1j) == pytest.approx(1j)


mods = st.sampled_from([S, T, S @ T, T.inverse() @ S, T @ T @ S, S @ T @ T @ T])
ints = st.integers(0, 11)


@settings(max_examples=50, deadline=None)
@given(mods, st.sampled_from([2, 3, 4, 5]), ints, ints, ints, ints)
def test_heis_aut_is_homomorphism(g, N, m1, n1, m2, n2):
    imgs = heis_aut(g, N)
    h1 = HeisenbergElement(1.0, m1, n1, N)
    h2 = HeisenbergElement(1.0, m2, n2, N)
    lhs = apply_heis_aut(imgs, h1 * h2)
    rhs = apply_heis_aut(imgs, h1) * apply_heis_aut(imgs, h2)
    assert (lhs.m, lhs.n) == (rhs.m, rhs.n)
    assert abs(lhs.r - rhs.r) < 1e-12
    im = apply_heis_aut(imgs, h1)
    assert (im.m, im.n) == ((m1 * g.a + n1 * g.c) % N, (m1 * g.b + n1 * g.d) % N)


def test_heis_aut_identity():
    imgs = heis_aut(ModularElement.identity(), 4)
    assert (imgs["beta"].m, imgs["beta"].n, imgs["alpha"].m, imgs["alpha"].n) == (1, 0, 0, 1)
    assert imgs["beta"].r == pytest.approx(1) and imgs["alpha"].r == pytest.approx(1)


@pytest.mark.parametrize("N", [2, 3, 4])
def test_intertwiner(N):
    for g in (S, T, S @ T, T.inverse() @ S):
        x = intertwiner_x(g, N)
        assert abs(np.linalg.det(x) - 1) < 1e-12
        assert intertwining_residual(g, N, x) <= 1e-11
    x = intertwiner_x(S, N)
    a = np.arange(N)
    P = np.array([[eps(N, -int(i) * int(j)) for j in a] for i in a])
    c = np.vdot(P, x) / np.vdot(P, P)
    assert np.max(np.abs(x - c * P)) / abs(c) <= 1e-10


def test_congruence_subgroup_gives_scalar():
    N = 3
    g = ModularElement(1 + N, N, -N, 1 - N)
    x = intertwiner_x(g, N)
    assert np.allclose(x, x[0, 0] * np.eye(N), atol=1e-12)


@pytest.mark.parametrize("N", [3, 4])
def test_intertwiner_cocycle_projective(N):
    # x_{gg'}^{-1} x_g x_g' is a Heisenberg matrix up to a scalar (composed phases add a character)
    B = make_twist_basis(N)
    heis = [np.linalg.matrix_power(B.beta, m) @ np.linalg.matrix_power(B.alpha, n)
            for m in range(N) for n in range(N)]
    for g1, g2 in ((S, T), (T, S), (S, S @ T)):
        M = np.linalg.inv(intertwiner_x(g1 @ g2, N)) @ intertwiner_x(g1, N) @ intertwiner_x(g2, N)
        dev = min(np.max(np.abs(M - np.vdot(H, M) / np.vdot(H, H) * H)) for H in heis)
        assert dev < 1e-10
