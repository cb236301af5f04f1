import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import crossing
from pencil_transit import models
from pencil_transit.errors import AssumptionViolation, SpecError
from pencil_transit.pencil import (
    PencilProblem,
    gamma_inner,
    matrix_elements,
    smooth_branches,
    solve_pencil_at,
    verify_pencil_properties,
)

SX = np.array([[0, 1], [1, 0]], dtype=complex)
I2 = np.eye(2, dtype=complex)
Z2 = np.zeros((2, 2), dtype=complex)


def const(m):
    return lambda x: m


def diag_problem(rotation=None, domain=(-1.0, 1.0)):
    r = I2 if rotation is None else rotation

    def k(x):
        return r.conj().T @ np.diag([-x, x]).astype(complex) @ r

    return PencilProblem(K=k, B=const(Z2), Gamma=I2, domain=domain)


def test_gamma_inner_examples():
    assert gamma_inner(np.array([1, 0]), np.array([1, 0]), SX) == 0
    v = np.array([1, -1]) / math.sqrt(2)
    assert gamma_inner(v, v, SX) == pytest.approx(-1)
    assert gamma_inner(np.array([1, 0]), np.array([0, 1]), I2) == 0


def test_gamma_inner_conjugate_linear_first():
    u = np.array([1j, 0])
    v = np.array([1, 0])
    assert gamma_inner(u, v, I2) == pytest.approx(-1j)
    assert gamma_inner(2j * u, v, I2) == pytest.approx(-2j * gamma_inner(u, v, I2))


def test_gamma_inner_dimension_mismatch():
    with pytest.raises(SpecError):
        gamma_inner(np.ones(3), np.ones(2), I2)


def test_solve_diagonal():
    p = PencilProblem(K=const(np.diag([2.0, 3.0]).astype(complex)), B=const(Z2), Gamma=I2, domain=(0, 1))
    pairs = solve_pencil_at(p, 0.5)
    assert sorted(pr.beta.real for pr in pairs) == pytest.approx([2, 3])
    for pr in pairs:
        assert pr.real and pr.N.real == pytest.approx(1)


def test_solve_indefinite_gamma():
    a = 0.7
    p = PencilProblem(K=const(a * I2), B=const(Z2), Gamma=SX, domain=(0, 1))
    pairs = sorted(solve_pencil_at(p, 0.0), key=lambda q: q.beta.real)
    assert [q.beta.real for q in pairs] == pytest.approx([-a, a])
    assert pairs[0].N.real * pairs[1].N.real < 0


def test_solve_flip():
    p = PencilProblem(K=const(SX), B=const(Z2), Gamma=I2, domain=(0, 1))
    pairs = solve_pencil_at(p, 0.0)
    assert sorted(q.beta.real for q in pairs) == pytest.approx([-1, 1])
    assert abs(np.vdot(pairs[0].phi, pairs[1].phi)) < 1e-12


def test_singular_gamma_rejected():
    with pytest.raises(AssumptionViolation):
        PencilProblem(K=const(I2), B=const(Z2), Gamma=np.diag([1, 1e-13]), domain=(0, 1))


def test_non_hermitian_rejected():
    bad = np.array([[0, 1], [0, 0]], dtype=complex)
    with pytest.raises(SpecError):
        PencilProblem(K=const(I2), B=const(Z2), Gamma=bad, domain=(0, 1))
    p = PencilProblem(K=const(bad), B=const(Z2), Gamma=I2, domain=(0, 1))
    with pytest.raises(SpecError):
        p.validate()


def test_branches_diagonal():
    b1, b2 = smooth_branches(diag_problem())
    for x in (-0.7, -0.1, 0.2, 0.9):
        assert b1.beta(x) == pytest.approx(-x, abs=1e-12)
        assert b2.beta(x) == pytest.approx(x, abs=1e-12)
    assert abs(b1.x_cross) < 1e-12


def test_branches_graphene():
    b1, b2 = smooth_branches(models.graphene())
    for x in (-0.5, 0.3):
        assert b1.beta(x) == pytest.approx(-x, abs=1e-12)
        assert b2.beta(x) == pytest.approx(x, abs=1e-12)
        v = b1.phi(x)
        assert abs(abs(v[0]) - abs(v[1])) < 1e-12
    assert b1.norm_sign * b2.norm_sign == -1


def test_branches_rotated():
    rng = np.random.default_rng(3)
    q, _ = np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
    b1, b2 = smooth_branches(diag_problem(q))
    xs = np.linspace(-0.9, 0.9, 37)
    for x in xs:
        assert b1.beta(x) == pytest.approx(-x, abs=1e-11)
    # gauge continuity: consecutive overlaps have positive real part and the gauge is constant
    for a, b in zip(xs[:-1], xs[1:]):
        assert np.vdot(b1.phi(a), b1.phi(b)).real > 0
    assert np.linalg.norm(b1.phi(-0.9) - b1.phi(0.9)) < 1e-10


@pytest.mark.parametrize("name", ["graphene", "lz", "wave", "random4"])
def test_pencil_residual_and_sign(name):
    problem, (b1, b2), _ = crossing(name)
    lo, hi = problem.domain
    for x in np.linspace(lo + 0.05 * (hi - lo), hi - 0.05 * (hi - lo), 15):
        for br in (b1, b2):
            v = br.phi(x)
            k = np.asarray(problem.K(x))
            res = np.linalg.norm(k @ v - br.beta(x) * problem.Gamma @ v)
            assert res <= 1e-10 * np.linalg.norm(k, 2) * np.linalg.norm(v)
            assert np.sign(br.N(x)) == br.norm_sign


@pytest.mark.parametrize("name", ["graphene", "lz", "wave", "random4"])
def test_structural_properties(name):
    problem, branches, data = crossing(name)
    report = verify_pencil_properties(branches, problem)
    assert report.passed, report.as_dict()
    me = matrix_elements(branches, problem, data.x0)
    assert abs(me.Kp[0, 1]) <= 1e-8 and abs(me.Kp[1, 0]) <= 1e-8
    assert me.slope_check <= 1e-6
    assert np.allclose(me.B, me.B.conj().T, atol=1e-12)


def test_sign_products():
    assert np.prod([b.norm_sign for b in crossing("graphene")[1]]) == -1
    assert np.prod([b.norm_sign for b in crossing("lz")[1]]) == 1


def test_matrix_elements_diagonal():
    problem = diag_problem()
    branches = smooth_branches(problem)
    me = matrix_elements(branches, problem, 0.3)
    assert me.Kp[0, 0].real == pytest.approx(-1, abs=1e-8)
    assert me.Kp[1, 1].real == pytest.approx(1, abs=1e-8)
    assert abs(me.Kp[0, 1]) < 1e-8


def test_matrix_elements_graphene_coupling():
    problem, branches, data = crossing("graphene")
    me = matrix_elements(branches, problem, data.x0)
    assert abs(me.B[0, 1]) == pytest.approx(1, abs=1e-12)
    assert abs(me.B[0, 0]) < 1e-12 and abs(me.B[1, 1]) < 1e-12


def test_connection_identity_off_crossing():
    # (beta_k - beta_j) S_jk = K'_jk away from x0
    problem, branches, _ = crossing("random4")
    me = matrix_elements(branches, problem, 0.4)
    assert me.derivative_check <= 1e-6 * max(1.0, np.max(np.abs(me.Kp)))


def test_jordan_case_rejected():
    with pytest.raises(AssumptionViolation, match="Jordan-block case, out of scope"):
        smooth_branches(models.schrodinger())


def test_gauge_invariance_of_observables():
    problem, (b1, b2), _ = crossing("random4")
    g1 = b1.with_gauge(lambda x: np.exp(1j * (0.3 + 2 * x + x * x)))
    bm = problem.B
    for x in (-0.6, 0.1, 0.5):
        assert g1.beta(x) == b1.beta(x)
        assert abs(g1.N(x)) == pytest.approx(abs(b1.N(x)), rel=1e-12)
        b12 = np.vdot(b1.phi(x), bm(x) @ b2.phi(x))
        g12 = np.vdot(g1.phi(x), bm(x) @ b2.phi(x))
        assert abs(g12) == pytest.approx(abs(b12), rel=1e-12)
    assert g1.regauged and not b1.regauged


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10_000), x=st.floats(-0.9, 0.9))
def test_gamma_orthogonality_random(seed, x):
    rng = np.random.default_rng(seed)
    n = 4
    s = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)) + 3 * np.eye(n)
    gamma = s.conj().T @ np.diag([1, -1, 1, 1]) @ s
    h0 = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    h1 = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    h0, h1 = h0 + h0.conj().T, h1 + h1.conj().T
    problem = PencilProblem(K=lambda t: h0 + t * h1, B=const(np.zeros((n, n))), Gamma=gamma, domain=(-1, 1))
    pairs = solve_pencil_at(problem, x)
    for i, p in enumerate(pairs):
        for j, q in enumerate(pairs):
            if i != j and abs(np.conj(p.beta) - q.beta) > 1e-6:
                scale = np.linalg.norm(p.phi) * np.linalg.norm(q.phi) * np.linalg.norm(gamma, 2)
                assert abs(gamma_inner(p.phi, q.phi, gamma)) <= 1e-10 * scale
