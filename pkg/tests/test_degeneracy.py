import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import crossing
from pencil_transit import models
from pencil_transit.degeneracy import (
    analyze_crossing,
    complement_correction,
    complement_correction_sum,
    extract_parameters,
    locate_degeneracy,
    perturbed_away,
    perturbed_eigvals_near,
    perturbed_eigvecs_near,
    phase_condition_factor,
)
from pencil_transit.errors import AssumptionViolation, SpecError
from pencil_transit.pencil import PencilProblem, smooth_branches

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)


def diag_pencil(f, B=None, domain=(-1.0, 1.0)):
    bm = np.zeros((2, 2), dtype=complex) if B is None else B
    return PencilProblem(K=lambda x: np.diag([-f(x), f(x)]).astype(complex), B=lambda x: bm, Gamma=I2, domain=domain)


def test_linear_root():
    branches = smooth_branches(diag_pencil(lambda x: x))
    assert abs(locate_degeneracy(branches)) < 1e-12


def test_shifted_graphene_root():
    _, data = analyze_crossing(models.graphene(U0=0.3))
    assert data.x0 == pytest.approx(0.3, abs=1e-12)


def test_sine_root_against_bisection():
    from scipy.optimize import brentq

    branches = smooth_branches(diag_pencil(math.sin))
    x0 = locate_degeneracy(branches)
    ref = brentq(lambda x: branches[1].beta(x) - branches[0].beta(x), -0.5, 0.7, xtol=1e-15)
    assert x0 == pytest.approx(ref, abs=1e-12)
    data = extract_parameters(branches, branches[0].problem, x0)
    assert 2 * data.Q == pytest.approx(2.0, abs=1e-8)


def test_graphene_parameters():
    _, _, d = crossing("graphene")
    assert d.nu == pytest.approx(-0.5j, abs=1e-12)
    assert d.w == -1 and d.b == pytest.approx(0, abs=1e-14)
    assert abs(d.nu) == pytest.approx(0.5)
    assert d.n1 * d.n2 < 0
    assert d.scenario == "two real turning points"


def test_lz_parameters():
    _, _, d = crossing("lz")
    assert (d.Q, d.p, d.w) == (pytest.approx(1), pytest.approx(1), 1)
    assert d.nu == pytest.approx(0.5j)
    assert d.b == 0 and d.beta0 == 0 and d.beta_av_c0 == 0 and d.beta_av_c1 == 0
    assert d.sigma == pytest.approx(cmath.exp(-0.25j * math.pi) * math.sqrt(2))
    assert d.scenario == "avoided crossing"


def test_wave_parameters():
    _, _, d = crossing("wave")
    assert d.Q == pytest.approx(1, abs=1e-8) and d.p == pytest.approx(1, abs=1e-8)
    assert d.w == 1 and d.nu == pytest.approx(0.5j, abs=1e-8)


def test_random4_parameters():
    _, _, d = crossing("random4")
    assert d.w == -1 and d.b != 0 and d.theta_a != 0
    assert abs(d.nu.real) <= 1e-14 * abs(d.nu)


def test_zero_coupling():
    branches, d = analyze_crossing(diag_pencil(lambda x: x))
    assert d.p == 0 and d.nu == 0 and d.trivial
    assert d.scenario == "trivial transition"


def test_kappa_points():
    _, _, d = crossing("graphene")
    kp, km = d.kappa(1e-2)
    assert kp == pytest.approx(0.1) and km == pytest.approx(-0.1)
    _, _, d = crossing("lz")
    kp, km = d.kappa(1e-2)
    assert kp == pytest.approx(0.1j) and km == pytest.approx(-0.1j)


def test_minimum_splitting():
    _, _, d = crossing("lz")
    lo, hi = perturbed_eigvals_near(d, -d.b)
    assert (hi - lo) == pytest.approx(2 * d.p)


def test_barrier_gap_imaginary():
    _, _, d = crossing("graphene")
    lo, hi = perturbed_eigvals_near(d, -d.b)
    assert hi - lo == pytest.approx(2j)


@pytest.mark.parametrize("name", ["graphene", "lz", "wave", "random4"])
def test_classification_consistency(name):
    _, _, d = crossing(name)
    taus = np.linspace(-d.b - 3, -d.b + 3, 6001)
    complex_at = np.array([abs(perturbed_eigvals_near(d, t)[0].imag) > 0 for t in taus])
    if d.w == 1:
        assert not complex_at.any()
    else:
        width = taus[complex_at].max() - taus[complex_at].min()
        assert width == pytest.approx(2 * d.p / d.Q, abs=2 * (taus[1] - taus[0]))


@pytest.mark.parametrize("name", ["graphene", "lz", "wave", "random4"])
def test_large_tau_form(name):
    _, _, d = crossing(name)
    for tau in (1e3, -1e3):
        got = perturbed_eigvals_near(d, tau)
        for j, value in enumerate(got, start=1):
            sgn = (-1) ** j
            expected = d.beta_av(tau) + sgn * d.Q * abs(tau + d.b) - sgn * 1j * d.nu / abs(tau)
            assert abs(value - expected) <= 1e-4 * d.Q


def test_theta_a_gauge_covariance():
    problem, (b1, b2), d = crossing("random4")
    s1, s2 = 0.4, -1.3
    g = (b1.with_gauge(lambda x: cmath.exp(1j * s1)), b2.with_gauge(lambda x: cmath.exp(1j * s2)))
    e = extract_parameters(g, problem, d.x0)
    shift = (e.theta_a - d.theta_a - (s2 - s1)) / (2 * math.pi)
    assert abs(shift - round(shift)) < 1e-10
    for attr in ("Q", "b", "p", "w"):
        assert getattr(e, attr) == pytest.approx(getattr(d, attr), rel=1e-10, abs=1e-12)
    assert abs(e.nu) == pytest.approx(abs(d.nu), rel=1e-10)


@pytest.mark.parametrize("name", ["random4", "graphene", "lz"])
def test_phase_condition_gauge(name):
    problem, (b1, b2), d = crossing(name)
    f = phase_condition_factor(d)
    e = extract_parameters((b1, b2.with_gauge(lambda x: f)), problem, d.x0)
    wrapped = math.remainder(e.theta_a, 2 * math.pi)
    assert abs(wrapped) < 1e-10


def test_eigvecs_swap_for_avoided_crossing():
    _, _, d = crossing("lz")
    for tau, aligned in ((1e4, 0), (-1e4, 1)):
        a = perturbed_eigvecs_near(d, tau)[0]
        a = a / np.linalg.norm(a)
        assert abs(a[aligned]) == pytest.approx(1, abs=1e-6)
    a = perturbed_eigvecs_near(d, 1e3)[0]
    ratio = a[1] / a[0] * (d.b12 / d.n1)
    assert ratio == pytest.approx(1j * d.nu / 1e3, rel=1e-2)


def test_eigvecs_uncoupled_are_diagonal():
    _, d = analyze_crossing(diag_pencil(lambda x: x))
    for tau in (-2.0, 3.0):
        a = perturbed_eigvecs_near(d, tau)
        assert all(np.count_nonzero(row) == 1 for row in a)


def test_away_correction_graphene():
    problem, branches, d = crossing("graphene")
    hbar = 1e-4
    for x in (0.3, -0.4):
        a = perturbed_away(branches, problem, x, math.sqrt(hbar))
        for j in range(2):
            beta = branches[j].beta(x)
            assert a.beta[j] == pytest.approx(beta - hbar * d.p**2 / (2 * beta), abs=1e-14)


def test_away_rejects_near_crossing():
    problem, branches, _ = crossing("graphene")
    with pytest.raises(SpecError):
        perturbed_away(branches, problem, 0.01, 0.1)


def test_complement_empty_for_two_dimensions():
    problem, branches, _ = crossing("lz")
    assert np.all(complement_correction(problem, branches, 0.5, 1) == 0)


def test_complement_matches_explicit_sum_diagonal():
    rng = np.random.default_rng(11)
    bm = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    bm = bm + bm.conj().T
    problem = PencilProblem(
        K=lambda x: np.diag([-x, x, 2.0, -3.0]).astype(complex), B=lambda x: bm, Gamma=np.eye(4), domain=(-1, 1)
    )
    branches = smooth_branches(problem)
    x = 0.4
    for j in (1, 2):
        beta_j = branches[j - 1].beta(x)
        expected = np.zeros(4, dtype=complex)
        phi = branches[j - 1].phi(x)
        for k, beta_k in ((2, 2.0), (3, -3.0)):
            e = np.eye(4)[k]
            expected += np.vdot(e, bm @ phi) / (beta_j - beta_k) * e
        assert np.allclose(complement_correction(problem, branches, x, j), expected, atol=1e-12)
        assert np.allclose(complement_correction_sum(problem, branches, x, j), expected, atol=1e-12)


@pytest.mark.parametrize("name", ["random4", "wave"])
def test_complement_routes_agree(name):
    problem, branches, _ = crossing(name)
    for x in (-0.5, 0.3):
        for j in (1, 2):
            a = complement_correction(problem, branches, x, j)
            b = complement_correction_sum(problem, branches, x, j)
            assert np.linalg.norm(a - b) <= 1e-10 * np.linalg.norm(a)


def test_two_crossings_rejected():
    problem = diag_pencil(lambda x: x * x - 0.25)
    with pytest.raises(AssumptionViolation):
        analyze_crossing(problem)


@settings(max_examples=25, deadline=None)
@given(q=st.floats(0.3, 3), p=st.floats(0.05, 2))
def test_lz_family(q, p):
    _, d = analyze_crossing(models.lz(Q=q, p=p))
    assert d.Q == pytest.approx(q, rel=1e-8)
    assert d.p == pytest.approx(p, rel=1e-8)
    assert d.nu == pytest.approx(1j * p * p / (2 * q), rel=1e-8)
    assert abs(d.nu.real) <= 1e-14 * abs(d.nu)


@settings(max_examples=20, deadline=None)
@given(q=st.floats(0.3, 3), p=st.floats(0.05, 2))
def test_graphene_family(q, p):
    _, d = analyze_crossing(models.graphene(Q=q, p=p))
    assert d.w == -1
    assert d.nu == pytest.approx(-1j * p * p / (2 * q), rel=1e-8)
