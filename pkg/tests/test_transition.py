import cmath
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pencil_transit.errors import SpecError
from pencil_transit.transition import (
    TransitionMatrix2,
    adiabatic_limit_matrix,
    canonical_T,
    check_T_properties,
    general_T,
    matched_T,
    phase_T,
    canonical_i_zeta,
    polar_T,
    reflection_transmission,
    renumber_T,
    theta_prime,
)

LIMIT = np.array([[0, -1], [1, 0]], dtype=complex)


def nu_of(mag, w):
    return complex(0, w * mag)


def mp_canonical(nu, w):
    """High-precision evaluation of the closed form, used as a numerical oracle."""
    with mpmath.workdps(50):
        nu_m = mpmath.mpc(0, nu.imag)
        mag = abs(nu_m)
        sq = mpmath.sqrt(2 * mpmath.pi) * mpmath.expjpi(mpmath.mpf(w) / 4) * mpmath.sqrt(mag)
        half = 1j * mpmath.pi * nu_m / 2
        t11 = mpmath.exp(1j * mpmath.pi * nu_m)
        t12 = 1j * sq * mpmath.exp(half + nu_m - nu_m * mpmath.log(mag)) / mpmath.gamma(1 - nu_m)
        t21 = sq * mpmath.exp(half - nu_m + nu_m * mpmath.log(mag)) / mpmath.gamma(1 + nu_m)
        return np.array([[complex(t11), complex(t12)], [complex(t21), complex(t11)]])


def test_zero_order_is_identity():
    for w in (1, -1):
        assert np.array_equal(canonical_T(0j, w).entries, np.eye(2))


def test_landau_zener_magnitudes():
    t = canonical_T(0.5j, 1)
    assert abs(t.t11) == pytest.approx(math.exp(-math.pi / 2), abs=1e-12)
    assert abs(t.t12) == pytest.approx(math.sqrt(1 - math.exp(-math.pi)), abs=1e-12)
    assert abs(t.t21) == pytest.approx(0.978154, abs=1e-6)
    assert abs(t.det - 1) < 1e-13


def test_tunneling_magnitudes():
    t = canonical_T(-0.5j, -1)
    assert abs(t.t11) == pytest.approx(math.exp(math.pi / 2), rel=1e-12)
    assert abs(t.t12) == pytest.approx(math.sqrt(1 - math.exp(-math.pi)) * math.exp(math.pi / 2), rel=1e-12)
    assert abs(t.det - 1) < 1e-12


@pytest.mark.parametrize("w", [1, -1])
@pytest.mark.parametrize("mag", [1e-4, 0.01, 0.5, 1.0, 3.0, 10.0])
def test_matches_high_precision_oracle(mag, w):
    got = canonical_T(nu_of(mag, w), w).entries
    ref = mp_canonical(nu_of(mag, w), w)
    assert np.max(np.abs(got - ref) / np.abs(ref)) < 1e-12


@pytest.mark.parametrize("w", [1, -1])
@pytest.mark.parametrize("mag", [0.05, 0.5, 2.0, 20.0])
def test_polar_matches_cartesian(mag, w):
    a = canonical_T(nu_of(mag, w), w).entries
    b = polar_T(nu_of(mag, w), w).matrix.entries
    assert np.max(np.abs(a - b) / np.abs(a)) < 1e-10


def test_theta_prime_vanishes_for_large_order():
    assert abs(polar_T(20j, 1).theta_prime) < 1e-2
    assert abs(theta_prime(20j, 1)) < abs(theta_prime(2j, 1))
    assert polar_T(0j, 1).theta_prime is None


def test_theta_prime_against_mpmath():
    nu = 0.5j
    arg = float(mpmath.arg(mpmath.gamma(1 + nu)))
    lead = 0.5 * (math.log(0.5) - 1) + math.pi / 4
    assert theta_prime(nu, 1) == pytest.approx(arg - lead, abs=1e-12)


def test_matching_route_agrees():
    # numerical inversion of the matching conditions vs the closed form
    for w in (1, -1):
        for mag in (0.1, 0.5, 2.0):
            nu = nu_of(mag, w)
            for theta_a in (0.0, 0.7, -2.1):
                m = matched_T(nu, w, theta_a)
                assert np.allclose(m, canonical_T(nu, w).entries, rtol=1e-10, atol=1e-12)


def test_phase_choice_changes_only_off_diagonal():
    nu = 0.5j
    a = phase_T(nu, 1, 0.3, canonical_i_zeta(nu, 0.3) + 0.2j)
    c = canonical_T(nu, 1).entries
    assert np.allclose(np.diag(a), np.diag(c))
    assert abs(a[0, 1] * a[1, 0] - c[0, 1] * c[1, 0]) < 1e-12


def test_unit_limit_tracks_sqrt_order():
    # the distance to the identity is governed by |t12| ~ sqrt(2 pi |nu|)
    for mag in (1e-6, 1e-4, 1e-3):
        for w in (1, -1):
            d = np.linalg.norm(canonical_T(nu_of(mag, w), w).entries - np.eye(2), 2)
            assert d <= 3 * math.sqrt(mag)
            assert d >= math.sqrt(2 * math.pi * mag) * 0.9


def test_large_order_limit_modulus_and_sign():
    t = canonical_T(20j, 1).entries
    assert abs(t[0, 0]) == pytest.approx(math.exp(-20 * math.pi), rel=1e-10)
    assert abs(abs(t[0, 1]) - 1) < 1e-12
    assert abs(abs(t[1, 0]) - 1) < 1e-12
    # only the slowly decaying phase theta' separates it from the limit
    th = theta_prime(20j, 1)
    dist = np.linalg.norm(t - LIMIT, 2)
    assert dist == pytest.approx(abs(2 * math.sin(th / 2)), rel=1e-6)
    assert t[0, 1].real < 0 and t[1, 0].real > 0


def test_tunneling_large_order_band():
    mag = 5.0
    t = canonical_T(nu_of(mag, -1), -1).entries
    ratio = np.abs(t) / math.exp(math.pi * mag)
    assert np.all(np.abs(ratio - 1) <= 3 * math.exp(-math.pi * mag))


def test_limit_correspondence_sign():
    # perturbed-mode correspondence at large |nu| reproduces the limit matrix including the -1
    from pencil_transit import models
    from pencil_transit.degeneracy import analyze_crossing

    problem = models.lz(p=math.sqrt(40.0))
    _, data = analyze_crossing(problem)
    assert data.nu == pytest.approx(20j)
    m = adiabatic_limit_matrix(data, 1e4)
    assert np.max(np.abs(m - LIMIT)) < 1e-3
    assert m[0, 1].real == pytest.approx(-1, abs=1e-3)


def test_general_scaling():
    t = canonical_T(0.5j, 1)
    assert np.allclose(general_T(t, 1, 1, 1, 1).entries, t.entries)
    c = 1.7 - 0.4j
    g = general_T(t, c, 1 / c, c, 1 / c)
    assert np.allclose(np.diag(g.entries), np.diag(t.entries))
    assert g.t12 == pytest.approx(t.t12 * c * c)
    assert g.t21 == pytest.approx(t.t21 / (c * c))
    with pytest.raises(SpecError):
        general_T(t, 0, 1, 1, 1)


def test_renumbering():
    r = renumber_T(canonical_T(0j, 1))
    assert np.array_equal(r.entries, np.array([[0, 1], [-1, 0]]))
    with pytest.raises(SpecError):
        renumber_T(r)
    big = renumber_T(canonical_T(20j, 1)).entries
    assert abs(abs(big[0, 0]) - 1) < 1e-12 and abs(big[0, 1]) < 1e-20


def test_reflection_transmission():
    r, t = reflection_transmission(canonical_T(-0.5j, -1))
    assert abs(t) == pytest.approx(math.exp(-math.pi / 2), rel=1e-12)
    assert abs(r) == pytest.approx(math.sqrt(1 - math.exp(-math.pi)), rel=1e-12)
    assert abs(r) ** 2 + abs(t) ** 2 == pytest.approx(1, abs=1e-12)
    r0, t0 = reflection_transmission(canonical_T(0j, -1))
    assert r0 == 0 and t0 == 1
    _, t3 = reflection_transmission(canonical_T(-3j, -1))
    assert abs(t3) == pytest.approx(8.0e-5, rel=0.01)


def test_property_checks():
    rep = check_T_properties(canonical_T(0.5j, 1), 1, 1)
    assert rep.passed and rep.unitary
    rep = check_T_properties(canonical_T(-0.5j, -1), 1, -1)
    assert rep.passed and not rep.unitary
    rep = check_T_properties(canonical_T(-0.5j, -1), 1, 1)
    assert not rep.passed


def test_order_validation():
    with pytest.raises(SpecError):
        canonical_T(0.5j, -1)
    with pytest.raises(SpecError):
        canonical_T(0.5 + 0.5j, 1)
    with pytest.raises(SpecError):
        TransitionMatrix2(np.eye(2), "other", 0j, 1)


@settings(max_examples=60, deadline=None)
@given(mag=st.floats(1e-6, 40), w=st.sampled_from([1, -1]))
def test_magnitude_identities(mag, w):
    t = canonical_T(nu_of(mag, w), w)
    assert abs(t.t11) == pytest.approx(math.exp(-math.pi * mag * w), rel=1e-12)
    expected = -math.expm1(-2 * math.pi * mag) * math.exp(-math.pi * mag * (w - 1))
    assert abs(t.t12 * t.t21) == pytest.approx(expected, rel=1e-10)
    assert abs(t.det - 1) <= 1e-12 * max(1.0, abs(t.t11) ** 2)
