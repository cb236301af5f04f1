"""Leading resonance-zone solution near the crossing, built from parabolic cylinder functions."""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .degeneracy import DegeneracyData
from .errors import SpecError
from .pcf import pcf_d, xi

DEFAULT_G_PRIME = 0.05


@dataclass(frozen=True)
class InnerState:
    """Inner solution with free constants A (multiplying D_nu(t)) and B (multiplying D_nu(-t))."""

    A: complex
    B: complex
    data: DegeneracyData
    hbar: float
    g_prime: float = DEFAULT_G_PRIME

    def __post_init__(self):
        if not self.hbar > 0:
            raise SpecError("hbar must be positive")
        if not 0 < self.g_prime < 0.25:
            raise SpecError("g_prime must lie in (0, 1/4)")

    @property
    def coupling(self) -> complex:
        """B12/(sigma N1): the factor relating a1 to the D_{nu-1} combination."""
        d = self.data
        return d.b12 / (d.sigma * d.n1)

    @property
    def tau_max(self) -> float:
        return self.hbar ** (-0.25 + self.g_prime)

    def phase_factor(self, tau: float) -> complex:
        """exp((i/sqrt(hbar)) * integral from -b to tau of (beta0 + sqrt(hbar) beta_av))."""
        d = self.data
        u = tau + d.b
        lin = d.beta0 / math.sqrt(self.hbar) * u
        av = d.beta_av_c0 * u + 0.5 * d.beta_av_c1 * (tau * tau - d.b * d.b)
        return cmath.exp(1j * (lin + av))

    def phi0(self, tau: float) -> np.ndarray:
        a1, a2 = inner_coefficients(self, tau)
        return a1 * self.data.phi1_0 + a2 * self.data.phi2_0


def _t(state: InnerState, tau: float) -> complex:
    return state.data.sigma * (tau + state.data.b)


def _pcf_pair(nu: complex, t: complex):
    if t == 0:
        t = 0j
    return pcf_d(nu, t), pcf_d(nu, -t)


def inner_coefficients(state: InnerState, tau: float) -> tuple[complex, complex]:
    """(a1, a2) at tau."""
    nu = state.data.nu
    t = _t(state, tau)
    dp, dm = _pcf_pair(nu, t)
    a2 = state.A * dp.value + state.B * dm.value
    if state.data.trivial or state.data.b12 == 0:
        return 0j, a2
    ep, em = _pcf_pair(nu - 1.0, t)
    a1 = -1j * state.coupling * (state.A * ep.value - state.B * em.value)
    return a1, a2


def inner_derivatives(state: InnerState, tau: float) -> tuple[complex, complex]:
    """(da1/dtau, da2/dtau) from the analytic derivatives of D."""
    nu = state.data.nu
    s = state.data.sigma
    t = _t(state, tau)
    dp, dm = _pcf_pair(nu, t)
    da2 = s * (state.A * dp.derivative - state.B * dm.derivative)
    if state.data.trivial or state.data.b12 == 0:
        return 0j, da2
    ep, em = _pcf_pair(nu - 1.0, t)
    da1 = -1j * state.coupling * s * (state.A * ep.derivative + state.B * em.derivative)
    return da1, da2


def system_residual(state: InnerState, tau: float, derivs: tuple[complex, complex] | None = None) -> tuple[complex, complex]:
    """Residuals of the two first-order equations; ``derivs`` may supply external derivatives."""
    d = state.data
    a1, a2 = inner_coefficients(state, tau)
    da1, da2 = derivs if derivs is not None else inner_derivatives(state, tau)
    qt = d.Q * (tau + d.b)
    r1 = -1j * da1 + qt * a1 - d.b12 / d.n1 * a2
    r2 = -1j * da2 - np.conj(d.b12) / d.n2 * a1 - qt * a2
    return complex(r1), complex(r2)


def a1_from_a2(state: InnerState, tau: float) -> complex:
    """a1 recovered from the second equation: (N2/B21)(-i a2' - Q(tau+b) a2)."""
    d = state.data
    if d.b12 == 0:
        raise SpecError("a1 cannot be recovered from a2 without coupling")
    _, a2 = inner_coefficients(state, tau)
    _, da2 = inner_derivatives(state, tau)
    return complex(d.n2 / np.conj(d.b12) * (-1j * da2 - d.Q * (tau + d.b) * a2))


def inner_state_value(state: InnerState, tau: float) -> np.ndarray:
    """Leading inner solution: phase factor times a1 phi_1(0) + a2 phi_2(0)."""
    if abs(tau) > state.tau_max:
        warnings.warn(
            f"|tau|={abs(tau):g} exceeds the inner validity bound {state.tau_max:.4g}", stacklevel=2
        )
    return state.phase_factor(tau) * state.phi0(tau)


@dataclass(frozen=True)
class InnerAsymptote:
    """Large-|tau| leading form of the inner amplitude on one side.

    ``coef1``/``coef2`` multiply phi_1(0)/phi_2(0); ``bound`` is the O(1/tau) size of
    the neglected terms in the same units as the coefficients.
    """

    side: int
    tau: float
    coef1: complex
    coef2: complex
    bound: float

    def amplitude(self, data: DegeneracyData) -> np.ndarray:
        return self.coef1 * data.phi1_0 + self.coef2 * data.phi2_0


def inner_asymptote(state: InnerState, side: int, tau: float) -> InnerAsymptote:
    if side not in (1, -1):
        raise SpecError("side must be +1 or -1")
    if abs(tau) < 10.0:
        raise SpecError("asymptotic forms need |tau| >= 10")
    if (tau > 0) != (side > 0):
        raise SpecError(f"tau={tau:g} is not on side {side:+d}")
    d = state.data
    nu = d.nu
    A, B = state.A, state.B
    st = abs(d.sigma * tau)
    gauss = cmath.exp(d.sigma**2 * (tau + d.b) ** 2 / 4.0)
    power = cmath.exp(nu * math.log(st))
    xim1 = xi(nu - 1.0)
    e5 = cmath.exp(1.25j * math.pi * nu)
    e3 = cmath.exp(0.75j * math.pi * nu)
    em1 = cmath.exp(-0.25j * math.pi * nu)
    c = state.coupling if not d.trivial else 0j
    if side < 0:
        coef1 = -1j * xim1 * c * A * e5 * gauss / power
        coef2 = (A * e3 + B * em1) * power / gauss
        dropped = abs(B)
    else:
        coef1 = 1j * xim1 * c * B * e5 * gauss / power
        coef2 = (A * em1 + B * e3) * power / gauss
        dropped = abs(A)
    t = abs(d.sigma * (tau + d.b))
    # scale of each retained piece; the dropped D_{nu-1} on the decaying ray is O(1/t)
    mag = abs(coef1) + abs(coef2) + (abs(A) + abs(B)) * max(abs(power), 1.0 / abs(power))
    rel = abs(nu * (nu - 1.0)) / (2.0 * t * t) + abs(xi(nu)) * math.exp(-2 * math.pi * nu.imag) / t
    rel += abs(nu) * abs(d.b) / abs(tau) + 1.0 / t
    bound = mag * rel + abs(c) * dropped * max(abs(power), 1.0 / abs(power)) / t
    return InnerAsymptote(side, float(tau), complex(coef1), complex(coef2), float(bound))


def asymptote_state_value(state: InnerState, asym: InnerAsymptote) -> np.ndarray:
    """Inner solution rebuilt from its asymptote (same phase factor)."""
    return state.phase_factor(asym.tau) * asym.amplitude(state.data)
