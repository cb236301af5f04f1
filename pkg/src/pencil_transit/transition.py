"""Closed-form 2x2 transition matrices and their structural checks.

Convention: T maps left coefficients to right coefficients, T k^- = k^+, so column j
is the image of the left mode j.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import SpecError
from .pcf import NU_MAX, loggamma, xi

_SQRT_2PI = math.sqrt(2.0 * math.pi)

CANONICAL = "canonical"
GENERAL = "general"
RENUMBERED = "renumbered"
_CONVENTIONS = (CANONICAL, GENERAL, RENUMBERED)


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=complex).reshape(2, 2)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TransitionMatrix2:
    """A 2x2 transition matrix with the convention it was produced under."""

    entries: np.ndarray
    convention: str
    nu: complex
    w: int
    renumbered: bool = False
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "entries", _frozen(self.entries))
        if self.convention not in _CONVENTIONS:
            raise SpecError(f"unknown convention {self.convention!r}")
        if self.w not in (1, -1):
            raise SpecError("w must be +1 or -1")

    @property
    def t11(self) -> complex:
        return complex(self.entries[0, 0])

    @property
    def t12(self) -> complex:
        return complex(self.entries[0, 1])

    @property
    def t21(self) -> complex:
        return complex(self.entries[1, 0])

    @property
    def t22(self) -> complex:
        return complex(self.entries[1, 1])

    @property
    def det(self) -> complex:
        e = self.entries
        return complex(e[0, 0] * e[1, 1] - e[0, 1] * e[1, 0])


def check_order(nu: complex, w: int) -> tuple[complex, float]:
    """Validate a purely imaginary order consistent with w; return (nu, |nu|)."""
    nu = complex(nu)
    if w not in (1, -1):
        raise SpecError("w must be +1 or -1")
    mag = abs(nu)
    if abs(nu.real) > 1e-14 * max(mag, 1.0):
        raise SpecError(f"nu = {nu} is not purely imaginary")
    if mag > NU_MAX:
        raise SpecError(f"|nu| = {mag:g} exceeds the supported range {NU_MAX:g}")
    if mag > 0 and (nu.imag > 0) != (w > 0):
        raise SpecError(f"sign of Im nu ({nu.imag:g}) disagrees with w = {w}")
    return complex(0.0, nu.imag), mag


def sqrt_nu(nu: complex, w: int) -> complex:
    """Branch of sqrt(nu) used throughout: exp(i pi w / 4) sqrt(|nu|)."""
    return cmath.exp(1j * math.pi * w / 4.0) * math.sqrt(abs(nu))


def canonical_T(nu: complex, w: int) -> TransitionMatrix2:
    """Transition matrix between canonical modes, built in cartesian form."""
    nu, mag = check_order(nu, w)
    if mag == 0.0:
        return TransitionMatrix2(np.eye(2), CANONICAL, nu, w)
    sq = _SQRT_2PI * sqrt_nu(nu, w)
    log_mag = math.log(mag)
    half = 1j * math.pi * nu / 2.0
    # exponents combined before exponentiation: Gamma(1 -/+ nu) spans e^{+-pi|nu|/2}
    t11 = cmath.exp(1j * math.pi * nu)
    t12 = 1j * sq * cmath.exp(half + nu - nu * log_mag - loggamma(1.0 - nu))
    t21 = sq * cmath.exp(half - nu + nu * log_mag - loggamma(1.0 + nu))
    return TransitionMatrix2([[t11, t12], [t21, t11]], CANONICAL, nu, w)


def theta_gamma(nu: complex, w: int) -> float:
    """Leading large-|nu| form of arg Gamma(1 + nu)."""
    mag = abs(nu)
    return w * mag * (math.log(mag) - 1.0) + math.pi * w / 4.0


def theta_prime(nu: complex, w: int) -> float | None:
    """arg Gamma(1+nu) minus its large-|nu| form; None at nu = 0 where it is undefined."""
    nu, mag = check_order(nu, w)
    if mag == 0.0:
        return None
    return loggamma(1.0 + nu).imag - theta_gamma(nu, w)


@dataclass(frozen=True)
class PolarForm:
    matrix: TransitionMatrix2
    theta_prime: float | None


def polar_T(nu: complex, w: int) -> PolarForm:
    """The canonical matrix rebuilt from moduli and arguments."""
    nu, mag = check_order(nu, w)
    if mag == 0.0:
        return PolarForm(TransitionMatrix2(np.eye(2), CANONICAL, nu, w), None)
    th = theta_prime(nu, w)
    diag = math.exp(-math.pi * mag * w)
    off = math.sqrt(-math.expm1(-2.0 * math.pi * mag)) * math.exp(-0.5 * math.pi * mag * (w - 1))
    t12 = off * cmath.exp(1j * th) * cmath.exp(0.5j * math.pi * (1 + w))
    t21 = off * cmath.exp(-1j * th)
    return PolarForm(TransitionMatrix2([[diag, t12], [t21, diag]], CANONICAL, nu, w), th)


def phase_T(nu: complex, w: int, theta_a: float, i_zeta: complex) -> np.ndarray:
    """Transition matrix for an arbitrary overall mode phase exp(i zeta).

    ``i_zeta`` is the complex number i*zeta (zeta itself may be complex when nu != 0).
    """
    nu, mag = check_order(nu, w)
    if mag == 0.0:
        return np.eye(2, dtype=complex)
    sq = _SQRT_2PI * sqrt_nu(nu, w)
    half = 1j * math.pi * nu / 2.0
    shift = 2.0 * i_zeta - 1j * theta_a
    t11 = cmath.exp(1j * math.pi * nu)
    t12 = 1j * sq * cmath.exp(half - shift - loggamma(1.0 - nu))
    t21 = sq * cmath.exp(half + shift - loggamma(1.0 + nu))
    return np.array([[t11, t12], [t21, t11]], dtype=complex)


def canonical_i_zeta(nu: complex, theta_a: float) -> complex:
    """The phase choice i*zeta that turns the general matrix into the canonical one."""
    mag = abs(nu)
    if mag == 0.0:
        return 0.5j * theta_a
    return 0.5j * theta_a - nu / 2.0 + nu * math.log(mag) / 2.0


def matched_T(nu: complex, w: int, theta_a: float, i_zeta: complex | None = None) -> np.ndarray:
    """Transition matrix solved numerically from the inner/outer matching conditions.

    The left and right mode coefficients are linear in the two inner constants (A, B):
    k^- = M^- (A, B), k^+ = M^+ (A, B), so T = M^+ (M^-)^{-1}. This never touches the
    closed form and serves as its independent check. Undefined at nu = 0.
    """
    nu, mag = check_order(nu, w)
    if mag == 0.0:
        raise SpecError("the matching system is singular at nu = 0")
    if i_zeta is None:
        i_zeta = canonical_i_zeta(nu, theta_a)
    sq = sqrt_nu(nu, w)
    coupling = sq * cmath.exp(1j * theta_a) * xi(nu - 1.0) * cmath.exp(1.25j * math.pi * nu)
    ez = cmath.exp(i_zeta)
    emz = cmath.exp(-i_zeta)
    e3 = cmath.exp(0.75j * math.pi * nu)
    e1 = cmath.exp(-0.25j * math.pi * nu)
    m_minus = np.array([[-1j * coupling * emz, 0.0], [e3 * ez, e1 * ez]], dtype=complex)
    m_plus = np.array([[0.0, 1j * coupling * emz], [e1 * ez, e3 * ez]], dtype=complex)
    return m_plus @ np.linalg.inv(m_minus)


def general_T(
    canonical: TransitionMatrix2, n1m: complex, n2m: complex, n1p: complex, n2p: complex
) -> TransitionMatrix2:
    """Rescale a canonical matrix to modes with constant factors n_j^-, n_j^+."""
    factors = [complex(n1m), complex(n2m), complex(n1p), complex(n2p)]
    if any(f == 0 for f in factors):
        raise SpecError("normalization factors must be nonzero")
    if canonical.renumbered:
        raise SpecError("rescale before renumbering")
    left = np.diag([factors[2], factors[3]])
    right = np.diag([1.0 / factors[0], 1.0 / factors[1]])
    return TransitionMatrix2(
        left @ canonical.entries @ right,
        GENERAL,
        canonical.nu,
        canonical.w,
        meta={"n1m": factors[0], "n2m": factors[1], "n1p": factors[2], "n2p": factors[3]},
    )


_SWAP = np.array([[0.0, 1.0], [-1.0, 0.0]], dtype=complex)


def renumber_T(t: TransitionMatrix2) -> TransitionMatrix2:
    """Switch the left numbering to the one ordered by phase velocity."""
    if t.renumbered:
        raise SpecError("matrix is already renumbered")
    return TransitionMatrix2(
        t.entries @ _SWAP, RENUMBERED, t.nu, t.w, renumbered=True, meta=dict(t.meta)
    )


def reflection_transmission(t: TransitionMatrix2) -> tuple[complex, complex]:
    """Reflection R = -t21/t22 and transmission T = det/t22 for a mode incident from the left."""
    if t.renumbered:
        raise SpecError("reflection/transmission use the smooth numbering")
    if t.w != -1:
        warnings.warn("reflection/transmission are only physical for opposite flux signs (w = -1)")
    if t.t22 == 0:
        raise SpecError("t22 vanishes; reflection is undefined")
    return -t.t21 / t.t22, t.det / t.t22


@dataclass(frozen=True)
class CheckItem:
    name: str
    value: float
    tolerance: float
    passed: bool


@dataclass(frozen=True)
class PropertyReport:
    items: tuple[CheckItem, ...]
    gamma: complex
    unitary: bool

    @property
    def passed(self) -> bool:
        return all(item.passed for item in self.items)

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "gamma": self.gamma,
            "unitary": self.unitary,
            "items": [
                {"name": i.name, "value": i.value, "tolerance": i.tolerance, "passed": i.passed}
                for i in self.items
            ],
        }


def check_T_properties(
    t: TransitionMatrix2 | np.ndarray, n1_sign: int, n2_sign: int, tol: float = 1e-10
) -> PropertyReport:
    """Flux-conservation identities, det = 1 and the unitarity rule.

    Tolerances are relative to the size of the terms in each identity, which for
    opposite flux signs grow like exp(2 pi |nu|).
    """
    e = t.entries if isinstance(t, TransitionMatrix2) else np.asarray(t, dtype=complex)
    t11, t12, t21, t22 = e[0, 0], e[0, 1], e[1, 0], e[1, 1]
    n1, n2 = float(n1_sign), float(n2_sign)
    flux1 = n1 - (abs(t11) ** 2 * n1 + abs(t21) ** 2 * n2)
    s1 = abs(n1) + abs(t11) ** 2 + abs(t21) ** 2
    flux2 = n2 - (abs(t12) ** 2 * n1 + abs(t22) ** 2 * n2)
    s2 = abs(n2) + abs(t12) ** 2 + abs(t22) ** 2
    cross = np.conj(t11) * t12 * n1 + np.conj(t21) * t22 * n2
    s3 = abs(t11 * t12) + abs(t21 * t22) + 1.0
    det = t11 * t22 - t12 * t21
    s4 = abs(t11 * t22) + abs(t12 * t21) + 1.0
    gamma = np.conj(t11) / t22 if t22 != 0 else complex("nan")
    unitary_dev = float(np.max(np.abs(e @ e.conj().T - np.eye(2))))
    same_sign = n1 * n2 > 0
    items = [
        CheckItem("flux_mode1", abs(flux1) / s1, tol, abs(flux1) <= tol * s1),
        CheckItem("flux_mode2", abs(flux2) / s2, tol, abs(flux2) <= tol * s2),
        CheckItem("flux_cross", abs(cross) / s3, tol, abs(cross) <= tol * s3),
        CheckItem("det_one", abs(det - 1.0) / s4, tol, abs(det - 1.0) <= tol * s4),
    ]
    if same_sign:
        items.append(CheckItem("unitary", unitary_dev, tol * 10, unitary_dev <= tol * 10))
    return PropertyReport(tuple(items), complex(gamma), unitary_dev <= tol * 10)


def adiabatic_limit_matrix(data, tau: float) -> np.ndarray:
    """Correspondence between perturbed and canonical modes at large |tau|.

    Each perturbed eigenvector (parallel-transported, flux-normalized) is expanded in
    the canonical-phase basis exp(+-i theta_a/2) phi_j(0) at -tau and at +tau. The
    matrix mapping left coefficients to right ones must tend to the large-|nu| limit
    of the canonical transition matrix when the flux signs agree.
    """
    from .degeneracy import perturbed_eigvecs_near

    if data.w != 1:
        raise SpecError("the correspondence is defined for equal flux signs (w = +1)")
    tau = abs(float(tau))
    basis_phase = np.array([cmath.exp(0.5j * data.theta_a), cmath.exp(-0.5j * data.theta_a)])
    n = np.array([data.n1, data.n2], dtype=float)

    def coefficients(t: float) -> np.ndarray:
        alpha = perturbed_eigvecs_near(data, t)
        cols = []
        for j in range(2):
            a = alpha[j]
            flux = float(np.sum(np.abs(a) ** 2 * n))
            cols.append(a / math.sqrt(abs(flux)) / basis_phase)
        return np.array(cols).T

    left = coefficients(-tau)
    right = coefficients(tau)
    return right @ np.linalg.inv(left)
