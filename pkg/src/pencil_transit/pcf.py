"""Parabolic cylinder functions D_nu(z) of imaginary order.

D_nu solves y'' + (nu + 1/2 - z^2/4) y = 0 and decays along the positive real axis.
Evaluation is restricted to what the matching analysis needs: the disk |z| <= Z_SWITCH
(Maclaurin series) and the two rays arg z = -pi/4 and arg z = 3pi/4 beyond it
(large-|z| expansions). Orders are purely imaginary, or purely imaginary minus one so
that D_{nu-1} is available for the recurrence.

The complex log-Gamma used for the initial values lives here as well.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

from .errors import NumericFailure, SpecError

Z_SWITCH = 6.0
NU_MAX = 100.0
RAY_ARGS = (-math.pi / 4.0, 3.0 * math.pi / 4.0)
_RAY_TOL = 1e-9
_EPS = 2.220446049250313e-16
_MAX_STEP = 0.75
# The large-|z| expansion is used only where its own error estimate is below this;
# matching the series accuracy keeps D_nu and D_{nu-1} recurrence-consistent.
ASYM_TOL = 1e-9
_R_INWARD_MAX = 400.0

# Lanczos approximation, g = 7, nine terms.
_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
_SQRT_PI = math.sqrt(math.pi)
_SQRT_2PI = math.sqrt(2.0 * math.pi)


def _is_nonpositive_integer(z: complex) -> bool:
    return z.imag == 0.0 and z.real <= 0.0 and z.real == math.floor(z.real)


def loggamma(z: complex) -> complex:
    """Logarithm of the Gamma function for complex z.

    For Re z >= 1/2 the result is the principal (continuous) branch. Left of that line
    the reflection formula is used and the imaginary part is only defined modulo 2*pi,
    which is irrelevant once exponentiated.
    """
    z = complex(z)
    if _is_nonpositive_integer(z):
        raise ValueError(f"Gamma has a pole at {z.real:g}")
    if z.real < 0.5:
        return math.log(math.pi) - cmath.log(cmath.sin(math.pi * z)) - loggamma(1.0 - z)
    z -= 1.0
    acc = complex(_LANCZOS_COEF[0])
    for k in range(1, len(_LANCZOS_COEF)):
        acc += _LANCZOS_COEF[k] / (z + k)
    t = z + _LANCZOS_G + 0.5
    return _HALF_LOG_2PI + (z + 0.5) * cmath.log(t) - t + cmath.log(acc)


def gamma(z: complex) -> complex:
    """Gamma function of a complex argument."""
    return cmath.exp(loggamma(z))


def rgamma(z: complex) -> complex:
    """Reciprocal Gamma function; zero at the poles of Gamma."""
    z = complex(z)
    if _is_nonpositive_integer(z):
        return 0j
    return cmath.exp(-loggamma(z))


@dataclass(frozen=True)
class PcfEvaluation:
    """Value and z-derivative of D_nu(z) with the regime used and a relative error estimate."""

    value: complex
    derivative: complex
    regime: str
    est_error: float


def _check_order(nu: complex) -> complex:
    nu = complex(nu)
    shift = round(-nu.real)
    if shift not in (0, 1) or abs(nu.real + shift) > 1e-12 * (1.0 + abs(nu)):
        raise SpecError(f"order {nu} must be purely imaginary (or purely imaginary minus one)")
    if abs(nu.imag) > NU_MAX:
        raise SpecError(f"|Im nu| = {abs(nu.imag):g} exceeds the supported range {NU_MAX:g}")
    return complex(-float(shift), nu.imag)


def ray_of(z: complex) -> float | None:
    """Return the supported ray angle containing z, or None when z is off both rays."""
    if z == 0:
        return None
    a = cmath.phase(z)
    for r in RAY_ARGS:
        if abs(a - r) <= _RAY_TOL:
            return r
    return None


def xi(nu: complex) -> complex:
    """Stokes multiplier xi_nu = -sqrt(2 pi) exp(-i pi nu) / Gamma(-nu)."""
    return -_SQRT_2PI * cmath.exp(-1j * math.pi * nu) * rgamma(-nu)


def initial_values(nu: complex) -> tuple[complex, complex]:
    """D_nu(0) and D_nu'(0)."""
    d0 = 2.0 ** (nu / 2.0) * _SQRT_PI * rgamma((1.0 - nu) / 2.0)
    d1 = -(2.0 ** ((nu + 1.0) / 2.0)) * _SQRT_PI * rgamma(-nu / 2.0)
    return d0, d1


def _taylor_step(a: complex, zc: complex, y: complex, dy: complex, h: complex):
    """Advance (y, y') from zc to zc + h with the local Taylor series of the equation.

    Terms u_k = c_k h^k obey
    (k+2)(k+1) u_{k+2} = h^2 [(zc^2/4 - a) u_k + (zc/2) h u_{k-1} + h^2 u_{k-2} / 4].
    """
    q = zc * zc / 4.0 - a
    h2 = h * h
    u_m2, u_m1, u0, u1 = 0j, 0j, complex(y), complex(dy) * h
    val = u0 + u1
    dval_h = u1  # h * y'(zc + h) accumulates k u_k
    scale = max(abs(u0), abs(u1), 1e-300)
    k = 0
    quiet = 0
    while True:
        u2 = h2 * (q * u0 + 0.5 * zc * h * u_m1 + 0.25 * h2 * u_m2) / ((k + 2) * (k + 1))
        u3 = h2 * (q * u1 + 0.5 * zc * h * u0 + 0.25 * h2 * u_m1) / ((k + 3) * (k + 2))
        val += u2 + u3
        dval_h += (k + 2) * u2 + (k + 3) * u3
        mag = abs(u2) + abs(u3)
        scale = max(scale, mag)
        u_m2, u_m1, u0, u1 = u0, u1, u2, u3
        k += 2
        if mag <= 1e-18 * scale:
            quiet += 1
            if quiet >= 2:
                break
        else:
            quiet = 0
        if k > 2000:
            raise NumericFailure("local Taylor series for D_nu did not converge")
    return val, dval_h / h


def _propagate(a: complex, z_from: complex, z_to: complex, y: complex, dy: complex):
    """Carry (y, y') along the segment z_from -> z_to.

    Returns the end state and the max-norm of the accumulated 2x2 transfer matrix,
    which bounds how much an input perturbation can grow on the way.
    """
    length = abs(z_to - z_from)
    if length == 0.0:
        return y, dy, 1.0, 0
    direction = (z_to - z_from) / length
    m = [[1.0 + 0j, 0j], [0j, 1.0 + 0j]]
    r = 0.0
    steps = 0
    while r < length:
        zc = z_from + r * direction
        step = min(_MAX_STEP, 2.0 / max(abs(zc), 1e-300), length - r)
        h = step * direction
        p00, p10 = _taylor_step(a, zc, 1.0, 0.0, h)
        p01, p11 = _taylor_step(a, zc, 0.0, 1.0, h)
        y, dy = p00 * y + p01 * dy, p10 * y + p11 * dy
        m = [
            [p00 * m[0][0] + p01 * m[1][0], p00 * m[0][1] + p01 * m[1][1]],
            [p10 * m[0][0] + p11 * m[1][0], p10 * m[0][1] + p11 * m[1][1]],
        ]
        r += step
        steps += 1
    growth = max(abs(m[0][0]) + abs(m[0][1]), abs(m[1][0]) + abs(m[1][1]))
    return y, dy, growth, steps


def _inward_start(nu: complex, z: complex, ray: float) -> tuple[complex, PcfEvaluation] | None:
    """Smallest radius >= |z| on the ray where the large-|z| expansion is at round-off."""
    direction = cmath.exp(1j * ray)
    radius = max(abs(z), Z_SWITCH)
    while radius <= _R_INWARD_MAX:
        start = radius * direction
        asym = _asymptotic_full(nu, start, ray)
        if asym.est_error <= 1e-13:
            return start, asym
        radius *= 1.15
    return None


def _power_series(nu: complex, z: complex) -> PcfEvaluation:
    """Power-series evaluation by local Taylor continuation.

    The outward route starts from the Maclaurin data at 0. On the rays there is also an
    inward route starting where the large-|z| expansion is exact to round-off; it is
    the stable direction when D_nu is recessive along the ray. The route with the
    smaller propagated-error estimate is returned.
    """
    a = nu + 0.5
    d0, d1 = initial_values(nu)
    d0, d1 = complex(d0), complex(d1)
    if z == 0:
        return PcfEvaluation(d0, d1, "series", 1e-14)
    y, dy, growth, steps = _propagate(a, 0j, z, d0, d1)
    in_norm = abs(d0) + abs(d1)
    est = (1e-14 + 8.0 * _EPS * steps) * growth * in_norm / max(abs(y), 1e-300)
    best = PcfEvaluation(y, dy, "series", est)
    ray = ray_of(z)
    if ray is not None and est > 1e-12:
        found = _inward_start(nu, z, ray)
        if found is not None:
            start, asym = found
            yb, dyb, gb, nb = _propagate(a, start, z, asym.value, asym.derivative)
            in_b = abs(asym.value) + abs(asym.derivative)
            est_b = (asym.est_error + 8.0 * _EPS * nb) * gb * in_b / max(abs(yb), 1e-300)
            if est_b < est:
                best = PcfEvaluation(yb, dyb, "series", est_b)
    return best


def _asymptotic_full(nu: complex, z: complex, ray: float) -> PcfEvaluation:
    """Large-|z| expansion summed to its smallest term."""
    z2 = z * z
    inv2z2 = 1.0 / (2.0 * z2)
    pre = cmath.exp(nu * cmath.log(z) - z2 / 4.0)

    def summed(order_shift: complex, sign: float, dpow: complex, dz: float):
        # sum_s coef_s (2 z^2)^{-s} and the matching derivative weights
        term = 1.0 + 0j
        total = term
        dtotal = term * (dpow / z + dz * z / 2.0)
        prev = abs(term)
        s = 0
        last = abs(term)
        while True:
            ratio = sign * (order_shift + 2 * s) * (order_shift + 2 * s + 1) / (s + 1) * inv2z2
            nxt = term * ratio
            if abs(nxt) >= prev and s > 0:
                last = abs(nxt)
                break
            s += 1
            term = nxt
            total += term
            dtotal += term * ((dpow - 2 * s) / z + dz * z / 2.0)
            prev = abs(term)
            last = prev
            if prev <= 1e-17 * abs(total) or s > 200:
                break
        return total, dtotal, last

    s1, ds1, r1 = summed(-nu, -1.0, nu, -1.0)
    value = pre * s1
    deriv = pre * ds1
    err = abs(pre) * r1
    if abs(ray - RAY_ARGS[1]) <= _RAY_TOL:
        c2 = xi(nu) * cmath.exp(2j * math.pi * nu)
        pre2 = c2 * cmath.exp((-nu - 1.0) * cmath.log(z) + z2 / 4.0)
        s2, ds2, r2 = summed(nu + 1.0, 1.0, -nu - 1.0, 1.0)
        value += pre2 * s2
        deriv += pre2 * ds2
        err += abs(pre2) * r2
    est = err / max(abs(value), 1e-300) + 64.0 * _EPS
    return PcfEvaluation(value, deriv, "asymptotic", est)


def pcf_d(nu: complex, z: complex, regime: str | None = None) -> PcfEvaluation:
    """Evaluate D_nu(z) and dD_nu/dz.

    ``regime`` forces "series" or "asymptotic". By default the power series is used for
    |z| <= Z_SWITCH; beyond it z must lie on a ray and the large-|z| expansion is used
    whenever its estimated error is below ASYM_TOL, otherwise the power series is
    continued along the ray.
    """
    nu = _check_order(nu)
    z = complex(z)
    if regime not in (None, "series", "asymptotic"):
        raise SpecError(f"unknown regime {regime!r}")
    inside = abs(z) <= Z_SWITCH * (1.0 + 1e-12)
    ray = ray_of(z)
    if not inside and ray is None:
        raise SpecError(f"z={z} is off the supported rays arg z in {{-pi/4, 3pi/4}}")
    if regime == "series" or (regime is None and inside):
        return _power_series(nu, z)
    if ray is None:
        raise SpecError(f"asymptotic regime needs z on a supported ray, got z={z}")
    asym = _asymptotic_full(nu, z, ray)
    if regime == "asymptotic" or asym.est_error <= ASYM_TOL:
        return asym
    return _power_series(nu, z)


def pcf_asymptotic(nu: complex, z: complex, sector: str) -> complex:
    """Leading large-|z| form of D_nu(z) in the requested sector.

    principal (|arg z| < 3pi/4): z^nu exp(-z^2/4).
    extended (pi/4 < arg z < 5pi/4): adds xi_nu exp(2 i pi nu) z^(-nu-1) exp(z^2/4).
    """
    nu = _check_order(nu)
    z = complex(z)
    if abs(z) < Z_SWITCH * (1.0 - 1e-12):
        raise SpecError(f"|z|={abs(z):g} is below the switch radius {Z_SWITCH}")
    a = cmath.phase(z)
    lead = cmath.exp(nu * cmath.log(z) - z * z / 4.0)
    if sector == "principal":
        if not -3 * math.pi / 4 < a < 3 * math.pi / 4:
            raise SpecError(f"arg z = {a:.6g} outside the principal sector")
        return lead
    if sector == "extended":
        if not (a > math.pi / 4 or a < -3 * math.pi / 4):
            raise SpecError(f"arg z = {a:.6g} outside the extended sector")
        return lead + xi(nu) * cmath.exp(2j * math.pi * nu) * cmath.exp(
            (-nu - 1.0) * cmath.log(z) + z * z / 4.0
        )
    raise SpecError(f"unknown sector {sector!r}")


@dataclass(frozen=True)
class LimitForms:
    """Leading large-tau forms of D_nu(t) and D_{nu-1}(t) at t = side*sigma*(tau+b).

    ``d_nu_minus_1`` is None where that function is only O(1/tau) and has no
    retained leading term.
    """

    arg: float
    d_nu: complex
    d_nu_minus_1: complex | None
    remainder: float


def pcf_limit_forms(nu: complex, tau: float, sigma: complex, b: float, side: int) -> LimitForms:
    """Leading forms used in matching, written with |sigma tau| as the modulus."""
    nu = _check_order(nu)
    if abs(tau) < 10.0:
        raise SpecError("limit forms need |tau| >= 10")
    if side not in (1, -1):
        raise SpecError("side must be +1 or -1")
    t = side * sigma * (tau + b)
    ray = ray_of(t)
    if ray is None:
        raise SpecError(f"t = {t} is off the matching rays")
    st = abs(sigma * tau)
    gauss = cmath.exp(-sigma * sigma * (tau + b) ** 2 / 4.0)
    d_nu = cmath.exp(1j * nu * ray) * st**nu * gauss
    if abs(ray - RAY_ARGS[0]) <= _RAY_TOL:
        d_nm1 = None
        second = 0.0
    else:
        d_nm1 = cmath.exp(-1j * nu * ray) * xi(nu - 1.0) * cmath.exp(2j * math.pi * nu) * st ** (-nu) / gauss
        second = abs(xi(nu) * cmath.exp(2j * math.pi * nu)) / abs(t)
    # first omitted algebraic term, the dropped exponential, and the |tau| vs |tau+b| swap
    rem = abs(nu * (nu - 1.0)) / (2.0 * abs(t) ** 2) + second + abs(nu) * abs(b) / abs(tau)
    return LimitForms(ray, d_nu, d_nm1, rem)
