"""Adiabatic (outer) modes: phase integrals, Berry term, canonical and general modes."""

from __future__ import annotations

import cmath
import heapq
import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .degeneracy import AwayCorrection, DegeneracyData, perturbed_away
from .errors import NumericFailure, SpecError
from .pencil import EigenBranch, PencilProblem, phi_derivative

DEFAULT_G = 0.2
GL_ORDER = 10


def x_star(hbar: float, g: float = DEFAULT_G) -> float:
    """Switch radius between the inner and outer forms of the phase integrand."""
    if not 0 < g < 0.5:
        raise SpecError("g must lie in (0, 1/2)")
    return hbar ** (0.5 - g)


# ---------------------------------------------------------------- quadrature


@lru_cache(maxsize=32)
def _nodes(n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(n)


def _gl_pair(f: Callable[[float], complex], a: float, b: float, n: int) -> tuple[complex, float]:
    """Rule value and the integral of |f| by the same rule (a rounding-noise yardstick)."""
    x, w = _nodes(n)
    half, mid = 0.5 * (b - a), 0.5 * (a + b)
    vals = [f(mid + half * xi) for xi in x]
    return half * sum(wi * v for wi, v in zip(w, vals)), half * sum(wi * abs(v) for wi, v in zip(w, vals))


def _gl(f: Callable[[float], complex], a: float, b: float, n: int) -> complex:
    return _gl_pair(f, a, b, n)[0]


def composite_gl(f: Callable[[float], complex], a: float, b: float, panels: int, n: int = 4) -> complex:
    """Fixed composite Gauss-Legendre rule with equal panels."""
    edges = np.linspace(a, b, panels + 1)
    return sum(_gl(f, float(edges[i]), float(edges[i + 1]), n) for i in range(panels))


@dataclass(frozen=True)
class Quadrature:
    value: complex
    error: float
    panels: int


def adaptive_gl(
    f: Callable[[float], complex],
    a: float,
    b: float,
    breaks: tuple[float, ...] = (),
    abs_tol: float = 1e-12,
    rel_tol: float = 1e-12,
    n: int = GL_ORDER,
    max_panels: int = 4000,
) -> Quadrature:
    """Globally adaptive Gauss-Legendre quadrature.

    Each panel carries the difference between its one-panel and two-half-panel values as
    an error estimate; the worst panel is split until the summed estimate meets the
    target. Points in ``breaks`` inside (a, b) are always panel boundaries.
    """
    if a == b:
        return Quadrature(0j, 0.0, 0)
    sign = 1.0
    if b < a:
        a, b, sign = b, a, -1.0
    pts = [a] + sorted(x for x in breaks if a < x < b) + [b]

    def panel(lo: float, hi: float):
        mid = 0.5 * (lo + hi)
        whole = _gl(f, lo, hi, n)
        (left, ml), (right, mr) = _gl_pair(f, lo, mid, n), _gl_pair(f, mid, hi, n)
        return abs(left + right - whole), lo, hi, left + right, ml + mr

    heap = [panel(pts[i], pts[i + 1]) for i in range(len(pts) - 1)]
    scale = sum(p[4] for p in heap)
    target = max(abs_tol, rel_tol * scale)
    heap = [(-p[0],) + p[1:] for p in heap]
    heapq.heapify(heap)
    error = sum(-p[0] for p in heap)
    while error > target and len(heap) < max_panels:
        neg, lo, hi, _, _ = heapq.heappop(heap)
        error += neg
        mid = 0.5 * (lo + hi)
        for part in (panel(lo, mid), panel(mid, hi)):
            heapq.heappush(heap, (-part[0],) + part[1:])
            error += part[0]
    if error > target:
        warnings.warn(f"quadrature on [{a:.6g}, {b:.6g}] stopped at estimated error {error:.3g}")
    value = sum(p[3] for p in heap)
    return Quadrature(sign * value, float(error), len(heap))


# ---------------------------------------------------------------- integrand pieces


def _inner_root(data: DegeneracyData, u: float) -> complex:
    c = data.p**2 * data.w
    arg = (data.Q * u) ** 2 + c
    return cmath.sqrt(arg) if arg < 0 else complex(math.sqrt(arg))


def _inner_antiderivative(data: DegeneracyData, u: float) -> complex:
    """Antiderivative of sgn(u) sqrt(Q^2 u^2 + p^2 w) that is continuous at u = 0."""
    v = abs(u)
    q = data.Q
    c = data.p**2 * data.w
    r = _inner_root(data, v)
    out = 0.5 * v * r
    if c != 0:
        out += c / (2.0 * q) * cmath.log(q * v + r)
    return out


def berry_phase_integrand(branch: EigenBranch, x: float, fd_step: float | None = None) -> float:
    """Im (phi_j, Gamma phi_j') / N_j in the branch's own gauge."""
    problem = branch.problem
    h = fd_step if fd_step is not None else 1e-5 * problem.width
    left, right = branch.phi(x - 2 * h), branch.phi(x + 2 * h)
    if np.vdot(left, right).real <= 0:
        raise NumericFailure(f"eigenvector gauge jumps near x={x:g}")
    v = branch.phi(x)
    dv = phi_derivative(branch, x, h)
    n = np.vdot(v, problem.Gamma @ v).real
    return float((np.vdot(v, problem.Gamma @ dv) / n).imag)


class PhasePieces:
    """Integrand data of the adiabatic phase for one crossing and one hbar."""

    def __init__(
        self,
        data: DegeneracyData,
        branches: tuple[EigenBranch, EigenBranch],
        problem: PencilProblem,
        hbar: float,
        g: float = DEFAULT_G,
        fd_step: float | None = None,
        curvature: bool = True,
    ):
        if not hbar > 0:
            raise SpecError("hbar must be positive")
        self.data = data
        self.branches = branches
        self.problem = problem
        self.hbar = float(hbar)
        self.sqrt_hbar = math.sqrt(hbar)
        self.g = g
        self.x_star = x_star(hbar, g)
        self.fd_step = fd_step
        self.curvature = curvature
        if self.x_star < 2.0 * self.sqrt_hbar:
            raise SpecError(
                f"hbar={hbar:g} is too large: the switch radius {self.x_star:.3g} is inside 2 sqrt(hbar)"
            )
        self._away = lru_cache(maxsize=4096)(self._away_raw)

    def _away_raw(self, x: float) -> AwayCorrection:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return perturbed_away(self.branches, self.problem, x, self.sqrt_hbar, self.data.x0)

    def is_inner(self, x: float) -> bool:
        return abs(x - self.data.x0) <= self.x_star

    def beta_pr_outer(self, j: int, x: float) -> float:
        return self._away(float(x)).beta[j - 1]

    def curvature_correction(self, j: int, x: float) -> float:
        """Smooth remainder the resonance form drops: the nonlinear part of beta_j and of
        sqrt(hbar) B_jj/N_j about x0. Zero for linear branches with constant coupling.

        Without it the inner form misses a phase of order (x - x0)^3 / hbar, which is not
        small at the seam when g > 1/6.
        """
        if not self.curvature:
            return 0.0
        d = self.data
        sign = (-1) ** j
        dx = x - d.x0
        linear = d.beta0 + (d.beta_av_c1 + sign * d.Q) * dx
        branch = self.branches[j - 1]
        v = branch.phi(x)
        bjj = (np.vdot(v, np.asarray(self.problem.B(x), dtype=complex) @ v) / branch.N(x)).real
        bjj0 = d.beta_av_c0 + sign * d.Q * d.b
        return branch.beta(x) - linear + self.sqrt_hbar * (bjj - bjj0)

    def beta_pr_inner(self, j: int, x: float) -> complex:
        d = self.data
        tau = (x - d.x0) / self.sqrt_hbar
        u = tau + d.b
        sgn = float(u > 0) - float(u < 0)
        lead = d.beta0 + self.sqrt_hbar * (d.beta_av(tau) + (-1) ** j * sgn * _inner_root(d, u))
        return lead + self.curvature_correction(j, x)

    def beta_pr(self, j: int, x: float) -> complex:
        if self.is_inner(x):
            return self.beta_pr_inner(j, x)
        return complex(self.beta_pr_outer(j, x))

    def berry(self, j: int, x: float) -> float:
        return berry_phase_integrand(self.branches[j - 1], x, self.fd_step)

    def seam_jump(self, j: int, side: int) -> complex:
        xs = self.data.x0 + side * self.x_star
        return self.beta_pr_outer(j, xs) - self.beta_pr_inner(j, xs)

    def vartheta(self, j: int, side: int) -> float:
        d = self.data
        t = d.tau_ref(side)
        u = t + d.b
        integral = d.beta0 / self.sqrt_hbar * u + d.beta_av_c0 * u + 0.5 * d.beta_av_c1 * (t * t - d.b * d.b)
        return (-1) ** (j + 1) * d.theta_a / 2.0 + integral

    def reference_point(self, side: int) -> float:
        """Real part of the perturbed degeneracy point on the given side."""
        return self.data.x0 + self.sqrt_hbar * self.data.tau_ref(side)

    def _inner_integral(self, j: int, xa: float, xb: float) -> complex:
        d = self.data
        s = self.sqrt_hbar
        ta, tb = (xa - d.x0) / s, (xb - d.x0) / s
        av = d.beta0 * (xb - xa) + self.hbar * (d.beta_av_c0 * (tb - ta) + 0.5 * d.beta_av_c1 * (tb * tb - ta * ta))
        root = _inner_antiderivative(d, tb + d.b) - _inner_antiderivative(d, ta + d.b)
        total = av + (-1) ** j * self.hbar * root
        if self.curvature:
            q = adaptive_gl(
                lambda x: self.curvature_correction(j, x), xa, xb,
                abs_tol=max(1e-10 * self.hbar, 1e-15), rel_tol=1e-12,
            )
            total += q.value
        return total

    def phase_integral(self, j: int, xa: float, xb: float, tol: float | None = None) -> complex:
        """Integral of beta_pr - hbar Im S_jj from xa to xb.

        The endpoints may not straddle tau = -b, where the resonance integrand changes sign.
        """
        d = self.data
        center = d.x0 - d.b * self.sqrt_hbar
        if (xa - center) * (xb - center) < 0:
            raise SpecError("phase integral endpoints must lie on one side of the crossing")
        if xa == xb:
            return 0j
        lo, hi = min(xa, xb), max(xa, xb)
        orient = 1.0 if xb >= xa else -1.0
        tol = tol if tol is not None else max(1e-10 * self.hbar, 1e-15)
        left_seam, right_seam = d.x0 - self.x_star, d.x0 + self.x_star
        total = 0j
        a_in, b_in = max(lo, left_seam), min(hi, right_seam)
        if b_in > a_in:
            # the part inside the seam has a closed form
            total += self._inner_integral(j, a_in, b_in)
        for out_lo, out_hi in ((lo, min(hi, left_seam)), (max(lo, right_seam), hi)):
            if out_hi > out_lo:
                q = adaptive_gl(lambda x: self.beta_pr_outer(j, x) - d.beta0, out_lo, out_hi, abs_tol=tol, rel_tol=1e-13)
                total += q.value + d.beta0 * (out_hi - out_lo)
        berry = adaptive_gl(
            lambda x: self.berry(j, x), lo, hi, breaks=(left_seam, right_seam), abs_tol=1e-10, rel_tol=1e-10
        )
        total -= self.hbar * berry.value
        return orient * total


def phase_pieces(data, branches, problem, hbar: float, g: float = DEFAULT_G) -> PhasePieces:
    return PhasePieces(data, branches, problem, hbar, g)


def beta_pr(
    data, branches, problem, j: int, x: float, hbar: float, x_star_value: float | None = None,
    curvature: bool = True,
) -> complex:
    """Perturbed eigenvalue approximation: outer form beyond x*, resonance form inside."""
    pieces = PhasePieces(data, branches, problem, hbar, curvature=curvature)
    if x_star_value is not None:
        pieces.x_star = float(x_star_value)
    return pieces.beta_pr(j, x)


# ---------------------------------------------------------------- modes


def _check_side(data: DegeneracyData, x: float, side: int, hbar: float) -> None:
    if side not in (1, -1):
        raise SpecError("side must be +1 or -1")
    if abs(x - data.x0) < 2.0 * math.sqrt(hbar):
        raise SpecError(f"x={x:g} is within 2 sqrt(hbar) of the crossing")
    if (x > data.x0) != (side > 0):
        raise SpecError(f"x={x:g} is not on side {side:+d} of x0={data.x0:g}")


def canonical_mode_from(pieces: PhasePieces, j: int, side: int, x: float) -> np.ndarray:
    _check_side(pieces.data, x, side, pieces.hbar)
    branch = pieces.branches[j - 1]
    v = branch.phi(x)
    n = abs(np.vdot(v, pieces.problem.Gamma @ v).real)
    integral = pieces.phase_integral(j, pieces.reference_point(side), x)
    return cmath.exp(1j * pieces.vartheta(j, side) + 1j * integral / pieces.hbar) * v / math.sqrt(n)


def canonical_mode_value(data, branches, problem, j: int, side: int, x: float, hbar: float, g: float = DEFAULT_G) -> np.ndarray:
    """Canonical adiabatic mode j on the given side, evaluated at x."""
    return canonical_mode_from(PhasePieces(data, branches, problem, hbar, g), j, side, x)


@dataclass(frozen=True)
class ModeSpec:
    j: int
    side: int
    canonical: bool
    x_ref: float | None
    hbar: float

    def __post_init__(self):
        if self.j not in (1, 2):
            raise SpecError("j must be 1 or 2")
        if self.side not in (1, -1):
            raise SpecError("side must be +1 or -1")
        if not self.canonical and self.x_ref is None:
            raise SpecError("general modes need a reference point")

    def validate(self, data: DegeneracyData) -> None:
        if self.canonical:
            return
        _check_side(data, self.x_ref, self.side, self.hbar)


def general_mode_from(pieces: PhasePieces, spec: ModeSpec, x: float) -> np.ndarray:
    spec.validate(pieces.data)
    _check_side(pieces.data, x, spec.side, pieces.hbar)
    branch = pieces.branches[spec.j - 1]
    gamma = pieces.problem.Gamma
    v_ref = branch.phi(spec.x_ref)
    v = branch.phi(x)
    n_ref = abs(np.vdot(v_ref, gamma @ v_ref).real)
    n = abs(np.vdot(v, gamma @ v).real)
    integral = pieces.phase_integral(spec.j, spec.x_ref, x)
    return math.sqrt(n_ref / n) * cmath.exp(1j * integral / pieces.hbar) * v


def general_mode_value(spec: ModeSpec, data, branches, problem, x: float, g: float = DEFAULT_G) -> np.ndarray:
    """Adiabatic mode with lower phase limit x_ref and the branch eigenvector as supplied."""
    if spec.canonical:
        return canonical_mode_value(data, branches, problem, spec.j, spec.side, x, spec.hbar, g)
    return general_mode_from(PhasePieces(data, branches, problem, spec.hbar, g), spec, x)


def norm_factor_from(pieces: PhasePieces, spec: ModeSpec, verify_points: int = 0, tol: float = 1e-8) -> complex:
    if spec.canonical:
        raise SpecError("canonical modes have unit normalization factor by construction")
    spec.validate(pieces.data)
    branch = pieces.branches[spec.j - 1]
    gamma = pieces.problem.Gamma
    v_ref = branch.phi(spec.x_ref)
    n_ref = abs(np.vdot(v_ref, gamma @ v_ref).real)
    integral = pieces.phase_integral(spec.j, spec.x_ref, pieces.reference_point(spec.side))
    n = math.sqrt(n_ref) * cmath.exp(-1j * pieces.vartheta(spec.j, spec.side) + 1j * integral / pieces.hbar)
    if verify_points:
        lo, hi = pieces.problem.domain
        far = hi if spec.side > 0 else lo
        near = pieces.data.x0 + spec.side * 2.5 * pieces.sqrt_hbar
        inset = 0.02 * pieces.problem.width
        far -= spec.side * inset
        for x in np.linspace(near, far, verify_points):
            x = float(x)
            can = canonical_mode_from(pieces, spec.j, spec.side, x)
            gen = general_mode_from(pieces, spec, x)
            k = int(np.argmax(np.abs(can)))
            ratio = gen[k] / can[k]
            if abs(ratio - n) > tol * abs(n) or np.linalg.norm(gen - n * can) > tol * abs(n) * np.linalg.norm(can):
                raise NumericFailure(
                    f"general/canonical ratio {ratio} at x={x:g} differs from n={n}: quadrature or gauge problem"
                )
    return complex(n)


def mode_norm_factor(spec: ModeSpec, data, branches, problem, verify_points: int = 5, g: float = DEFAULT_G) -> complex:
    """Constant n_j with general mode = n_j * canonical mode, checked at ``verify_points`` points."""
    return norm_factor_from(PhasePieces(data, branches, problem, spec.hbar, g), spec, verify_points)


def first_order_amplitude(pieces: PhasePieces, j: int, x: float) -> np.ndarray:
    """sqrt(hbar) times the first-order eigenvector correction (diagnostic only)."""
    corr = pieces._away(float(x))
    other = pieces.branches[2 - j].phi(x)
    return pieces.sqrt_hbar * (corr.partner_coeff[j - 1] * other + corr.perp[j - 1])
