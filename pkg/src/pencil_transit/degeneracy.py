"""Crossing location and the scalar parameters that control the transition."""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import AssumptionViolation, NumericFailure, SpecError
from .pencil import EigenBranch, PencilProblem, matrix_elements, solve_pencil_at


@dataclass(frozen=True)
class DegeneracyData:
    """Parameters of a simple crossing.

    ``tau_kappa_plus/minus`` are the perturbed degeneracy points in the stretched
    variable tau = (x - x0)/sqrt(hbar); ``kappa(hbar)`` maps them back to x.
    """

    x0: float
    Q: float
    b: float
    p: float
    nu: complex
    sqrt_nu: complex
    sigma: complex
    theta_a: float
    w: int
    beta0: float
    beta_av_c0: float
    beta_av_c1: float
    b12: complex
    n1: float
    n2: float
    phi1_0: np.ndarray
    phi2_0: np.ndarray
    kp12: complex
    trivial: bool

    @property
    def tau_kappa_plus(self) -> complex:
        if self.w == 1:
            return complex(-self.b, self.p / self.Q)
        return complex(-self.b + self.p / self.Q, 0.0)

    @property
    def tau_kappa_minus(self) -> complex:
        if self.w == 1:
            return complex(-self.b, -self.p / self.Q)
        return complex(-self.b - self.p / self.Q, 0.0)

    def tau_ref(self, side: int) -> float:
        """Real part of the degeneracy point used as the lower phase limit on each side."""
        return (self.tau_kappa_plus if side > 0 else self.tau_kappa_minus).real

    def kappa(self, hbar: float) -> tuple[complex, complex]:
        s = math.sqrt(hbar)
        return self.x0 + s * self.tau_kappa_plus, self.x0 + s * self.tau_kappa_minus

    def beta_av(self, tau: float) -> float:
        return self.beta_av_c0 + self.beta_av_c1 * tau

    @property
    def scenario(self) -> str:
        if self.trivial:
            return "trivial transition"
        return "avoided crossing" if self.w == 1 else "two real turning points"


def _difference(branches, x: float) -> float:
    return branches[1].beta(x) - branches[0].beta(x)


def locate_degeneracy(
    branches: tuple[EigenBranch, EigenBranch], bracket: tuple[float, float] | None = None
) -> float:
    """Root of beta_2 - beta_1: bracketed bisection, then one Newton step with the slope identity."""
    problem = branches[0].problem
    lo, hi = bracket if bracket is not None else problem.domain
    lo, hi = float(lo), float(hi)
    xs = np.linspace(lo, hi, 41)
    d = np.array([_difference(branches, float(x)) for x in xs])
    scale = max(abs(branches[0].beta(float(x))) + abs(branches[1].beta(float(x))) for x in xs[::10]) + 1e-300
    tiny = np.abs(d) <= 1e-10 * scale
    signs = np.where(tiny, 0.0, np.sign(d))
    nonzero = signs[signs != 0]
    flips = int(np.sum(nonzero[1:] != nonzero[:-1]))
    if flips == 0:
        raise AssumptionViolation("beta_2 - beta_1 does not change sign on the bracket")
    if flips > 1:
        raise AssumptionViolation(f"beta_2 - beta_1 changes sign {flips} times on the bracket")
    width = hi - lo
    if np.any(tiny):
        k = int(np.argmin(np.abs(d)))
        a = c = float(xs[k])
    else:
        i = int(np.nonzero(signs[1:] != signs[:-1])[0][0])
        a, c = float(xs[i]), float(xs[i + 1])
        da = d[i]
        while c - a > 1e-12 * width:
            m = 0.5 * (a + c)
            dm = _difference(branches, m)
            if dm == 0:
                a = c = m
                break
            if (dm < 0) == (da < 0):
                a, da = m, dm
            else:
                c = m
    x0 = 0.5 * (a + c)
    kp = problem.Kp(x0)
    slope = 0.0
    for j, br in enumerate(branches):
        v = br.phi(x0)
        n = np.vdot(v, problem.Gamma @ v).real
        slope += (-1) ** (j + 1) * (np.vdot(v, kp @ v) / n).real
    if abs(slope) < 1e-8:
        raise AssumptionViolation(f"crossing slope {slope:.3g} is too small: crossing is not simple")
    if slope < 0:
        raise NumericFailure("beta_2 - beta_1 decreases through the crossing: numbering is inconsistent")
    step = _difference(branches, x0) / slope
    if abs(step) <= (c - a) + 1e-12 * width:
        x0 -= step
    return x0


def extract_parameters(
    branches: tuple[EigenBranch, EigenBranch],
    problem: PencilProblem,
    x0: float,
    fd_step: float | None = None,
) -> DegeneracyData:
    me = matrix_elements(branches, problem, x0, fd_step)
    n1, n2 = float(me.N[0]), float(me.N[1])
    k11, k22 = me.Kp[0, 0].real, me.Kp[1, 1].real
    b11, b22 = me.B[0, 0].real, me.B[1, 1].real
    b12 = complex(me.B[0, 1])
    Q = 0.5 * (k22 / n2 - k11 / n1)
    if Q <= 0:
        raise NumericFailure(f"Q = {Q:.3g} <= 0 after numbering")
    b = (b22 / n2 - b11 / n1) / (2.0 * Q)
    p2 = abs(b12) ** 2 / abs(n1 * n2)
    p = math.sqrt(p2)
    w = 1 if n1 * n2 > 0 else -1
    trivial = p == 0.0 or p2 <= 1e-28 * max(1.0, Q * Q)
    nu = complex(0.0, p2 * w / (2.0 * Q)) if not trivial else 0j
    sqrt_nu = cmath.exp(1j * math.pi * w / 4.0) * math.sqrt(abs(nu))
    sigma = cmath.exp(-1j * math.pi / 4.0) * math.sqrt(2.0 * Q)
    theta_a = 0.0 if trivial else cmath.phase(b12 / n1) + 0.25 * math.pi * (1 - w)
    beta0 = 0.5 * (me.beta[0] + me.beta[1])
    c0 = 0.5 * (b11 / n1 + b22 / n2)
    c1 = 0.5 * (k11 / n1 + k22 / n2)
    phi1 = branches[0].phi(x0)
    phi2 = branches[1].phi(x0)
    for arr in (phi1, phi2):
        arr.setflags(write=False)
    return DegeneracyData(
        x0=float(x0), Q=Q, b=b, p=p, nu=nu, sqrt_nu=sqrt_nu, sigma=sigma, theta_a=theta_a, w=w,
        beta0=float(beta0), beta_av_c0=c0, beta_av_c1=c1, b12=b12, n1=n1, n2=n2,
        phi1_0=phi1, phi2_0=phi2, kp12=complex(me.Kp[0, 1]), trivial=trivial,
    )


def analyze_crossing(problem: PencilProblem, branches=None, grid=None) -> tuple[tuple[EigenBranch, EigenBranch], DegeneracyData]:
    """Branches, crossing point and parameters in one call."""
    from .pencil import smooth_branches

    if branches is None:
        branches = smooth_branches(problem, grid)
    x0 = locate_degeneracy(branches)
    return branches, extract_parameters(branches, problem, x0)


def phase_condition_factor(data: DegeneracyData) -> complex:
    """Constant factor for phi_2 that makes theta_a vanish."""
    return cmath.exp(-1j * data.theta_a)


def _root(data: DegeneracyData, tau: float) -> complex:
    arg = (tau + data.b) ** 2 * data.Q**2 + data.p**2 * data.w
    return cmath.sqrt(arg) if arg < 0 else complex(math.sqrt(arg))


def perturbed_eigvals_near(data: DegeneracyData, tau: float) -> tuple[complex, complex]:
    """Leading corrections of the perturbed eigenvalues near the crossing (imaginary in a barrier)."""
    r = _root(data, tau)
    av = data.beta_av(tau)
    return av - r, av + r


def _near_matrix(data: DegeneracyData, tau: float) -> np.ndarray:
    av = data.beta_av(tau)
    qt = data.Q * (tau + data.b)
    return np.array(
        [[av - qt, data.b12 / data.n1], [np.conj(data.b12) / data.n2, av + qt]], dtype=complex
    )


def perturbed_eigvecs_near(data: DegeneracyData, tau: float) -> np.ndarray:
    """Coefficients alpha[j] = (alpha_j1, alpha_j2) of the perturbed eigenvectors in (phi_1(0), phi_2(0)).

    Primary form alpha_j1 = B12/N1, alpha_j2 = beta_j - beta_av + Q(tau + b); when it
    vanishes (no coupling) the companion form with alpha_j2 = B21/N2 is used.
    """
    betas = perturbed_eigvals_near(data, tau)
    qt = data.Q * (tau + data.b)
    av = data.beta_av(tau)
    m = _near_matrix(data, tau)
    out = np.zeros((2, 2), dtype=complex)
    scale = abs(data.b12) + abs(qt) + abs(data.p) + 1e-300
    r = _root(data, tau)
    pw = data.p**2 * data.w
    for j, beta in enumerate(betas):
        sr = -r if j == 0 else r
        # s r + q t and s r - q t, each from whichever form avoids cancellation
        plus, minus = sr + qt, sr - qt
        if abs(plus) < abs(minus):
            plus = pw / minus
        elif abs(minus) < abs(plus):
            minus = pw / plus
        first = np.array([data.b12 / data.n1, plus])
        second = np.array([minus, np.conj(data.b12) / data.n2])
        vec = first if np.linalg.norm(first) > 1e-12 * scale else second
        if np.linalg.norm(vec) <= 1e-12 * scale:
            vec = np.array([1.0, 0.0]) if j == 0 else np.array([0.0, 1.0])
            if data.trivial and qt < 0:
                # uncoupled: the lower eigenvalue belongs to phi_2 left of the crossing
                vec = vec[::-1]
        res = np.linalg.norm(m @ vec - beta * vec)
        if res > 1e-10 * (np.linalg.norm(m) + abs(beta)) * np.linalg.norm(vec):
            raise NumericFailure(f"perturbed eigenvector residual {res:.3g} at tau={tau:g}")
        out[j] = vec
    return out


@dataclass(frozen=True)
class AwayCorrection:
    beta: tuple[float, float]
    partner_coeff: tuple[complex, complex]  # coefficient of the partner mode in each first-order vector
    perp: tuple[np.ndarray, np.ndarray]  # first-order component outside the pair


def complement_correction(problem: PencilProblem, branches, x: float, j: int) -> np.ndarray:
    """First-order eigenvector component outside the crossing pair, by a constrained solve.

    Solves (K - beta_j Gamma) u = g_c with (phi_k, Gamma u) = 0 for both pair members,
    where g_c is -B phi_j stripped of its pair components. ``j`` is the branch index (1 or 2).
    """
    if j not in (1, 2):
        raise SpecError("branch index must be 1 or 2")
    j -= 1
    gamma = problem.Gamma
    phis = [br.phi(x) for br in branches]
    ns = [np.vdot(v, gamma @ v).real for v in phis]
    beta_j = branches[j].beta(x)
    g = -np.asarray(problem.B(x), dtype=complex) @ phis[j]
    for v, n in zip(phis, ns):
        g = g - (gamma @ v) * (np.vdot(v, g) / n)
    if problem.dim == 2:
        return np.zeros(2, dtype=complex)
    m = np.asarray(problem.K(x), dtype=complex) - beta_j * gamma
    rows = np.vstack([m, (gamma @ phis[0]).conj()[None, :], (gamma @ phis[1]).conj()[None, :]])
    rhs = np.concatenate([g, [0.0, 0.0]])
    u = np.linalg.lstsq(rows, rhs, rcond=None)[0]
    return u


def complement_correction_sum(problem: PencilProblem, branches, x: float, j: int) -> np.ndarray:
    """Same component as an explicit sum over the other eigenpairs (discrete-spectrum form)."""
    if j not in (1, 2):
        raise SpecError("branch index must be 1 or 2")
    j -= 1
    gamma = problem.Gamma
    phi_j = branches[j].phi(x)
    beta_j = branches[j].beta(x)
    bm = np.asarray(problem.B(x), dtype=complex)
    pair_betas = [br.beta(x) for br in branches]
    total = np.zeros(problem.dim, dtype=complex)
    for ep in solve_pencil_at(problem, x):
        if ep.real and min(abs(ep.beta.real - pb) for pb in pair_betas) <= 1e-9 * (1 + abs(ep.beta)):
            continue
        if not ep.real:
            raise SpecError("explicit sum form needs a real spectrum outside the pair")
        nk = ep.N.real
        total += np.vdot(ep.phi, bm @ phi_j) / ((beta_j - ep.beta.real) * nk) * ep.phi
    return total


def perturbed_away(
    branches: tuple[EigenBranch, EigenBranch],
    problem: PencilProblem,
    x: float,
    sqrt_hbar: float,
    x0: float | None = None,
) -> AwayCorrection:
    """Perturbed eigenvalues to O(hbar) and first-order eigenvector corrections away from x0."""
    x0 = branches[0].x_cross if x0 is None else x0
    dist = abs(x - x0)
    if dist < 2.0 * sqrt_hbar:
        raise SpecError(f"|x - x0| = {dist:.3g} < 2 sqrt(hbar): the away-expansion does not apply")
    if dist < 5.0 * sqrt_hbar:
        warnings.warn(f"|x - x0| = {dist:.3g} < 5 sqrt(hbar): away-expansion is marginal")
    gamma = problem.Gamma
    phis = [br.phi(x) for br in branches]
    ns = [np.vdot(v, gamma @ v).real for v in phis]
    betas = [br.beta(x) for br in branches]
    bm = np.asarray(problem.B(x), dtype=complex)
    B = [[np.vdot(phis[j], bm @ phis[k]) for k in range(2)] for j in range(2)]
    hbar = sqrt_hbar**2
    out_beta = []
    partner = []
    perps = []
    for j in range(2):
        k = 1 - j
        perp = complement_correction(problem, branches, x, j + 1)
        sign = -1.0 if j == 0 else 1.0
        second = sign * (B[1][0] * B[0][1]).real / ((betas[1] - betas[0]) * ns[0] * ns[1])
        second += (np.vdot(phis[j], bm @ perp) / ns[j]).real
        out_beta.append(betas[j] + sqrt_hbar * B[j][j].real / ns[j] + hbar * second)
        partner.append(complex(B[k][j] / ((betas[j] - betas[k]) * ns[k])))
        perps.append(perp)
    return AwayCorrection(tuple(out_beta), tuple(partner), tuple(perps))
