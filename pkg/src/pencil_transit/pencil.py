"""Finite-dimensional self-adjoint pencils K(x) - beta Gamma.

Eigenpairs, two smoothly continued eigenvalue branches through a simple crossing,
matrix elements in those branches and numeric checks of the pencil properties.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import AssumptionViolation, NumericFailure, SpecError

Matrix = np.ndarray
MatrixFn = Callable[[float], Matrix]

REAL_TOL = 1e-10
HERMITIAN_TOL = 1e-12
GAMMA_COND_TOL = 1e-10


def gamma_inner(u: np.ndarray, v: np.ndarray, gamma: Matrix) -> complex:
    """(u, Gamma v), conjugate-linear in u."""
    u = np.asarray(u)
    v = np.asarray(v)
    gamma = np.asarray(gamma)
    if u.shape != v.shape or gamma.shape != (u.shape[0], u.shape[0]):
        raise SpecError(f"dimension mismatch: {u.shape}, {v.shape}, {gamma.shape}")
    return complex(np.vdot(u, gamma @ v))


def _hermitian_defect(m: Matrix) -> tuple[float, tuple[int, int]]:
    d = np.abs(m - m.conj().T)
    idx = np.unravel_index(int(np.argmax(d)), d.shape)
    return float(d[idx]), (int(idx[0]), int(idx[1]))


def _fd4(f: Callable[[float], np.ndarray], x: float, h: float) -> np.ndarray:
    """Fourth-order central difference."""
    return (8.0 * (f(x + h) - f(x - h)) - (f(x + 2 * h) - f(x - 2 * h))) / (12.0 * h)


@dataclass(frozen=True)
class PencilProblem:
    """(K(x) + sqrt(hbar) B(x)) Psi = -i hbar Gamma Psi' with constant invertible Gamma.

    ``dK`` may supply the exact x-derivative of K. ``pair_hint`` selects the crossing pair
    (by the eigenvalue value at the crossing) when several pairs of branches cross.
    """

    K: MatrixFn
    B: MatrixFn
    Gamma: Matrix
    domain: tuple[float, float]
    dK: MatrixFn | None = None
    name: str = "custom"
    pair_hint: float | None = None
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        g = np.array(self.Gamma, dtype=complex)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise SpecError(f"Gamma must be square, got shape {g.shape}")
        g.setflags(write=False)
        object.__setattr__(self, "Gamma", g)
        lo, hi = (float(v) for v in self.domain)
        if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
            raise SpecError(f"invalid domain {self.domain}")
        object.__setattr__(self, "domain", (lo, hi))
        defect, idx = _hermitian_defect(g)
        if defect > HERMITIAN_TOL * max(np.linalg.norm(g), 1.0):
            raise SpecError(f"Gamma is not Hermitian (entry {idx})")
        s = np.linalg.svd(g, compute_uv=False)
        if s[-1] <= GAMMA_COND_TOL * s[0]:
            raise AssumptionViolation(
                f"Gamma is numerically singular (sigma_min/sigma_max = {s[-1] / s[0]:.3g})"
            )
        object.__setattr__(self, "_gamma_inv", np.linalg.inv(g))

    @property
    def dim(self) -> int:
        return self.Gamma.shape[0]

    @property
    def width(self) -> float:
        return self.domain[1] - self.domain[0]

    @property
    def gamma_inv(self) -> Matrix:
        return self._gamma_inv

    def Kp(self, x: float, step: float | None = None) -> Matrix:
        """x-derivative of K: exact when supplied, else fourth-order differences."""
        if self.dK is not None:
            return np.asarray(self.dK(x), dtype=complex)
        h = step if step is not None else 1e-4 * self.width
        return _fd4(lambda t: np.asarray(self.K(t), dtype=complex), x, h)

    def operator(self, x: float, sqrt_hbar: float) -> Matrix:
        return np.asarray(self.K(x), dtype=complex) + sqrt_hbar * np.asarray(self.B(x), dtype=complex)

    def validate(self, samples: int = 33) -> None:
        """Sample K and B: shape, Hermiticity, finiteness and bounded curvature."""
        lo, hi = self.domain
        h = 1e-3 * self.width
        for x in np.linspace(lo, hi, samples):
            for label, fn in (("K", self.K), ("B", self.B)):
                m = np.asarray(fn(float(x)), dtype=complex)
                if m.shape != (self.dim, self.dim):
                    raise SpecError(f"{label}({x:g}) has shape {m.shape}, expected {(self.dim, self.dim)}")
                if not np.all(np.isfinite(m)):
                    raise SpecError(f"{label}({x:g}) has non-finite entries")
                defect, idx = _hermitian_defect(m)
                if defect > HERMITIAN_TOL * max(np.linalg.norm(m), 1.0):
                    raise SpecError(f"{label}({x:g}) is not Hermitian at entry {idx}")
                curv = np.asarray(fn(float(x) + h)) - 2 * m + np.asarray(fn(float(x) - h))
                if not np.all(np.isfinite(curv)):
                    raise AssumptionViolation(f"{label} is not smooth near x={x:g}")


@dataclass(frozen=True)
class EigenPair:
    beta: complex
    phi: np.ndarray
    N: complex
    real: bool


def _gamma_orthogonalize(vecs: np.ndarray, gamma: Matrix) -> np.ndarray:
    """Make a cluster of eigenvectors mutually Gamma-orthogonal."""
    g = vecs.conj().T @ gamma @ vecs
    g = 0.5 * (g + g.conj().T)
    _, u = np.linalg.eigh(g)
    return vecs @ u


def solve_pencil_at(problem: PencilProblem, x: float, sqrt_hbar: float = 0.0) -> list[EigenPair]:
    """All eigenpairs of K phi = beta Gamma phi (of K + sqrt_hbar B when given), sorted by Re beta.

    Vectors with nonzero flux are scaled to |N| = 1; their largest component is real positive.
    """
    k = problem.operator(x, sqrt_hbar) if sqrt_hbar else np.asarray(problem.K(x), dtype=complex)
    gamma = problem.Gamma
    a = problem.gamma_inv @ k
    try:
        vals, vecs = np.linalg.eig(a)
    except np.linalg.LinAlgError as exc:
        raise NumericFailure(f"eigen-solver failed at x={x:g}: {exc}") from exc
    scale = max(np.linalg.norm(k, 2), np.linalg.norm(a, 2), 1e-300)
    order = np.lexsort((vals.imag, vals.real))
    vals = vals[order]
    vecs = vecs[:, order]
    # clusters of (numerically) equal eigenvalues
    n = len(vals)
    i = 0
    while i < n:
        j = i + 1
        while j < n and abs(vals[j] - vals[i]) <= 1e-12 * scale:
            j += 1
        if j - i > 1:
            vecs[:, i:j] = _gamma_orthogonalize(vecs[:, i:j], gamma)
        i = j
    out = []
    for idx in range(n):
        beta = complex(vals[idx])
        is_real = abs(beta.imag) <= REAL_TOL * scale
        if is_real:
            beta = complex(beta.real, 0.0)
        phi = vecs[:, idx]
        phi = phi / np.linalg.norm(phi)
        nn = np.vdot(phi, gamma @ phi)
        if abs(nn) > 1e-12 * np.linalg.norm(gamma, 2):
            phi = phi / math.sqrt(abs(nn))
        big = int(np.argmax(np.abs(phi)))
        phi = phi * (abs(phi[big]) / phi[big])
        nn = complex(np.vdot(phi, gamma @ phi))
        if is_real:
            nn = complex(nn.real, 0.0)
        out.append(EigenPair(beta, phi, nn, is_real))
    return out


def _real_eigvals(problem: PencilProblem, x: float) -> tuple[np.ndarray, int]:
    pairs = solve_pencil_at(problem, x)
    reals = np.array(sorted(p.beta.real for p in pairs if p.real))
    return reals, len(reals)


def detect_jordan(problem: PencilProblem, x_a: float, x_b: float) -> AssumptionViolation:
    """Diagnose a change in the number of real eigenvalues between x_a and x_b.

    Bisects to the transition point, then rank-tests K - beta Gamma at the merging
    eigenvalue: nullity one means coalescing eigenvectors (a Jordan block).
    """
    _, ca = _real_eigvals(problem, x_a)
    lo, hi = x_a, x_b
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        _, cm = _real_eigvals(problem, mid)
        if cm == ca:
            lo = mid
        else:
            hi = mid
    xc = lo
    pairs = solve_pencil_at(problem, xc)
    vals = np.array([p.beta for p in pairs])
    best = (math.inf, 0, 1)
    for i in range(len(vals)):
        for j in range(i + 1, len(vals)):
            d = abs(vals[i] - vals[j])
            if d < best[0]:
                best = (d, i, j)
    beta = 0.5 * (vals[best[1]] + vals[best[2]])
    m = np.asarray(problem.K(xc), dtype=complex) - beta.real * problem.Gamma
    s = np.linalg.svd(m, compute_uv=False)
    nullity = int(np.sum(s <= 1e-3 * max(s[0], 1e-300)))
    if nullity == 1:
        return AssumptionViolation(
            f"eigenvectors become linearly dependent at x ~ {xc:.12g} (beta ~ {beta.real:.6g}): "
            "Jordan-block case, out of scope; the transition formula does not apply"
        )
    return AssumptionViolation(
        f"real eigenvalues turn complex near x ~ {xc:.12g}; tracked branches must stay real"
    )


@dataclass
class _PairTracker:
    """Shared evaluation machinery for the two tracked branches of a crossing pair."""

    problem: PencilProblem
    grid: np.ndarray
    track_lo: np.ndarray  # grid values of the branch that ends up numbered 1
    track_hi: np.ndarray  # grid values of the branch numbered 2
    x_cross: float
    beta_scale: float
    slope_gap: float
    refs: tuple[np.ndarray, np.ndarray] = None
    signs: tuple[int, int] = (1, 1)

    def __post_init__(self):
        self.h_extrap = 5e-4 * self.problem.width
        self.window = 1e-7 * self.beta_scale / max(self.slope_gap, 1e-300)
        self._cached = lru_cache(maxsize=8192)(self._eval_raw)

    def predicted(self, x: float) -> tuple[float, float]:
        return (
            float(np.interp(x, self.grid, self.track_lo)),
            float(np.interp(x, self.grid, self.track_hi)),
        )

    def _pair_at(self, x: float) -> tuple[EigenPair, EigenPair]:
        """(branch 1, branch 2) eigenpairs at x, away from the crossing."""
        pairs = [p for p in solve_pencil_at(self.problem, x) if p.real]
        p1, p2 = self.predicted(x)
        if len(pairs) < 2:
            raise AssumptionViolation(f"fewer than two real eigenvalues at x={x:g}")
        vals = np.array([p.beta.real for p in pairs])
        i1 = int(np.argmin(np.abs(vals - p1)))
        rest = [i for i in range(len(vals)) if i != i1]
        i2 = min(rest, key=lambda i: abs(vals[i] - p2))
        a, b = pairs[i1], pairs[i2]
        # the crossing is simple: branch 2 (larger slope) is below branch 1 on the left
        lower, upper = (a, b) if a.beta.real <= b.beta.real else (b, a)
        if x < self.x_cross:
            return upper, lower
        return lower, upper

    def _gauge(self, phi: np.ndarray, j: int) -> np.ndarray:
        ov = np.vdot(self.refs[j], phi)
        if abs(ov) < 1e-3 * np.linalg.norm(phi) * np.linalg.norm(self.refs[j]):
            raise NumericFailure(
                "eigenvector became orthogonal to its gauge reference; shrink the domain"
            )
        return phi * (abs(ov) / ov)

    def _eval_raw(self, x: float):
        if abs(x - self.x_cross) < self.window:
            return self._eval_extrapolated(x)
        e1, e2 = self._pair_at(x)
        return (
            (e1.beta.real, self._gauge(e1.phi, 0), e1.N.real),
            (e2.beta.real, self._gauge(e2.phi, 1), e2.N.real),
        )

    def _eval_extrapolated(self, x: float):
        """Cubic extrapolation from four points left of the crossing."""
        xs = [self.x_cross - k * self.h_extrap for k in (1, 2, 3, 4)]
        vals = [self._eval_raw(t) for t in xs]
        weights = []
        for i, xi in enumerate(xs):
            w = 1.0
            for k, xk in enumerate(xs):
                if k != i:
                    w *= (x - xk) / (xi - xk)
            weights.append(w)
        out = []
        pairs = [p for p in solve_pencil_at(self.problem, x) if p.real]
        for j in range(2):
            phi = sum(w * v[j][1] for w, v in zip(weights, vals))
            beta_guess = sum(w * v[j][0] for w, v in zip(weights, vals))
            beta = min((p.beta.real for p in pairs), key=lambda b: abs(b - beta_guess))
            nn = np.vdot(phi, self.problem.Gamma @ phi).real
            phi = phi / math.sqrt(abs(nn))
            out.append((beta, self._gauge(phi, j), math.copysign(1.0, nn)))
        return tuple(out)

    def evaluate(self, x: float):
        return self._cached(float(x))


class EigenBranch:
    """One tracked real eigenvalue branch beta_j(x) with its gauge-fixed eigenvector.

    The eigenvector has |N_j| = 1 and a fixed reference overlap (r_j, phi_j(x)) > 0.
    ``with_gauge`` multiplies it by a smooth scalar factor (phase or normalization).
    """

    def __init__(self, tracker: _PairTracker, index: int, factor: Callable[[float], complex] | None = None):
        self._t = tracker
        self.index = index
        self._factor = factor

    @property
    def problem(self) -> PencilProblem:
        return self._t.problem

    @property
    def x_cross(self) -> float:
        return self._t.x_cross

    @property
    def norm_sign(self) -> int:
        return self._t.signs[self.index - 1]

    @property
    def grid(self) -> np.ndarray:
        return self._t.grid

    def beta(self, x: float) -> float:
        return self._t.evaluate(x)[self.index - 1][0]

    def phi(self, x: float) -> np.ndarray:
        v = self._t.evaluate(x)[self.index - 1][1]
        if self._factor is not None:
            v = v * self._factor(float(x))
        return v

    def N(self, x: float) -> float:
        v = self.phi(x)
        return float(np.vdot(v, self.problem.Gamma @ v).real)

    def with_gauge(self, factor: Callable[[float], complex]) -> "EigenBranch":
        if self._factor is None:
            return EigenBranch(self._t, self.index, factor)
        old = self._factor
        return EigenBranch(self._t, self.index, lambda x: old(x) * factor(x))

    @property
    def regauged(self) -> bool:
        return self._factor is not None


def default_grid(problem: PencilProblem, points: int = 401) -> np.ndarray:
    lo, hi = problem.domain
    return np.linspace(lo, hi, points)


def _track(problem: PencilProblem, grid: np.ndarray) -> np.ndarray:
    """Continue the real eigenvalues along the grid by slope extrapolation (rows = grid)."""
    counts = []
    rows = []
    for x in grid:
        vals, c = _real_eigvals(problem, float(x))
        counts.append(c)
        rows.append(vals)
    for i in range(1, len(grid)):
        if counts[i] != counts[i - 1]:
            raise detect_jordan(problem, float(grid[i - 1]), float(grid[i]))
    if counts[0] < 2:
        raise AssumptionViolation("fewer than two real eigenvalue branches")
    tracks = np.empty((len(grid), counts[0]))
    tracks[0] = rows[0]
    for i in range(1, len(grid)):
        if i >= 2:
            pred = tracks[i - 1] + (tracks[i - 1] - tracks[i - 2]) * (
                (grid[i] - grid[i - 1]) / (grid[i - 1] - grid[i - 2])
            )
        else:
            pred = tracks[i - 1]
        cost = np.abs(pred[:, None] - rows[i][None, :])
        r, c = linear_sum_assignment(cost)
        tracks[i, r] = rows[i][c]
    return tracks


def _sign_changes(d: np.ndarray) -> list[int]:
    """Indices i where d changes sign on [i, i+1] (zeros attached to the left interval)."""
    out = []
    for i in range(len(d) - 1):
        if d[i] == 0.0 or d[i] * d[i + 1] < 0:
            out.append(i)
    # collapse a zero shared by two consecutive intervals
    dedup = []
    for i in out:
        if dedup and i == dedup[-1] + 1 and d[i] == 0.0:
            continue
        dedup.append(i)
    return dedup


def smooth_branches(
    problem: PencilProblem,
    grid: np.ndarray | None = None,
    gap_min: float | None = None,
) -> tuple[EigenBranch, EigenBranch]:
    """Find the crossing pair, number it (beta_2 - beta_1 grows through the crossing) and
    return the two branches with a continuous gauge."""
    grid = default_grid(problem) if grid is None else np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) < 8 or np.any(np.diff(grid) <= 0):
        raise SpecError("grid must be strictly increasing with at least 8 points")
    tracks = _track(problem, grid)
    m = tracks.shape[1]
    scale = max(float(np.max(np.abs(tracks))), 1e-12)

    candidates = []
    for a in range(m):
        for b in range(a + 1, m):
            ch = _sign_changes(tracks[:, a] - tracks[:, b])
            if ch:
                candidates.append((a, b, ch))
    if not candidates:
        raise AssumptionViolation("no crossing of real eigenvalue branches on the domain")
    if len(candidates) > 1:
        if problem.pair_hint is None:
            raise AssumptionViolation(
                f"{len(candidates)} crossing pairs found; set pair_hint to select one"
            )

        def crossing_value(cand):
            a, _, ch = cand
            return abs(tracks[ch[0], a] - problem.pair_hint)

        candidates.sort(key=crossing_value)
        if len(candidates) > 1 and crossing_value(candidates[0]) == crossing_value(candidates[1]):
            raise AssumptionViolation("pair_hint does not single out one crossing pair")
    a, b, changes = candidates[0]
    if len(changes) > 1:
        raise AssumptionViolation(
            f"the selected pair crosses {len(changes)} times; restrict the domain to one crossing"
        )
    i = changes[0]

    gap_min = 1e-3 * scale if gap_min is None else gap_min
    pair = tracks[:, [a, b]]
    for k in range(m):
        if k in (a, b):
            continue
        gap = float(np.min(np.abs(pair - tracks[:, [k]])))
        if gap < gap_min:
            raise AssumptionViolation(
                f"another branch comes within {gap:.3g} of the crossing pair (gapMin {gap_min:.3g})"
            )

    # slopes on the crossing interval decide the numbering
    dx = grid[i + 1] - grid[i]
    s_a = (tracks[i + 1, a] - tracks[i, a]) / dx
    s_b = (tracks[i + 1, b] - tracks[i, b]) / dx
    if s_a == s_b:
        raise AssumptionViolation("crossing branches have equal slopes; crossing is not simple")
    lo_idx, hi_idx = (a, b) if s_a < s_b else (b, a)
    slope_gap = abs(s_a - s_b)

    x_cross = _bisect_crossing(problem, grid[i], grid[i + 1], tracks[:, lo_idx], tracks[:, hi_idx], grid, scale)
    tracker = _PairTracker(problem, grid, tracks[:, lo_idx].copy(), tracks[:, hi_idx].copy(), x_cross, scale, slope_gap)
    _install_gauge(tracker)
    return EigenBranch(tracker, 1), EigenBranch(tracker, 2)


def _slope_of(problem: PencilProblem, pair: EigenPair, x: float) -> float:
    kp = problem.Kp(x)
    return float((np.vdot(pair.phi, kp @ pair.phi) / pair.N).real)


def _bisect_crossing(problem, x_a, x_b, tr1, tr2, grid, scale) -> float:
    """Locate the crossing inside [x_a, x_b]: left of it the lower eigenvalue of the pair
    is the one with the larger slope."""
    lo, hi = float(x_a), float(x_b)
    tol_x = 1e-13 * problem.width
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if hi - lo <= tol_x or mid in (lo, hi):
            break
        pairs = [p for p in solve_pencil_at(problem, mid) if p.real]
        p1, p2 = float(np.interp(mid, grid, tr1)), float(np.interp(mid, grid, tr2))
        center = 0.5 * (p1 + p2)
        two = sorted(pairs, key=lambda p: abs(p.beta.real - center))[:2]
        two.sort(key=lambda p: p.beta.real)
        if abs(two[1].beta.real - two[0].beta.real) <= 1e-12 * scale:
            return mid
        s_low = _slope_of(problem, two[0], mid)
        s_up = _slope_of(problem, two[1], mid)
        if s_low > s_up:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _install_gauge(tracker: _PairTracker) -> None:
    """Reference vectors r_j taken just left of the crossing."""
    x = tracker.x_cross - tracker.h_extrap
    e1, e2 = tracker._pair_at(x)
    tracker.refs = (e1.phi.copy(), e2.phi.copy())
    tracker.signs = (int(np.sign(e1.N.real)), int(np.sign(e2.N.real)))
    tracker._cached.cache_clear()


@dataclass(frozen=True)
class MatrixElementTable:
    """Matrix elements at x in the two tracked branches (indices 0, 1 = modes 1, 2)."""

    x: float
    beta: np.ndarray
    N: np.ndarray
    B: np.ndarray
    Kp: np.ndarray
    S: np.ndarray
    slope_check: float  # max_j |dbeta_j/dx - Kp_jj/N_j|
    derivative_check: float  # max_{j!=k} |Kp_jk - (beta_k - beta_j) N_j S_jk|
    check_tolerance: float

    @property
    def checks_passed(self) -> bool:
        return self.slope_check <= self.check_tolerance and self.derivative_check <= self.check_tolerance


def phi_derivative(branch: EigenBranch, x: float, step: float | None = None) -> np.ndarray:
    """d phi/dx by central differences with one Richardson step."""
    h = step if step is not None else 1e-5 * branch.problem.width
    d1 = (branch.phi(x + h) - branch.phi(x - h)) / (2 * h)
    d2 = (branch.phi(x + 2 * h) - branch.phi(x - 2 * h)) / (4 * h)
    return (4.0 * d1 - d2) / 3.0


def matrix_elements(
    branches: tuple[EigenBranch, EigenBranch],
    problem: PencilProblem,
    x: float,
    fd_step: float | None = None,
) -> MatrixElementTable:
    lo, hi = problem.domain
    h = fd_step if fd_step is not None else 1e-4 * problem.width
    if not (lo + 2 * h <= x <= hi - 2 * h):
        raise SpecError(f"x={x:g} too close to the domain edge for differencing")
    phis = [br.phi(x) for br in branches]
    gamma = problem.Gamma
    bm = np.asarray(problem.B(x), dtype=complex)
    kp = problem.Kp(x, h)
    beta = np.array([br.beta(x) for br in branches])
    nvals = np.array([np.vdot(p, gamma @ p).real for p in phis])
    B = np.array([[np.vdot(phis[j], bm @ phis[k]) for k in range(2)] for j in range(2)])
    Kp = np.array([[np.vdot(phis[j], kp @ phis[k]) for k in range(2)] for j in range(2)])
    dphis = [phi_derivative(br, x) for br in branches]
    S = np.array(
        [[np.vdot(phis[i], gamma @ dphis[j]) / nvals[i] for j in range(2)] for i in range(2)]
    )
    slope_dev = 0.0
    for j, br in enumerate(branches):
        db = float(_fd4(lambda t: np.array([br.beta(t)]), x, h)[0])
        slope_dev = max(slope_dev, abs(db - (Kp[j, j] / nvals[j]).real))
    der_dev = 0.0
    for j, k in ((0, 1), (1, 0)):
        der_dev = max(der_dev, abs(Kp[j, k] - (beta[k] - beta[j]) * nvals[j] * S[j, k]))
    tol = 1e-6 * max(float(np.max(np.abs(Kp))), 1e-300)
    return MatrixElementTable(float(x), beta, nvals, B, Kp, S, slope_dev, der_dev, tol)


@dataclass(frozen=True)
class PropertyItem:
    name: str
    passed: bool
    value: float
    tolerance: float
    detail: str = ""


@dataclass(frozen=True)
class PencilReport:
    items: tuple[PropertyItem, ...]

    @property
    def passed(self) -> bool:
        return all(i.passed for i in self.items)

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "items": [
                {"name": i.name, "passed": i.passed, "value": i.value, "tolerance": i.tolerance, "detail": i.detail}
                for i in self.items
            ],
        }


def verify_pencil_properties(
    branches: tuple[EigenBranch, EigenBranch],
    problem: PencilProblem,
    grid: np.ndarray | None = None,
    norm_floor: float = 1e-8,
    seed: int = 0,
) -> PencilReport:
    """Numerical checks of the structural pencil properties on a grid."""
    grid = default_grid(problem, 41) if grid is None else np.asarray(grid, dtype=float)
    gamma = problem.Gamma
    ort_dev = 0.0
    n_min = math.inf
    signs = set()
    imag_max = 0.0
    for x in grid:
        x = float(x)
        pairs = solve_pencil_at(problem, x)
        scale = max(abs(p.beta) for p in pairs) + 1.0
        for i, pi in enumerate(pairs):
            for j, pj in enumerate(pairs):
                if i == j or abs(np.conj(pi.beta) - pj.beta) <= 1e-8 * scale:
                    continue
                ort_dev = max(ort_dev, abs(np.vdot(pi.phi, gamma @ pj.phi)))
        for br in branches:
            v = br.phi(x)
            nn = np.vdot(v, gamma @ v).real
            n_min = min(n_min, abs(nn))
            signs.add((br.index, int(np.sign(nn))))
        # tracked eigenvalues must be real: their residual with the real value is small
        for br in branches:
            v = br.phi(x)
            res = np.asarray(problem.K(x)) @ v - br.beta(x) * (gamma @ v)
            kn = np.linalg.norm(problem.K(x), 2) + 1.0
            imag_max = max(imag_max, float(np.linalg.norm(res) / (kn * np.linalg.norm(v))))
    sign_ok = len(signs) == 2
    # solvability: (K - beta_j Gamma) u = f is solvable for f Gamma-orthogonal to the pair
    rng = np.random.default_rng(seed)
    solv = 0.0
    for x in (float(grid[len(grid) // 4]), branches[0].x_cross, float(grid[3 * len(grid) // 4])):
        f = rng.normal(size=problem.dim) + 1j * rng.normal(size=problem.dim)
        f_norm = float(np.linalg.norm(f))
        for br in branches:
            v = br.phi(x)
            f = f - (gamma @ v) * (np.vdot(v, f) / np.vdot(v, gamma @ v).real)
        for br in branches:
            m = np.asarray(problem.K(x), dtype=complex) - br.beta(x) * gamma
            u = np.linalg.lstsq(m, f, rcond=1e-10)[0]
            solv = max(solv, float(np.linalg.norm(m @ u - f)) / f_norm)
    items = (
        PropertyItem("gamma_orthogonality", ort_dev <= 1e-10, ort_dev, 1e-10),
        PropertyItem("nonvanishing_flux_norm", n_min >= norm_floor, n_min, norm_floor),
        PropertyItem(
            "constant_flux_sign",
            sign_ok,
            float(len(signs)),
            2.0,
            f"sgn N1 * sgn N2 = {branches[0].norm_sign * branches[1].norm_sign:+d}",
        ),
        PropertyItem("real_tracked_eigenvalues", imag_max <= 1e-10, imag_max, 1e-10),
        PropertyItem("solvability", solv <= 1e-8, solv, 1e-8),
    )
    return PencilReport(items)
