"""Direct numerical integration of the full system and empirical transition matrices."""

from __future__ import annotations

import csv
import io
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .adiabatic import DEFAULT_G, PhasePieces, canonical_mode_from
from .degeneracy import DegeneracyData
from .errors import NumericFailure, SpecError
from .pencil import EigenBranch, PencilProblem, solve_pencil_at
from .transition import canonical_T

FLUX_TOL = 1e-8
SAMPLES_PER_PERIOD = 20


@dataclass(frozen=True)
class IntegratorStats:
    steps: int
    rejected: int
    rhs_evaluations: int
    max_local_error: float
    max_step: float


@dataclass(frozen=True)
class OracleTrace:
    hbar: float
    x: np.ndarray
    psi: np.ndarray  # shape (len(x), n)
    flux: np.ndarray
    stats: IntegratorStats
    flux_tol: float = FLUX_TOL

    @property
    def flux_drift(self) -> float:
        f0 = self.flux[0]
        return float(np.max(np.abs(self.flux - f0)) / (1.0 + abs(f0)))

    @property
    def flux_ok(self) -> bool:
        return self.flux_drift <= self.flux_tol

    @property
    def final(self) -> np.ndarray:
        return self.psi[-1]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        n = self.psi.shape[1]
        header = ["x"]
        for k in range(n):
            header += [f"re_psi{k + 1}", f"im_psi{k + 1}"]
        w.writerow(header + ["flux"])
        for x, row, fl in zip(self.x, self.psi, self.flux):
            vals = [repr(float(x))]
            for c in row:
                vals += [repr(float(c.real)), repr(float(c.imag))]
            w.writerow(vals + [repr(float(fl))])
        return buf.getvalue()


def _max_speed(problem: PencilProblem, a: float, b: float, sqrt_hbar: float) -> float:
    out = 0.0
    for x in np.linspace(a, b, 33):
        m = problem.gamma_inv @ problem.operator(float(x), sqrt_hbar)
        out = max(out, float(np.max(np.abs(np.linalg.eigvals(m)))))
    return max(out, 1e-12)


def integrate(
    problem: PencilProblem,
    hbar: float,
    x_from: float,
    x_to: float,
    psi0,
    tol: float = 1e-11,
    flux_tol: float = FLUX_TOL,
) -> OracleTrace:
    """Integrate psi' = (i/hbar) Gamma^{-1} (K + sqrt(hbar) B) psi with an 8th-order embedded pair."""
    if tol < 1e-12:
        raise SpecError("tol must be at least 1e-12")
    if not hbar > 0:
        raise SpecError("hbar must be positive")
    psi0 = np.asarray(psi0, dtype=complex)
    if psi0.shape != (problem.dim,):
        raise SpecError(f"initial vector must have length {problem.dim}")
    sh = math.sqrt(hbar)
    ginv = problem.gamma_inv
    scale = 1j / hbar

    def rhs(x, y):
        return scale * (ginv @ (problem.operator(x, sh) @ y))

    speed = _max_speed(problem, min(x_from, x_to), max(x_from, x_to), sh)
    h_max = hbar / (10.0 * speed)
    ynorm = float(np.linalg.norm(psi0)) or 1.0
    sol = solve_ivp(
        rhs, (x_from, x_to), psi0, method="DOP853", rtol=tol, atol=tol * ynorm,
        max_step=h_max, dense_output=True,
    )
    if sol.status != 0:
        raise NumericFailure(f"integration failed at hbar={hbar:g}: {sol.message}")
    period = 2.0 * math.pi * hbar / speed
    count = max(int(math.ceil(abs(x_to - x_from) / period * SAMPLES_PER_PERIOD)) + 1, 2)
    xs = np.linspace(x_from, x_to, count)
    psi = sol.sol(xs).T
    psi[0], psi[-1] = psi0, sol.y[:, -1]
    gamma = problem.Gamma
    flux = np.einsum("ij,jk,ik->i", psi.conj(), gamma, psi).real
    steps = len(sol.t) - 1
    # rejected steps are not reported by the driver; 12 stages per accepted step is the lower bound
    rejected = max(0, (sol.nfev - 1) // 12 - steps)
    diffs = np.abs(np.diff(sol.t))
    stats = IntegratorStats(steps, rejected, int(sol.nfev), tol * ynorm, float(diffs.max()) if len(diffs) else 0.0)
    trace = OracleTrace(float(hbar), xs, psi, flux, stats, flux_tol)
    drift = trace.flux_drift
    if drift > 100 * flux_tol:
        raise NumericFailure(f"flux drift {drift:.3g} at hbar={hbar:g} exceeds 100x tolerance")
    if drift > flux_tol:
        warnings.warn(f"flux drift {drift:.3g} at hbar={hbar:g} exceeds tolerance {flux_tol:g}")
    return trace


def default_x0(hbar: float, problem: PencilProblem, x0: float, g: float = DEFAULT_G) -> float:
    """max(5 hbar^(1/2-g), 20 sqrt(hbar)), clipped to 90% of the room on either side of x0."""
    lo, hi = problem.domain
    room = 0.9 * min(x0 - lo, hi - x0)
    return min(max(5.0 * hbar ** (0.5 - g), 20.0 * math.sqrt(hbar)), room)


@dataclass(frozen=True)
class EmpiricalTransition:
    matrix: np.ndarray
    hbar: float
    match_x: float
    residuals: tuple[float, float]
    traces: tuple[OracleTrace, OracleTrace] = field(repr=False, default=None)

    @property
    def det(self) -> complex:
        return complex(np.linalg.det(self.matrix))

    @property
    def flux_drift(self) -> float:
        return max(t.flux_drift for t in self.traces) if self.traces else 0.0


def perturbed_pair(
    problem: PencilProblem, branches: tuple[EigenBranch, EigenBranch], x: float, sqrt_hbar: float
) -> list:
    """Eigenpairs of the perturbed pencil at x that continue the two tracked branches."""
    pairs = solve_pencil_at(problem, x, sqrt_hbar)
    out = []
    gamma = problem.Gamma
    bm = np.asarray(problem.B(x), dtype=complex)
    used = set()
    for br in branches:
        v = br.phi(x)
        n = np.vdot(v, gamma @ v).real
        guess = br.beta(x) + sqrt_hbar * (np.vdot(v, bm @ v) / n).real
        k = min((i for i in range(len(pairs)) if i not in used), key=lambda i: abs(pairs[i].beta - guess))
        used.add(k)
        out.append(pairs[k])
    return out


def _project(pair, gamma: np.ndarray, v: np.ndarray) -> complex:
    return complex(np.vdot(pair.phi, gamma @ v) / pair.N)


def _complement_residual(pairs, gamma: np.ndarray, v: np.ndarray) -> float:
    rest = v - sum(_project(p, gamma, v) * p.phi for p in pairs)
    return float(np.linalg.norm(rest) / max(np.linalg.norm(v), 1e-300))


def extract_empirical_T(
    problem: PencilProblem,
    data: DegeneracyData,
    branches: tuple[EigenBranch, EigenBranch],
    hbar: float,
    X0: float | None = None,
    tol: float = 1e-11,
    g: float = DEFAULT_G,
    prepare: str = "perturbed",
    flux_tol: float = FLUX_TOL,
    executor: ThreadPoolExecutor | None = None,
) -> EmpiricalTransition:
    """Transition matrix read off from direct integration between x0 - X0 and x0 + X0.

    Column j starts from the canonical mode j on the left. With ``prepare="perturbed"`` the
    start vector is its projection onto the perturbed eigenvector (removing the first-order
    admixture of the other modes); ``prepare="canonical"`` uses the mode value as is.
    """
    if prepare not in ("perturbed", "canonical"):
        raise SpecError("prepare must be 'perturbed' or 'canonical'")
    x0 = data.x0
    X0 = default_x0(hbar, problem, x0, g) if X0 is None else float(X0)
    lo, hi = problem.domain
    if not (lo < x0 - X0 and x0 + X0 < hi):
        raise SpecError(f"X0={X0:g} leaves the domain")
    if X0 < 5.0 * hbar ** (0.5 - g) * (1 - 1e-12) and X0 < 0.9 * min(x0 - lo, hi - x0):
        raise SpecError(f"X0={X0:g} is inside the matching window 5 hbar^(1/2-g)")
    pieces = PhasePieces(data, branches, problem, hbar, g)
    sh = math.sqrt(hbar)
    gamma = problem.Gamma
    xl, xr = x0 - X0, x0 + X0
    left_pairs = perturbed_pair(problem, branches, xl, sh)
    right_pairs = perturbed_pair(problem, branches, xr, sh)

    def column(j: int):
        start = canonical_mode_from(pieces, j, -1, xl)
        if prepare == "perturbed":
            p = left_pairs[j - 1]
            start = _project(p, gamma, start) * p.phi
        return integrate(problem, hbar, xl, xr, start, tol, flux_tol)

    if executor is not None:
        traces = list(executor.map(column, (1, 2)))
    else:
        traces = [column(1), column(2)]
    refs = [canonical_mode_from(pieces, m, 1, xr) for m in (1, 2)]
    mat = np.zeros((2, 2), dtype=complex)
    residuals = []
    for j, tr in enumerate(traces):
        end = tr.final
        for m in range(2):
            p = right_pairs[m]
            mat[m, j] = _project(p, gamma, end) / _project(p, gamma, refs[m])
        residuals.append(_complement_residual(right_pairs, gamma, end))
    if max(residuals) > 10 * sh:
        raise NumericFailure(f"two-mode projection residual {max(residuals):.3g} exceeds 10 sqrt(hbar)")
    return EmpiricalTransition(mat, float(hbar), float(X0), tuple(residuals), tuple(traces))


def thread_count() -> int:
    raw = os.environ.get("PENCIL_TRANSIT_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise SpecError(f"PENCIL_TRANSIT_THREADS={raw!r} is not an integer") from None
    return min(4, os.cpu_count() or 1)


@dataclass(frozen=True)
class ConvergenceRow:
    hbar: float
    X0: float
    empirical: np.ndarray
    asymptotic: np.ndarray
    error: float
    entry_errors: np.ndarray
    flux_drift: float
    residual: float


@dataclass(frozen=True)
class ConvergenceTable:
    rows: tuple[ConvergenceRow, ...]
    exponent: float | None
    monotone: bool
    note: str = ""
    results: tuple[EmpiricalTransition, ...] = field(default=(), repr=False)


def fit_exponent(hbars, errors) -> float | None:
    """Least-squares slope of log(error) against log(hbar)."""
    h = np.asarray(hbars, dtype=float)
    e = np.asarray(errors, dtype=float)
    if len(h) < 2 or np.any(e <= 0):
        return None
    return float(np.polyfit(np.log(h), np.log(e), 1)[0])


def convergence_study(
    problem: PencilProblem,
    data: DegeneracyData,
    branches: tuple[EigenBranch, EigenBranch],
    hbars,
    X0_rule=None,
    tol: float = 1e-11,
    g: float = DEFAULT_G,
    reference: np.ndarray | None = None,
    min_points: int = 3,
) -> ConvergenceTable:
    """Empirical matrices for each hbar against the canonical matrix, with a fitted error exponent."""
    hbars = [float(h) for h in hbars]
    if len(hbars) < min_points:
        raise SpecError(f"need at least {min_points} hbar values")
    ref = canonical_T(data.nu, data.w).entries if reference is None else np.asarray(reference)
    rule = X0_rule or (lambda h: default_x0(h, problem, data.x0, g))
    with ThreadPoolExecutor(max_workers=thread_count()) as pool:
        futures = [
            pool.submit(extract_empirical_T, problem, data, branches, h, rule(h), tol, g) for h in hbars
        ]
        results = [f.result() for f in futures]
    rows = []
    for h, r in zip(hbars, results):
        diff = r.matrix - ref
        rows.append(
            ConvergenceRow(h, r.match_x, r.matrix, ref, float(np.linalg.norm(diff, 2)), np.abs(diff), r.flux_drift, max(r.residuals))
        )
    errors = [row.error for row in rows]
    order = np.argsort(hbars)
    sorted_err = [errors[i] for i in order]
    monotone = all(a <= b * (1 + 1e-9) for a, b in zip(sorted_err, sorted_err[1:]))
    floor = 1e-9 * max(1.0, float(np.max(np.abs(ref))))
    if max(errors) <= floor:
        return ConvergenceTable(tuple(rows), None, monotone, "errors at round-off floor; no fit", tuple(results))
    exponent = fit_exponent(hbars, errors) if len(hbars) >= 2 else None
    note = "" if monotone else "errors are not monotone in hbar: X0 may resonate with the oscillation"
    return ConvergenceTable(tuple(rows), exponent, monotone, note, tuple(results))
