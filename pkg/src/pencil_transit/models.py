"""Builtin pencil problems and the polynomial problem format."""

from __future__ import annotations

import math
from typing import Any

import numpy as np

from .errors import SpecError
from .pencil import PencilProblem

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)


def _const(m: np.ndarray):
    m = np.array(m, dtype=complex)
    m.setflags(write=False)
    return lambda x: m


def graphene(Q: float = 1.0, p: float = 1.0, E: float = 0.0, U0: float = 0.0,
             domain: tuple[float, float] | None = None) -> PencilProblem:
    """Massless Dirac electron on a linear potential step U(x) = -Q x + U0.

    K = (E - U(x)) I, Gamma = sigma_x, B = [[0, -i p], [i p, 0]]. The crossing sits at
    x0 = (U0 - E)/Q and the two branches carry opposite flux signs.
    """
    if Q <= 0:
        raise SpecError("graphene: Q must be positive")
    x0 = (U0 - E) / Q
    dom = domain if domain is not None else (x0 - 2.0, x0 + 2.0)
    eye = np.eye(2, dtype=complex)
    bm = np.array([[0.0, -1j * p], [1j * p, 0.0]])
    return PencilProblem(
        K=lambda x: (E - (-Q * x + U0)) * eye,
        B=_const(bm),
        Gamma=SIGMA_X,
        domain=dom,
        dK=_const(Q * eye),
        name="graphene",
        params={"Q": Q, "p": p, "E": E, "U0": U0},
    )


def lz(Q: float = 1.0, p: float = 1.0, domain: tuple[float, float] = (-2.0, 2.0)) -> PencilProblem:
    """Two-level avoided crossing: K = diag(-Q x, Q x), B = p sigma_x, Gamma = I."""
    if Q <= 0:
        raise SpecError("lz: Q must be positive")
    return PencilProblem(
        K=lambda x: np.diag([-Q * x, Q * x]).astype(complex),
        B=_const(p * SIGMA_X),
        Gamma=np.eye(2),
        domain=domain,
        dK=_const(np.diag([-Q, Q])),
        name="lz",
        params={"Q": Q, "p": p},
    )


def wave(kappa: float = 1.0, s: float = 2.0, c: float = 2.0, q: float = 1.5, xs: float = 0.0,
         domain: tuple[float, float] | None = None) -> PencilProblem:
    """Two coupled transverse modes of a slowly varying waveguide, first-order form.

    With Psi = (u, -i hbar u') the Helmholtz system becomes n = 4 with
    K = [[A(x), 0], [0, I]], Gamma = [[0, I], [I, 0]] and the coupling in B = [[C, 0], [0, 0]].
    A = diag(kappa^2 - s y + q y^2, kappa^2 + s y + q y^2), y = x - xs, C = c sigma_x.
    The forward pair beta = +sqrt(A_ii) crosses at xs (Q = s/(2 kappa), p = c/(2 kappa)).
    """
    if kappa <= 0 or s <= 0:
        raise SpecError("wave: kappa and s must be positive")
    if s * s >= 4.0 * q * kappa * kappa:
        raise SpecError("wave: need s^2 < 4 q kappa^2 so that both channels stay propagating")
    dom = domain if domain is not None else (xs - 1.5, xs + 1.5)
    gamma = np.block([[np.zeros((2, 2)), np.eye(2)], [np.eye(2), np.zeros((2, 2))]])
    bm = np.zeros((4, 4), dtype=complex)
    bm[:2, :2] = c * SIGMA_X

    def k(x):
        y = x - xs
        m = np.zeros((4, 4), dtype=complex)
        m[0, 0] = kappa**2 - s * y + q * y * y
        m[1, 1] = kappa**2 + s * y + q * y * y
        m[2, 2] = m[3, 3] = 1.0
        return m

    def dk(x):
        y = x - xs
        m = np.zeros((4, 4), dtype=complex)
        m[0, 0] = -s + 2 * q * y
        m[1, 1] = s + 2 * q * y
        return m

    return PencilProblem(
        K=k, B=_const(bm), Gamma=gamma, domain=dom, dK=dk, name="wave", pair_hint=kappa,
        params={"kappa": kappa, "s": s, "c": c, "q": q, "xs": xs},
    )


def schrodinger(mass: float = 0.5, E: float = 0.0, slope: float = 1.0,
                domain: tuple[float, float] = (-1.0, 1.0)) -> PencilProblem:
    """Stationary Schroedinger equation with U = slope * x in first-order form.

    Its two eigenvectors coalesce at the turning point (a Jordan block), so the
    analysis must reject it.
    """
    return PencilProblem(
        K=lambda x: np.diag([2 * mass * (E - slope * x), 1.0]).astype(complex),
        B=_const(np.zeros((2, 2))),
        Gamma=SIGMA_X,
        domain=domain,
        dK=_const(np.diag([-2 * mass * slope, 0.0])),
        name="schrodinger",
        params={"mass": mass, "E": E, "slope": slope},
    )


def random4(seed: int = 7, indefinite: bool = True, domain: tuple[float, float] = (-1.0, 1.0)) -> PencilProblem:
    """A random 4x4 pencil with a genuine simple crossing and a rotating eigenbasis.

    Gamma = S^dag J S with J = diag(1, s, 1, -1). K(x) = S^dag J U(x)^dag Lambda(x) U(x) S
    where U(x) = exp(i x H) commutes with J, so the eigenvalues are exactly Lambda(x) =
    diag(-x + 0.2 x^2, x, 2.5 + x, -2.5 + 0.3 x). With ``indefinite`` the crossing pair lies
    in opposite flux sectors (s = -1).
    """
    rng = np.random.default_rng(seed)
    sign2 = -1.0 if indefinite else 1.0
    jd = np.array([1.0, sign2, 1.0, -1.0])
    smat = np.eye(4) + 0.25 * (rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))
    h = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    h = 0.5 * (h + h.conj().T)
    mask = np.equal.outer(jd, jd)
    h = np.where(mask, h, 0.0)
    hv, hV = np.linalg.eigh(h)
    bm = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    bm = 0.25 * (bm + bm.conj().T)
    J = np.diag(jd)
    gamma = smat.conj().T @ J @ smat

    def u(x):
        return (hV * np.exp(1j * x * hv)) @ hV.conj().T

    def lam(x):
        return np.diag([-x + 0.2 * x * x, x, 2.5 + x, -2.5 + 0.3 * x])

    def k(x):
        ux = u(x)
        m = smat.conj().T @ J @ ux.conj().T @ lam(x) @ ux @ smat
        return 0.5 * (m + m.conj().T)

    return PencilProblem(
        K=k, B=_const(bm), Gamma=gamma, domain=domain, name="random4",
        params={"seed": seed, "indefinite": indefinite},
    )


BUILTINS = {"graphene": graphene, "lz": lz, "wave": wave, "schrodinger": schrodinger, "random4": random4}

# Example problem documents printed by `pencil-transit example <name>`.
EXAMPLES: dict[str, dict[str, Any]] = {
    "graphene": {
        "model": "builtin",
        "builtin": {"name": "graphene", "params": {"Q": 1.0, "p": 1.0, "E": 0.0, "U0": 0.0}},
        "hbar": [1e-2, 1e-3, 1e-4],
        "domain": [-2.0, 2.0],
    },
    "lz": {
        "model": "builtin",
        "builtin": {"name": "lz", "params": {"Q": 1.0, "p": 1.0}},
        "hbar": [1e-2, 1e-3, 1e-4],
        "domain": [-2.0, 2.0],
    },
    "wave": {
        "model": "builtin",
        "builtin": {"name": "wave", "params": {"kappa": 1.0, "s": 2.0, "c": 2.0, "q": 1.5}},
        "hbar": [1e-2, 1e-3],
        "domain": [-1.5, 1.5],
    },
    "schrodinger": {
        "model": "builtin",
        "builtin": {"name": "schrodinger", "params": {"mass": 0.5, "E": 0.0, "slope": 1.0}},
        "hbar": 1e-3,
        "domain": [-1.0, 1.0],
    },
    "polynomial": {
        "model": "polynomial",
        "polynomial": {
            "K": [[[[0, 0], [-1, 0]], [[0, 0]]], [[[0, 0]], [[0, 0], [1, 0]]]],
            "B": [[[[0, 0]], [[0.5, 0]]], [[[0.5, 0]], [[0, 0]]]],
            "Gamma": [[[1, 0], [0, 0]], [[0, 0], [1, 0]]],
        },
        "hbar": [1e-2, 1e-3],
        "domain": [-2.0, 2.0],
    },
}


def _complex(v, where: str) -> complex:
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return complex(v)
    if isinstance(v, (list, tuple)) and len(v) == 2 and all(
        isinstance(t, (int, float)) and not isinstance(t, bool) for t in v
    ):
        return complex(v[0], v[1])
    raise SpecError(f"{where}: expected a number or [re, im], got {v!r}")


def _poly_matrix(entries, label: str) -> list[list[np.ndarray]]:
    if not isinstance(entries, list) or not entries or not all(isinstance(r, list) for r in entries):
        raise SpecError(f"{label}: expected a square array of coefficient lists")
    n = len(entries)
    out = []
    for i, row in enumerate(entries):
        if len(row) != n:
            raise SpecError(f"{label}: row {i} has {len(row)} entries, expected {n}")
        crow = []
        for j, coeffs in enumerate(row):
            if not isinstance(coeffs, list) or not coeffs:
                raise SpecError(f"{label}[{i}][{j}]: expected a non-empty coefficient list")
            crow.append(np.array([_complex(c, f"{label}[{i}][{j}]") for c in coeffs]))
        out.append(crow)
    return out


def _poly_eval(coeffs: np.ndarray, x: float) -> complex:
    acc = 0j
    for c in coeffs[::-1]:
        acc = acc * x + c
    return acc


def _poly_deriv(coeffs: np.ndarray) -> np.ndarray:
    if len(coeffs) == 1:
        return np.array([0j])
    return coeffs[1:] * np.arange(1, len(coeffs))


def _check_hermitian_poly(m: list[list[np.ndarray]], label: str) -> None:
    n = len(m)
    for i in range(n):
        for j in range(i, n):
            a, b = m[i][j], m[j][i]
            size = max(len(a), len(b))
            a = np.pad(a, (0, size - len(a)))
            b = np.pad(b, (0, size - len(b)))
            if np.max(np.abs(a - np.conj(b))) > 1e-12 * max(1.0, float(np.max(np.abs(a)))):
                raise SpecError(f"{label} is not Hermitian: entry ({i},{j}) vs ({j},{i})")


def polynomial_problem(doc: dict, domain) -> PencilProblem:
    """Problem with polynomial K(x), B(x) (coefficients lowest degree first) and constant Gamma."""
    if not isinstance(doc, dict):
        raise SpecError("polynomial: expected an object with K, B, Gamma")
    for key in ("K", "B", "Gamma"):
        if key not in doc:
            raise SpecError(f"polynomial: missing {key}")
    km = _poly_matrix(doc["K"], "K")
    bm = _poly_matrix(doc["B"], "B")
    n = len(km)
    if len(bm) != n:
        raise SpecError(f"B has dimension {len(bm)}, K has {n}")
    graw = doc["Gamma"]
    if not isinstance(graw, list) or len(graw) != n or any(not isinstance(r, list) or len(r) != n for r in graw):
        raise SpecError(f"Gamma must be a {n}x{n} array")
    gamma = np.array([[_complex(v, f"Gamma[{i}][{j}]") for j, v in enumerate(r)] for i, r in enumerate(graw)])
    _check_hermitian_poly(km, "K")
    _check_hermitian_poly(bm, "B")
    dkm = [[_poly_deriv(c) for c in row] for row in km]

    def build(mat):
        def f(x):
            return np.array([[_poly_eval(c, x) for c in row] for row in mat], dtype=complex)
        return f

    return PencilProblem(K=build(km), B=build(bm), Gamma=gamma, domain=tuple(domain), dK=build(dkm),
                         name="polynomial", pair_hint=doc.get("pair_hint"))


def problem_from_spec(spec: dict) -> PencilProblem:
    """Build the problem described by a parsed problem document."""
    if not isinstance(spec, dict):
        raise SpecError("problem document must be a JSON object")
    model = spec.get("model")
    domain = spec.get("domain")
    if domain is not None:
        if not (isinstance(domain, list) and len(domain) == 2 and all(isinstance(v, (int, float)) for v in domain)):
            raise SpecError("domain must be [x_lo, x_hi]")
        domain = (float(domain[0]), float(domain[1]))
    if model == "builtin":
        b = spec.get("builtin")
        if not isinstance(b, dict) or b.get("name") not in BUILTINS:
            raise SpecError(f"builtin.name must be one of {sorted(BUILTINS)}")
        params = b.get("params", {}) or {}
        if not isinstance(params, dict):
            raise SpecError("builtin.params must be an object")
        kwargs = {}
        for key, val in params.items():
            if not isinstance(val, (int, float)) or isinstance(val, bool) or not math.isfinite(val):
                raise SpecError(f"builtin.params.{key} must be a finite number")
            kwargs[key] = float(val)
        if b["name"] == "random4" and "seed" in kwargs:
            kwargs["seed"] = int(kwargs["seed"])
        if domain is not None:
            kwargs["domain"] = domain
        try:
            return BUILTINS[b["name"]](**kwargs)
        except TypeError as exc:
            raise SpecError(f"builtin {b['name']}: {exc}") from exc
    if model == "polynomial":
        if domain is None:
            raise SpecError("polynomial model needs a domain")
        return polynomial_problem(spec.get("polynomial"), domain)
    raise SpecError("model must be 'builtin' or 'polynomial'")
