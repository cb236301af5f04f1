"""Command-line interface: analyze, transition, oracle, pcf and example."""

from __future__ import annotations

import argparse
import cmath
import json
import math
import re
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .adiabatic import DEFAULT_G, ModeSpec, PhasePieces, norm_factor_from
from .degeneracy import analyze_crossing, extract_parameters, phase_condition_factor
from .errors import AssumptionViolation, NumericFailure, PencilTransitError, SpecError
from .models import EXAMPLES, problem_from_spec
from .oracle import FLUX_TOL, convergence_study, default_x0
from .pcf import RAY_ARGS, pcf_d
from .pencil import matrix_elements, verify_pencil_properties
from .transition import (
    canonical_T,
    check_T_properties,
    general_T,
    polar_T,
    reflection_transmission,
    renumber_T,
)

EXIT_OK, EXIT_ASSUMPTION, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3

# ---------------------------------------------------------------- deterministic JSON


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    return obj


def _encode(obj) -> str:
    if isinstance(obj, dict):
        return "{" + ",".join(json.dumps(k) + ":" + _encode(obj[k]) for k in sorted(obj)) + "}"
    if isinstance(obj, list):
        return "[" + ",".join(_encode(v) for v in obj) + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return "null"
        text = format(obj, ".17g")
        return text if any(c in text for c in ".eE") else text + ".0"
    return json.dumps(obj)


def dumps(obj) -> str:
    """Canonical JSON: sorted keys, 17 significant digits, complex numbers as [re, im]."""
    return _encode(_plain(obj)) + "\n"


# ---------------------------------------------------------------- report schemas

_NUM = {"type": ["number", "null"]}
_CPLX = {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}
_MAT2 = {"type": "array", "items": {"type": "array", "items": _CPLX, "minItems": 2, "maxItems": 2}, "minItems": 2, "maxItems": 2}
_CHECKS = {
    "type": "object",
    "required": ["passed", "items"],
    "properties": {"passed": {"type": "boolean"}, "items": {"type": "array", "items": {"type": "object"}}},
}
_CROSSING = {
    "type": "object",
    "required": ["x0", "Q", "b", "p", "nu", "sigma", "theta_a", "w", "scenario", "N1", "N2"],
    "properties": {
        "x0": _NUM, "Q": _NUM, "b": _NUM, "p": _NUM, "nu": _CPLX, "sigma": _CPLX,
        "theta_a": _NUM, "w": {"enum": [1, -1]}, "scenario": {"type": "string"},
        "N1": _NUM, "N2": _NUM,
    },
}

SCHEMAS = {
    "analyze": {
        "type": "object",
        "required": ["command", "version", "problem", "crossing", "kappa", "structure", "properties", "passed"],
        "properties": {
            "command": {"const": "analyze"},
            "version": {"type": "string"},
            "problem": {"type": "object", "required": ["name", "dim", "domain"]},
            "crossing": _CROSSING,
            "kappa": {"type": "array", "items": {"type": "object", "required": ["hbar", "plus", "minus"]}},
            "structure": {"type": "object"},
            "properties": _CHECKS,
            "passed": {"type": "boolean"},
        },
    },
    "transition": {
        "type": "object",
        "required": ["command", "version", "crossing", "canonical", "checks", "note"],
        "properties": {
            "command": {"const": "transition"},
            "version": {"type": "string"},
            "crossing": _CROSSING,
            "canonical": {
                "type": "object",
                "required": ["matrix", "abs", "det", "theta_prime"],
                "properties": {"matrix": _MAT2, "det": _CPLX},
            },
            "general": {"type": ["object", "null"]},
            "renumbered": {"type": ["object", "null"]},
            "scattering": {"type": ["object", "null"]},
            "checks": _CHECKS,
            "note": {"type": "string"},
        },
    },
    "oracle": {
        "type": "object",
        "required": ["command", "version", "crossing", "rows", "exponent", "monotone", "note"],
        "properties": {
            "command": {"const": "oracle"},
            "version": {"type": "string"},
            "crossing": _CROSSING,
            "rows": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["hbar", "X0", "empirical", "asymptotic", "abs_diff", "error", "flux_drift", "residual"],
                    "properties": {"empirical": _MAT2, "asymptotic": _MAT2},
                },
            },
            "exponent": _NUM,
            "monotone": {"type": "boolean"},
            "note": {"type": "string"},
        },
    },
}

# ---------------------------------------------------------------- helpers


def _load(path: str) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise SpecError(f"cannot read {path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"{path}: invalid JSON ({exc})") from exc


def _options(spec: dict) -> dict:
    opts = spec.get("options") or {}
    if not isinstance(opts, dict):
        raise SpecError("options must be an object")
    out = {"g": DEFAULT_G, "tol": 1e-11, "flux_tol": FLUX_TOL, "X0": None, "gauge": "reference"}
    for key, val in opts.items():
        if key not in out:
            raise SpecError(f"unknown option {key!r}")
        out[key] = val
    if not (isinstance(out["g"], (int, float)) and 0 < out["g"] < 0.25):
        raise SpecError("options.g must lie in (0, 1/4)")
    if out["gauge"] not in ("reference", "phase-condition"):
        raise SpecError("options.gauge must be 'reference' or 'phase-condition'")
    if out["X0"] in ("default", None):
        out["X0"] = None
    elif not isinstance(out["X0"], (int, float)) or out["X0"] <= 0:
        raise SpecError("options.X0 must be a positive number or 'default'")
    return out


def _hbars(spec: dict, override=None) -> list[float]:
    raw = override if override else spec.get("hbar")
    if raw is None:
        return []
    vals = raw if isinstance(raw, list) else [raw]
    out = []
    for v in vals:
        if not isinstance(v, (int, float)) or isinstance(v, bool) or not 0 < v < 1:
            raise SpecError(f"hbar values must lie in (0, 1), got {v!r}")
        out.append(float(v))
    return out


def _setup(spec: dict):
    problem = problem_from_spec(spec)
    problem.validate()
    branches, data = analyze_crossing(problem)
    if _options(spec)["gauge"] == "phase-condition" and not data.trivial:
        factor = phase_condition_factor(data)
        branches = (branches[0], branches[1].with_gauge(lambda x, f=factor: f))
        data = extract_parameters(branches, problem, data.x0)
    return problem, branches, data


def _crossing_dict(data) -> dict:
    return {
        "x0": data.x0, "Q": data.Q, "b": data.b, "p": data.p, "nu": data.nu, "sigma": data.sigma,
        "theta_a": data.theta_a, "w": data.w, "scenario": data.scenario, "N1": data.n1, "N2": data.n2,
        "beta0": data.beta0, "beta_av": [data.beta_av_c0, data.beta_av_c1],
        "tau_kappa": {"plus": data.tau_kappa_plus, "minus": data.tau_kappa_minus},
    }


def _matrix_dict(t) -> dict:
    e = t.entries
    return {"matrix": e, "abs": np.abs(e), "det": t.det}


def _emit(report: dict, args, text: str) -> None:
    if getattr(args, "json", None):
        Path(args.json).write_text(dumps(report), encoding="utf-8")
    print(text)


def _fmt(z: complex) -> str:
    z = complex(z)
    return f"{z.real:.10g}{z.imag:+.10g}i"


# ---------------------------------------------------------------- commands


def cmd_analyze(args) -> int:
    spec = _load(args.spec)
    problem, branches, data = _setup(spec)
    report = verify_pencil_properties(branches, problem)
    me = matrix_elements(branches, problem, data.x0)
    structure = {
        "Kp12_at_x0": abs(me.Kp[0, 1]),
        "Kp21_at_x0": abs(me.Kp[1, 0]),
        "slope_check": me.slope_check,
        "derivative_check": me.derivative_check,
        "tolerance": me.check_tolerance,
        "passed": bool(me.checks_passed and abs(me.Kp[0, 1]) <= 1e-8 * max(1.0, abs(me.Kp[0, 0]))),
    }
    kappa = []
    for h in _hbars(spec, getattr(args, "hbar", None)):
        kp, km = data.kappa(h)
        kappa.append({"hbar": h, "plus": kp, "minus": km})
    passed = report.passed and structure["passed"]
    out = {
        "command": "analyze",
        "version": __version__,
        "problem": {"name": problem.name, "dim": problem.dim, "domain": list(problem.domain)},
        "crossing": _crossing_dict(data),
        "kappa": kappa,
        "structure": structure,
        "properties": report.as_dict(),
        "passed": passed,
    }
    lines = [
        f"problem   {problem.name} (n={problem.dim}) on [{problem.domain[0]:g}, {problem.domain[1]:g}]",
        f"crossing  x0={data.x0:.12g}  Q={data.Q:.12g}  b={data.b:.12g}  p={data.p:.12g}",
        f"          nu={_fmt(data.nu)}  w={data.w:+d}  theta_a={data.theta_a:.12g}  sigma={_fmt(data.sigma)}",
        f"scenario  {data.scenario}",
    ]
    for k in kappa:
        lines.append(f"kappa     hbar={k['hbar']:g}: + {_fmt(k['plus'])}  - {_fmt(k['minus'])}")
    lines.append(f"structure |K'12(x0)|={structure['Kp12_at_x0']:.3g}  slope check={me.slope_check:.3g}")
    for item in report.items:
        lines.append(f"  [{'ok' if item.passed else 'FAIL'}] {item.name}: {item.value:.3g} (tol {item.tolerance:.3g})")
    lines.append("all checks passed" if passed else "some checks FAILED")
    _emit(out, args, "\n".join(lines))
    return EXIT_OK if passed else EXIT_ASSUMPTION


def cmd_transition(args) -> int:
    spec = _load(args.spec)
    opts = _options(spec)
    problem, branches, data = _setup(spec)
    canon = canonical_T(data.nu, data.w)
    polar = polar_T(data.nu, data.w)
    checks = check_T_properties(canon, int(np.sign(data.n1)), int(np.sign(data.n2)))
    note = "trivial transition" if data.trivial else data.scenario
    out = {
        "command": "transition",
        "version": __version__,
        "crossing": _crossing_dict(data),
        "canonical": dict(_matrix_dict(canon), theta_prime=polar.theta_prime),
        "general": None,
        "renumbered": None,
        "scattering": None,
        "checks": checks.as_dict(),
        "note": note,
    }
    lines = [f"nu={_fmt(data.nu)}  w={data.w:+d}  ({note})", "canonical T:"]
    lines += ["  " + "  ".join(_fmt(v) for v in row) for row in canon.entries]
    lines.append(f"  det={_fmt(canon.det)}  |t11|={abs(canon.t11):.12g}")
    result = canon
    if args.modes == "general":
        hbars = _hbars(spec, args.hbar)
        if not hbars:
            raise SpecError("general modes need hbar (problem document or --hbar)")
        if not args.xref or len(args.xref) != 2:
            raise SpecError("general modes need --xref X_LEFT X_RIGHT")
        h = hbars[0]
        pieces = PhasePieces(data, branches, problem, h, opts["g"])
        xl, xr = args.xref
        factors = []
        for j in (1, 2):
            for side, xref in ((-1, xl), (1, xr)):
                factors.append(norm_factor_from(pieces, ModeSpec(j, side, False, xref, h), verify_points=5))
        n1m, n1p, n2m, n2p = factors
        result = general_T(canon, n1m, n2m, n1p, n2p)
        out["general"] = dict(_matrix_dict(result), hbar=h, xref=[xl, xr], n={"n1m": n1m, "n2m": n2m, "n1p": n1p, "n2p": n2p})
        lines.append(f"general T (hbar={h:g}, xref={xl:g},{xr:g}):")
        lines += ["  " + "  ".join(_fmt(v) for v in row) for row in result.entries]
    if data.w == -1 and not data.trivial:
        R, T = reflection_transmission(result)
        out["scattering"] = {"R": R, "T": T, "absR2": abs(R) ** 2, "absT2": abs(T) ** 2}
        lines.append(f"R={_fmt(R)}  T={_fmt(T)}  |R|^2+|T|^2={abs(R) ** 2 + abs(T) ** 2:.12g}")
    if args.numbering == "flux":
        ren = renumber_T(result)
        out["renumbered"] = _matrix_dict(ren)
        lines.append("renumbered T:")
        lines += ["  " + "  ".join(_fmt(v) for v in row) for row in ren.entries]
    lines.append("property checks " + ("passed" if checks.passed else "FAILED"))
    _emit(out, args, "\n".join(lines))
    return EXIT_OK if checks.passed else EXIT_NUMERIC


def cmd_oracle(args) -> int:
    spec = _load(args.spec)
    opts = _options(spec)
    problem, branches, data = _setup(spec)
    hbars = _hbars(spec, args.hbar)
    if not hbars:
        raise SpecError("no hbar values: give them in the problem document or with --hbar")
    tol = args.tol if args.tol is not None else float(opts["tol"])
    x_fixed = args.X0 if args.X0 is not None else opts["X0"]

    def rule(h):
        return float(x_fixed) if x_fixed is not None else default_x0(h, problem, data.x0, opts["g"])

    table = convergence_study(problem, data, branches, hbars, rule, tol, opts["g"], min_points=1)
    rows = []
    lines = [f"nu={_fmt(data.nu)}  w={data.w:+d}", "hbar        X0          ||dT||      flux drift  residual    |t11| emp   |t21| emp"]
    for row in table.rows:
        entry = {
            "hbar": row.hbar, "X0": row.X0, "empirical": row.empirical, "asymptotic": row.asymptotic,
            "abs_diff": row.entry_errors, "error": row.error, "flux_drift": row.flux_drift,
            "residual": row.residual, "det": complex(np.linalg.det(row.empirical)),
        }
        if data.w == -1 and row.empirical[1, 1] != 0:
            R = -row.empirical[1, 0] / row.empirical[1, 1]
            T = np.linalg.det(row.empirical) / row.empirical[1, 1]
            entry["scattering"] = {"R": R, "T": T, "absR": abs(R), "absT": abs(T)}
        rows.append(entry)
        lines.append(
            f"{row.hbar:<11.4g} {row.X0:<11.5g} {row.error:<11.4g} {row.flux_drift:<11.3g} {row.residual:<11.3g} "
            f"{abs(row.empirical[0, 0]):<11.8g} {abs(row.empirical[1, 0]):.8g}"
        )
        if "scattering" in entry:
            lines.append(f"            |R|={entry['scattering']['absR']:.8g}  |T|={entry['scattering']['absT']:.8g}")
    exponent = table.exponent if len(hbars) >= 2 else None
    if exponent is not None:
        lines.append(f"fitted exponent {exponent:.4g}")
    if table.note:
        lines.append(table.note)
    out = {
        "command": "oracle",
        "version": __version__,
        "crossing": _crossing_dict(data),
        "rows": rows,
        "exponent": exponent,
        "monotone": table.monotone,
        "note": table.note,
    }
    if args.csv:
        folder = Path(args.csv)
        folder.mkdir(parents=True, exist_ok=True)
        for row, res in zip(table.rows, table.results):
            for j, tr in enumerate(res.traces, start=1):
                (folder / f"trace_hbar{row.hbar:.6g}_col{j}.csv").write_text(tr.to_csv(), encoding="utf-8")
    _emit(out, args, "\n".join(lines))
    return EXIT_OK


_RAY_NAMES = {
    "-45deg": RAY_ARGS[0], "-pi/4": RAY_ARGS[0], "315deg": RAY_ARGS[0],
    "135deg": RAY_ARGS[1], "3pi/4": RAY_ARGS[1],
}


def parse_nu(text: str) -> complex:
    t = text.strip().replace(" ", "").replace("I", "i")
    if not re.fullmatch(r"[0-9eE.+\-ij]+", t) or not t:
        raise SpecError(f"cannot parse nu={text!r}")
    try:
        return complex(t.replace("i", "j"))
    except ValueError:
        raise SpecError(f"cannot parse nu={text!r}") from None


def parse_ray(text: str) -> float:
    t = text.strip().lower()
    if t in _RAY_NAMES:
        return _RAY_NAMES[t]
    try:
        val = float(t[:-3]) * math.pi / 180 if t.endswith("deg") else float(t)
    except ValueError:
        raise SpecError(f"cannot parse ray {text!r}") from None
    for r in RAY_ARGS:
        if abs(val - r) < 1e-9:
            return r
    raise SpecError(f"unsupported ray {text!r}: use -45deg or 135deg")


def cmd_pcf(args) -> int:
    nu = parse_nu(args.nu)
    ray = parse_ray(args.ray)
    r0, r1 = args.range
    if not 0 <= r0 < r1:
        raise SpecError("--range needs 0 <= start < end")
    lines = ["abs_z,re_D,im_D,regime,est_error"]
    for r in np.linspace(r0, r1, args.points):
        z = float(r) * cmath.exp(1j * ray)
        ev = pcf_d(nu, z)
        lines.append(f"{float(r)!r},{ev.value.real!r},{ev.value.imag!r},{ev.regime},{ev.est_error:.3e}")
    text = "\n".join(lines) + "\n"
    if args.csv:
        Path(args.csv).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_example(args) -> int:
    if args.name not in EXAMPLES:
        raise SpecError(f"unknown example {args.name!r}; choose from {sorted(EXAMPLES)}")
    text = dumps(EXAMPLES[args.name])
    if args.json:
        Path(args.json).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _hbar_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad hbar list {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pencil-transit", description="Mode transitions at a crossing of pencil eigenvalues.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="locate the crossing and report its parameters")
    p.add_argument("spec")
    p.add_argument("--hbar", type=_hbar_list, default=None, help="hbar values for the degeneracy points")
    p.add_argument("--json", metavar="PATH")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("transition", help="canonical (and optionally general) transition matrix")
    p.add_argument("spec")
    p.add_argument("--numbering", choices=("smooth", "flux"), default="smooth")
    p.add_argument("--modes", choices=("canonical", "general"), default="canonical")
    p.add_argument("--xref", type=float, nargs=2, metavar=("X_LEFT", "X_RIGHT"))
    p.add_argument("--hbar", type=_hbar_list, default=None)
    p.add_argument("--json", metavar="PATH")
    p.set_defaults(func=cmd_transition)

    p = sub.add_parser("oracle", help="compare with direct integration")
    p.add_argument("spec")
    p.add_argument("--hbar", type=_hbar_list, default=None)
    p.add_argument("--X0", type=float, default=None)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--json", metavar="PATH")
    p.add_argument("--csv", metavar="DIR", help="write every trace as CSV into DIR")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("pcf", help="tabulate D_nu along a ray")
    p.add_argument("--nu", required=True)
    p.add_argument("--ray", default="-45deg")
    p.add_argument("--range", type=float, nargs=2, default=(0.0, 10.0), metavar=("START", "END"))
    p.add_argument("--points", type=int, default=101)
    p.add_argument("--csv", metavar="PATH")
    p.set_defaults(func=cmd_pcf)

    p = sub.add_parser("example", help="print an example problem document")
    p.add_argument("name")
    p.add_argument("--json", metavar="PATH")
    p.set_defaults(func=cmd_example)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return args.func(args)
    except AssumptionViolation as exc:
        print(f"assumption violated: {exc}", file=sys.stderr)
        return EXIT_ASSUMPTION
    except SpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericFailure, PencilTransitError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
