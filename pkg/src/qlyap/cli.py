"""Command-line front end: runs, sweeps, assumption checks, and demos.

Exit codes: 0 success, 1 invalid configuration, 2 numerical failure with no
usable result, 3 verdict Inconclusive when --require-verdict was asked for.
All file outputs are byte-deterministic for a fixed configuration and seed;
wall-clock timing goes to stderr only.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from .engine import (
    NEG_INF,
    EstimatorOptions,
    ExponentEstimate,
    check_assumptions,
    classical_lyapunov,
    lyapunov_param,
    lyapunov_q,
    lyapunov_q_derivation,
    lyapunov_q_state,
)
from .errors import DegreeExceeded, DomainEscape, NumericalOverflow, QlyapError
from .koopman import LiftSpec, PointSet, gelfand, lift, logistic_dual_check
from .cpmaps import choi_of, homogeneous_components, is_completely_positive, poly_map_from_dict
from .models import PAULI, build_model, spin_field_operator
from .operators import validate_density_matrix


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit 2; config errors are exit 1
        self.exit(1, f"{self.prog}: error: {message}\n")


def _f17(x: float) -> str:
    return format(float(x), ".17g")


def _parse_param(text: str):
    key, _, raw = text.partition("=")
    if not key or not raw:
        raise QlyapError(f"--param expects name=value, got {text!r}")
    try:
        return key, float(raw)
    except ValueError:
        try:
            return key, complex(raw)
        except ValueError as exc:
            raise QlyapError(f"cannot parse parameter value {raw!r}") from exc


def parse_operator_spec(spec: str, model) -> np.ndarray:
    """Turn a state/direction spec into an array for the given model."""
    spec = spec.strip()
    if model.state_kind == "classical_vector":
        try:
            return np.array([float(v) for v in spec.strip("()[] ").split(",")])
        except ValueError as exc:
            raise QlyapError(f"cannot parse classical state {spec!r}") from exc
    dim = None
    if model.initial_state is not None:
        dim = model.initial_state.shape[0]
    elif "dim" in model.params:
        dim = int(model.params["dim"])
    if spec in PAULI:
        if model.name == "two_level":
            return spin_field_operator(spec, int(model.params["cutoff"]))
        return PAULI[spec].copy()
    if spec in ("identity", "eye"):
        if dim is None:
            raise QlyapError("cannot infer the dimension for 'identity'")
        return np.eye(dim, dtype=complex)
    if spec == "zero":
        if dim is None:
            raise QlyapError("cannot infer the dimension for 'zero'")
        return np.zeros((dim, dim), dtype=complex)
    if spec.startswith("diag(") and spec.endswith(")"):
        try:
            entries = [complex(v) for v in spec[5:-1].split(",")]
        except ValueError as exc:
            raise QlyapError(f"cannot parse {spec!r}") from exc
        return np.diag(entries).astype(complex)
    raise QlyapError(
        f"unknown operator spec {spec!r}; use sigma_x/sigma_y/sigma_z, identity, "
        "zero, diag(...), or state"
    )


def _resolve_inputs(model, args) -> Dict:
    """State, direction/functional objects for an estimator run."""
    if args.state is not None and args.state != "default":
        x = parse_operator_spec(args.state, model)
    elif model.initial_state is not None:
        x = model.initial_state
    else:
        raise QlyapError(f"model {model.name!r} needs an explicit --state")
    direction_spec = args.direction or "state"
    y = x if direction_spec == "state" else parse_operator_spec(direction_spec, model)
    return {"x": x, "y": y}


def _run_estimator(model, args) -> ExponentEstimate:
    estimator = args.estimator
    if estimator is None:
        estimator = "parameter" if model.variation_mode == "parameter" else "norm"
    opts = EstimatorOptions(method=args.method)
    if estimator == "parameter":
        if args.eps0 is not None:
            eps0 = args.eps0
        else:
            eps0 = math.pi / 4.0 if model.name == "squeezed" else 0.0
        return lyapunov_param(model, eps0, n_max=args.steps, options=opts)
    inputs = _resolve_inputs(model, args)
    if estimator == "norm":
        if model.state_kind == "classical_vector":
            return classical_lyapunov(model, inputs["x"], inputs["y"], n_max=args.steps,
                                      options=opts)
        return lyapunov_q(model, inputs["x"], inputs["y"], n_max=args.steps, options=opts)
    if estimator == "state":
        if args.functional is None:
            raise QlyapError("estimator 'state' needs --functional <density matrix spec>")
        mu = validate_density_matrix(parse_operator_spec(args.functional, model))
        return lyapunov_q_state(model, inputs["x"], inputs["y"], mu, n_max=args.steps,
                                options=opts)
    if estimator == "derivation":
        return lyapunov_q_derivation(model, inputs["x"], inputs["y"], n_max=args.steps,
                                     options=opts)
    raise QlyapError(f"unknown estimator {estimator!r}")


def _json_value(x: Optional[float]):
    if x is None:
        return None
    if x == NEG_INF:
        return "-inf"
    if math.isnan(x):
        return None
    return float(x)


def _params_for_json(params: dict) -> dict:
    out = {}
    for k, v in params.items():
        if isinstance(v, (int, np.integer)):
            out[k] = int(v)
        elif isinstance(v, (float, np.floating)):
            out[k] = float(v)
        else:
            out[k] = v
    return out


def _write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _csv_of_sequence(est: ExponentEstimate) -> str:
    lines = ["n,log_norm,a_n"]
    for n, log_norm, a_n in est.sequence:
        lines.append(f"{n},{_f17(log_norm)},{_f17(a_n)}")
    return "\n".join(lines) + "\n"


def _summary_dict(model, est: ExponentEstimate, estimator: str, steps: int) -> dict:
    return {
        "model": model.name,
        "params": _params_for_json(model.params),
        "estimator": estimator,
        "estimate": _json_value(est.estimate),
        "stderr": _json_value(est.stderr),
        "verdict": est.verdict,
        "warnings": list(est.warnings),
        "n_max": steps,
        # Deterministic placeholder: byte-identical outputs are part of the
        # interface, so the measured time goes to stderr instead.
        "elapsed_seconds": 0.0,
        "version": __version__,
    }


def _svg_of_sequence(est: ExponentEstimate) -> str:
    width, height = 640, 400
    left, right, top, bottom = 70, 620, 30, 360
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>',
        f'<line x1="{left}" y1="{bottom}" x2="{right}" y2="{bottom}" stroke="#000000"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{bottom}" stroke="#000000"/>',
        f'<text x="{(left + right) // 2}" y="390" font-size="13" text-anchor="middle">n</text>',
        f'<text x="18" y="{(top + bottom) // 2}" font-size="13" '
        f'transform="rotate(-90 18 {(top + bottom) // 2})" text-anchor="middle">a_n</text>',
    ]
    pts = [(int(n), float(a)) for n, a in zip(est.n, est.a_n) if math.isfinite(a)]
    if len(pts) >= 2:
        n_lo, n_hi = pts[0][0], pts[-1][0]
        a_vals = [a for _, a in pts]
        a_lo, a_hi = min(a_vals), max(a_vals)
        if a_hi == a_lo:
            a_lo, a_hi = a_lo - 1.0, a_hi + 1.0
        span_n = max(n_hi - n_lo, 1)

        def sx(n):
            return left + (right - left) * (n - n_lo) / span_n

        def sy(a):
            return bottom - (bottom - top) * (a - a_lo) / (a_hi - a_lo)

        coords = " ".join(f"{sx(n):.2f},{sy(a):.2f}" for n, a in pts)
        parts.append(
            f'<polyline fill="none" stroke="#1f6fb2" stroke-width="1.5" points="{coords}"/>'
        )
        parts.append(f'<text x="{left}" y="{bottom + 16}" font-size="11">{n_lo}</text>')
        parts.append(
            f'<text x="{right}" y="{bottom + 16}" font-size="11" text-anchor="end">{n_hi}</text>'
        )
        parts.append(
            f'<text x="{left - 6}" y="{bottom}" font-size="11" text-anchor="end">{a_lo:.6g}</text>'
        )
        parts.append(
            f'<text x="{left - 6}" y="{top + 8}" font-size="11" text-anchor="end">{a_hi:.6g}</text>'
        )
    else:
        parts.append(
            f'<text x="{(left + right) // 2}" y="{(top + bottom) // 2}" font-size="14" '
            f'text-anchor="middle">insufficient data</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _load_config(args) -> None:
    """Overlay file-config values under any flags the user left unset."""
    if not args.config:
        return
    with open(args.config, "r", encoding="utf-8") as fh:
        cfg = json.load(fh)
    for key, value in cfg.items():
        if key == "params":
            merged = dict(value)
            merged.update(args.params or {})
            args.params = merged
        elif hasattr(args, key) and getattr(args, key) in (None, False):
            setattr(args, key, value)


def _build_from_args(args):
    params = dict(args.params or {})
    coupling = None
    if getattr(args, "coupling", None):
        if args.coupling in PAULI:
            coupling = PAULI[args.coupling]
        else:
            raise QlyapError(f"unknown coupling spec {args.coupling!r}")
    if args.model is None:
        raise QlyapError("--model is required")
    return build_model(args.model, params, cutoff=args.cutoff, dt=args.dt, coupling=coupling)


def cmd_run(args) -> int:
    t0 = time.time()
    model = _build_from_args(args)
    try:
        est = _run_estimator(model, args)
    except (NumericalOverflow, DomainEscape) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    estimator = args.estimator or ("parameter" if model.variation_mode == "parameter" else "norm")
    if args.out:
        _write_text(args.out, _csv_of_sequence(est))
    if args.json:
        _write_text(args.json, json.dumps(_summary_dict(model, est, estimator, args.steps),
                                          indent=2) + "\n")
    if args.svg:
        _write_text(args.svg, _svg_of_sequence(est))
    shown = "-inf" if est.estimate == NEG_INF else (
        "nan" if math.isnan(est.estimate) else f"{est.estimate:.9g}")
    print(f"model={model.name} estimator={estimator} estimate={shown} "
          f"stderr={'n/a' if est.stderr is None else f'{est.stderr:.3g}'} verdict={est.verdict}")
    for w in est.warnings:
        print(f"warning: {w}", file=sys.stderr)
    print(f"elapsed: {time.time() - t0:.3f}s", file=sys.stderr)
    if math.isnan(est.estimate) and len(est.n) == 0:
        print("numerical failure: no usable points in the sequence", file=sys.stderr)
        return 2
    if args.require_verdict and est.verdict == "Inconclusive":
        return 3
    return 0


def _parse_grid(specs: Sequence[str]) -> List:
    grid = []
    for spec in specs:
        name, _, rng = spec.partition("=")
        pieces = rng.split(":")
        if not name or len(pieces) != 3:
            raise QlyapError(f"--grid expects name=start:stop:count, got {spec!r}")
        start, stop, count = float(pieces[0]), float(pieces[1]), int(pieces[2])
        if count < 1:
            raise QlyapError("grid count must be >= 1")
        grid.append((name, np.linspace(start, stop, count)))
    return grid


def cmd_sweep(args) -> int:
    t0 = time.time()
    if not args.grid:
        raise QlyapError("sweep needs at least one --grid name=start:stop:count")
    grid = _parse_grid(args.grid)
    names = [name for name, _ in grid]
    header = names + ["estimate", "stderr", "verdict", "note"]
    rows = [",".join(header)]
    shape = [len(values) for _, values in grid]
    n_irregular = 0
    for flat in range(int(np.prod(shape))):
        idx = np.unravel_index(flat, shape)
        point = {name: float(values[i]) for (name, values), i in zip(grid, idx)}
        params = dict(args.params or {})
        params.update(point)
        cells = [_f17(point[name]) for name in names]
        try:
            model = build_model(args.model, params, cutoff=args.cutoff, dt=args.dt)
            est = _run_estimator(model, args)
            if est.estimate == NEG_INF:
                cells += ["-inf", "", est.verdict, ""]
            elif math.isnan(est.estimate):
                cells += ["", "", est.verdict, ""]
            else:
                cells += [_f17(est.estimate),
                          "" if est.stderr is None else _f17(est.stderr),
                          est.verdict, ""]
            n_irregular += est.verdict == "Irregular"
        except Exception as exc:  # a bad cell must not abort the sweep
            cells += ["", "", "Failed", str(exc).replace(",", ";").replace("\n", " ")]
        rows.append(",".join(cells))
    text = "\n".join(rows) + "\n"
    if args.out:
        _write_text(args.out, text)
    else:
        sys.stdout.write(text)
    print(f"sweep: {int(np.prod(shape))} points, {n_irregular} Irregular", file=sys.stderr)
    print(f"elapsed: {time.time() - t0:.3f}s", file=sys.stderr)
    return 0


def cmd_check(args) -> int:
    model = _build_from_args(args)
    inputs = _resolve_inputs(model, args)
    report = check_assumptions(model, inputs["x"], inputs["y"], n_max=args.steps,
                               user_C=args.user_c)
    payload = {
        "model": model.name,
        "params": _params_for_json(model.params),
        "horizon": report.horizon,
        "c1_applicable": report.c1_applicable,
        "c1_bound": report.c1_bound,
        "c2": report.c2,
        "theta_holds": report.theta_holds,
        "variability_C": report.variability_C,
        "variability_holds": report.variability_holds,
        "user_C": report.user_C,
        "warnings": report.warnings,
        "version": __version__,
    }
    if args.json:
        _write_text(args.json, json.dumps(payload, indent=2) + "\n")
    c1 = "NotApplicable" if not report.c1_applicable else f"{report.c1_bound:.6g}"
    print(f"model={model.name} c1_bound={c1} C2={report.c2:.6g} "
          f"theta_holds={report.theta_holds} variability_C={report.variability_C:.6g} "
          f"variability_holds={report.variability_holds}")
    return 0


def cmd_koopman_demo(args) -> int:
    if args.point_values:
        values = [float(v) for v in args.point_values.split(",")]
    else:
        values = np.linspace(0.0, 1.0, args.points).tolist()
    if any(not (0.0 <= v <= 1.0) for v in values):
        raise QlyapError("demo points must lie in [0, 1]")
    ps = PointSet(values)
    coord = ps.coordinate()
    r = args.r
    worst = 0.0
    for i in range(ps.size):
        lhs, rhs = logistic_dual_check(r, coord, i)
        worst = max(worst, abs(lhs - rhs))
    if r != 0.0:
        spec = LiftSpec(tuple(range(ps.size)), (0.0, r, -r))
        lifted = lift(spec, coord)
        for i in range(ps.size):
            lhs, _ = logistic_dual_check(r, coord, i)
            worst = max(worst, abs(lifted.values[i] - lhs))
            # the lift of the coordinate evaluated through the character
            worst = max(worst, abs(gelfand(lifted, i) - lhs))
    payload = {
        "points": values,
        "r": r,
        "max_discrepancy": worst,
        "version": __version__,
    }
    if args.json:
        _write_text(args.json, json.dumps(payload, indent=2) + "\n")
    print(f"koopman-demo: {ps.size} points, r={r:g}, max discrepancy {worst:.3e}")
    return 0 if worst <= 1e-12 else 2


def cmd_cp_analyze(args) -> int:
    if not args.config:
        raise QlyapError("cp-analyze needs --config with a 'map' entry")
    with open(args.config, "r", encoding="utf-8") as fh:
        cfg = json.load(fh)
    if "map" not in cfg:
        raise QlyapError("cp-analyze config must contain a 'map' object")
    pm = poly_map_from_dict(cfg["map"])
    max_degree = args.max_degree if args.max_degree is not None else int(cfg.get("max_degree", 3))
    try:
        dec = homogeneous_components(pm, pm.dim, max_degree,
                                     seed=5 if args.seed is None else args.seed)
    except DegreeExceeded as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    components = [
        {
            "m": m,
            "n": n,
            "mean_norm": float(np.mean([np.linalg.norm(mat) for mat in mats])),
        }
        for (m, n), mats in sorted(dec.components.items())
    ]
    payload = {
        "dim": pm.dim,
        "max_degree": max_degree,
        "components": components,
        "residual": dec.residual,
        "version": __version__,
    }
    linear = all(len(word) == 1 for _, word in pm.terms)
    if linear:
        payload["is_completely_positive"] = bool(is_completely_positive(pm, pm.dim))
        eigs = np.linalg.eigvalsh(
            (choi_of(pm, pm.dim) + choi_of(pm, pm.dim).conj().T) / 2.0
        )
        payload["choi_eigenvalues"] = [float(v) for v in eigs]
    if args.json:
        _write_text(args.json, json.dumps(payload, indent=2) + "\n")
    found = ", ".join(f"({c['m']},{c['n']})" for c in components) or "none"
    print(f"cp-analyze: dim={pm.dim} components {found} residual {dec.residual:.3e}"
          + (f" completely_positive={payload['is_completely_positive']}" if linear else ""))
    return 0


class _ParamAction(argparse.Action):
    def __call__(self, parser, namespace, value, option_string=None):
        store = getattr(namespace, self.dest) or {}
        try:
            key, val = _parse_param(value)
        except QlyapError as exc:
            parser.error(str(exc))
        store[key] = val
        setattr(namespace, self.dest, store)


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="JSON config file; flags override its values")
    sub.add_argument("--model", help="model name")
    sub.add_argument("--param", dest="params", action=_ParamAction, metavar="NAME=VALUE",
                     help="model parameter (repeatable)")
    sub.add_argument("--state", help="initial state spec (diag(...), sigma_x, ...)")
    sub.add_argument("--direction", help="direction spec, 'state' for the state itself; "
                     "the derivation estimator reads its generator from this flag")
    sub.add_argument("--functional", help="density-matrix spec for the state estimator")
    sub.add_argument("--coupling", help="coupling operator name (mean-field model only)")
    sub.add_argument("--estimator", choices=["norm", "state", "derivation", "parameter"],
                     help="estimator (default: parameter for parameter-mode models, else norm)")
    sub.add_argument("--method", choices=["trend", "tail_mean"], default=None,
                     help="extrapolation method (default trend)")
    sub.add_argument("--steps", type=int, default=None, help="number of iterates (default 200)")
    sub.add_argument("--dt", "--dz", dest="dt", type=float, default=None,
                     help="time (or propagation-length) step")
    sub.add_argument("--cutoff", type=int, default=None, help="boson truncation dimension")
    sub.add_argument("--eps0", type=float, default=None,
                     help="variation-parameter base point (parameter estimator)")
    sub.add_argument("--seed", type=int, default=None, help="seed for random probes")
    sub.add_argument("--out", help="CSV output path")
    sub.add_argument("--json", help="JSON summary output path")
    sub.add_argument("--svg", help="SVG chart output path")
    sub.add_argument("--require-verdict", action="store_true",
                     help="exit 3 when the verdict is Inconclusive")


def build_parser() -> _Parser:
    parser = _Parser(prog="qlyap", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"qlyap {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    run = subs.add_parser("run", help="run one estimator configuration")
    _add_common(run)
    run.set_defaults(func=cmd_run)

    sweep = subs.add_parser("sweep", help="estimate over a parameter grid")
    _add_common(sweep)
    sweep.add_argument("--grid", action="append", metavar="NAME=START:STOP:COUNT",
                       help="swept parameter (repeatable)")
    sweep.set_defaults(func=cmd_sweep)

    check = subs.add_parser("check", help="report growth-bound observations")
    _add_common(check)
    check.add_argument("--user-c", type=float, default=None,
                       help="variability threshold C (default 1.0)")
    check.set_defaults(func=cmd_check)

    demo = subs.add_parser("koopman-demo", help="verify transform identities on a point grid")
    demo.add_argument("--points", type=int, default=64, help="uniform point count on [0, 1]")
    demo.add_argument("--point-values", help="explicit comma-separated points in [0, 1]")
    demo.add_argument("--r", type=float, default=4.0, help="logistic parameter")
    demo.add_argument("--json", help="JSON report output path")
    demo.set_defaults(func=cmd_koopman_demo)

    cp = subs.add_parser("cp-analyze", help="decompose a polynomial operator map")
    cp.add_argument("--config", help="JSON config with a 'map' object")
    cp.add_argument("--max-degree", type=int, default=None, help="total degree bound")
    cp.add_argument("--seed", type=int, default=None, help="probe seed")
    cp.add_argument("--json", help="JSON report output path")
    cp.set_defaults(func=cmd_cp_analyze)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if hasattr(args, "config"):
            _load_config(args)
        for name, fallback in (("steps", 200), ("method", "trend"), ("user_c", 1.0)):
            if getattr(args, name, False) is None:
                setattr(args, name, fallback)
        return args.func(args)
    except QlyapError as exc:
        print(f"qlyap: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"qlyap: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
