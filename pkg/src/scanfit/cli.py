"""Command-line front end.

Subcommands: ``fit`` (scan file to reduced state-space model), ``analyze``
(model or composition plan to mode/participation reports), ``sweep``
(scaling sweep with mode tracking and crossing detection), and ``oracle
gen`` (synthetic truth plant plus scan for end-to-end checks).

Exit codes: 0 on full success, 1 when a stage did not converge or raised
a result flag (non-converged fit, sample-rate violation, low-confidence
eigenvectors, failed sweep points), 2 for malformed files or arguments.
All file outputs are byte-reproducible for identical inputs and flags;
per-round wall times are only written into trace files with ``--timing``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .adaptive import FitConfig, FitTrace, fit_adaptive
from .composition import compose, load_plan, sensitivity_sweep
from .errors import ModelFormatError, PlanError, ScanFormatError, ScanfitError
from .modal import (
    DEFAULT_DOMINANCE_RATIO,
    DEFAULT_PF_THRESHOLD,
    classify_state,
    dominance,
    eigendecompose,
    mode_records,
    modes_csv,
    participation_csv,
    participation_matrix,
)
from .realization import (
    StateSpaceModel,
    assemble_mimo,
    load_model,
    realize_siso,
    save_model,
)
from .reduction import DEFAULT_SIGMA_TOL, balance, hsv_csv, truncate
from .scans import extract_siso, load_scan, validate_nyquist, write_scan
from .synthetic import random_stable_system, sample_response
from .vfit import initial_poles


def _fail(message: str, code: int) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _load_config(path: str, parser: argparse.ArgumentParser, valid: set[str]) -> dict:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            parser.error(f"--config {path}: invalid JSON: {exc}")
    if not isinstance(doc, dict):
        parser.error(f"--config {path}: must be a JSON object")
    for key in doc:
        if key not in valid:
            parser.error(
                f"--config {path}: unknown option '{key}' "
                f"(valid: {', '.join(sorted(valid))})"
            )
    return doc


def _apply_config(parser: argparse.ArgumentParser, args: argparse.Namespace) -> None:
    """Fill unset options from the --config JSON file; explicit flags win."""
    if not getattr(args, "config", None):
        return
    valid = {k for k in vars(args) if k not in ("command", "config", "func")}
    doc = _load_config(args.config, parser, valid)
    for key, value in doc.items():
        if getattr(args, key) is None:
            setattr(args, key, value)


def _default(args: argparse.Namespace, name: str, value) -> None:
    if getattr(args, name) is None:
        setattr(args, name, value)


# ---------------------------------------------------------------------------
# fit


def _fit_entry(response, init, cfg):
    t0 = time.perf_counter()
    model, trace = fit_adaptive(response, init, cfg)
    return model, trace, time.perf_counter() - t0


def cmd_fit(args: argparse.Namespace) -> int:
    scan = load_scan(args.scan, args.format)
    report = validate_nyquist(scan)
    print(f"sample-rate check: {'pass' if report.passed else 'FAIL'} ({report.note})")
    os.makedirs(args.out, exist_ok=True)

    omega_min, omega_max = scan.frequencies[0], scan.frequencies[-1]
    init = initial_poles(args.init_order, omega_min, omega_max)
    cfg = FitConfig(tol=args.tol, inner_iters=args.inner_iters, max_order=args.max_order)

    entries = [
        (o, i) for o in range(scan.n_outputs) for i in range(scan.n_inputs)
    ]
    responses = [extract_siso(scan, o, i) for o, i in entries]
    jobs = args.jobs or min(len(entries), os.cpu_count() or 1)
    if jobs > 1 and len(entries) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            fitted = list(
                pool.map(lambda resp: _fit_entry(resp, init, cfg), responses)
            )
    else:
        fitted = [_fit_entry(resp, init, cfg) for resp in responses]

    all_converged = True
    grid: list[list[StateSpaceModel]] = [
        [None] * scan.n_inputs for _ in range(scan.n_outputs)  # type: ignore[list-item]
    ]
    entry_rms: list[list[float]] = [
        [0.0] * scan.n_inputs for _ in range(scan.n_outputs)
    ]
    for (o, i), (model, trace, seconds) in zip(entries, fitted):
        out_name = scan.labels.outputs[o] if scan.labels else f"y{o}"
        in_name = scan.labels.inputs[i] if scan.labels else f"u{i}"
        stable = "stable" if model.poles.is_stable else "UNSTABLE"
        print(
            f"entry {out_name}<-{in_name}: order {trace.final_order}, "
            f"id_time_s {seconds:.3f}, final_rms {trace.final_rms:.3e}, {stable}"
        )
        if not trace.converged:
            all_converged = False
            print(
                f"  not converged ({trace.stop_reason}); best model kept",
                file=sys.stderr,
            )
        trace.write_jsonl(
            os.path.join(args.out, f"trace_{o}_{i}.jsonl"),
            include_timing=args.timing,
        )
        grid[o][i] = realize_siso(model)
        entry_rms[o][i] = trace.final_rms

    mimo = assemble_mimo(grid)
    bal = balance(mimo)
    reduced = truncate(bal, args.sigma_tol)
    reduced = reduced.with_meta(
        origin="fit",
        scan=os.path.basename(args.scan),
        fit_tolerance=args.tol,
        final_rms=max(max(row) for row in entry_rms),
        entry_rms=entry_rms,
    )
    hsv_csv(bal.hsv, os.path.join(args.out, "hsv.csv"))
    model_path = os.path.join(args.out, "model.json")
    save_model(reduced, model_path)
    eig = reduced.eigenvalues() if reduced.n_states else np.array([])
    stable = bool(np.all(eig.real < 0.0)) if reduced.n_states else True
    print(
        f"reduced model: {reduced.n_states} states "
        f"({mimo.n_states - reduced.n_states} discarded), "
        f"{'stable' if stable else 'UNSTABLE'}, written to {model_path}"
    )
    return 0 if (all_converged and report.passed and stable) else 1


# ---------------------------------------------------------------------------
# analyze


def _is_plan(path: str) -> bool:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError):
        return False
    return isinstance(doc, dict) and "subsystems" in doc


def _canonical_eig_order(lam: np.ndarray) -> np.ndarray:
    return lam[np.lexsort((-np.sign(lam.imag), np.abs(lam.imag), lam.real))]


def _comparison_rows(
    truth: np.ndarray, fitted: np.ndarray
) -> list[tuple[str, str, str, str, str, str]]:
    """Greedy one-to-one pole pairing; unmatched sides keep '-' cells."""
    pairs = []
    for i, tp in enumerate(truth):
        for j, fp in enumerate(fitted):
            pairs.append((abs(fp - tp) / max(abs(tp), 1e-300), i, j))
    pairs.sort()
    match: dict[int, int] = {}
    used_j: set[int] = set()
    for _, i, j in pairs:
        if i in match or j in used_j:
            continue
        match[i] = j
        used_j.add(j)
    rows = []
    for i, tp in enumerate(truth):
        if i in match:
            fp = fitted[match[i]]
            err = 100.0 * abs(fp - tp) / max(abs(tp), 1e-300)
            rows.append(
                (repr(float(tp.real)), repr(float(tp.imag)),
                 repr(float(fp.real)), repr(float(fp.imag)),
                 f"{err:.4f}", classify_state(fp))
            )
        else:
            rows.append(
                (repr(float(tp.real)), repr(float(tp.imag)), "-", "-", "-", "-")
            )
    for j, fp in enumerate(fitted):
        if j not in used_j:
            rows.append(
                ("-", "-", repr(float(fp.real)), repr(float(fp.imag)), "-",
                 classify_state(fp))
            )
    return rows


def cmd_analyze(args: argparse.Namespace) -> int:
    if _is_plan(args.model):
        plan = load_plan(args.model)
        composed = compose(plan)
        model = composed.model
        wb, bb = composed.wb_states, composed.bb_states
    else:
        model = load_model(args.model)
        wb, bb = np.arange(0), np.arange(model.n_states)
    if model.n_states == 0:
        return _fail("model has no states to analyze", 1)
    os.makedirs(args.out, exist_ok=True)
    dec = eigendecompose(model.a)
    records = mode_records(dec, wb, bb, args.dominance_ratio)
    modes_csv(records, os.path.join(args.out, "modes.csv"))
    pf = participation_matrix(dec.right, dec.left)
    participation_csv(
        pf, model.state_labels, os.path.join(args.out, "participation.csv"),
        args.pf_threshold,
    )
    n_unstable = int(np.sum(dec.eigenvalues.real >= 0.0))
    print(
        f"{dec.n_modes} modes ({n_unstable} unstable), reports written to {args.out}"
    )
    if args.truth:
        truth_model = load_model(args.truth)
        truth_eig = _canonical_eig_order(truth_model.eigenvalues())
        rows = _comparison_rows(truth_eig, dec.eigenvalues)
        lines = ["truth_re,truth_im,fitted_re,fitted_im,error_pct,label"]
        lines.extend(",".join(row) for row in rows)
        with open(os.path.join(args.out, "comparison.csv"), "w", newline="") as fh:
            fh.write("\n".join(lines) + "\n")
        print(f"pole comparison against {args.truth} written")
    if dec.low_confidence:
        print(
            f"warning: eigenvectors are ill conditioned "
            f"(cond {dec.condition:.3g}); participation factors are low confidence",
            file=sys.stderr,
        )
        return 1
    return 0


# ---------------------------------------------------------------------------
# sweep


def _parse_factors(spec: str) -> list[float]:
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise ValueError(
                f"factor range '{spec}' must be start:stop:count"
            )
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        if count < 1:
            raise ValueError(f"factor count must be >= 1, got {count}")
        return [float(f) for f in np.linspace(start, stop, count)]
    return [float(tok) for tok in spec.split(",") if tok.strip()]


def cmd_sweep(args: argparse.Namespace) -> int:
    plan = load_plan(args.plan)
    try:
        factors = _parse_factors(args.factors)
    except ValueError as exc:
        return _fail(str(exc), 2)
    if not factors:
        return _fail("no sweep factors given", 2)
    result = sensitivity_sweep(plan, args.subsystem, factors)
    os.makedirs(args.out, exist_ok=True)

    lines = ["factor,mode_id,re,im,zeta,f_hz,dominance"]
    failures = 0
    for pt in result.points:
        if pt.failed:
            failures += 1
            print(f"factor {pt.factor:g} failed: {pt.note}", file=sys.stderr)
            continue
        dec = eigendecompose(pt.model.a)
        pf = participation_matrix(dec.right, dec.left)
        dom = dominance(
            pf, result.wb_states, result.bb_states, args.dominance_ratio
        )
        for mode_id, lam_np in enumerate(pt.eigenvalues):
            near = int(np.argmin(np.abs(dec.eigenvalues - lam_np)))
            lam = complex(lam_np)
            mag = abs(lam)
            zeta = -lam.real / mag if mag > 0.0 else 0.0
            lines.append(
                f"{float(pt.factor)!r},{mode_id},{lam.real!r},{lam.imag!r},"
                f"{zeta!r},{abs(lam.imag) / (2.0 * np.pi)!r},{dom[near]}"
            )
    csv_path = os.path.join(args.out, "sweep.csv")
    with open(csv_path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")

    if result.crossing_factor is None:
        print(f"stable across all {len(factors)} factors; trajectories in {csv_path}")
    else:
        bracket = result.crossing_bracket()
        prev = "start" if bracket[0] is None else f"{bracket[0]:g}"
        print(
            f"instability crossing at factor {result.crossing_factor:g} "
            f"(mode {result.crossing_mode}), bracket ({prev}, "
            f"{result.crossing_factor:g}]; trajectories in {csv_path}"
        )
    return 1 if failures else 0


# ---------------------------------------------------------------------------
# oracle gen


def cmd_oracle_gen(args: argparse.Namespace) -> int:
    plant = random_stable_system(
        args.order, args.inputs, args.outputs, args.seed
    )
    freqs = np.linspace(args.f_min, args.f_max, args.points)
    scan = sample_response(plant, freqs, args.noise, args.sample_rate)
    write_scan(scan, args.out_scan, args.format)
    print(
        f"order-{plant.order} plant (seed {args.seed}): scan with "
        f"{args.points} points written to {args.out_scan}"
    )
    if args.out_model:
        truth = plant.truth.with_meta(
            origin="oracle",
            seed=args.seed,
            truth_poles=[[p.real, p.imag] for p in plant.truth_poles],
        )
        save_model(truth, args.out_model)
        print(f"truth model written to {args.out_model}")
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scanfit",
        description="Identify reduced state-space models from frequency "
        "scans and analyze small-signal stability.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="fit a scan into a reduced MIMO model")
    p_fit.add_argument("scan", help="scan file (.csv or .json)")
    p_fit.add_argument("--out", required=True, help="output directory")
    p_fit.add_argument("--tol", type=float, default=None, help="RMS convergence target")
    p_fit.add_argument("--init-order", type=int, default=None, help="starting pole count")
    p_fit.add_argument("--max-order", type=int, default=None, help="pole count cap")
    p_fit.add_argument("--inner-iters", type=int, default=None,
                       help="vector-fitting rounds per expansion")
    p_fit.add_argument("--sigma-tol", type=float, default=None,
                       help="Hankel ratio below which states are dropped")
    p_fit.add_argument("--jobs", type=int, default=None, help="parallel entry fits")
    p_fit.add_argument("--format", choices=("csv", "json"), default=None,
                       help="scan format override (default: by extension)")
    p_fit.add_argument("--config", default=None, help="JSON file with option defaults")
    p_fit.add_argument("--timing", action="store_true",
                       help="include wall-times in trace files (breaks "
                       "byte-reproducibility)")
    p_fit.set_defaults(func=cmd_fit)

    p_an = sub.add_parser("analyze", help="modal analysis of a model or plan")
    p_an.add_argument("model", help="state-space model JSON or composition plan JSON")
    p_an.add_argument("--out", required=True, help="output directory")
    p_an.add_argument("--truth", default=None,
                      help="truth model JSON for a pole-comparison report")
    p_an.add_argument("--pf-threshold", type=float, default=None,
                      help="participation magnitude cutoff for the report")
    p_an.add_argument("--dominance-ratio", type=float, default=None,
                      help="participation-mass ratio for wb/bb labeling")
    p_an.add_argument("--config", default=None, help="JSON file with option defaults")
    p_an.set_defaults(func=cmd_analyze)

    p_sw = sub.add_parser("sweep", help="scale one subsystem and track modes")
    p_sw.add_argument("plan", help="composition plan JSON")
    p_sw.add_argument("--subsystem", required=True, help="subsystem id to scale")
    p_sw.add_argument("--factors", required=True,
                      help="start:stop:count range or comma list")
    p_sw.add_argument("--out", required=True, help="output directory")
    p_sw.add_argument("--dominance-ratio", type=float, default=None,
                      help="participation-mass ratio for wb/bb labeling")
    p_sw.add_argument("--config", default=None, help="JSON file with option defaults")
    p_sw.set_defaults(func=cmd_sweep)

    p_or = sub.add_parser("oracle", help="synthetic truth systems")
    or_sub = p_or.add_subparsers(dest="oracle_command", required=True)
    p_gen = or_sub.add_parser("gen", help="generate a random plant and scan")
    p_gen.add_argument("--out-scan", required=True, help="scan output path")
    p_gen.add_argument("--out-model", default=None, help="truth model output path")
    p_gen.add_argument("--order", type=int, default=None, help="plant order")
    p_gen.add_argument("--inputs", type=int, default=None, help="input count")
    p_gen.add_argument("--outputs", type=int, default=None, help="output count")
    p_gen.add_argument("--points", type=int, default=None, help="frequency count")
    p_gen.add_argument("--f-min", type=float, default=None, help="lowest frequency (Hz)")
    p_gen.add_argument("--f-max", type=float, default=None, help="highest frequency (Hz)")
    p_gen.add_argument("--noise", type=float, default=None,
                       help="relative measurement noise")
    p_gen.add_argument("--sample-rate", type=float, default=None,
                       help="recorded sample rate (Hz)")
    p_gen.add_argument("--seed", type=int, default=None, help="generator seed")
    p_gen.add_argument("--format", choices=("csv", "json"), default=None,
                       help="scan format override (default: by extension)")
    p_gen.add_argument("--config", default=None, help="JSON file with option defaults")
    p_gen.set_defaults(func=cmd_oracle_gen)

    return parser


_FIT_DEFAULTS = {
    "tol": 1e-6,
    "init_order": 6,
    "max_order": 60,
    "inner_iters": 3,
    "sigma_tol": DEFAULT_SIGMA_TOL,
}

_ANALYZE_DEFAULTS = {
    "pf_threshold": DEFAULT_PF_THRESHOLD,
    "dominance_ratio": DEFAULT_DOMINANCE_RATIO,
}

_SWEEP_DEFAULTS = {"dominance_ratio": DEFAULT_DOMINANCE_RATIO}

_GEN_DEFAULTS = {
    "order": 6,
    "inputs": 1,
    "outputs": 1,
    "points": 200,
    "f_min": 0.1,
    "f_max": 1000.0,
    "noise": 0.0,
    "seed": 0,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _apply_config(parser, args)
    for name, value in {
        cmd_fit: _FIT_DEFAULTS,
        cmd_analyze: _ANALYZE_DEFAULTS,
        cmd_sweep: _SWEEP_DEFAULTS,
        cmd_oracle_gen: _GEN_DEFAULTS,
    }.get(args.func, {}).items():
        _default(args, name, value)
    try:
        return args.func(args)
    except (ScanFormatError, ModelFormatError, PlanError) as exc:
        return _fail(str(exc), 2)
    except ScanfitError as exc:
        # Numerical stage failure on well-formed inputs.
        return _fail(str(exc), 1)
    except (ValueError, IndexError, OSError) as exc:
        return _fail(str(exc), 2)


if __name__ == "__main__":
    sys.exit(main())
