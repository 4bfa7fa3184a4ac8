"""Command-line front end.

Subcommands: ``spectrum`` (exact levels and transition frequencies, optional
simulated pulsed resonance spectrum), ``trace`` (simulated Rabi/Larmor signal
vs RF duration), ``fit`` (two-tone model fit of a trace file), ``sweep``
(Larmor frequency vs field angle), ``sensitivity`` (nuclear vs electron
accumulated-phase comparison).  Outputs are CSV/JSON with the resolved
configuration embedded; exit codes: 0 success, 1 computation error, 2 input
error.
"""

import argparse
import csv
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .analysis import FitParams, angle_sweep, damped_two_tone, fit_rabi_larmor
from .config import (
    apply_overrides,
    engine_config_from_config,
    load_config,
    params_from_config,
)
from .effective import effective_larmor, sensitivity_gain, tan2_coefficient
from .errors import InputError, NvspinError
from .hamiltonian import labeled_spectrum, transition_frequencies
from .sequence import SequenceEngine, TraceSeries

TWO_PI = 2.0 * math.pi

SWEEP_CSV_HEADER = ("theta_deg", "omega_L_fit_kHz", "omega_L_eq6_kHz", "omega_L_exact_kHz")


def _snapshot(cfg: dict, command: str) -> dict:
    return {"version": __version__, "command": command, **cfg}


def _write_json(path: str, payload: dict) -> str:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {path}")
    return path


def _write_csv(path: str, header, rows) -> str:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    print(f"wrote {path}")
    return path


def _out_path(args, name: str) -> str:
    os.makedirs(args.out, exist_ok=True)
    return os.path.join(args.out, name)


def _resolved_config(args, extra_overrides=None) -> dict:
    cfg = load_config(args.config)
    overrides = {
        "seed": args.seed,
        "threads": args.threads,
    }
    overrides.update(extra_overrides or {})
    cfg = apply_overrides(cfg, overrides)
    if cfg["threads"] is None:
        cfg["threads"] = int(os.environ.get("NVSPIN_THREADS", "1"))
    return cfg


def _physics_overrides(args) -> dict:
    ov = {}
    if getattr(args, "b", None) is not None:
        ov["physics.field_mt"] = args.b
    if getattr(args, "theta", None) is not None:
        ov["physics.theta_deg"] = args.theta
    if getattr(args, "phi", None) is not None:
        ov["physics.phi_deg"] = args.phi
    return ov


def _trace_overrides(args) -> dict:
    ov = _physics_overrides(args)
    mapping = {
        "rf_rabi_khz": "sequence.rf_rabi_khz",
        "noise_sigma": "sequence.noise_sigma",
        "frame": "sequence.frame",
        "duration_max_us": "trace.duration_max_us",
        "stride": "trace.stride",
        "oversample": "trace.oversample",
    }
    for attr, key in mapping.items():
        value = getattr(args, attr, None)
        if value is not None:
            ov[key] = value
    return ov


def _parse_float_list(text: str, what: str):
    items = [s for s in text.split(",") if s.strip() != ""]
    try:
        return [float(s) for s in items]
    except ValueError as exc:
        raise InputError(f"cannot parse {what} list {text!r}: {exc}") from exc


# -- commands ---------------------------------------------------------------


def cmd_spectrum(args) -> int:
    cfg = _resolved_config(args, _physics_overrides(args))
    p = params_from_config(cfg)
    dec, labels = labeled_spectrum(p)
    tf = transition_frequencies(p)
    levels = [
        {
            "energy_mhz": dec.eigenvalues[k] / TWO_PI / 1e6,
            "m_s": lab.m_s,
            "m_i": lab.m_i,
            "overlap": lab.overlap,
        }
        for k, lab in enumerate(labels)
    ]
    payload = {
        "config": _snapshot(cfg, "spectrum"),
        "levels": levels,
        "transitions": {
            "f_up_mhz": tf.f_up / 1e6,
            "f_down_mhz": tf.f_down / 1e6,
            "f_r_mhz": tf.f_r / 1e6,
            "f_larmor_ms0_khz": tf.f_larmor_ms0 / 1e3,
            "f_mw_center_mhz": tf.f_mw_center / 1e6,
        },
        "effective_model": {
            "f_larmor_ms0_khz": effective_larmor(p, 0) / TWO_PI / 1e3,
            "f_larmor_ms_minus1_mhz": effective_larmor(p, -1) / TWO_PI / 1e6,
            "f_larmor_ms_plus1_mhz": effective_larmor(p, 1) / TWO_PI / 1e6,
        },
    }
    if args.format == "csv":
        rows = [(lv["energy_mhz"], lv["m_s"], lv["m_i"], lv["overlap"]) for lv in levels]
        _write_csv(_out_path(args, "levels.csv"),
                   ("energy_mhz", "m_s", "m_i", "overlap"), rows)
    _write_json(_out_path(args, "spectrum.json"), payload)

    if args.odmr:
        engine = SequenceEngine(p, engine_config_from_config(cfg))
        span = cfg["odmr"]["span_mhz"] * 1e6
        step = cfg["odmr"]["step_khz"] * 1e3
        center = tf.f_mw_center
        n = int(span / step) + 1
        grid = center - span / 2.0 + step * np.arange(n)
        freqs, signals = engine.simulate_odmr(grid)
        _write_csv(_out_path(args, "odmr.csv"), ("frequency_mhz", "signal"),
                   [(f / 1e6, s) for f, s in zip(freqs, signals)])
    return 0


def _trace_durations(args, engine):
    if getattr(args, "durations", None) is not None:
        return 1e-6 * np.asarray(_parse_float_list(args.durations, "duration"), dtype=float)
    return engine.stroboscopic_durations()


def cmd_trace(args) -> int:
    cfg = _resolved_config(args, _trace_overrides(args))
    p = params_from_config(cfg)
    engine = SequenceEngine(p, engine_config_from_config(cfg))
    trace = engine.simulate_rabi_larmor(durations=_trace_durations(args, engine))
    rows = [(t * 1e6, s) for t, s in zip(trace.durations, trace.signals)]
    if args.format == "json":
        _write_json(_out_path(args, "trace.json"), {
            "config": _snapshot(cfg, "trace"),
            "meta": trace.meta,
            "samples": [{"duration_us": r[0], "signal": r[1]} for r in rows],
        })
        return 0
    csv_path = _write_csv(_out_path(args, "trace.csv"), ("duration_us", "signal"), rows)
    _write_json(_out_path(args, "trace.json"),
                {"config": _snapshot(cfg, "trace"), "meta": trace.meta})
    if args.gnuplot:
        gp = _out_path(args, "trace.gp")
        with open(gp, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(
                "set datafile separator ','\n"
                "set xlabel 'RF duration (us)'\n"
                "set ylabel 'signal'\n"
                f"plot '{os.path.basename(csv_path)}' every ::1 using 1:2 "
                "with linespoints pt 7 ps 0.4 title 'trace'\n"
            )
        print(f"wrote {gp}")
    return 0


def read_trace_csv(path: str) -> TraceSeries:
    """Parse a duration_us,signal CSV; errors carry 1-based line numbers."""
    durations = []
    signals = []
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise InputError(f"cannot read trace file {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise InputError(f"{path}: empty file")
        cols = [c.strip().lower() for c in header]
        if "duration_us" not in cols or "signal" not in cols:
            raise InputError(f"{path}: line 1: header must name duration_us and signal")
        i_t, i_s = cols.index("duration_us"), cols.index("signal")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                durations.append(float(row[i_t]) * 1e-6)
                signals.append(float(row[i_s]))
            except (ValueError, IndexError) as exc:
                raise InputError(f"{path}: line {lineno}: {exc}") from exc
    if not durations:
        raise InputError(f"{path}: no data rows")
    try:
        return TraceSeries(durations=np.asarray(durations), signals=np.asarray(signals),
                           meta={"source": path})
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc


def cmd_fit(args) -> int:
    cfg = _resolved_config(args)
    trace = read_trace_csv(args.trace_file)
    hint_khz = args.rabi_hint_khz
    if hint_khz is None:
        hint_khz = cfg["fit"]["rabi_hint_khz"]
    hint = None if hint_khz is None else TWO_PI * hint_khz * 1e3
    result = fit_rabi_larmor(trace, rabi_hint=hint)
    q = result.params
    payload = {
        "config": _snapshot(cfg, "fit"),
        "input": args.trace_file,
        "params": {
            "amplitude": q.amplitude,
            "decay_rate_per_s": q.decay_rate,
            "rabi_weight": q.rabi_weight,
            "larmor_weight": q.larmor_weight,
            "offset": q.offset,
            "omega_R_khz": q.omega_R / TWO_PI / 1e3,
            "omega_L_khz": q.omega_L / TWO_PI / 1e3,
        },
        "residual_rms": result.residual_rms,
        "covariance_diag": list(result.covariance_diag),
        "iterations": result.iterations,
        "converged": result.converged,
    }
    _write_json(_out_path(args, "fit.json"), payload)
    if args.curve_out:
        tt = np.linspace(trace.durations[0], trace.durations[-1],
                         max(4 * trace.durations.size, 256))
        yy = damped_two_tone(tt, q)
        _write_csv(_out_path(args, "fit_curve.csv"), ("duration_us", "signal"),
                   [(t * 1e6, y) for t, y in zip(tt, yy)])
    return 0


def cmd_sweep(args) -> int:
    overrides = _trace_overrides(args)
    if args.angles is not None:
        overrides["sweep.angles_deg"] = _parse_float_list(args.angles, "angle")
    cfg = _resolved_config(args, overrides)
    angles_deg = cfg["sweep"]["angles_deg"]
    if not angles_deg:
        raise InputError("sweep needs a nonempty angle grid")
    p = params_from_config(cfg)
    engine_cfg = engine_config_from_config(cfg)
    try:
        rows = angle_sweep(p, [math.radians(a) for a in angles_deg],
                           config=engine_cfg, threads=int(cfg["threads"]))
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    table = [
        (
            math.degrees(r.theta),
            r.omega_L_fit / TWO_PI / 1e3,
            r.omega_L_theory / TWO_PI / 1e3,
            r.omega_L_exact / TWO_PI / 1e3,
        )
        for r in rows
    ]
    payload_rows = [
        {
            "theta_deg": t[0],
            "omega_L_fit_kHz": t[1],
            "omega_L_eq6_kHz": t[2],
            "omega_L_exact_kHz": t[3],
            "rabi_weight": r.rabi_weight,
            "larmor_weight": r.larmor_weight,
            "omega_R_fit_khz": r.omega_R_fit / TWO_PI / 1e3,
            "converged": r.converged,
        }
        for t, r in zip(table, rows)
    ]
    if args.format == "json":
        _write_json(_out_path(args, "sweep.json"),
                    {"config": _snapshot(cfg, "sweep"), "rows": payload_rows})
        return 0
    _write_csv(_out_path(args, "sweep.csv"), SWEEP_CSV_HEADER, table)
    _write_json(_out_path(args, "sweep.json"),
                {"config": _snapshot(cfg, "sweep"), "rows": payload_rows})
    return 0


def cmd_sensitivity(args) -> int:
    overrides = _physics_overrides(args)
    if args.t2n_ms is not None:
        overrides["sensitivity.t2n_star_ms"] = args.t2n_ms
    if args.t2_us is not None:
        overrides["sensitivity.t2_star_us"] = args.t2_us
    if args.theta_grid is not None:
        overrides["sensitivity.theta_grid_deg"] = _parse_float_list(args.theta_grid, "angle")
    cfg = _resolved_config(args, overrides)
    sens = cfg["sensitivity"]
    if not sens["theta_grid_deg"]:
        raise InputError("sensitivity needs a nonempty angle grid")
    base = params_from_config(cfg)
    t2n = sens["t2n_star_ms"] * 1e-3
    t2 = sens["t2_star_us"] * 1e-6
    rows = []
    for theta_deg in sens["theta_grid_deg"]:
        p = params_from_config(apply_overrides(cfg, {"physics.theta_deg": theta_deg}))
        rep = sensitivity_gain(p, t2n_star=t2n, t2_star=t2)
        rows.append({
            "theta_deg": theta_deg,
            "omega_nuclear_khz": rep.omega_nuclear / TWO_PI / 1e3,
            "phase_nuclear_rad": rep.phase_nuclear,
            "phase_electron_rad": rep.phase_electron,
            "gain": rep.gain,
        })
    payload = {
        "config": _snapshot(cfg, "sensitivity"),
        "t2n_star_ms": sens["t2n_star_ms"],
        "t2_star_us": sens["t2_star_us"],
        "tan2_coefficient_computed": tan2_coefficient(base),
        "tan2_coefficient_quoted": 52.4,
        "rows": rows,
    }
    if args.format == "csv":
        _write_csv(_out_path(args, "sensitivity.csv"),
                   ("theta_deg", "omega_nuclear_khz", "phase_nuclear_rad",
                    "phase_electron_rad", "gain"),
                   [(r["theta_deg"], r["omega_nuclear_khz"], r["phase_nuclear_rad"],
                     r["phase_electron_rad"], r["gain"]) for r in rows])
    _write_json(_out_path(args, "sensitivity.json"), payload)
    return 0


# -- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nvspin",
        description="15N nuclear-spin dynamics in diamond NV centers",
    )
    parser.add_argument("--version", action="version", version=f"nvspin {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="JSON config file")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--seed", type=int, default=None, help="RNG seed")
    common.add_argument("--threads", type=int, default=None,
                        help="worker threads (default: NVSPIN_THREADS or 1)")
    common.add_argument("--format", choices=("csv", "json"), default=None,
                        help="preferred table format (default: command-specific)")

    physics = argparse.ArgumentParser(add_help=False)
    physics.add_argument("--b", type=float, default=None, help="field magnitude (mT)")
    physics.add_argument("--theta", type=float, default=None, help="field angle (deg)")
    physics.add_argument("--phi", type=float, default=None, help="field azimuth (deg)")

    tracey = argparse.ArgumentParser(add_help=False)
    tracey.add_argument("--rf-rabi-khz", dest="rf_rabi_khz", type=float, default=None)
    tracey.add_argument("--noise-sigma", dest="noise_sigma", type=float, default=None)
    tracey.add_argument("--frame", choices=("rwa", "lab"), default=None)
    tracey.add_argument("--duration-max-us", dest="duration_max_us", type=float, default=None)
    tracey.add_argument("--stride", type=int, default=None,
                        help="RF periods between samples")
    tracey.add_argument("--oversample", type=int, default=None,
                        help="samples per RF period (dense, non-stroboscopic grid)")

    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("spectrum", parents=[common, physics],
                        help="exact levels, transition frequencies, optional ODMR scan")
    sp.add_argument("--odmr", action="store_true", help="also simulate a pulsed ODMR scan")
    sp.set_defaults(func=cmd_spectrum)

    tr = sub.add_parser("trace", parents=[common, physics, tracey],
                        help="simulate signal vs RF duration")
    tr.add_argument("--durations", default=None,
                    help="comma-separated RF durations in us (overrides the grid)")
    tr.add_argument("--gnuplot", action="store_true", help="emit a gnuplot script")
    tr.set_defaults(func=cmd_trace)

    ft = sub.add_parser("fit", parents=[common], help="fit a trace CSV")
    ft.add_argument("trace_file")
    ft.add_argument("--rabi-hint-khz", dest="rabi_hint_khz", type=float, default=None)
    ft.add_argument("--curve-out", action="store_true", help="also write the fitted curve")
    ft.set_defaults(func=cmd_fit)

    sw = sub.add_parser("sweep", parents=[common, physics, tracey],
                        help="Larmor frequency vs field angle")
    sw.add_argument("--angles", default=None, help="comma-separated angles in deg")
    sw.set_defaults(func=cmd_sweep)

    se = sub.add_parser("sensitivity", parents=[common, physics],
                        help="nuclear vs electron accumulated-phase comparison")
    se.add_argument("--t2n-ms", dest="t2n_ms", type=float, default=None)
    se.add_argument("--t2-us", dest="t2_us", type=float, default=None)
    se.add_argument("--theta-grid", dest="theta_grid", default=None,
                    help="comma-separated angles in deg")
    se.set_defaults(func=cmd_sensitivity)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NvspinError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # computation failures map to exit 1
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
