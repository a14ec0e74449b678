"""Command-line front end: presets for the headline scenarios, JSON configs,
CSV/JSON emission, and deterministic parameter sweeps.

Every run writes a manifest JSON next to its outputs recording the fully
resolved parameters and the package version, so any CSV can be regenerated
bit-identically from its manifest alone.  Times in CSV files are in units of
2 pi / g; config time spans use the same unit (key ``t_end_over_2pi_g``).
"""

import argparse
import concurrent.futures
import csv
import dataclasses
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import ConfigError, IntegrationError, TruncationError, __version__
from . import adiabatic, fidelity, fock_oracle, semiclassical
from .params import (
    RegimeThresholds,
    SystemParams,
    from_dimensionless,
    hal_displaced_squeezed,
    load_params,
    load_thresholds,
    n_threshold,
    regime_report,
)
from .states import Cat, Coherent, DisplacedSqueezed, Fock, mean_photon_number

_REFERENCE = {"g": 1.0, "ratio_g_over_dw": 1e-2, "ratio_wm_over_g": 1e-3}

_TOP_KEYS = {"params", "state", "run", "sweep", "hal_map", "oracle", "output"}
_RUN_KEYS = {"t_end_over_2pi_g", "window_over_2pi_g", "n_samples", "rtol", "atol"}
_STATE_KEYS = {"family", "n", "alpha_re", "alpha_im", "parity", "eta_re", "eta_im"}
_SWEEP_KEYS = {"axis", "values", "n_values"}
_HAL_KEYS = {"alpha_values", "r_values"}
_ORACLE_KEYS = {"n_values", "t_end", "n_times"}
_OUTPUT_KEYS = {"prefix"}


def _check_keys(block, allowed, where):
    unknown = set(block) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")


def load_config(path):
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    validate_config(data)
    return data


def validate_config(data):
    _check_keys(data, _TOP_KEYS, "config")
    for key, allowed in (
        ("run", _RUN_KEYS),
        ("state", _STATE_KEYS),
        ("sweep", _SWEEP_KEYS),
        ("hal_map", _HAL_KEYS),
        ("oracle", _ORACLE_KEYS),
        ("output", _OUTPUT_KEYS),
    ):
        block = data.get(key, {})
        if not isinstance(block, dict):
            raise ConfigError(f"config block {key!r} must be a JSON object")
        _check_keys(block, allowed, f"config block {key!r}")


def parse_state(block):
    """Input state from its config block."""
    family = block.get("family")
    alpha = complex(block.get("alpha_re", 0.0), block.get("alpha_im", 0.0))
    try:
        if family == "fock":
            return Fock(int(block["n"]))
        if family == "coherent":
            return Coherent(alpha)
        if family == "cat":
            return Cat(alpha=alpha, parity=int(block.get("parity", 1)))
        if family == "displaced_squeezed":
            eta = complex(block.get("eta_re", 0.0), block.get("eta_im", 0.0))
            return DisplacedSqueezed(alpha=alpha, eta=eta)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad state block: {exc}") from exc
    raise ConfigError(f"unknown state family: {family!r}")


def crossing_time(p):
    """First time the mirror reaches the degeneracy point, from the
    undepleted-drive mirror orbit: cos(omega_m t) = 1 - 2 n_thr / n_bar."""
    ratio = p.n_bar / n_threshold(p)
    if ratio <= 1.0:
        return None
    return math.acos(1.0 - 2.0 / ratio) / p.omega_m


def _default_t_end(p):
    tc = crossing_time(p)
    if tc is None:
        return 1.2 * 2.0 * math.pi / p.omega_m
    return 2.0 * tc


def _resolve_run(p, run_block):
    t_key = run_block.get("t_end_over_2pi_g")
    t_end = (
        float(t_key) * 2.0 * math.pi / p.g if t_key is not None else _default_t_end(p)
    )
    n_samples = int(run_block.get("n_samples", 2000))
    ctrl = semiclassical.IntegratorControls(
        rtol=float(run_block.get("rtol", 1e-10)),
        atol=float(run_block.get("atol", 1e-12)),
        n_samples=n_samples,
    )
    window = run_block.get("window_over_2pi_g")
    if window is not None:
        # dense sampling of [start, end] only, anchored by the t = 0 start
        start, end = (float(w) * 2.0 * math.pi / p.g for w in window)
        if not (0.0 < start < end):
            raise ConfigError("window_over_2pi_g needs 0 < start < end")
        t_samples = np.concatenate([[0.0], np.linspace(start, end, n_samples)])
    else:
        t_samples = np.linspace(0.0, t_end, n_samples)
    return t_samples, ctrl


def _write_manifest(out_dir, prefix, command, config, params, outputs):
    manifest = {
        "command": command,
        "config": config,
        "resolved_params": dataclasses.asdict(params) if params is not None else None,
        "version": __version__,
        "outputs": [str(o) for o in outputs],
    }
    path = out_dir / f"{prefix}_manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _write_csv(path, columns, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow(
                [x if isinstance(x, str) else format(x, ".17g") for x in row]
            )


def cmd_simulate(config, out_dir):
    p = load_params(config["params"])
    t_samples, ctrl = _resolve_run(p, config.get("run", {}))
    prefix = config.get("output", {}).get("prefix", "simulate")
    traj = semiclassical.integrate(p, t_samples[-1], ctrl=ctrl, t_samples=t_samples)
    out = out_dir / f"{prefix}.csv"
    semiclassical.write_trajectory_csv(traj, out)
    _write_manifest(out_dir, prefix, "simulate", config, p, [out])
    return [out]


def cmd_fidelity(config, out_dir):
    p = load_params(config["params"])
    state = parse_state(config.get("state", {}))
    t_samples, ctrl = _resolve_run(p, config.get("run", {}))
    prefix = config.get("output", {}).get("prefix", "fidelity")
    traj = semiclassical.integrate(p, t_samples[-1], ctrl=ctrl, t_samples=t_samples)
    trace = fidelity.fidelity_trace(traj, state)
    out = out_dir / f"{prefix}.csv"
    fidelity.write_fidelity_csv(trace, out)
    _write_manifest(out_dir, prefix, "fidelity", config, p, [out])
    return [out]


def _sweep_point(payload):
    """One sweep point: peak fidelities for a (state, n_ratio) combination.

    Top-level so process pools can pickle it; returns plain floats only.
    """
    params_block, state_block, axis, value, run_block = payload
    params_block = dict(params_block)
    state_block = dict(state_block)
    if axis == "n":
        state_block["n"] = int(value)
    elif axis == "n_ratio":
        params_block["n_ratio"] = float(value)
    elif axis == "alpha":
        state_block["alpha_re"] = float(value)
        state_block["alpha_im"] = 0.0
    elif axis == "r":
        state_block["eta_re"] = float(value)
        state_block["eta_im"] = 0.0
    else:
        raise ConfigError(f"unknown sweep axis: {axis!r}")
    state = parse_state(state_block)
    params_block["n_bar"] = mean_photon_number(state)
    p = load_params(params_block)
    t_samples, ctrl = _resolve_run(p, run_block)
    traj = semiclassical.integrate(p, t_samples[-1], ctrl=ctrl, t_samples=t_samples)
    trace = fidelity.fidelity_trace(traj, state)
    return trace.peak_mov(), trace.peak_fix()


def cmd_sweep(config, out_dir, workers=1):
    sweep = config.get("sweep", {})
    axis = sweep.get("axis")
    values = sweep.get("values")
    if axis is None or not values:
        raise ConfigError("sweep block needs a nonempty axis and values")
    n_values = sweep.get("n_values")  # optional outer Fock-number series
    prefix = config.get("output", {}).get("prefix", "sweep")
    params_block = dict(config["params"])
    state_block = dict(config.get("state", {}))
    run_block = config.get("run", {})
    outer = n_values if n_values else [state_block.get("n")]
    payloads = []
    for n in outer:
        sb = dict(state_block)
        if n is not None:
            sb["n"] = int(n)
        for v in values:
            payloads.append((params_block, sb, axis, v, run_block))
    if workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_point, payloads))
    else:
        results = [_sweep_point(pl) for pl in payloads]
    rows = []
    peaks = {}
    for (pb, sb, ax, v, rb), (pk_mov, pk_fix) in zip(payloads, results):
        n = sb.get("n")
        peaks[(n, v)] = pk_mov
        rows.append([n if n is not None else "", v, pk_mov, pk_fix])
    # flag whether the peak fidelity decreases as the Fock number grows at
    # the same sweep value (the fidelity bound scales with the photon number)
    for row in rows:
        n, v = row[0], row[1]
        smaller = [m for (m, u) in peaks if u == v and m is not None and n != "" and m < n]
        if not smaller:
            row.append("")
        else:
            ok = all(peaks[(n, v)] < peaks[(m, v)] for m in smaller)
            row.append("pass" if ok else "fail")
    out = out_dir / f"{prefix}.csv"
    _write_csv(
        out, ("n", axis, "peak_F_mov", "peak_F_fix", "monotone_in_n"), rows
    )
    _write_manifest(out_dir, prefix, "sweep", config, None, [out])
    return [out]


def cmd_hal_map(config, out_dir):
    block = config.get("hal_map", {})
    alphas = block.get("alpha_values", list(np.round(np.arange(0.0, 20.01, 0.25), 10)))
    rs = block.get("r_values", list(np.round(np.arange(0.0, 3.001, 0.05), 10)))
    prefix = config.get("output", {}).get("prefix", "hal_map")
    rows = []
    for a in alphas:
        for r in rs:
            if a == 0.0 and r == 0.0:
                rows.append([a, r, math.nan, math.nan])
                continue
            # dphi = angle(eta) - 2 angle(alpha); alpha real positive here
            h0 = hal_displaced_squeezed(complex(a), complex(r))
            hpi = hal_displaced_squeezed(complex(a), complex(r) * np.exp(1j * math.pi))
            rows.append([a, r, math.log10(h0), math.log10(hpi)])
    out = out_dir / f"{prefix}.csv"
    _write_csv(out, ("alpha", "r", "log10_hal_dphi0", "log10_hal_dphipi"), rows)
    _write_manifest(out_dir, prefix, "hal-map", config, None, [out])
    return [out]


def cmd_oracle(config, out_dir):
    block = config.get("oracle", {})
    n_values = [int(n) for n in block.get("n_values", (4, 6, 8))]
    t_end = float(block.get("t_end", 40.0))
    n_times = int(block.get("n_times", 40))
    prefix = config.get("output", {}).get("prefix", "oracle")
    outputs = []
    last_params = None
    for n in n_values:
        p = from_dimensionless(
            g=1.0, r_wc=0.1, r_sm=0.05, n_ratio=3.0, n_bar=float(n)
        )
        last_params = p
        report, curves = fock_oracle.compare_with_semiclassical(
            p, Fock(n), t_end, n_times=n_times, with_curves=True
        )
        jpath = out_dir / f"{prefix}_N{n}.json"
        jpath.write_text(report.to_json() + "\n")
        cpath = out_dir / f"{prefix}_N{n}_curves.csv"
        _write_csv(
            cpath,
            ("t_over_2pi_g", "n2_exact_over_n", "n2_semiclassical_over_n", "fidelity_exact"),
            [
                [
                    curves["times"][k] * p.g / (2.0 * math.pi),
                    curves["n2_exact"][k],
                    curves["n2_semiclassical"][k],
                    curves["fidelity_exact"][k],
                ]
                for k in range(len(curves["times"]))
            ],
        )
        outputs += [jpath, cpath]
    _write_manifest(out_dir, prefix, "oracle", config, last_params, outputs)
    return outputs


def cmd_check(config, out_dir):
    p = load_params(config["params"])
    state = parse_state(config.get("state", {}))
    thresholds = RegimeThresholds()
    if "thresholds" in config.get("params", {}):
        thresholds = load_thresholds(config["params"]["thresholds"])
    report = regime_report(p, state, thresholds)
    prefix = config.get("output", {}).get("prefix", "check")
    out = out_dir / f"{prefix}_regime.json"
    out.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
    _write_manifest(out_dir, prefix, "check", config, p, [out])
    return [out]


def _reference_params_block(n_ratio, n_bar):
    return dict(_REFERENCE, n_ratio=n_ratio, n_bar=n_bar)


def _transfer_window(n_ratio):
    """2x the first degeneracy-crossing time, in units of 2 pi / g, at the
    reference ratios (omega_m = 1e-3 g)."""
    t_cross = math.acos(1.0 - 2.0 / n_ratio) / (_REFERENCE["ratio_wm_over_g"] * _REFERENCE["g"])
    return 2.0 * t_cross * _REFERENCE["g"] / (2.0 * math.pi)


def preset_configs(name):
    """(command, config) pairs reproducing the headline scenarios."""
    if name == "fig3":
        # mirror phase-space orbits below, at, and above threshold
        return [
            (
                "simulate",
                {
                    "params": _reference_params_block(ratio, 100.0),
                    "run": {"t_end_over_2pi_g": 1.2 * 1000.0, "n_samples": 4000},
                    "output": {"prefix": f"fig3_ratio{ratio:g}"},
                },
            )
            for ratio in (1.0, 1.4, 2.0)
        ]
    if name == "fig4":
        return [
            (
                "simulate",
                {
                    "params": _reference_params_block(5.0, 100.0),
                    "run": {"t_end_over_2pi_g": _transfer_window(5.0)},
                    "output": {"prefix": "fig4_populations"},
                },
            )
        ]
    if name == "fig5a":
        return [
            (
                "fidelity",
                {
                    "params": _reference_params_block(5.0, 100.0),
                    "state": {"family": "fock", "n": 100},
                    "run": {"t_end_over_2pi_g": _transfer_window(5.0)},
                    "output": {"prefix": "fig5a_fock100"},
                },
            )
        ]
    if name == "fig5b":
        return [
            (
                "sweep",
                {
                    "params": _reference_params_block(5.0, 100.0),
                    "state": {"family": "fock", "n": 100},
                    "sweep": {
                        "axis": "n_ratio",
                        "values": [1.5, 2.0, 3.0, 4.0, 5.0],
                        "n_values": [100, 200, 500],
                    },
                    "output": {"prefix": "fig5b_peak_fidelity"},
                },
            )
        ]
    if name == "fig6":
        window = _transfer_window(5.0)
        return [
            (
                "fidelity",
                {
                    "params": _reference_params_block(5.0, 100.0),
                    "state": {"family": "cat", "alpha_re": 10.0, "parity": 1},
                    "run": {"t_end_over_2pi_g": window, "n_samples": 8000},
                    "output": {"prefix": "fig6_cat_full"},
                },
            ),
            # dense zoom over the post-transfer F_fix oscillation
            (
                "fidelity",
                {
                    "params": _reference_params_block(5.0, 100.0),
                    "state": {"family": "cat", "alpha_re": 10.0, "parity": 1},
                    "run": {
                        "window_over_2pi_g": [0.75 * window, 0.75 * window + 1.0],
                        "n_samples": 8000,
                    },
                    "output": {"prefix": "fig6_cat_zoom"},
                },
            ),
        ]
    if name == "fig7":
        return [("hal-map", {"output": {"prefix": "fig7_hal_map"}})]
    if name == "fig8":
        window = _transfer_window(5.0)
        return [
            (
                "fidelity",
                {
                    "params": _reference_params_block(5.0, 100.0),
                    "state": {"family": "coherent", "alpha_re": 10.0},
                    "run": {"t_end_over_2pi_g": window},
                    "output": {"prefix": "fig8_coherent"},
                },
            ),
            (
                "fidelity",
                {
                    "params": _reference_params_block(5.0, 100.0),
                    "state": {
                        "family": "displaced_squeezed",
                        "alpha_re": 0.93,
                        "eta_re": 1.0,
                    },
                    "run": {"t_end_over_2pi_g": window},
                    "output": {"prefix": "fig8_displaced_squeezed"},
                },
            ),
        ]
    raise ConfigError(f"unknown preset: {name!r}")


_COMMANDS = {
    "simulate": cmd_simulate,
    "fidelity": cmd_fidelity,
    "sweep": cmd_sweep,
    "hal-map": cmd_hal_map,
    "oracle": cmd_oracle,
    "check": cmd_check,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="dynres",
        description="Cavity-cavity state transfer through a vibrating mirror.",
    )
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("--config", type=Path, help="JSON run configuration")
    parser.add_argument(
        "--preset",
        choices=["fig3", "fig4", "fig5a", "fig5b", "fig6", "fig7", "fig8"],
        help="built-in scenario recipe",
    )
    parser.add_argument("--out", type=Path, default=Path("."), help="output directory")
    parser.add_argument("--workers", type=int, default=1, help="sweep parallelism")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.preset is not None:
            jobs = preset_configs(args.preset)
            jobs = [(cmd, cfg) for cmd, cfg in jobs if cmd == args.command]
            if not jobs:
                raise ConfigError(
                    f"preset {args.preset!r} has no {args.command!r} runs"
                )
        elif args.config is not None:
            jobs = [(args.command, load_config(args.config))]
        else:
            raise ConfigError("either --config or --preset is required")
        args.out.mkdir(parents=True, exist_ok=True)
        outputs = []
        for command, config in jobs:
            validate_config(config)
            if command == "sweep":
                outputs += cmd_sweep(config, args.out, workers=args.workers)
            else:
                outputs += _COMMANDS[command](config, args.out)
        for path in outputs:
            print(path)
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (IntegrationError, TruncationError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
