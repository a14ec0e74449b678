"""Command-line entry point: configs, outputs, exit codes, reproducibility."""

import csv
import json
import math

import numpy as np
import pytest

from dynres import ConfigError, cli
from dynres.states import Coherent, Fock


def _params_block(n_ratio=3.0, n_bar=6.0):
    # toy scale so every CLI run finishes in well under a second
    return {"g": 1.0, "ratio_g_over_dw": 0.1, "ratio_wm_over_g": 0.05,
            "n_ratio": n_ratio, "n_bar": n_bar}


def _write_config(tmp_path, name, config):
    path = tmp_path / name
    path.write_text(json.dumps(config))
    return path


def _read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_rejects_unknown_top_level_key(tmp_path):
    cfg = _write_config(tmp_path, "bad.json", {"params": _params_block(),
                                               "bogus": {}})
    assert cli.main(["simulate", "--config", str(cfg), "--out", str(tmp_path)]) == 2


def test_rejects_unknown_run_key(tmp_path):
    cfg = _write_config(tmp_path, "bad.json", {
        "params": _params_block(), "run": {"tend": 3.0}})
    assert cli.main(["simulate", "--config", str(cfg), "--out", str(tmp_path)]) == 2


def test_rejects_missing_config_and_preset(capsys):
    assert cli.main(["simulate"]) == 2
    assert "config" in capsys.readouterr().err


def test_rejects_malformed_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    assert cli.main(["simulate", "--config", str(path), "--out", str(tmp_path)]) == 2


def test_rejects_bad_window(tmp_path):
    cfg = _write_config(tmp_path, "w.json", {
        "params": _params_block(),
        "run": {"window_over_2pi_g": [2.0, 1.0], "n_samples": 10},
    })
    assert cli.main(["simulate", "--config", str(cfg), "--out", str(tmp_path)]) == 2


def test_simulate_round_trip(tmp_path):
    cfg = _write_config(tmp_path, "sim.json", {
        "params": _params_block(),
        "run": {"t_end_over_2pi_g": 2.0, "n_samples": 50},
        "output": {"prefix": "run1"},
    })
    assert cli.main(["simulate", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    rows = _read_csv(tmp_path / "run1.csv")
    assert len(rows) == 51
    manifest = json.loads((tmp_path / "run1_manifest.json").read_text())
    assert manifest["command"] == "simulate"
    assert manifest["resolved_params"]["g"] == 1.0
    assert manifest["version"]


def test_fidelity_round_trip(tmp_path):
    cfg = _write_config(tmp_path, "fid.json", {
        "params": _params_block(),
        "state": {"family": "coherent", "alpha_re": 1.0},
        "run": {"t_end_over_2pi_g": 2.0, "n_samples": 50},
        "output": {"prefix": "fid1"},
    })
    assert cli.main(["fidelity", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    rows = _read_csv(tmp_path / "fid1.csv")
    assert rows[0] == ["t_over_2pi_g", "abs_T21", "theta", "F_fix", "F_mov"]
    f_mov = [float(r[4]) for r in rows[1:]]
    assert all(0.0 <= f <= 1.0 for f in f_mov)


def test_check_reports_regime(tmp_path):
    cfg = _write_config(tmp_path, "chk.json", {
        "params": _params_block(),
        "state": {"family": "fock", "n": 6},
        "output": {"prefix": "chk"},
    })
    assert cli.main(["check", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "chk_regime.json").read_text())
    assert "all_pass" in report
    assert "nu" in report


def test_hal_map_limits(tmp_path):
    cfg = _write_config(tmp_path, "hal.json", {
        "hal_map": {"alpha_values": [0.0, 2.0, 10.0], "r_values": [0.0, 1.0]},
        "output": {"prefix": "hal"},
    })
    assert cli.main(["hal-map", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    rows = _read_csv(tmp_path / "hal.csv")[1:]
    table = {(float(r[0]), float(r[1])): (r[2], r[3]) for r in rows}
    # the vacuum corner carries no metrological content
    assert math.isnan(float(table[(0.0, 0.0)][0]))
    # unsqueezed row: HAL = 1/alpha, so log10 = -log10(alpha)
    assert float(table[(10.0, 0.0)][0]) == pytest.approx(-1.0, abs=1e-12)
    # undisplaced column: HAL = sqrt(2) coth(r), independent of dphi
    want = math.log10(math.sqrt(2.0) / math.tanh(1.0))
    assert float(table[(0.0, 1.0)][0]) == pytest.approx(want, abs=1e-12)
    assert float(table[(0.0, 1.0)][1]) == pytest.approx(want, abs=1e-12)


def test_sweep_single_point_matches_fidelity_peak(tmp_path):
    run = {"t_end_over_2pi_g": 2.0, "n_samples": 120}
    sweep_cfg = _write_config(tmp_path, "sw.json", {
        "params": _params_block(),
        "state": {"family": "fock"},
        "sweep": {"axis": "n", "values": [6]},
        "run": run,
        "output": {"prefix": "sw"},
    })
    assert cli.main(["sweep", "--config", str(sweep_cfg), "--out", str(tmp_path)]) == 0
    rows = _read_csv(tmp_path / "sw.csv")
    assert rows[0] == ["n", "n", "peak_F_mov", "peak_F_fix", "monotone_in_n"]
    peak_from_sweep = float(rows[1][2])

    fid_cfg = _write_config(tmp_path, "fd.json", {
        "params": _params_block(n_bar=6.0),
        "state": {"family": "fock", "n": 6},
        "run": run,
        "output": {"prefix": "fd"},
    })
    assert cli.main(["fidelity", "--config", str(fid_cfg), "--out", str(tmp_path)]) == 0
    f_mov = [float(r[4]) for r in _read_csv(tmp_path / "fd.csv")[1:]]
    assert peak_from_sweep == pytest.approx(max(f_mov), abs=1e-12)


def test_sweep_requires_axis(tmp_path):
    cfg = _write_config(tmp_path, "sw.json", {
        "params": _params_block(),
        "sweep": {"values": [1.0]},
    })
    assert cli.main(["sweep", "--config", str(cfg), "--out", str(tmp_path)]) == 2


def test_reruns_are_bit_identical(tmp_path):
    cfg = _write_config(tmp_path, "sim.json", {
        "params": _params_block(),
        "run": {"t_end_over_2pi_g": 1.0, "n_samples": 40},
        "output": {"prefix": "rep"},
    })
    out1, out2 = tmp_path / "a", tmp_path / "b"
    for out in (out1, out2):
        assert cli.main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
    assert (out1 / "rep.csv").read_bytes() == (out2 / "rep.csv").read_bytes()


def test_unreachable_tolerance_exits_numeric_failure(tmp_path, capsys):
    cfg = _write_config(tmp_path, "tight.json", {
        "params": _params_block(),
        "run": {"t_end_over_2pi_g": 1.0, "n_samples": 20,
                "rtol": 1e-30, "atol": 1e-30},
    })
    assert cli.main(["simulate", "--config", str(cfg), "--out", str(tmp_path)]) == 3
    assert "numeric failure" in capsys.readouterr().err


def test_parse_state_families():
    assert cli.parse_state({"family": "fock", "n": 3}) == Fock(3)
    got = cli.parse_state({"family": "coherent", "alpha_re": 1.0, "alpha_im": -0.5})
    assert got == Coherent(1.0 - 0.5j)
    with pytest.raises(ConfigError):
        cli.parse_state({"family": "thermal"})
    with pytest.raises(ConfigError):
        cli.parse_state({"family": "fock"})  # n missing


def test_crossing_time_below_threshold_is_none():
    from dynres.params import load_params

    p = load_params(_params_block(n_ratio=0.5))
    assert cli.crossing_time(p) is None


def test_preset_rejects_unknown_command_pairing():
    with pytest.raises(SystemExit):
        cli.main(["simulate", "--preset", "nope"])
    # fig7 only contains a hal-map job
    assert cli.main(["simulate", "--preset", "fig7"]) == 2


def test_preset_configs_are_valid():
    for name in ("fig3", "fig4", "fig5a", "fig5b", "fig6", "fig7", "fig8"):
        for command, config in cli.preset_configs(name):
            assert command in cli._COMMANDS
            cli.validate_config(config)
