import json

import pytest

from harqthz.cli import (ConfigError, DEFAULT_CONFIG, SWEEP_COLUMNS,
                         load_config, main, run_validation)


def write_config(tmp_path, overrides=None, name="cfg.json"):
    cfg = overrides or {}
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return p


def small_sweep(tmp_path, outdir, episodes=20_000):
    return write_config(tmp_path, {
        "sweep": {"start_dB": 35.0, "stop_dB": 40.0, "step_dB": 5.0},
        "harq": {"round_budgets": [2]},
        "montecarlo": {"episodes": episodes, "seed": 5, "workers": 1},
        "output_dir": str(outdir),
    })


def test_empty_config_uses_defaults(tmp_path):
    cfg = load_config(write_config(tmp_path, {}))
    assert cfg.round_budgets == tuple(DEFAULT_CONFIG["harq"]["round_budgets"])
    assert cfg.main_rate == 3.0 and cfg.secrecy_rate == 2.0
    assert cfg.snr_grid_dB[0] == 30.0 and cfg.snr_grid_dB[-1] == 70.0
    assert cfg.bob_link.distance_m == 20.0
    assert cfg.eve_link.rx_gain_dBi == 50.0


def test_schema_rejects_unknown_and_bad_fields(tmp_path):
    with pytest.raises(ConfigError):
        load_config(write_config(tmp_path, {"no_such_key": 1}))
    with pytest.raises(ConfigError):
        load_config(write_config(tmp_path,
                                 {"montecarlo": {"episodes": -5}}))
    with pytest.raises(ConfigError):
        load_config(write_config(tmp_path,
                                 {"environment": {"relative_humidity": 2.0}}))


def test_bad_json_and_missing_file_exit_one(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["validate", "--config", str(bad)]) == 1
    assert main(["validate", "--config", str(tmp_path / "nope.json")]) == 1


def test_usage_errors_exit_two(tmp_path):
    cfg = write_config(tmp_path, {})
    assert main([]) == 2
    assert main(["sweep", "--config", str(cfg), "--metric", "bogus"]) == 2
    assert main(["optimize", "--config", str(cfg), "--eps-c", "0.0"]) == 2


def test_worker_env_cap(tmp_path, monkeypatch):
    path = write_config(tmp_path, {"montecarlo": {"workers": 8}})
    monkeypatch.setenv("HARQTHZ_MAX_WORKERS", "2")
    assert load_config(path).workers == 2
    monkeypatch.setenv("HARQTHZ_MAX_WORKERS", "zebra")
    with pytest.raises(ConfigError):
        load_config(path)


def test_sweep_outputs_and_determinism(tmp_path):
    outdir = tmp_path / "out"
    cfg = small_sweep(tmp_path, outdir)
    assert main(["sweep", "--config", str(cfg), "--metric", "ltat"]) == 0

    csv = outdir / "ltat_M2.csv"
    lines = csv.read_text().splitlines()
    assert lines[0].startswith("# config_hash=")
    assert lines[1].startswith("# seed=")
    assert lines[2] == ",".join(SWEEP_COLUMNS["ltat"])
    assert len(lines) == 3 + 2  # two sweep points

    script = (outdir / "ltat.gp").read_text()
    for token in script.split("'"):
        if token.endswith(".csv"):
            assert (outdir / token).exists()

    first = csv.read_bytes()
    assert main(["sweep", "--config", str(cfg), "--metric", "ltat"]) == 0
    assert csv.read_bytes() == first


def test_sweep_rows_are_internally_ordered(tmp_path):
    outdir = tmp_path / "out"
    cfg = small_sweep(tmp_path, outdir)
    assert main(["sweep", "--config", str(cfg), "--metric", "pso"]) == 0
    lines = (outdir / "pso_M2.csv").read_text().splitlines()[3:]
    cols = SWEEP_COLUMNS["pso"]
    for ln in lines:
        row = dict(zip(cols, map(float, ln.split(","))))
        assert row["upper"] >= row["exact"] - 1e-12
        assert abs(row["mc"] - row["exact"]) <= 3.0 * row["mc_ci95"] / 1.96 \
            + 1e-4


def test_validate_report(tmp_path):
    outdir = tmp_path / "v"
    cfg = load_config(small_sweep(tmp_path, outdir, episodes=40_000))
    report = run_validation(cfg)
    names = [c["name"] for c in report["checks"]]
    assert "absorption_regression" in names
    assert "mgf_dual_route" in names
    assert report["pass"]


def test_optimize_csv(tmp_path):
    outdir = tmp_path / "opt"
    cfg = write_config(tmp_path, {
        "sweep": {"start_dB": 45.0, "stop_dB": 45.0, "step_dB": 5.0},
        "harq": {"round_budgets": [1]},
        "eve": {"distance_m": 100.0, "rx_gain_dBi": 30.0},
        "optimizer": {"r0_max": 8.0, "coarse_step": 1.0, "refinements": 1},
        "output_dir": str(outdir),
    })
    assert main(["optimize", "--config", str(cfg),
                 "--eps-c", "0.1", "--eps-e", "0.1"]) == 0
    lines = (outdir / "optimize_M1.csv").read_text().splitlines()
    assert lines[2].split(",")[0] == "snr_dB"
    row = lines[3].split(",")
    assert float(row[0]) == 45.0
    assert int(row[6]) == 1  # feasible at these budgets
    assert (outdir / "optimize.gp").exists()
