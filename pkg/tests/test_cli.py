import json
import math

import pytest

from repeatersim import cli, noise_engine, validation
from repeatersim.config import ProtocolConfig
from repeatersim.noise_engine import output_state, qber
from repeatersim.runner import SweepSpec, emit_trace_json, sweep_rows, csv_text
from repeatersim.traces import trace_from_json


def base_args(tmp_path, **extra):
    config = {
        "k": 2,
        "dephasing_time": 10.0,
        "p": 0.5,
        "total_km": 20.0,
        "samples": 500,
        "seed": 9,
    }
    config.update(extra)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(config))
    return path


def test_run_writes_summary(tmp_path, capsys):
    config = base_args(tmp_path)
    out_json = tmp_path / "summary.json"
    code = cli.main(
        ["run", "--config", str(config), "--protocol", "MB", "--json", str(out_json)]
    )
    assert code == 0
    summary = json.loads(out_json.read_text())
    assert summary["protocol"] == "MB"
    assert summary["config"]["segments"] == 4
    assert summary["statistics"]["samples"] == 500
    assert summary["statistics"]["secret_key_rate_hz"] > 0


def test_run_noiseless_rate(tmp_path):
    config = base_args(tmp_path, k=1, p=1.0, p_gen=1.0, total_km=2.0, samples=50)
    out_json = tmp_path / "summary.json"
    assert cli.main(["run", "--config", str(config), "--json", str(out_json)]) == 0
    stats = json.loads(out_json.read_text())["statistics"]
    assert stats["mean_rounds"] == 1.0
    assert stats["secret_key_rate_hz"] == pytest.approx(1e5)


def test_flags_override_config(tmp_path):
    config = base_args(tmp_path)
    out_json = tmp_path / "summary.json"
    cli.main(
        ["run", "--config", str(config), "--samples", "200", "--json", str(out_json)]
    )
    assert json.loads(out_json.read_text())["statistics"]["samples"] == 200


def test_unknown_config_field_reported(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"k": 2, "dephasing_time": 1.0, "p": 0.5, "pgen": 0.2}))
    assert cli.main(["run", "--config", str(path)]) == 2


def test_missing_fields_reported(tmp_path, capsys):
    assert cli.main(["run", "--k", "2", "--p", "0.5"]) == 2
    assert "dephasing_time" in capsys.readouterr().err


def test_sweep_csv_deterministic(tmp_path):
    args = [
        "sweep", "--axis", "merge_probability", "--values", "0.5,0.9",
        "--k", "2", "--dephasing-time", "10", "--total-km", "20",
        "--samples", "400", "--seed", "5",
        "--variant", "1:limited", "--variant", "1:unlimited",
    ]
    first = tmp_path / "a.csv"
    second = tmp_path / "b.csv"
    assert cli.main(args + ["--csv", str(first)]) == 0
    assert cli.main(args + ["--csv", str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()
    lines = first.read_text().splitlines()
    assert lines[0].startswith("# units:")
    # 2 axis values x (2 MB variants + 1 SB row)
    assert len(lines) == 2 + 2 * 3


def test_sweep_rows_are_self_describing():
    cfg = ProtocolConfig(
        k=2, dephasing_time=10.0, p=0.5, total_km=20.0, samples=300, seed=1
    )
    spec = SweepSpec(
        axis="total_distance", values=(10.0, 20.0), fixed=cfg, protocols=("MB",)
    )
    rows = sweep_rows(spec)
    assert [row["axis_value"] for row in rows] == [10.0, 20.0]
    for row in rows:
        assert row["segment_km"] == row["total_km"] / row["segments"]
        assert row["p_gen"] == pytest.approx(math.exp(-row["segment_km"] / 22.0))
    text = csv_text(rows)
    assert text == csv_text(rows)


def test_sweep_rejects_unsorted_values():
    cfg = ProtocolConfig(k=2, dephasing_time=10.0, p=0.5, total_km=20.0, samples=10)
    with pytest.raises(Exception):
        SweepSpec(axis="total_distance", values=(20.0, 10.0), fixed=cfg)


def test_emit_trace_roundtrip(tmp_path):
    cfg = ProtocolConfig(
        k=2, dephasing_time=10.0, p=0.5, segment_km=5.0, seed=3,
        patch_min_segments=3,
    )
    text = emit_trace_json("MB", cfg, sample_index=17)
    trace, ledger = trace_from_json(text)
    trace.validate()
    assert ledger is not None and ledger.covers(trace)
    state = output_state(trace, ledger.scaled(cfg.round_seconds), cfg.dephasing_time)
    e_x, e_z = qber(state)
    assert 0.0 <= e_x <= 0.5 and 0.0 <= e_z <= 0.5


def test_emit_trace_cli(tmp_path):
    out = tmp_path / "trace.json"
    code = cli.main([
        "emit-trace", "--protocol", "SB", "--k", "2", "--p", "0.5",
        "--dephasing-time", "10", "--segment-km", "5", "--out", str(out),
    ])
    assert code == 0
    trace, _ = trace_from_json(out.read_text())
    trace.validate()


def test_validate_small_run_passes(capsys):
    code = cli.main(["validate", "--samples", "3000", "--traces", "25"])
    assert code == 0
    output = capsys.readouterr().out
    assert "PASS" in output and "FAIL" not in output


def test_validate_catches_corrupted_engine(monkeypatch):
    # mutation canary: an engine with a wrong time scale must be flagged
    true_lambda = noise_engine.dephasing_lambda
    monkeypatch.setattr(
        noise_engine, "dephasing_lambda", lambda t, T: true_lambda(2.0 * t, T)
    )
    report = validation.ValidationReport()
    validation.validate_noise_engine(report, traces=10)
    assert not report.passed


def test_seed_repetition_reproduces_report():
    a = validation.run_validation(samples=2000, traces=10, seed=77)
    b = validation.run_validation(samples=2000, traces=10, seed=77)
    assert a.checks == b.checks
