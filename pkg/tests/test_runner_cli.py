"""Experiment runner and command line behavior."""

import hashlib
import json
from pathlib import Path

import pytest
import yaml

from qnaps.cli import main
from qnaps.config import load_config
from qnaps.runner import replication_seed, run_experiment


def _write_config(path: Path, **overrides) -> Path:
    doc = {
        "schema": "v1",
        "experiment": "tiny",
        "model": {"builder": "baseline"},
        "run": {"replications": 2, "seed": 424242, "horizon_msec": 2000.0, "warmup_msec": 200.0},
        "outputs": ["csv", "table"],
    }
    doc.update(overrides)
    path.write_text(yaml.safe_dump(doc), encoding="utf-8")
    return path


DEAD_MODEL = {
    "builder": "inline",
    "stations": [
        {"name": "Think", "kind": "delay", "service": {"Loop": {"kind": "deterministic", "value_msec": float("inf")}}},
        {"name": "Work", "kind": "fcfs", "service": {"Loop": {"kind": "exponential", "mean_msec": 1.0}}},
    ],
    "classes": [{"name": "Loop", "kind": "closed", "population": 1, "reference": "Think"}],
    "routing": [
        {"class": "Loop", "from": "Think", "to": "Work"},
        {"class": "Loop", "from": "Work", "to": "Think"},
    ],
}


def test_seed_derivation_is_pure_and_sweep_blind():
    assert replication_seed(424242, 0, 0) == 424242
    assert replication_seed(424242, 0, 3) == 424242 ^ 3
    # same seeds at every sweep index: common random numbers by design
    assert [replication_seed(9, 0, r) for r in range(5)] == [
        replication_seed(9, 4, r) for r in range(5)
    ]
    assert replication_seed(2**64 - 1, 0, 1) < 2**64


def test_run_experiment_outputs_and_manifest(tmp_path):
    cfg = load_config(_write_config(tmp_path / "tiny.yaml"))
    out = tmp_path / "out"
    written = run_experiment(cfg, out_dir=out, jobs=1)
    names = sorted(p.name for p in written)
    assert names == ["tiny.csv", "tiny_manifest.json", "tiny_table.txt"]

    manifest = json.loads((out / "tiny_manifest.json").read_text())
    assert manifest["experiment"] == "tiny"
    assert manifest["base_seed"] == 424242
    assert manifest["replication_seeds"] == [424242, 424242 ^ 1]
    assert manifest["config_sha256"] == cfg.config_sha256
    assert manifest["sweep_parameter"] is None
    assert "wall_clock_seconds" in manifest
    # recorded digests match the bytes on disk
    for name, digest in manifest["outputs"].items():
        assert hashlib.sha256((out / name).read_bytes()).hexdigest() == digest

    csv_lines = (out / "tiny.csv").read_text().splitlines()
    assert csv_lines[0].startswith("experiment,sweep_param")
    assert all(ln.startswith("tiny,,") for ln in csv_lines[1:])


def test_worker_count_never_changes_results(tmp_path):
    cfg = load_config(_write_config(tmp_path / "tiny.yaml", run={
        "replications": 4, "seed": 11, "horizon_msec": 2000.0, "warmup_msec": 200.0,
    }))
    run_experiment(cfg, out_dir=tmp_path / "serial", jobs=1)
    run_experiment(cfg, out_dir=tmp_path / "parallel", jobs=3)
    assert (tmp_path / "serial/tiny.csv").read_bytes() == (tmp_path / "parallel/tiny.csv").read_bytes()


def test_failed_write_leaves_no_partial_outputs(tmp_path):
    cfg = load_config(_write_config(tmp_path / "tiny.yaml"))
    out = tmp_path / "out"
    out.mkdir()
    (out / "tiny_table.txt").mkdir()  # the second write will fail on this
    with pytest.raises(OSError):
        run_experiment(cfg, out_dir=out, jobs=1)
    assert not (out / "tiny.csv").exists()
    assert not (out / "tiny_manifest.json").exists()


def test_cli_happy_path(tmp_path, capsys):
    cfg = _write_config(tmp_path / "tiny.yaml")
    assert main(["--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    seen = capsys.readouterr().out
    assert "wrote" in seen and "tiny.csv" in seen
    assert (tmp_path / "o" / "tiny.csv").exists()


def test_cli_flags_override_config(tmp_path):
    cfg = _write_config(tmp_path / "tiny.yaml")
    out = tmp_path / "o"
    assert main([
        "--config", str(cfg), "--out", str(out),
        "--seed", "7", "--replications", "3", "--format", "csv",
    ]) == 0
    manifest = json.loads((out / "tiny_manifest.json").read_text())
    assert manifest["base_seed"] == 7 and manifest["replications"] == 3
    assert sorted(manifest["outputs"]) == ["tiny.csv"]  # table suppressed
    assert not (out / "tiny_table.txt").exists()


def test_cli_config_errors_exit_2(tmp_path, capsys):
    bad = _write_config(
        tmp_path / "bad.yaml",
        sweep={"parameter": "model.params.no_such_knob", "values": [1, 2]},
    )
    assert main(["--config", str(bad), "--out", str(tmp_path / "o")]) == 2
    err = capsys.readouterr().err
    assert "model.params.no_such_knob" in err  # diagnostics name the path

    assert main(["--config", str(tmp_path / "missing.yaml")]) == 2
    cfg = _write_config(tmp_path / "tiny.yaml")
    assert main(["--config", str(cfg), "--replications", "1"]) == 2
    assert main(["--config", str(cfg), "--format", "svg"]) == 2  # no plot section


def test_cli_deadlock_exits_3(tmp_path, capsys):
    dead = _write_config(tmp_path / "dead.yaml", experiment="dead", model=DEAD_MODEL)
    out = tmp_path / "o"
    assert main(["--config", str(dead), "--out", str(out)]) == 3
    assert "deadlock" in capsys.readouterr().err
    assert not out.exists() or not list(out.iterdir())  # nothing partial


def test_cli_jobs_env_precedence(tmp_path, monkeypatch):
    cfg = _write_config(tmp_path / "tiny.yaml")
    monkeypatch.setenv("QNAPS_JOBS", "not-a-number")
    # flag present: environment is not consulted at all
    assert main(["--config", str(cfg), "--jobs", "1", "--out", str(tmp_path / "a")]) == 0
    # flag absent: the bad environment value is a config error
    assert main(["--config", str(cfg), "--out", str(tmp_path / "b")]) == 2
    monkeypatch.setenv("QNAPS_JOBS", "2")
    assert main(["--config", str(cfg), "--out", str(tmp_path / "c")]) == 0
    assert json.loads((tmp_path / "c/tiny_manifest.json").read_text())["jobs"] == 2
    monkeypatch.delenv("QNAPS_JOBS")
    assert main(["--config", str(cfg), "--jobs", "0"]) == 2


def test_cli_format_all_and_sweep_plot(tmp_path):
    cfg_path = _write_config(
        tmp_path / "sweep.yaml",
        experiment="sweep",
        model={"builder": "baseline"},
        sweep={"parameter": "model.params.arrival_rate", "values": [0.02, 0.05]},
        outputs=["csv"],
        plot={
            "x_label": "arrival rate",
            "y_label": "utilization",
            "series": [{"station": "Controller", "class": "all", "metric": "utilization"}],
        },
    )
    out = tmp_path / "o"
    assert main(["--config", str(cfg_path), "--out", str(out), "--format", "all"]) == 0
    assert (out / "sweep.svg").exists() and (out / "sweep_table.txt").exists()
    table = (out / "sweep_table.txt").read_text()
    assert "model.params.arrival_rate = 0.02" in table
    csv_lines = (out / "sweep.csv").read_text().splitlines()[1:]
    assert {ln.split(",")[2] for ln in csv_lines} == {"0.02", "0.05"}
