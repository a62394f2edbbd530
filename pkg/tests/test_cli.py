import csv

import numpy as np
import pytest

from pinchrl.cli import EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, main
from pinchrl.config import loads_config
from pinchrl.experiments import cmd_oracle, cmd_sweep, cmd_trace, cmd_train, read_csv, trace_columns

SMALL = """
seed: 3
realizations: 3
env:
  horizon: 12
agent:
  episodes: 2
  batch_size: 4
  warmup_batches: 2
  hidden: [8, 8]
sweep:
  p_bs_dbm: [0, 10, 20]
  beta: [0.05, 0.1]
  retrain: never
trace:
  r_th: [1.0]
oracle:
  resolution: 5.0
"""


@pytest.fixture(scope="module")
def small():
    return loads_config(SMALL)


@pytest.fixture(scope="module")
def trained(small, tmp_path_factory):
    out = tmp_path_factory.mktemp("train")
    cmd_train(small, out)
    return out


def test_train_outputs(trained):
    rows = read_csv(trained / "training.csv")
    assert len(rows) == 2
    assert list(rows[0]) == ["episode", "episode_reward", "mean_rate", "qos_violation_rate", "noise_std"]
    assert (trained / "checkpoint.npz").exists()
    assert (trained / "config.yaml").exists()
    assert len(read_csv(trained / "timing.csv")) == 2


def test_train_csv_reproducible(small, trained, tmp_path):
    cmd_train(small, tmp_path)
    assert (tmp_path / "training.csv").read_bytes() == (trained / "training.csv").read_bytes()


def test_sweep_rows_and_baseline_monotone(small, trained, tmp_path):
    rows = cmd_sweep(small, trained / "checkpoint.npz", tmp_path)
    assert len(rows) == 3 * 2 * 2
    with open(tmp_path / "sweep.csv") as fh:
        header = next(csv.reader(fh))
    assert header == ["p_bs_dbm", "beta", "policy", "mean_rate", "ci95"]
    for beta in (0.05, 0.1):
        fixed = [r[3] for r in rows if r[1] == beta and r[2] == "fixed"]
        assert all(b > a for a, b in zip(fixed, fixed[1:]))
    assert all(np.isfinite(r[3]) and r[3] >= 0 for r in rows)


def test_trace_rows_and_plot(small, trained, tmp_path):
    (summary,) = cmd_trace(small, trained / "checkpoint.npz", tmp_path)
    rows = read_csv(tmp_path / "trace_rth1.csv")
    assert len(rows) == small.env.horizon
    assert list(rows[0]) == trace_columns(small)
    assert list(rows[0])[3] == "x_1_1"
    assert (tmp_path / "trace_rth1.png").stat().st_size > 0
    assert -1.0 <= summary.correlation <= 1.0


def test_oracle_dominates_baseline(small, trained, tmp_path):
    rows = cmd_oracle(small, trained / "checkpoint.npz", tmp_path)
    assert len(rows) == small.env.horizon
    for t, oracle, bound, base, learned in rows:
        assert oracle >= base - 1e-12
        assert learned <= bound + 1e-12  # oracle rate plus its certified slack
    again = tmp_path / "again"
    cmd_oracle(small, trained / "checkpoint.npz", again)
    assert (again / "oracle.csv").read_bytes() == (tmp_path / "oracle.csv").read_bytes()


def test_cli_exit_codes(tmp_path):
    good = tmp_path / "good.yaml"
    good.write_text(SMALL)
    assert main(["eval", "--config", str(good), "--out", str(tmp_path / "e")]) == EXIT_OK
    assert (tmp_path / "e" / "eval.csv").exists()
    bad = tmp_path / "bad.yaml"
    bad.write_text("nonsense_key: 1\n")
    assert main(["eval", "--config", str(bad), "--out", str(tmp_path / "b")]) == EXIT_CONFIG
    assert main(["eval", "--config", str(tmp_path / "missing.yaml")]) == EXIT_CONFIG
    missing_ckpt = str(tmp_path / "none.npz")
    assert main(["oracle", "--config", str(good), "--out", str(tmp_path / "o"), "--checkpoint", missing_ckpt]) == EXIT_RUNTIME


def test_cli_train_seed_override(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text(SMALL)
    assert main(["train", "--config", str(cfg), "--seed", "5", "--out", str(tmp_path / "a")]) == EXIT_OK
    assert main(["train", "--config", str(cfg), "--seed", "6", "--out", str(tmp_path / "b")]) == EXIT_OK
    a = (tmp_path / "a" / "training.csv").read_bytes()
    assert a != (tmp_path / "b" / "training.csv").read_bytes()
    assert "seed: 5" in (tmp_path / "a" / "config.yaml").read_text()
    assert (tmp_path / "a" / "training.png").stat().st_size > 0


def test_cli_checkpoint_dimension_guard(small, trained, tmp_path):
    cfg = tmp_path / "other.yaml"
    cfg.write_text(SMALL + "layout:\n  pa_counts: [2, 2]\n")
    code = main(["oracle", "--config", str(cfg), "--out", str(tmp_path / "o"), "--checkpoint", str(trained / "checkpoint.npz")])
    assert code == EXIT_RUNTIME
