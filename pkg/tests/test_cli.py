import json
import subprocess
import sys

import numpy as np
import pytest

from pdmsync.cli import EXIT_CONFIG, EXIT_IO, main

CONFIG = """\
name: cli
sweep:
  variable: osnr_db
  values: [10]
trials_per_point: 2
master_seed: 5
n_data_symbols: 1
"""


def test_seq_dump(tmp_path, capsys):
    out = tmp_path / "pair.csv"
    assert main(["seq", "dump", "--out", str(out)]) == 0
    rows = np.loadtxt(out, delimiter=",", skiprows=1)
    assert rows.shape == (416, 5)
    assert main(["seq", "dump"]) == 0
    assert capsys.readouterr().out.startswith("index,re_a,im_a,re_b,im_b")


def test_frame_dump_and_sync_trace(tmp_path):
    frame = tmp_path / "f.bin"
    assert main(["frame", "dump", "--out", str(frame), "--n-data-symbols", "1", "--pad", "250",
                 "--cfo-hz", "5e9"]) == 0
    header = json.loads((tmp_path / "f.bin.json").read_text())
    assert header["true_frame_start"] == 250
    assert main(["sync", "trace", "--in", str(frame), "--out", str(tmp_path / "st")]) == 0
    est = json.loads((tmp_path / "st" / "estimate.json").read_text())
    assert est["d_hat_x"] == 250 and est["mu_hat"] == 64
    xi = np.loadtxt(tmp_path / "st" / "xi.csv", delimiter=",", skiprows=1)
    assert xi.shape == (512, 2)


def test_sim_run(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text(CONFIG)
    out = tmp_path / "run"
    assert main(["sim", "run", "--config", str(cfg), "--out", str(out), "--trials", "1", "--seed", "9"]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["config"]["trials_per_point"] == 1 and summary["config"]["master_seed"] == 9
    assert (out / "trials.csv").exists()


def test_sim_trace(tmp_path):
    assert main(["sim", "trace", "--scenario", "cfo-pm5", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "xi_plus5ghz.csv").exists()
    assert main(["sim", "trace", "--scenario", "bogus", "--out", str(tmp_path)]) == EXIT_CONFIG


def test_config_error_exit(tmp_path):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text("sweep: {variable: nope, values: [1]}\n")
    assert main(["sim", "run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_CONFIG
    good = tmp_path / "c.yaml"
    good.write_text(CONFIG)
    assert main(["sim", "run", "--config", str(good), "--out", str(tmp_path / "o"), "--trials", "0"]) == EXIT_CONFIG
    assert main(["frame", "dump", "--out", str(tmp_path / "f"), "--n-data-symbols", "-1"]) == EXIT_CONFIG


def test_io_error_exit(tmp_path):
    assert main(["sim", "run", "--config", str(tmp_path / "missing.yaml"), "--out", str(tmp_path)]) == EXIT_IO
    assert main(["sync", "trace", "--in", str(tmp_path / "missing.bin"), "--out", str(tmp_path)]) == EXIT_IO
    blocker = tmp_path / "file"
    blocker.write_text("x")
    good = tmp_path / "c.yaml"
    good.write_text(CONFIG)
    assert main(["sim", "run", "--config", str(good), "--out", str(blocker / "sub")]) == EXIT_IO


def test_usage_error_exits_2():
    with pytest.raises(SystemExit) as exc:
        main(["sim"])
    assert exc.value.code == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "pdmsync", "seq", "dump"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert len(proc.stdout.splitlines()) == 417
