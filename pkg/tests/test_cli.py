"""Command-line harness: exit codes, output files, and seed plumbing.

Everything runs in-process through main(argv) except one subprocess check
that the installed `pdx` entry point exists.  Exit codes: 0 success, 1 check
or run failure, 2 usage/configuration error.
"""

import shutil
import subprocess

import numpy as np
import pytest

from pdx.cli import main
from pdx.data import load_sweep, write_idx_pair

TWO_SAMPLE_CFG = (
    "algorithm = two-sample\n"
    "d = 10\n"
    "mu = 0.1\n"
    "gamma = 0.125\n"
    "max_iters = 10000\n")


def write_cfg(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_run_two_sample_writes_trace(tmp_path, capsys):
    cfg = write_cfg(tmp_path, TWO_SAMPLE_CFG)
    trace = tmp_path / "trace.csv"
    assert main(["run", "--config", cfg, "--trace", str(trace)]) == 0
    out = capsys.readouterr().out
    assert "algo=two-sample" in out and "separated=true" in out
    first = trace.read_bytes()
    assert first.splitlines()[0].decode() == (
        "run_id,algo,t,loss,accuracy,iterate_norm,violated_count,"
        "corr_mu_plus,step_kind,step_size")
    assert main(["run", "--config", cfg, "--trace", str(trace)]) == 0
    assert trace.read_bytes() == first  # byte-identical rerun


def test_run_batch_with_auto_gamma(tmp_path, capsys):
    cfg = write_cfg(tmp_path, "algorithm = batch\nd = 8\nmu = 0.2\n")
    assert main(["run", "--config", cfg]) == 0
    out = capsys.readouterr().out
    assert "algo=batch" in out and "gamma=" in out


def test_run_gd_conv(tmp_path, capsys):
    cfg = write_cfg(tmp_path, "algorithm = gd-conv\nd = 8\nmu = 0.2\n"
                              "max_iters = 2000\n")
    assert main(["run", "--config", cfg]) == 0
    assert "algo=gd-conv" in capsys.readouterr().out


def test_run_bad_config_exits_2(tmp_path, capsys):
    cfg = write_cfg(tmp_path, "algorithm = warp\nd = 4\nmu = 0.1\n")
    assert main(["run", "--config", cfg]) == 2
    assert "configuration error" in capsys.readouterr().err


def test_run_missing_config_exits_2(tmp_path, capsys):
    assert main(["run", "--config", str(tmp_path / "nope.cfg")]) == 2
    assert "error" in capsys.readouterr().err


def test_scaling_writes_sweep_and_slopes(tmp_path, capsys):
    out_path = tmp_path / "sweep.csv"
    rc = main(["scaling", "--dims", "6,12", "--mu", "0.1", "--grid=-3:-2",
               "--seeds", "2", "--max-iters", "20000", "--out", str(out_path)])
    assert rc == 0
    rows = load_sweep(str(out_path))
    assert len(rows) == 2 * (2 + 2 * 2)
    out = capsys.readouterr().out
    assert "batch-perceptron" in out and "two-sample-quad" in out
    assert out.count("log-log slope") == 2


def test_scaling_grid_flag_matches_endpoints(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    common = ["scaling", "--dims", "8", "--mu", "0.1", "--seeds", "2",
              "--max-iters", "20000"]
    assert main(common + ["--grid=-3:-2", "--out", str(a)]) == 0
    assert main(common + ["--grid-lo", "-3", "--grid-hi", "-2", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_scaling_bad_grid_exits_2(capsys):
    assert main(["scaling", "--dims", "8", "--grid", "oops"]) == 2
    assert "error" in capsys.readouterr().err


def test_kernel_table_cli(tmp_path, capsys):
    out_path = tmp_path / "table.csv"
    rc = main(["kernel-table", "--ks", "2,8", "--d", "32", "--mu", "0.05",
               "--budget", "20000", "--seeds", "1", "--out", str(out_path)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "k=2 " in out and "k=8 " in out
    lines = out_path.read_text().splitlines()
    assert lines[0] == "k,d,best_gamma,predicted,iterations"
    assert len(lines) == 3


@pytest.mark.parametrize("kind", ["linear", "quadratic"])
def test_reduce_check_cli(kind, capsys):
    assert main(["reduce-check", "--kind", kind]) == 0
    out = capsys.readouterr().out
    assert "ok" in out and "FAIL" not in out


def test_verify_suite_cli(capsys):
    assert main(["verify", "lower-bound"]) == 0
    out = capsys.readouterr().out
    assert "checks passed" in out and "FAIL" not in out


def test_verify_unknown_suite_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["verify", "bogus"])
    assert exc.value.code == 2


def _write_idx(tmp_path, rng):
    # two blobs separated by mean intensity, byte-quantized
    n = 16
    base = np.concatenate([np.full((n // 2, 6, 5), 40), np.full((n // 2, 6, 5), 90)])
    images = np.clip(base + rng.integers(-20, 21, size=base.shape), 0, 255)
    labels = np.repeat([0, 1], n // 2).astype(np.uint8)
    ip, lp = str(tmp_path / "img.idx"), str(tmp_path / "lab.idx")
    write_idx_pair(images.astype(np.uint8), labels, ip, lp)
    return ip, lp


def test_race_cli(tmp_path, capsys):
    ip, lp = _write_idx(tmp_path, np.random.default_rng(0))
    rc = main(["race", "--images", ip, "--labels", lp, "--class-a", "0",
               "--class-b", "1", "--seeds", "2", "--cap", "500"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "conv wins" in out
    assert out.count("seed=") == 4  # two models x two seeds


def test_race_missing_idx_exits_2(tmp_path, capsys):
    assert main(["race", "--images", str(tmp_path / "x.idx"),
                 "--labels", str(tmp_path / "y.idx")]) == 2


def test_env_seed_matches_flag(tmp_path, capsys, monkeypatch):
    def quad_out():
        assert main(["reduce-check", "--kind", "quadratic"]) == 0
        return capsys.readouterr().out

    monkeypatch.setenv("PDX_SEED", "7")
    via_env = quad_out()
    monkeypatch.delenv("PDX_SEED")
    via_flag_out = None
    assert main(["reduce-check", "--kind", "quadratic", "--seed", "7"]) == 0
    via_flag_out = capsys.readouterr().out
    assert via_env == via_flag_out
    default = quad_out()  # PDX_SEED unset -> master seed 0
    assert default != via_env


def test_console_script_installed():
    exe = shutil.which("pdx")
    assert exe is not None, "pdx entry point not on PATH"
    proc = subprocess.run([exe, "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    for sub in ("run", "scaling", "kernel-table", "reduce-check", "verify", "race"):
        assert sub in proc.stdout
