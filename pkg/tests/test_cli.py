import json
import subprocess
import sys

import numpy as np
import pytest

from fsl.cli import combine_exit_codes, main, max_workers
from fsl.field import Field, Grid, write_snapshot

LINEAR_DECAY = """experiment = decay_rates
flux = zero
a = 1
[grid]
N = 2048
[params]
fit_window = (10, 1e4)
slope_tol = 0.05
"""

CONSTANT_PROFILE = """experiment = profile
flux = burgers
a = 0
mu = 0.3
[grid]
N = 512
Y = 64
[params]
tail_window = (8, 32)
"""

COARSE_DECAY = """experiment = decay_rates
flux = burgers
a = 1
[grid]
N = 32
"""


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_list(capsys):
    assert main(["list"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) >= 9
    assert any(line.startswith("alibaud") for line in lines)


def test_describe(capsys):
    assert main(["describe", "verify_alibaud"]) == 0
    out = capsys.readouterr().out
    assert "Alibaud" in out and "inputs" in out.lower()
    assert main(["describe", "bogus"]) == 3
    assert "unknown experiment" in capsys.readouterr().err


def test_usage_errors_exit_3(tmp_path, capsys):
    with pytest.raises(SystemExit) as err:
        main(["frobnicate"])
    assert err.value.code == 3
    bad = _write(tmp_path, "bad.ini", "experiment = decay_rates\nfoo = 1\n")
    assert main(["run", bad]) == 3
    assert "foo" in capsys.readouterr().err


def test_snapshot_info(tmp_path, capsys):
    g = Grid(1, 4.0, 16)
    path = tmp_path / "a.snap"
    write_snapshot(path, Field(g, np.zeros(16), t=2.0))
    assert main(["snapshot-info", str(path)]) == 0
    head = json.loads(capsys.readouterr().out)
    assert head["N"] == 16 and head["t"] == 2.0
    assert main(["snapshot-info", str(tmp_path / "none.snap")]) == 3


def test_run_linear_decay_passes(tmp_path, capsys):
    cfg = _write(tmp_path, "lin.ini", LINEAR_DECAY)
    out = tmp_path / "runs"
    assert main(["run", cfg, "-o", str(out)]) == 0
    (run_dir,) = out.iterdir()
    assert run_dir.name.startswith("decay_rates-")
    rep = json.loads((run_dir / "report.json").read_text())
    assert rep["status"] == "pass"
    assert rep["fits"]["slope"]["slope"] == pytest.approx(-1.0, abs=0.05)
    for name in ("resolved-config.ini", "checks.csv", "summary-asymptotics.csv"):
        assert (run_dir / name).exists()
    assert list((run_dir / "plot-data").glob("*.dat"))
    assert "pass" in capsys.readouterr().out


def test_run_constant_profile_and_reuse(tmp_path, capsys):
    cfg = _write(tmp_path, "c.ini", CONSTANT_PROFILE)
    out = tmp_path / "runs"
    assert main(["run", cfg, "-o", str(out)]) == 0
    (run_dir,) = out.iterdir()
    rep = json.loads((run_dir / "report.json").read_text())
    assert rep["status"] == "pass"
    stamp = (run_dir / "report.json").stat().st_mtime_ns
    # same content digest: the stored verdict is returned, nothing is rewritten
    assert main(["run", cfg, "-o", str(out)]) == 0
    assert (run_dir / "report.json").stat().st_mtime_ns == stamp
    assert len(list(out.iterdir())) == 1


def test_run_coarse_grid_is_inconclusive(tmp_path):
    cfg = _write(tmp_path, "coarse.ini", COARSE_DECAY)
    out = tmp_path / "runs"
    assert main(["run", cfg, "-o", str(out)]) == 2
    (run_dir,) = out.iterdir()
    assert json.loads((run_dir / "report.json").read_text())["status"] == "inconclusive"


def test_run_several_configs_in_parallel(tmp_path, monkeypatch):
    monkeypatch.setenv("FSL_THREADS", "2")
    a = _write(tmp_path, "c.ini", CONSTANT_PROFILE)
    b = _write(tmp_path, "coarse.ini", COARSE_DECAY)
    assert main(["run", a, b, "-o", str(tmp_path / "runs")]) == 2
    assert len(list((tmp_path / "runs").iterdir())) == 2


def test_max_workers(monkeypatch):
    monkeypatch.delenv("FSL_THREADS", raising=False)
    assert max_workers(8) == 1
    monkeypatch.setenv("FSL_THREADS", "4")
    assert max_workers(8) == 4 and max_workers(2) == 2 and max_workers() == 4
    monkeypatch.setenv("FSL_THREADS", "many")
    assert max_workers(8) == 1


def test_combine_exit_codes():
    assert combine_exit_codes([0, 0]) == 0
    assert combine_exit_codes([0, 2]) == 2
    assert combine_exit_codes([2, 1, 0]) == 1
    assert combine_exit_codes([]) == 0


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "fsl.cli", "list"], capture_output=True, text=True)
    assert proc.returncode == 0 and "decay_rates" in proc.stdout
