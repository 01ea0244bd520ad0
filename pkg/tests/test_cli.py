import subprocess
import sys

from traversal_lab.cli import cli_main

SCAN_CFG = """
scan.axis = width
scan.lo = 1.0
scan.hi = 3.0
scan.n_points = 3
scan.methods = vis,wkb
incident.E = 0.5
barrier.V0 = 1.0
barrier.V1 = 0.0045
barrier.omega = 0.09
"""

POINT_CFG = """
incident.E = 0.5
barrier.V0 = 1.0
barrier.d = 2.0
barrier.V1 = 0.0125
barrier.omega = 0.25
"""

NELSON_CFG = POINT_CFG + """
nelson.n_paths = 40
nelson.n_x = 2048
nelson.dt = 0.05
nelson.seed = 11
nelson.n_record = 64
"""

# tiny nelson scan used for the byte-determinism check
NELSON_SCAN_CFG = """
scan.axis = width
scan.lo = 1.5
scan.hi = 2.0
scan.n_points = 2
scan.methods = wkb,nelson
incident.E = 0.5
barrier.V0 = 1.0
nelson.n_paths = 60
nelson.n_x = 2048
nelson.dt = 0.05
nelson.seed = 3
"""


def _write(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def test_usage_errors_exit_2(capsys):
    assert cli_main([]) == 2
    assert cli_main(["frobnicate"]) == 2
    assert cli_main(["scan", "--no-such-flag"]) == 2
    capsys.readouterr()


def test_runtime_errors_exit_1(tmp_path, capsys):
    cfg = _write(tmp_path, "scan.axis = width\n")  # missing everything else
    assert cli_main(["scan", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1
    assert cli_main(["scan", "--config", str(tmp_path / "absent.cfg")]) == 1
    capsys.readouterr()


def test_scan_writes_csv_and_plot_script(tmp_path, capsys):
    cfg = _write(tmp_path, SCAN_CFG)
    out = tmp_path / "out"
    assert cli_main(["scan", "--config", str(cfg), "--out", str(out)]) == 0
    csv_text = (out / "scan.csv").read_text()
    assert csv_text.splitlines()[0] == (
        "axis,tau_vis,tau_wkb,tau_nelson,tau_nelson_stderr,I_vis,T_bar,asymmetry,flags")
    assert len(csv_text.splitlines()) == 4
    assert (out / "scan.gp").exists()
    capsys.readouterr()


def test_current_trace(tmp_path, capsys):
    cfg = _write(tmp_path, POINT_CFG)
    out = tmp_path / "out"
    assert cli_main(["current", "--config", str(cfg), "--out", str(out)]) == 0
    lines = (out / "current.csv").read_text().splitlines()
    assert lines[0] == "t,T"
    assert len(lines) == 514  # header + n_samples + 1 rows
    assert "I_vis" in capsys.readouterr().out


def test_tbar_scan(tmp_path, capsys):
    cfg = _write(tmp_path, POINT_CFG + "tbar.lo = 0.05\ntbar.hi = 0.3\ntbar.n_points = 6\n")
    out = tmp_path / "out"
    assert cli_main(["tbar", "--config", str(cfg), "--out", str(out)]) == 0
    lines = (out / "tbar.csv").read_text().splitlines()
    assert lines[0] == "omega,T_bar"
    assert len(lines) == 7
    capsys.readouterr()


def test_nelson_run_dumps_trajectories(tmp_path, capsys):
    cfg = _write(tmp_path, NELSON_CFG)
    out = tmp_path / "out"
    assert cli_main(["nelson", "--config", str(cfg), "--out", str(out)]) == 0
    assert (out / "ensemble.csv").exists()
    traj = (out / "trajectories.csv").read_text().splitlines()
    assert traj[0].startswith("t,x_000")
    assert "tau_nelson" in capsys.readouterr().out


def test_scan_is_byte_deterministic_per_seed(tmp_path, capsys):
    cfg = _write(tmp_path, NELSON_SCAN_CFG)
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert cli_main(["scan", "--config", str(cfg), "--out", str(out),
                         "--seed", "99"]) == 0
        outs.append((out / "scan.csv").read_bytes())
    assert outs[0] == outs[1]
    capsys.readouterr()


def test_check_quick_level_passes():
    res = subprocess.run(
        [sys.executable, "-m", "traversal_lab.cli"],
        capture_output=True, text=True,
    )
    assert res.returncode == 2  # no subcommand is a usage error
    res = subprocess.run(
        [sys.executable, "-c",
         "from traversal_lab.cli import cli_main; import sys; "
         "sys.exit(cli_main(['check', '--level', 'quick']))"],
        capture_output=True, text=True,
    )
    assert res.returncode == 0, res.stdout + res.stderr
    assert res.stdout.count("[PASS]") == 6
