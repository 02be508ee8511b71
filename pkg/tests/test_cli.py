import json
import os
import subprocess
import sys

import numpy as np
import pytest

from killing_geo.cli import _glue_lists, main
from killing_geo.io import read_csv

FLAT_TORUS = '[domain]\nkind = "torus"\n[grid]\nnx = 16\n'
SINSIN = FLAT_TORUS + '[fields]\ntau = "sin(2*pi*x)*sin(2*pi*y)"\n'
UNIT_TAU = FLAT_TORUS + "[fields]\ntau = 1\n"
HEIS_DISK = '[domain]\nkind = "disk"\nradius = 1.5\n[grid]\nnx = 33\n[fields]\ntau = 1\n'
FLAT_DISK = '[domain]\nkind = "disk"\nradius = 3\n[grid]\nnx = 17\n'


@pytest.fixture
def cfg(tmp_path):
    def write(text, name="m.toml"):
        p = tmp_path / name
        p.write_text(text)
        return str(p)

    return write


def run(*argv):
    return main([str(a) for a in argv])


def test_solve_minimal_flat_torus(cfg, tmp_path):
    out = tmp_path / "u.csv"
    assert run("solve-minimal", "--config", cfg(FLAT_TORUS), "--out", out) == 0
    cols = read_csv(out)
    assert cols["u"].size == 256
    assert np.max(np.abs(cols["u"])) < 1e-15


def test_obstruction_exit_code(cfg, tmp_path, capsys):
    out = tmp_path / "u.csv"
    assert run("solve-minimal", "--config", cfg(UNIT_TAU), "--out", out) == 2
    assert "ObstructionNonzero" in capsys.readouterr().err or not out.exists()
    assert not out.exists()


def test_non_convergence_exit_code(cfg, tmp_path):
    out = tmp_path / "u.csv"
    text = SINSIN + "[solver]\nmax_iter = 1\n"
    assert run("solve-minimal", "--config", cfg(text), "--out", out) == 1
    assert out.exists()


@pytest.mark.parametrize(
    "argv",
    [
        ["solve-minimal", "--config", "missing.toml"],
        ["solve-minimal"],
        ["solve-minimal", "--config", "SINSIN", "--seed", "-1"],
        ["solve-minimal", "--config", "SINSIN", "--tol", "-1"],
        ["solve-minimal", "--config", "DISK"],
        ["cylinder", "--config", "DISK", "--H", "0", "--start", "0,0", "--dir", "2,0", "--length", "1"],
        ["mc", "--config", "DISK", "--graph", "x +* y"],
        ["homogeneous", "--matrix", "1,2,3", "--z-range", "0,1,3"],
        ["homogeneous", "--matrix", "0,1,0,0", "--z-range", "0,1,2.5"],
        ["no-such-command"],
        ["cylinder", "--bogus"],
    ],
)
def test_invalid_input_exit_code(argv, cfg, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    named = {"SINSIN": SINSIN, "DISK": FLAT_DISK}
    argv = [cfg(named[a]) if a in named else a for a in argv]
    try:
        code = run(*argv)
    except SystemExit as exc:
        code = exc.code
    assert code == 3


def test_invalid_config_exit_code(cfg, capsys):
    assert run("model-info", "--config", cfg(FLAT_TORUS + '[fields]\nmu = "0"\n')) == 3
    assert "mu must be positive" in capsys.readouterr().err


def test_output_path_checked_before_work(cfg, tmp_path):
    assert run("solve-minimal", "--config", cfg(SINSIN), "--out", tmp_path / "nope" / "u.csv") == 3
    assert run("solve-minimal", "--config", cfg(SINSIN), "--out", tmp_path) == 3


def test_threads_env(cfg, monkeypatch):
    monkeypatch.setenv("KILLING_GEO_THREADS", "0")
    assert run("model-info", "--config", cfg(FLAT_TORUS)) == 3
    monkeypatch.setenv("KILLING_GEO_THREADS", "2")
    assert run("model-info", "--config", cfg(FLAT_TORUS)) == 0


def test_determinism(cfg, tmp_path):
    c = cfg(SINSIN + "[run]\nseed = 4\n")
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run("solve-minimal", "--config", c, "--out", a) == 0
    assert run("solve-minimal", "--config", c, "--out", b) == 0
    assert a.read_bytes() == b.read_bytes()


def test_seed_flag_overrides_config(cfg, tmp_path):
    c = cfg(SINSIN + "[run]\nseed = 4\n")
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run("solve-minimal", "--config", c, "--out", a)
    run("solve-minimal", "--config", c, "--out", b, "--seed", 5)
    assert a.read_bytes() != b.read_bytes()


def test_holonomy_heisenberg(cfg, tmp_path, capsys):
    out = tmp_path / "h.json"
    assert run("holonomy", "--config", cfg(HEIS_DISK), "--radius", 1, "--out", out) == 0
    data = json.loads(out.read_text())
    assert abs(abs(data["displacement"]) - 2 * np.pi) < 1e-6
    assert data["abs_difference"] < 1e-6
    assert json.loads(capsys.readouterr().out) == data


def test_holonomy_and_lift_from_curve_file(cfg, tmp_path):
    s = np.linspace(0, 2 * np.pi, 401)
    curve = tmp_path / "c.csv"
    curve.write_text("x,y\n" + "".join(f"{float(np.cos(t))!r},{float(np.sin(t))!r}\n" for t in s))
    out = tmp_path / "h.json"
    c = cfg(HEIS_DISK)
    assert run("holonomy", "--config", c, "--curve", curve, "--out", out) == 0
    data = json.loads(out.read_text())
    assert data["flux_rule"] == "green_line_integral"
    assert data["abs_difference"] < 1e-6
    lift = tmp_path / "l.csv"
    assert run("lift", "--config", c, "--curve", curve, "--out", lift) == 0
    cols = read_csv(lift)
    assert abs(cols["t"][-1] - cols["t"][0]) == pytest.approx(2 * np.pi, abs=1e-6)
    assert run("lift", "--config", c, "--curve", tmp_path / "none.csv") == 3


def test_holonomy_needs_one_curve(cfg):
    assert run("holonomy", "--config", cfg(HEIS_DISK)) == 3


def test_csv_to_stdout_report_to_stderr(capsys):
    assert run("homogeneous", "--matrix", "0,1,0,0", "--z-range", "-1,1,3") == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "z,mu,two_tau_over_mu,tau"
    rows = np.array([[float(v) for v in line.split(",")] for line in out[1:]])
    assert np.allclose(rows, [[-1, 1, 1, 0.5], [0, 1, 1, 0.5], [1, 1, 1, 0.5]], atol=1e-12)


def test_homogeneous_sol(tmp_path):
    out = tmp_path / "s.csv"
    assert run("homogeneous", "--matrix", "1,0,0,-1", "--z-range", "-1,1,5", "--out", out) == 0
    cols = read_csv(out)
    assert np.allclose(cols["mu"], np.exp(-cols["z"]), rtol=1e-12)
    assert np.all(np.abs(cols["tau"]) < 1e-12)


def test_cylinder(cfg, tmp_path, capsys):
    out = tmp_path / "c.csv"
    c = cfg(FLAT_DISK)
    assert run("cylinder", "--config", c, "--H", 0.5, "--start", "-1,0", "--dir", "0,-1", "--length", 6.2832, "--out", out) == 0
    cols = read_csv(out)
    assert np.max(np.abs(np.hypot(cols["x"], cols["y"]) - 1)) < 1e-8
    assert np.allclose(cols["sigma11"] + cols["sigma22"], 1.0, atol=1e-8)
    assert "max_trace_error" in capsys.readouterr().out


def test_mc_and_stability(cfg, tmp_path):
    c = cfg(FLAT_DISK)
    out = tmp_path / "mc.csv"
    assert run("mc", "--config", c, "--graph", "-sqrt(16 - x^2 - y^2)", "--out", out) == 0
    cols = read_csv(out)
    inner = np.hypot(cols["x"], cols["y"]) < 2
    assert np.allclose(np.abs(cols["H"][inner]), 0.25, atol=2e-2)
    out2 = tmp_path / "st.csv"
    assert run("stability", "--config", c, "--graph", "0.3*x", "--out", out2) == 0
    cols = read_csv(out2)
    assert np.nanmax(np.abs(cols["L_nu"])) < 1e-10


def test_stability_default_solves_torus(cfg, tmp_path):
    out = tmp_path / "st.csv"
    assert run("stability", "--config", cfg(SINSIN), "--out", out) == 0
    assert np.max(np.abs(read_csv(out)["L_nu"])) < 0.5


def test_solve_dirichlet_plane(cfg, tmp_path):
    out = tmp_path / "d.csv"
    c = cfg('[domain]\nkind = "disk"\nradius = 1\n[grid]\nnx = 17\n')
    assert run("solve-dirichlet", "--config", c, "--boundary", "0.2*x - 0.1*y", "--tol", 1e-11, "--out", out) == 0
    cols = read_csv(out)
    assert np.allclose(cols["u"], 0.2 * cols["x"] - 0.1 * cols["y"], atol=1e-8)


def test_calabi_manufactured(cfg, tmp_path):
    out = tmp_path / "cal.csv"
    c = cfg('[domain]\nkind = "disk"\nradius = 1\n[grid]\nnx = 33\n')
    assert run("calabi", "--config", c, "--v", "0.3*x*y", "--manufacture", "--out", out) == 0
    cols = read_csv(out)
    assert np.nanmax(np.abs(cols["identity_residual"])) < 1e-2


def test_check_jz_and_model_info(cfg, tmp_path, capsys):
    c = cfg(SINSIN)
    assert run("check-jz", "--config", c, "--out", tmp_path / "r.csv") == 0
    assert np.max(np.abs(read_csv(tmp_path / "r.csv")["residual"])) < 1e-8
    capsys.readouterr()
    assert run("model-info", "--config", c) == 0
    info = json.loads(capsys.readouterr().out)
    assert info["domain"]["kind"] == "torus"
    assert abs(info["obstruction_integral"]) < 1e-12


def test_config_sections_supply_options(cfg, tmp_path):
    text = FLAT_DISK + "[cylinder]\nH = 0.5\nstart = [1, 0]\ndir = [0, 1]\nlength = 3.0\n"
    out = tmp_path / "c.csv"
    assert run("cylinder", "--config", cfg(text), "--out", out) == 0
    assert read_csv(out)["s"][-1] == pytest.approx(3.0)


def test_glue_lists():
    assert _glue_lists(["--start", "-1,0", "--H", "1"]) == ["--start=-1,0", "--H", "1"]
    assert _glue_lists(["--start", "1,0"]) == ["--start", "1,0"]


def test_console_entry_point(tmp_path):
    r = subprocess.run(
        [sys.executable, "-m", "killing_geo.cli", "homogeneous", "--matrix", "0,0,0,0", "--z-range", "0,1,2"],
        capture_output=True, text=True, cwd=tmp_path, env=dict(os.environ),
    )
    assert r.returncode == 0
    assert r.stdout.splitlines() == ["z,mu,two_tau_over_mu,tau", "0,1,0,0", "1,1,0,0"]
