import json

import numpy as np
import pytest

from spinbath.cli import _phase_point, main, resolve_engine
from spinbath.config import ConfigError, load_config, parse_grid
from spinbath.model import EngineCapabilityError, EnvInitialState, SystemSpec


def test_parse_grid():
    assert np.allclose(parse_grid("-1:1:5"), [-1, -0.5, 0, 0.5, 1])
    assert np.allclose(parse_grid("0.1, 0.4"), [0.1, 0.4])
    with pytest.raises(ConfigError):
        parse_grid("1:2")


def test_load_config_file_and_overrides(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text("[system]\nN = 40\nOmega = 0.3\nm0 = 1\n[environment]\nkind = thermal\nbeta = 2\n[run]\ndt = 0.1\n")
    cfg = load_config(path, ["system.Delta_h=0.5", "t_fin=3"])
    assert cfg.spec.N == 40 and cfg.spec.m0 == 1
    assert cfg.spec.Delta_h == pytest.approx(0.5)
    assert cfg.env == EnvInitialState.thermal(2.0)
    assert cfg.t_fin == 3.0 and cfg.dt == 0.1


def test_centre_default():
    assert load_config(None, ["N=41"]).spec.m0 == 20


@pytest.mark.parametrize(
    "overrides",
    [["nope=1"], ["system.nope=1"], ["engine=warp"], ["kind=plasma"], ["dt=-1"], ["N=abc"], ["noequals"]],
)
def test_bad_config(overrides):
    with pytest.raises(ConfigError):
        load_config(None, overrides)


def test_engine_resolution():
    vac, th = EnvInitialState.vacuum(), EnvInitialState.thermal(1.0)
    assert resolve_engine("auto", SystemSpec(50, 0.4, 0.0, m0=1), th) == "gaussian"
    assert resolve_engine("auto", SystemSpec(50, 0.4, 0.0, m0=25), vac) == "sector"
    assert resolve_engine("auto", SystemSpec(8, 0.4, 0.0, m0=4), th) == "dense"
    assert resolve_engine("auto", SystemSpec(50, 0.4, 0.0, m0=25), vac, thermodynamic_limit=True) == "analytic"
    with pytest.raises(EngineCapabilityError):
        resolve_engine("auto", SystemSpec(50, 0.4, 0.0, m0=25), th)
    with pytest.raises(EngineCapabilityError):
        resolve_engine("gaussian", SystemSpec(50, 0.4, 0.0, m0=25), vac)


def _run(tmp_path, name, *args):
    out = tmp_path / name
    code = main([*args, "--out", str(out)])
    return code, out


def test_trajectory_vacuum_centre(tmp_path):
    code, out = _run(tmp_path, "vac", "trajectory", "--set", "N=300", "--set", "Omega=0.4", "--tfin", "20")
    assert code == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["engine"] == "sector"
    assert summary["N_degree"] <= 1e-3
    assert summary["convergence_report"]["converged"]
    lines = (out / "trajectory.csv").read_text().splitlines()
    assert lines[0] == "t,a,c,Re_b,Im_b,E_LS,gamma1,gamma2,gamma3,mu,flags"
    assert len(lines) == 402


def test_trajectory_decoupled(tmp_path):
    code, out = _run(tmp_path, "free", "trajectory", "--set", "N=50", "--set", "Omega=0", "--tfin", "5")
    assert code == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["N_degree"] == 0 and summary["N_BLP"] == 0
    data = np.genfromtxt(out / "trajectory.csv", delimiter=",", names=True, dtype=None, encoding=None)
    for col in ("gamma1", "gamma2", "gamma3", "mu"):
        assert np.max(np.abs(data[col])) < 1e-10


def test_trajectory_blp_markov_point(tmp_path):
    code, out = _run(
        tmp_path, "mp", "trajectory", "--set", "N=300", "--set", "m0=1", "--set", "Omega=1", "--set", "Delta_h=1",
        "--tfin", "100", "--set", "convergence=false",
    )
    assert code == 0
    assert json.loads((out / "summary.json").read_text())["N_BLP"] == 0


def test_exit_codes(tmp_path):
    assert main(["trajectory", "--set", "bogus=1", "--out", str(tmp_path / "x")]) == 2
    refused = ["trajectory", "--set", "N=20", "--set", "kind=thermal", "--set", "beta=1", "--out", str(tmp_path / "y")]
    assert main(refused) == 3
    assert main(["validate", "--check", "nope", "--out", str(tmp_path / "z")]) == 2


def test_phase_diagram_deterministic_across_jobs(tmp_path):
    args = ["phase-diagram", "--set", "N=120", "--set", "Delta_h_grid=-3:3:5", "--set", "Omega_grid=0.2,0.4",
            "--tfin", "10", "--dt", "0.1"]
    assert main([*args, "--out", str(tmp_path / "j1"), "--jobs", "1"]) == 0
    assert main([*args, "--out", str(tmp_path / "j2"), "--jobs", "2"]) == 0
    one = (tmp_path / "j1" / "phase_diagram.csv").read_bytes()
    assert one == (tmp_path / "j2" / "phase_diagram.csv").read_bytes()
    rows = np.genfromtxt(tmp_path / "j1" / "phase_diagram.csv", delimiter=",", names=True, dtype=None, encoding=None)
    assert len(rows) == 10 and all(s == "ok" for s in rows["status"])
    far = rows[(np.abs(rows["Delta_h"]) == 3.0) & (rows["Omega"] == 0.2)]
    assert np.all(far["N_degree"] < 0.05)


def test_phase_diagram_edge_strip(tmp_path):
    args = ["phase-diagram", "--set", "N=200", "--set", "Delta_h_grid=-2.0,0.0", "--set", "Omega_grid=0.4",
            "--tfin", "20", "--dt", "0.1", "--out", str(tmp_path / "pd")]
    assert main(args) == 0
    rows = np.genfromtxt(tmp_path / "pd" / "phase_diagram.csv", delimiter=",", names=True, dtype=None, encoding=None)
    assert rows["N_degree"][0] > 0.05
    assert rows["N_degree"][1] < 1e-3


def test_correlations_cli(tmp_path):
    code, out = _run(tmp_path, "corr", "correlations", "--set", "N=120", "--set", "kind=thermal", "--set",
                     "beta=0.05", "--tfin", "6", "--dt", "0.05")
    assert code == 0
    summary = json.loads((out / "correlations.json").read_text())
    assert summary["sum_rule_error"] < 1e-10
    assert summary["tau_c_plus"] == pytest.approx(1.0, rel=0.05)


def test_validate_single_check(tmp_path, capsys):
    code = main(["validate", "--check", "6_env_independence", "--out", str(tmp_path / "v")])
    assert code == 0
    report = json.loads((tmp_path / "v" / "validation.json").read_text())
    assert report["passed"] and report["checks"][0]["name"] == "6_env_independence"
    assert "[PASS] 6_env_independence" in capsys.readouterr().out


def test_byte_identical_trajectory(tmp_path):
    args = ["trajectory", "--set", "N=60", "--tfin", "4", "--set", "convergence=false"]
    main([*args, "--out", str(tmp_path / "r1")])
    main([*args, "--out", str(tmp_path / "r2")])
    assert (tmp_path / "r1" / "trajectory.csv").read_bytes() == (tmp_path / "r2" / "trajectory.csv").read_bytes()


def test_non_markovian_strip_widens_with_coupling():
    widths = []
    for Omega in (0.2, 0.4, 0.8):
        points = [
            (SystemSpec.from_detuning(300, Omega, dh, m0=150), EnvInitialState.vacuum(), "auto", 20.0, 0.05, 10, False)
            for dh in np.arange(-3.0, -0.9, 0.25)
        ]
        widths.append(sum(_phase_point(p)[2] > 0.02 for p in points))
    assert widths[0] < widths[1] < widths[2]
