import csv
import filecmp

import pytest

from micromacro import cli

from helpers import scenario
from micromacro.scenario_io import serialize_scenario


def run(*argv):
    return cli.main([str(a) for a in argv])


def test_run_fig2_fine_mesh(tmp_path, capsys):
    assert run("run", "--scenario", "lwr_ftl_fig2", "--dx", 2.5e-3, "--out", tmp_path) == 0
    for name in ("density.csv", "trajectories.csv", "diagnostics.csv", "density.png", "leader_speed.png"):
        assert (tmp_path / name).exists()
    with open(tmp_path / "diagnostics.csv") as fh:
        rows = list(csv.reader(fh))
    assert float(rows[-1][0]) == 15.0
    assert "t = 15" in capsys.readouterr().out


def test_run_fig4_fine_mesh(tmp_path):
    assert run("run", "--scenario", "ftl_lwr_fig4", "--dx", 1e-3, "--out", tmp_path, "--no-plots") == 0
    assert not (tmp_path / "density.png").exists()


def test_zero_end_time_writes_initial_snapshot_only(tmp_path):
    assert run("run", "--scenario", "ftl_lwr_fig5", "--t-end", 0, "--out", tmp_path, "--no-plots") == 0
    with open(tmp_path / "diagnostics.csv") as fh:
        assert len(list(csv.reader(fh))) == 2


def test_runs_are_deterministic(tmp_path):
    for sub in ("a", "b"):
        assert run("run", "--scenario", "general_fig1", "--dx", 0.02, "--t-end", 1, "--out", tmp_path / sub,
                   "--no-plots") == 0
    for name in ("density.csv", "trajectories.csv", "diagnostics.csv"):
        assert filecmp.cmp(tmp_path / "a" / name, tmp_path / "b" / name, shallow=False)


def test_scenario_file_path(tmp_path):
    path = tmp_path / "mine.toml"
    s = scenario("ftl_lwr", [[-1.0, 0.0]], [[1.0, 2.0, 0.5]], xmin=-2.0, xmax=4.0, dx=0.05, t_end=0.5)
    path.write_text(serialize_scenario(s))
    assert run("run", "--scenario", path, "--out", tmp_path / "out", "--no-plots") == 0


def test_parse_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text('variant = "lwr_ftl"\n')
    assert run("run", "--scenario", bad, "--out", tmp_path) == cli.EXIT_PARSE == 3
    assert "scenario" in capsys.readouterr().err


def test_cfl_error_exit_code(tmp_path):
    assert run("run", "--scenario", "lwr_ftl_fig2", "--cfl", 1.5, "--dx", 0.02, "--out", tmp_path) == cli.EXIT_CFL == 4


def test_invariant_exit_code(tmp_path):
    # The first vehicle reaches the end of the grid.
    s = scenario("lwr_ftl", [[1.0, 2.0]], [[-1.0, 0.0, 0.3]], w=[[0.0, 1.0]], xmin=-2.0, xmax=2.5, dx=0.05,
                 t_end=3.0)
    path = tmp_path / "edge.toml"
    path.write_text(serialize_scenario(s))
    assert run("run", "--scenario", path, "--out", tmp_path / "out", "--no-plots") == cli.EXIT_INVARIANT == 5


def test_io_error_exit_codes(tmp_path):
    assert run("run", "--scenario", tmp_path / "missing.toml") == cli.EXIT_IO == 6
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert run("run", "--scenario", "ftl_lwr_fig5", "--t-end", 0, "--out", blocker, "--no-plots") == 6


@pytest.mark.parametrize("argv", [["run"], ["run", "--scenario", "x", "--dx", "-1"], ["converge", "--levels", "1"],
                                  ["bogus"]])
def test_usage_errors(argv):
    with pytest.raises(SystemExit) as info:
        cli.main(argv)
    assert info.value.code == cli.EXIT_USAGE


def test_verify_fault_injection(capsys):
    assert run("verify", "--suite", "max_principle", "--cfl", 1.5) == cli.EXIT_VERIFY_FAILED
    assert "FAIL max_principle" in capsys.readouterr().out


def test_verify_holder_slope(capsys):
    assert run("verify", "--suite", "holder") == 0
    line = capsys.readouterr().out.splitlines()[0]
    assert line.startswith("PASS holder")
    slope = float(line.split("measured=")[1].split()[0])
    assert slope >= 0.5


@pytest.mark.slow
def test_verify_all_suites(capsys):
    assert run("verify") == 0
    out = capsys.readouterr().out
    assert "9/9 suites passed" in out


def test_converge(tmp_path, capsys):
    assert run("converge", "--levels", 3, "--out", tmp_path) == 0
    with open(tmp_path / "convergence.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert {r["case"] for r in rows} == {"shock", "rarefaction", "constant"}
    assert len(rows) == 9
    assert all(float(r["l1_error"]) == 0.0 for r in rows if r["case"] == "constant")
    assert (tmp_path / "convergence.png").exists()
    assert "case,rho_l" in capsys.readouterr().out
