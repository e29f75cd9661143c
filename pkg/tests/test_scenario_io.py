import csv
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from micromacro.errors import ScenarioError
from micromacro.scenario_io import (
    BUNDLED,
    load_scenario,
    parse_scenario,
    rasterize_density,
    serialize_scenario,
    write_outputs,
)
from micromacro.simulate import output_times, simulate
from micromacro.verification import random_ftl_lwr

from helpers import scenario

FIG2_POSITIONS = (0.0, 2.0, 4.0, 6.5, 7.0, 7.5, 8.0, 8.5, 9.0, 9.5)

MINIMAL = """
variant = "ftl_lwr"
ell = 0.49
platoons = [[0.0, 1.0]]
density_pieces = [[2.0, 3.0, 0.5]]
t_end = 1.0
output_every = 0.5

[speed_law]
family = "greenshields"
vmax = 1.0

[grid]
xmin = -1.0
xmax = 5.0
dx = 0.01
"""


def test_bundled_fig2():
    s = load_scenario("lwr_ftl_fig2")
    assert s.ell == 0.49 and s.leader_w == ((0.0, 0.75),)
    assert s.platoons == (FIG2_POSITIONS,)
    assert s.grid["dx"] == 2.5e-3 and s.t_end == 15.0


def test_bundled_fig4_has_jam_block():
    s = load_scenario("ftl_lwr_fig4")
    assert (-3.0, -1.0, 1.0) in s.density_pieces


def test_bundled_fig3_corrections():
    s = load_scenario("lwr_ftl_fig3")
    assert (-7.0, -6.0, 0.6) in s.density_pieces
    assert list(s.platoons[0]).count(2.5) == 1


@pytest.mark.parametrize("name", BUNDLED)
def test_bundled_scenarios_parse(name):
    assert load_scenario(name).variant in name


def test_minimal_document():
    s = parse_scenario(MINIMAL)
    assert s.cfl == 0.9 and s.variant == "ftl_lwr"


@pytest.mark.parametrize(
    "edit, path",
    [
        (("platoons = [[0.0, 1.0]]", "platoons = [[0.0, 0.3]]"), "platoons[0][1]"),
        (("[[2.0, 3.0, 0.5]]", "[[2.0, 3.0, 1.5]]"), "density_pieces[0][2]"),
        (("[[2.0, 3.0, 0.5]]", "[[0.5, 3.0, 0.5]]"), "density_pieces[0]"),
        (("[[2.0, 3.0, 0.5]]", "[[2.0, 3.0, 0.5], [2.5, 4.0, 0.1]]"), "density_pieces[1]"),
        (('variant = "ftl_lwr"', 'variant = "other"'), "variant"),
        (('family = "greenshields"', 'family = "cubic"'), "speed_law.family"),
        (("xmax = 5.0", "xmax = 2.5"), "grid"),
        (("dx = 0.01", "dx = -0.01"), "grid.dx"),
        (("t_end = 1.0", 't_end = "soon"'), "t_end"),
        (("t_end = 1.0", "t_end = 1.0\nleader_w = [[0.0, 0.5]]"), "leader_w"),
    ],
)
def test_rejections_name_the_field(edit, path):
    with pytest.raises(ScenarioError) as info:
        parse_scenario(MINIMAL.replace(*edit))
    assert info.value.path == path
    assert str(info.value).startswith(path)


def test_lwr_ftl_leader_profile_checks():
    base = MINIMAL.replace('"ftl_lwr"', '"lwr_ftl"').replace("[[2.0, 3.0, 0.5]]", "[[-0.9, -0.2, 0.5]]")
    with pytest.raises(ScenarioError, match="leader_w"):
        parse_scenario(base)
    with pytest.raises(ScenarioError) as info:
        parse_scenario(base.replace("t_end = 1.0", "t_end = 1.0\nleader_w = [[0.0, 1.5]]"))
    assert info.value.path == "leader_w[0][1]"
    with pytest.raises(ScenarioError) as info:
        parse_scenario(base.replace("t_end = 1.0", "t_end = 1.0\nleader_w = [[0.0, 0.5], [0.0, 0.2]]"))
    assert info.value.path == "leader_w[1][0]"
    ok = parse_scenario(base.replace("t_end = 1.0", "t_end = 1.0\nleader_w = [[0.0, 0.5], [0.5, 0.2]]"))
    assert ok.leader_w == ((0.0, 0.5), (0.5, 0.2))


def test_invalid_toml():
    with pytest.raises(ScenarioError):
        parse_scenario("variant = [")


def test_rasterize_exact_averages():
    s = scenario("lwr_ftl", [[2.0, 3.0]], [[0.0, 0.75, 1.0]], w=[[0.0, 0.5]], xmin=-1.0, xmax=4.0, dx=0.5)
    np.testing.assert_array_equal(rasterize_density(s).rho[:4], [0.0, 0.0, 1.0, 0.5])
    aligned = replace(s, density_pieces=((0.0, 1.0, 1.0),))
    np.testing.assert_array_equal(rasterize_density(aligned).rho[2:4], [1.0, 1.0])


def test_fig2_initial_mass():
    assert rasterize_density(load_scenario("lwr_ftl_fig2")).mass() == pytest.approx(4.3, abs=1e-12)


@pytest.mark.parametrize("name", BUNDLED)
def test_round_trip_bundled(name):
    s = load_scenario(name)
    assert parse_scenario(serialize_scenario(s)) == s


@given(st.integers(0, 2**32 - 1))
def test_round_trip_random(seed):
    s = random_ftl_lwr(np.random.default_rng(seed))
    assert parse_scenario(serialize_scenario(s)) == s


@given(st.integers(0, 2**32 - 1), st.floats(0.003, 0.05))
def test_rasterized_mass_is_exact(seed, dx):
    s = replace(random_ftl_lwr(np.random.default_rng(seed)))
    s = replace(s, grid={**s.grid, "dx": dx})
    expected = sum((b - a) * v for a, b, v in s.density_pieces)
    assert rasterize_density(s).mass() == pytest.approx(expected, abs=1e-12)


def read_rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_single_snapshot_outputs(tmp_path, law):
    s = scenario("lwr_ftl", [[1.0, 2.0]], w=[[0.0, 0.5]], xmin=0.0, xmax=3.0, dx=1.0, t_end=0.0)
    r = simulate(s)
    paths = write_outputs(r.history, tmp_path, law)
    density = read_rows(paths["density"])
    assert density[0] == ["t", "x", "rho"] and len(density) == 1 + 3
    traj = read_rows(paths["trajectories"])
    assert traj[0] == ["t", "platoon", "index", "position", "velocity"] and len(traj) == 1 + 2
    diag = read_rows(paths["diagnostics"])
    assert diag[0] == ["t", "total_mass", "min_spacing", "tv"] and len(diag) == 2


def test_output_cadence_includes_endpoints(tmp_path, law):
    assert len(output_times(1.0, 0.1)) == 11
    s = scenario("ftl_lwr", [[-1.0, 0.0]], [[1.0, 2.0, 0.5]], xmin=-2.0, xmax=4.0, dx=0.05, t_end=1.0,
                 output_every=0.1)
    r = simulate(s)
    paths = write_outputs(r.history, tmp_path, law)
    times = {row[0] for row in read_rows(paths["density"])[1:]}
    assert len(times) == 11
    assert float(sorted(times, key=float)[-1]) == 1.0


def test_general_diagnostics_have_strip_columns(tmp_path):
    r = simulate(load_scenario("general_fig1"), dx=0.02, t_end=0.5, output_every=0.25)
    paths = write_outputs(r.history, tmp_path, r.law)
    header = read_rows(paths["diagnostics"])[0]
    assert header == ["t", "total_mass", "min_spacing", "tv", "segment_mass_1"]


def test_fig2_trajectories_have_ten_vehicles(tmp_path):
    r = simulate(load_scenario("lwr_ftl_fig2"), dx=0.02, t_end=1.0, output_every=0.5)
    rows = read_rows(write_outputs(r.history, tmp_path, r.law)["trajectories"])[1:]
    assert {int(row[2]) for row in rows} == set(range(1, 11))
    assert len(rows) == 3 * 10


def test_empty_history_rejected(tmp_path, law):
    with pytest.raises(ValueError):
        write_outputs([], tmp_path, law)


def test_values_written_with_17_digits(tmp_path, law):
    s = scenario("ftl_lwr", [[-1.0, 0.0]], [[1.0, 2.0, 1 / 3]], xmin=-2.0, xmax=4.0, dx=0.5, t_end=0.0)
    paths = write_outputs(simulate(s).history, tmp_path, law)
    values = [float(row[2]) for row in read_rows(paths["density"])[1:]]
    assert 1 / 3 in values
