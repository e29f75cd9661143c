from micromacro.plotting import density_image, plot_convergence, plot_density, plot_leader_speeds
from micromacro.scenario_io import load_scenario
from micromacro.simulate import simulate
from micromacro.verification import convergence_study


def test_figures_are_written(tmp_path, law):
    r = simulate(load_scenario("general_fig1"), dx=0.05, t_end=1.0, output_every=0.5)
    times, x, rho = density_image(r.history)
    assert rho.shape == (3, x.size) and list(times) == [0.0, 0.5, 1.0]
    for path in (plot_density(r.history, tmp_path / "d.png"), plot_leader_speeds(r.log, tmp_path / "v.png")):
        assert path.read_bytes()[:4] == b"\x89PNG"
    rows = convergence_study(law, 0.2, 0.8, levels=2, dx0=0.05)
    assert plot_convergence({"shock": rows}, tmp_path / "c.png").exists()


def test_single_snapshot_figure(tmp_path):
    r = simulate(load_scenario("ftl_lwr_fig4"), dx=0.05, t_end=0.0)
    assert plot_density(r.history, tmp_path / "d.png").exists()
