"""Small builders shared by the test modules."""

from micromacro.scenario_io import Scenario, initial_state, validate_scenario

GREENSHIELDS = {"family": "greenshields", "vmax": 1.0}


def scenario(variant, platoons, pieces=(), *, w=None, xmin=-6.0, xmax=6.0, dx=0.01, ell=0.49, t_end=1.0,
             output_every=None):
    s = Scenario(
        variant=variant,
        speed_law=dict(GREENSHIELDS),
        ell=ell,
        platoons=tuple(tuple(float(x) for x in p) for p in platoons),
        density_pieces=tuple(tuple(float(x) for x in p) for p in pieces),
        grid={"xmin": xmin, "xmax": xmax, "dx": dx},
        t_end=t_end,
        output_every=output_every or t_end or 1.0,
        leader_w=None if w is None else tuple(tuple(float(x) for x in p) for p in w),
    )
    validate_scenario(s)
    return s


def state(*args, **kw):
    return initial_state(scenario(*args, **kw))
