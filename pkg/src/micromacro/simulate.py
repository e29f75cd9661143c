"""Time loop: step a scenario to t_end, recording snapshots at a fixed cadence."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .coupler import HybridState, global_dt, step
from .diagnostics import DiagnosticsRecord, record
from .ftl import PrescribedSpeed
from .scenario_io import Scenario, initial_state
from .speed_law import SpeedLaw


@dataclass
class StepLog:
    """Per-step quantities; entry k describes the step starting at ``t[k]``."""

    t: list = field(default_factory=list)
    dt: list = field(default_factory=list)
    leader_speeds: list = field(default_factory=list)
    min_spacing: list = field(default_factory=list)
    rho_min: list = field(default_factory=list)
    rho_max: list = field(default_factory=list)

    def as_arrays(self) -> dict:
        return {k: np.asarray(v) for k, v in vars(self).items()}


@dataclass
class SimulationResult:
    scenario: Scenario
    law: SpeedLaw
    history: list  # [(HybridState, DiagnosticsRecord)]
    log: StepLog

    @property
    def final(self) -> HybridState:
        return self.history[-1][0]


def output_times(t_end: float, every: float) -> list:
    n = int(np.floor(t_end / every + 1e-9))
    times = [k * every for k in range(n + 1)]
    if t_end - times[-1] > 1e-12 * max(1.0, t_end):
        times.append(t_end)
    return times


def _breakpoints(state: HybridState) -> list:
    return [p for p in state.policies if isinstance(p, PrescribedSpeed)]


def simulate(scenario: Scenario, *, dx=None, cfl=None, t_end=None, output_every=None, state=None) -> SimulationResult:
    s = scenario.with_overrides(dx=dx, cfl=cfl, t_end=t_end, output_every=output_every)
    law = s.law()
    state = initial_state(s) if state is None else state
    targets = output_times(s.t_end, s.output_every)
    history = [(state, record(state, law))]
    log = StepLog()
    policies = _breakpoints(state)

    for target in targets[1:]:
        while state.t < target:
            dt = global_dt(state, law, s.cfl)
            stop = min([target] + [p.next_breakpoint(state.t) for p in policies])
            if state.t + dt >= stop - 1e-12 * max(1.0, stop):
                dt = stop - state.t
            t0 = state.t
            state = step(state, law, dt)
            if stop == target and abs(state.t - target) < 1e-9:
                state = _pin_time(state, target)
            log.t.append(t0)
            log.dt.append(dt)
            log.leader_speeds.append(tuple(float(c.velocities[-1]) for c in state.platoons))
            log.min_spacing.append(min(c.min_spacing() for c in state.platoons))
            log.rho_min.append(min(float(seg.field.rho.min()) for seg in state.segments))
            log.rho_max.append(max(float(seg.field.rho.max()) for seg in state.segments))
        history.append((state, record(state, law)))
    return SimulationResult(s, law, history, log)


def _pin_time(state: HybridState, t: float) -> HybridState:
    """Remove accumulated round-off so snapshots carry their nominal time."""
    segs = tuple(replace(seg, field=replace(seg.field, t=t)) for seg in state.segments)
    return replace(state, t=t, segments=segs)
