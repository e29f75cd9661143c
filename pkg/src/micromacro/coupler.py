"""Alternating micro/macro model on a shared clock.

The real line is split into macro segments and platoons, ordered left to
right::

    segment 0 | platoon 0 | segment 1 | platoon 1 | ... | segment N

Each macro segment keeps its own :class:`DensityField` on the common grid.
Its right edge (if any) is the first vehicle of the platoon on its right,
treated as a moving wall with imposed density ell / (p_2 - p_1). Its left
edge (if any) is the leader of the platoon on its left; that side is
evolved as a Cauchy problem and only cut off when the state is viewed
through :attr:`HybridState.field`.

``lwr_ftl`` keeps only segment 0 and drives the leader with a prescribed
speed; ``ftl_lwr`` keeps only the segment right of the single platoon.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence, Union

import numpy as np

from .errors import DomainError, InvariantError
from .ftl import MacroCoupled, PrescribedSpeed, VehicleColumn, check_column, euler_step, ftl_rhs
from .lwr_grid import INF, BoundaryDatum, DensityField, lax_friedrichs_step, local_char_speed, sample_density
from .speed_law import SpeedLaw

LeaderPolicy = Union[PrescribedSpeed, MacroCoupled]


@dataclass(frozen=True)
class Segment:
    field: DensityField
    left: Optional[int] = None  # platoon whose leader bounds the segment on the left
    right: Optional[int] = None  # platoon whose first vehicle bounds it on the right
    right_far_field: str = "copy"


@dataclass(frozen=True)
class HybridState:
    t: float
    platoons: tuple
    policies: tuple
    segments: tuple
    variant: str = "general"

    @property
    def grid(self) -> DensityField:
        return self.segments[0].field

    def window(self, seg: Segment) -> tuple:
        a = self.platoons[seg.left].leader if seg.left is not None else -INF
        b = self.platoons[seg.right].first if seg.right is not None else INF
        return a, b

    def segment_view(self, i: int) -> DensityField:
        """Segment ``i`` restricted to its activity window."""
        seg = self.segments[i]
        return seg.field.with_window(*self.window(seg)).restricted()

    @property
    def field(self) -> DensityField:
        """The shared density: all segments restricted and summed, zero on platoons."""
        views = [self.segment_view(i) for i in range(len(self.segments))]
        rho = np.sum([v.rho for v in views], axis=0)
        f0 = views[0]
        return DensityField(f0.x_min, f0.dx, rho, t=self.t)


def build_state(platoons: Sequence[VehicleColumn], policies: Sequence[LeaderPolicy], segments: Sequence[Segment],
                variant: str = "general", t: float = 0.0) -> HybridState:
    state = HybridState(t, tuple(platoons), tuple(policies), (), variant)
    segs = []
    for seg in segments:
        a, b = state.window(seg)
        segs.append(replace(seg, field=replace(seg.field.with_window(a, b), t=t)))
    state = replace(state, segments=tuple(segs))
    check_phases(state)
    return state


def leader_speed(state: HybridState, law: SpeedLaw, j: int) -> float:
    policy = state.policies[j]
    if isinstance(policy, PrescribedSpeed):
        return policy.at(state.t)
    field = state.segments[policy.segment].field
    rho = sample_density(field, state.platoons[j].leader, "right")
    return float(law.v(rho))


def current_velocities(state: HybridState, law: SpeedLaw) -> list:
    """Right-hand side of every platoon at the current state."""
    return [ftl_rhs(col, law, leader_speed(state, law, j)) for j, col in enumerate(state.platoons)]


def global_dt(state: HybridState, law: SpeedLaw, cfl: float = 0.9) -> float:
    """One step for every phase: cfl dx / max(Lambda_loc over segments, v(0)).

    The v(0) term keeps every free boundary within one cell per step.
    """
    lam = max(local_char_speed(state.segment_view(i), law) for i in range(len(state.segments)))
    return cfl * state.grid.dx / max(lam, law.vmax)


def check_phases(state: HybridState, dt: float = 0.0, law: Optional[SpeedLaw] = None) -> None:
    cols = state.platoons
    for j in range(len(cols) - 1):
        if not cols[j].leader < cols[j + 1].first:
            raise InvariantError(f"platoon {j} overtook platoon {j + 1} at t = {state.t:.6g}")
    grid = state.grid
    for seg in state.segments:
        a, b = state.window(seg)
        if not a < b:
            raise InvariantError(f"empty macro segment at t = {state.t:.6g}")
        if (np.isfinite(a) and not grid.x_min <= a <= grid.x_max) or (np.isfinite(b) and not grid.x_min < b < grid.x_max):
            raise InvariantError(f"phase boundary left the grid at t = {state.t:.6g}")
    if law is not None:
        for col in cols:
            check_column(col, law, dt)


def step_general(state: HybridState, law: SpeedLaw, dt: float) -> HybridState:
    velocities = current_velocities(state, law)
    new_cols = [
        euler_step(col, law, float(vel[-1]), dt) for col, vel in zip(state.platoons, velocities)
    ]

    new_segs = []
    for seg in state.segments:
        datum = None
        if seg.right is not None:
            col = state.platoons[seg.right]
            datum = BoundaryDatum(
                "right",
                col.first,
                float(velocities[seg.right][0]),
                min(1.0, float(col.local_density())),
            )
        field = lax_friedrichs_step(seg.field, law, dt, right=datum, far_field=("zero", seg.right_far_field))
        a = new_cols[seg.left].leader if seg.left is not None else -INF
        b = new_cols[seg.right].first if seg.right is not None else INF
        new_segs.append(replace(seg, field=field.with_window(a, b)))

    new = replace(state, t=state.t + dt, platoons=tuple(new_cols), segments=tuple(new_segs))
    check_phases(new, dt, law)
    return new


def step_lwr_ftl(state: HybridState, law: SpeedLaw, dt: float) -> HybridState:
    if len(state.platoons) != 1 or len(state.segments) != 1 or state.segments[0].right != 0:
        raise DomainError("LWR-FtL needs one platoon with a macro phase on its left only")
    if not isinstance(state.policies[0], PrescribedSpeed):
        raise DomainError("LWR-FtL leader must follow a prescribed speed")
    return step_general(state, law, dt)


def step_ftl_lwr(state: HybridState, law: SpeedLaw, dt: float) -> HybridState:
    if len(state.platoons) != 1 or len(state.segments) != 1 or state.segments[0].left != 0:
        raise DomainError("FtL-LWR needs one platoon with a macro phase on its right only")
    return step_general(state, law, dt)


STEPPERS = {"lwr_ftl": step_lwr_ftl, "ftl_lwr": step_ftl_lwr, "general": step_general}


def step(state: HybridState, law: SpeedLaw, dt: float) -> HybridState:
    return STEPPERS[state.variant](state, law, dt)


def layout(variant: str, n_platoons: int):
    """(left, right) platoon indices of each macro segment for a variant."""
    if variant == "lwr_ftl":
        return [(None, 0)]
    if variant == "ftl_lwr":
        return [(0, None)]
    if variant == "general":
        return [(None, 0)] + [(j, j + 1) for j in range(n_platoons - 1)] + [(n_platoons - 1, None)]
    raise DomainError(f"unknown variant {variant!r}")
