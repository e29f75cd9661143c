"""Conservation and variation diagnostics of a hybrid state."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coupler import HybridState, current_velocities
from .errors import DomainError
from .lwr_grid import DensityField
from .speed_law import SpeedLaw


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    total_mass: float
    strip_masses: tuple
    min_spacing: float
    min_density: float
    max_density: float
    total_variation: float
    leader_speeds: tuple


def _strip_segment(state: HybridState, j: int) -> int:
    n_strips = len(state.platoons) - 1
    if state.variant != "general" or not 1 <= j <= n_strips:
        raise DomainError(f"no strip {j}: valid indices are 1..{n_strips} in the general model")
    # Segment j sits between platoon j - 1 and platoon j (0-based platoons).
    return j


def segment_mass(state: HybridState, j: int) -> float:
    """Mass between the leader of platoon ``j`` and the first car of platoon ``j + 1``.

    Strips are numbered from 1. The cell holding the leader is weighted by
    the fraction of it lying right of the leader. The cut cell at the far
    wall is counted whole: it only ever holds mass that entered the strip.
    """
    seg = state.segments[_strip_segment(state, j)]
    field = seg.field
    a, b = state.window(seg)
    e = field.edges
    weights = np.clip((np.minimum(e[1:], b) - np.maximum(e[:-1], a)) / field.dx, 0.0, 1.0)
    wall = field.cell_index(b)
    weights[wall] = 1.0 if b > e[wall] else 0.0
    return float(np.sum(weights * field.rho) * field.dx)


def total_variation(field: DensityField) -> float:
    """Sum of |rho_{k+1} - rho_k| over the active cells (zero extension outside)."""
    rho = field.restricted().rho
    return float(np.sum(np.abs(np.diff(rho))))


def record(state: HybridState, law: SpeedLaw) -> DiagnosticsRecord:
    field = state.field
    n_strips = len(state.platoons) - 1 if state.variant == "general" else 0
    speeds = tuple(float(vel[-1]) for vel in current_velocities(state, law))
    return DiagnosticsRecord(
        t=state.t,
        total_mass=field.mass(),
        strip_masses=tuple(segment_mass(state, j) for j in range(1, n_strips + 1)),
        min_spacing=min(col.min_spacing() for col in state.platoons),
        min_density=float(field.rho.min()),
        max_density=float(field.rho.max()),
        total_variation=total_variation(field),
        leader_speeds=speeds,
    )
