"""First order follow-the-leader dynamics integrated by forward Euler."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import DomainError, InvariantError
from .speed_law import SpeedLaw


@dataclass(frozen=True)
class VehicleColumn:
    """Ordered positions p_1 <= ... <= p_n of vehicles of length ``ell``.

    ``velocities`` holds the velocities used by the step that produced this
    column (zeros for a freshly built one).
    """

    positions: np.ndarray
    ell: float
    velocities: np.ndarray = field(default=None)

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float)
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        vel = np.zeros_like(pos) if self.velocities is None else np.array(self.velocities, dtype=float)
        vel.setflags(write=False)
        object.__setattr__(self, "velocities", vel)

    @classmethod
    def admissible(cls, positions: Sequence[float], ell: float) -> "VehicleColumn":
        """Build a column and check it belongs to the admissible set."""
        col = cls(positions, ell)
        if col.n < 2:
            raise DomainError("a column needs at least two vehicles")
        if not ell > 0:
            raise DomainError(f"vehicle length must be positive, got {ell}")
        if not np.all(np.isfinite(col.positions)):
            raise DomainError("positions must be finite")
        gaps = col.spacings()
        if np.any(gaps < ell):
            i = int(np.argmin(gaps))
            raise DomainError(f"spacing p[{i + 1}] - p[{i}] = {gaps[i]:.6g} is below ell = {ell}")
        return col

    @property
    def n(self) -> int:
        return self.positions.size

    @property
    def first(self) -> float:
        return float(self.positions[0])

    @property
    def leader(self) -> float:
        return float(self.positions[-1])

    def spacings(self) -> np.ndarray:
        return np.diff(self.positions)

    def min_spacing(self) -> float:
        return float(np.min(self.spacings()))

    def local_density(self) -> float:
        """ell / (p_2 - p_1): the density the column exposes to traffic behind it."""
        return self.ell / (self.positions[1] - self.positions[0])


@dataclass(frozen=True)
class PrescribedSpeed:
    """Piecewise constant leader speed: ``values[i]`` on ``[times[i], times[i+1])``.

    The last value holds for all later times; ``times[0]`` must be 0.
    """

    times: tuple
    values: tuple

    def __post_init__(self):
        times = tuple(float(t) for t in self.times)
        values = tuple(float(w) for w in self.values)
        if not times or times[0] != 0.0 or len(times) != len(values):
            raise DomainError("breakpoints must start at t = 0 and pair each time with a value")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise DomainError("breakpoint times must be strictly increasing")
        if any(w < 0 for w in values):
            raise DomainError("leader speed must be nonnegative")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, w: float) -> "PrescribedSpeed":
        return cls((0.0,), (w,))

    @classmethod
    def from_breakpoints(cls, pairs) -> "PrescribedSpeed":
        pairs = [tuple(p) for p in pairs]
        return cls(tuple(t for t, _ in pairs), tuple(w for _, w in pairs))

    def at(self, t: float) -> float:
        i = int(np.searchsorted(self.times, t, side="right")) - 1
        return self.values[max(i, 0)]

    def max(self) -> float:
        return max(self.values)

    def next_breakpoint(self, t: float) -> float:
        """Smallest breakpoint strictly after ``t`` (inf if none)."""
        for s in self.times:
            if s > t:
                return s
        return np.inf

    def l1_distance(self, other: "PrescribedSpeed", t_end: float) -> float:
        """Exact L1([0, t_end]) distance, integrated on the merged breakpoints."""
        grid = sorted({0.0, float(t_end), *(s for s in self.times + other.times if s < t_end)})
        total = 0.0
        for a, b in zip(grid, grid[1:]):
            total += abs(self.at(a) - other.at(a)) * (b - a)
        return total


@dataclass(frozen=True)
class MacroCoupled:
    """Leader speed read from the macroscopic density ahead: v(rho(t, p_n+))."""

    segment: int


def ftl_rhs(column: VehicleColumn, law: SpeedLaw, leader_speed: float) -> np.ndarray:
    if not np.all(np.isfinite(column.positions)):
        raise InvariantError("non-finite vehicle positions")
    if leader_speed < 0 or leader_speed > law.vmax * (1 + 1e-12):
        raise DomainError(f"leader speed {leader_speed} outside [0, {law.vmax}]")
    vel = np.empty(column.n)
    vel[:-1] = law.u(column.ell / column.spacings())
    vel[-1] = leader_speed
    return vel


def euler_step(column: VehicleColumn, law: SpeedLaw, leader_speed: float, dt: float) -> VehicleColumn:
    if not dt > 0:
        raise DomainError(f"time step must be positive, got {dt}")
    vel = ftl_rhs(column, law, leader_speed)
    new = column.positions + dt * vel
    if not np.all(np.isfinite(new)):
        raise InvariantError("Euler step produced non-finite positions")
    return replace(column, positions=new, velocities=vel)


def gronwall_bound(law: SpeedLaw, ell: float, t: float, dp0: float, dw_l1: float) -> float:
    """(|p0 - p0'| + ||w - w'||_L1) * exp(2 Lip(v) t / ell)."""
    if t < 0:
        raise DomainError("t must be nonnegative")
    return (dp0 + dw_l1) * float(np.exp(2.0 * law.lipschitz * t / ell))


def default_dt(law: SpeedLaw, ell: float) -> float:
    """Standalone step 0.9 ell / (2 Lip(v)); callers usually scale it down."""
    return 0.9 * ell / (2.0 * law.lipschitz)


def check_column(column: VehicleColumn, law: SpeedLaw, dt: float) -> None:
    """Raise if ordering or the discrete spacing slack ell - V dt is breached."""
    gaps = column.spacings()
    slack = column.ell - law.vmax * dt - 1e-12
    if np.any(gaps < slack):
        raise InvariantError(f"spacing {gaps.min():.6g} below ell - V dt = {slack:.6g}")
    vel = column.velocities
    if np.any(vel < 0) or np.any(vel > law.vmax * (1 + 1e-12)):
        raise InvariantError("vehicle velocity outside [0, v(0)]")
