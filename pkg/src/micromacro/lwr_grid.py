"""Lax-Friedrichs finite volumes for the LWR equation on a fixed uniform grid.

The macroscopic phase occupies an activity window ``[a, b]`` that cuts
through the grid. Cell values are averages of the density extended by zero
outside the window.

A right boundary carrying a :class:`BoundaryDatum` is a moving wall: the
interface just behind the cell containing the wall uses the Godunov flux of
the Riemann problem (interior | imposed density), nothing crosses into the
micro phase, and the cut cell at the wall accumulates the mass it receives
until the wall has swept across it. A side without datum is free: the grid
edge gets a far-field ghost value and a finite window edge is only a label
(the caller restricts the field afterwards).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import CFLError, DomainError
from .riemann import godunov_flux
from .speed_law import SpeedLaw

INF = float("inf")
# Lambda_loc floor, relative to v(0).
LAMBDA_FLOOR = 1e-6


@dataclass(frozen=True)
class DensityField:
    x_min: float
    dx: float
    rho: np.ndarray
    window: tuple = (-INF, INF)
    t: float = 0.0
    # Cumulative mass that left through boundary interfaces and grid ends.
    outflow: float = 0.0

    def __post_init__(self):
        rho = np.array(self.rho, dtype=float)
        if not self.dx > 0:
            raise DomainError("dx must be positive")
        if rho.ndim != 1 or rho.size < 3:
            raise DomainError("a field needs at least three cells")
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "window", (float(self.window[0]), float(self.window[1])))

    @classmethod
    def zeros(cls, x_min, x_max, dx, **kw) -> "DensityField":
        n = int(round((x_max - x_min) / dx))
        return cls(x_min, dx, np.zeros(n), **kw)

    @property
    def n_cells(self) -> int:
        return self.rho.size

    @property
    def x_max(self) -> float:
        return self.x_min + self.n_cells * self.dx

    @property
    def edges(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n_cells + 1)

    @property
    def centers(self) -> np.ndarray:
        return self.x_min + self.dx * (np.arange(self.n_cells) + 0.5)

    def mass(self) -> float:
        return float(np.sum(self.rho) * self.dx)

    def cell_index(self, x: float) -> int:
        """Index of the cell containing x (x on an edge belongs to the right cell)."""
        return int(np.floor((x - self.x_min) / self.dx))

    def active_mask(self) -> np.ndarray:
        """Cells not wholly outside the activity window."""
        e = self.edges
        a, b = self.window
        return (e[1:] > a) & (e[:-1] < b)

    def restricted(self) -> "DensityField":
        """Copy with every cell wholly outside the window set to 0."""
        return replace(self, rho=np.where(self.active_mask(), self.rho, 0.0))

    def with_window(self, a=None, b=None) -> "DensityField":
        wa, wb = self.window
        return replace(self, window=(wa if a is None else a, wb if b is None else b))


@dataclass(frozen=True)
class BoundaryDatum:
    side: str  # "left" | "right"
    position: float
    speed: float
    density: float

    def __post_init__(self):
        if self.side not in ("left", "right"):
            raise DomainError(f"side must be 'left' or 'right', got {self.side!r}")
        if not 0.0 <= self.density <= 1.0:
            raise DomainError(f"imposed density {self.density} outside [0, 1]")
        if self.speed < 0:
            raise DomainError(f"boundary speed {self.speed} is negative")


def local_char_speed(field: DensityField, law: SpeedLaw, lo=None, hi=None) -> float:
    mask = field.active_mask()
    if lo is not None:
        mask[:lo] = False
    if hi is not None:
        mask[hi + 1:] = False
    if not np.any(mask):
        raise DomainError("empty activity window")
    lam = float(np.max(np.abs(law.dflux(field.rho[mask]))))
    return max(lam, LAMBDA_FLOOR * law.vmax)


def cfl_dt(field: DensityField, law: SpeedLaw, cfl: float = 0.9) -> float:
    """dt = cfl * dx / Lambda_loc over the active cells."""
    if not 0 < cfl <= 1:
        raise DomainError(f"cfl factor must lie in (0, 1], got {cfl}")
    return cfl * field.dx / local_char_speed(field, law)


def lax_friedrichs_flux(law: SpeedLaw, rho_l, rho_r, dx_over_dt: float):
    return 0.5 * (law.flux(rho_l) + law.flux(rho_r)) - 0.5 * dx_over_dt * (rho_r - rho_l)


def _ghost(rho, far_field, edge):
    if far_field == "zero":
        return 0.0
    if far_field == "copy":
        return rho[0] if edge == "left" else rho[-1]
    raise DomainError(f"unknown far-field condition {far_field!r}")


def lax_friedrichs_step(
    field: DensityField,
    law: SpeedLaw,
    dt: float,
    left: Optional[BoundaryDatum] = None,
    right: Optional[BoundaryDatum] = None,
    far_field: tuple = ("zero", "zero"),
    check_cfl: bool = True,
) -> DensityField:
    """Advance the field by one Lax-Friedrichs step of size ``dt``.

    ``left`` may only describe a static inflow boundary; moving boundaries
    with macro traffic on their right are free sides handled by the caller.
    """
    if not dt > 0:
        raise DomainError(f"time step must be positive, got {dt}")
    rho = field.rho
    n = rho.size
    dx = field.dx
    lo, hi = 0, n - 1

    if right is not None:
        if right.side != "right":
            raise DomainError("right datum must have side='right'")
        wall = field.cell_index(right.position)
        if not 1 <= wall <= n - 1:
            raise DomainError(f"right boundary {right.position} outside the grid interior")
        hi = wall
    if left is not None:
        if left.side != "left":
            raise DomainError("left datum must have side='left'")
        if left.speed != 0:
            raise DomainError("moving left boundary data are not supported")
        first = field.cell_index(left.position)
        if not 0 <= first <= n - 2:
            raise DomainError(f"left boundary {left.position} outside the grid interior")
        lo = first

    if check_cfl:
        lam = local_char_speed(field, law, lo, hi)
        if dt * lam > dx * (1 + 1e-12):
            raise CFLError(f"dt = {dt:.6g} exceeds dx / Lambda = {dx / lam:.6g}")

    # Interface i is the left edge of cell i; ext[i] and ext[i + 1] straddle it.
    ext = np.empty(n + 2)
    ext[1:-1] = rho
    ext[0] = _ghost(rho, far_field[0], "left")
    ext[-1] = _ghost(rho, far_field[1], "right")
    flux = lax_friedrichs_flux(law, ext[:-1], ext[1:], dx / dt)

    if right is not None:
        flux[hi] = godunov_flux(law, rho[hi - 1], right.density)
        flux[hi + 1:] = 0.0
    if left is not None:
        flux[lo] = godunov_flux(law, left.density, rho[lo])
        flux[:lo] = 0.0

    new = rho.copy()
    new[lo:hi + 1] -= (dt / dx) * (flux[lo + 1:hi + 2] - flux[lo:hi + 1])
    boundary_out = dt * (flux[hi + 1] - flux[lo])

    a, b = field.window
    if right is not None:
        b = right.position + dt * right.speed
        new[field.cell_index(b) + 1:] = 0.0
    if left is not None:
        a = left.position
    return replace(field, rho=new, window=(a, b), t=field.t + dt, outflow=field.outflow + boundary_out)


def sample_density(field: DensityField, x: float, side: str = "right") -> float:
    """One-sided value of the piecewise constant reconstruction at x.

    Cells wholly outside the activity window read as 0.
    """
    if not field.x_min <= x <= field.x_max:
        raise DomainError(f"x = {x} beyond the grid [{field.x_min}, {field.x_max}]")
    s = (x - field.x_min) / field.dx
    if side == "right":
        k = int(np.floor(s))
    elif side == "left":
        k = int(np.ceil(s)) - 1
    else:
        raise DomainError(f"side must be 'left' or 'right', got {side!r}")
    k = min(max(k, 0), field.n_cells - 1)
    a, b = field.window
    lo, hi = field.x_min + k * field.dx, field.x_min + (k + 1) * field.dx
    if hi <= a or lo >= b:
        return 0.0
    return float(field.rho[k])


def l1_distance(a: DensityField, b: DensityField) -> float:
    if a.n_cells != b.n_cells or a.dx != b.dx or a.x_min != b.x_min:
        raise DomainError("fields live on different grids")
    return float(np.sum(np.abs(a.rho - b.rho)) * a.dx)


def cell_averages(x_min: float, dx: float, n_cells: int, pieces) -> np.ndarray:
    """Exact cell averages of a sum of constants on intervals ``(a, b, value)``."""
    edges = x_min + dx * np.arange(n_cells + 1)
    out = np.zeros(n_cells)
    for a, b, value in pieces:
        frac = np.clip(np.minimum(edges[1:], b) - np.maximum(edges[:-1], a), 0.0, None) / dx
        # Cells wholly inside the piece get exactly the piece value.
        frac[(edges[:-1] >= a) & (edges[1:] <= b)] = 1.0
        out += value * frac
    return out
