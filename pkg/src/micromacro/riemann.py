"""Exact self-similar solutions of the scalar LWR Riemann problem.

For a strictly concave flux an upward jump (rho_l < rho_r) is an admissible
shock and a downward jump opens a rarefaction fan.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .speed_law import SpeedLaw, _check_density


@dataclass(frozen=True)
class RiemannFan:
    rho_l: float
    rho_r: float
    kind: str  # "shock" | "rarefaction" | "constant"
    law: SpeedLaw
    speed: Optional[float] = None  # shock speed
    xi_minus: Optional[float] = None  # f'(rho_l), rarefaction head
    xi_plus: Optional[float] = None  # f'(rho_r), rarefaction tail

    def sample(self, xi):
        return sample_fan(self, xi)


def solve_riemann(law: SpeedLaw, rho_l: float, rho_r: float) -> RiemannFan:
    rho_l = float(_check_density(rho_l))
    rho_r = float(_check_density(rho_r))
    if rho_l == rho_r:
        return RiemannFan(rho_l, rho_r, "constant", law)
    if rho_l < rho_r:
        if law.family == "greenshields":
            # The quotient below, simplified; exact on standing shocks.
            sigma = law.vmax * (1.0 - rho_l - rho_r)
        else:
            sigma = float((law.flux(rho_l) - law.flux(rho_r)) / (rho_l - rho_r))
        return RiemannFan(rho_l, rho_r, "shock", law, speed=sigma)
    return RiemannFan(
        rho_l,
        rho_r,
        "rarefaction",
        law,
        xi_minus=float(law.dflux(rho_l)),
        xi_plus=float(law.dflux(rho_r)),
    )


def sample_fan(fan: RiemannFan, xi):
    """Density at similarity coordinate xi = x / t, right-continuous in xi."""
    xi = np.asarray(xi, dtype=float)
    if fan.kind == "constant":
        out = np.full_like(xi, fan.rho_l)
    elif fan.kind == "shock":
        out = np.where(xi < fan.speed, fan.rho_l, fan.rho_r)
    else:
        inner = fan.law.inverse_dflux(np.clip(xi, fan.xi_minus, fan.xi_plus))
        out = np.where(xi <= fan.xi_minus, fan.rho_l, np.where(xi >= fan.xi_plus, fan.rho_r, inner))
    return out if out.ndim else float(out)


def sample_fan_left(fan: RiemannFan, xi):
    """Left limit in xi of :func:`sample_fan`."""
    xi = np.asarray(xi, dtype=float)
    if fan.kind == "shock":
        out = np.where(xi <= fan.speed, fan.rho_l, fan.rho_r)
        return out if out.ndim else float(out)
    # The fan is continuous in xi away from shocks.
    if fan.kind == "rarefaction":
        inner = fan.law.inverse_dflux(np.clip(xi, fan.xi_minus, fan.xi_plus))
        out = np.where(xi <= fan.xi_minus, fan.rho_l, np.where(xi > fan.xi_plus, fan.rho_r, inner))
        return out if out.ndim else float(out)
    return sample_fan(fan, xi)


def boundary_trace(law: SpeedLaw, interior_state: float, boundary_state: float, boundary_speed: float) -> float:
    """Trace just left of a boundary moving at ``boundary_speed``.

    Solves the Riemann problem (interior | boundary) and takes the left limit
    of the fan along the boundary's ray.
    """
    fan = solve_riemann(law, interior_state, boundary_state)
    return float(sample_fan_left(fan, boundary_speed))


def godunov_flux(law: SpeedLaw, rho_l, rho_r):
    """Godunov numerical flux f(u(0)) of the Riemann problem (rho_l | rho_r).

    Vectorised; uses the closed form for a concave flux: the minimum of f over
    [rho_l, rho_r] for an upward jump, the maximum over [rho_r, rho_l] otherwise.
    """
    rho_l = np.asarray(rho_l, dtype=float)
    rho_r = np.asarray(rho_r, dtype=float)
    fl = law.flux(rho_l)
    fr = law.flux(rho_r)
    up = np.minimum(fl, fr)
    sonic = law.inverse_dflux(np.zeros_like(rho_l))
    inside = (rho_r <= sonic) & (sonic <= rho_l)
    down = np.where(inside, law.flux(sonic), np.maximum(fl, fr))
    return np.where(rho_l <= rho_r, up, down)


def kruzkov_flux(law: SpeedLaw, rho, k):
    """Entropy flux paired with |rho - k|: sign(rho - k) (f(rho) - f(k))."""
    rho = np.asarray(rho, dtype=float)
    return np.sign(rho - k) * (law.flux(rho) - law.flux(k))
