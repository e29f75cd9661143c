"""Speed laws v(rho) and the associated flux f(rho) = rho * v(rho).

Two families are available: the affine Greenshields law ``v = V (1 - rho)``,
for which every derived quantity is known in closed form, and user supplied
analytic laws given by callables for ``v`` and ``v'`` (optionally ``v''``).
All callables must accept and return numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional

import numpy as np

from .errors import DomainError

ArrayFn = Callable[[np.ndarray], np.ndarray]

# Slack accepted on density arguments before they count as out of range.
DENSITY_SLACK = 1e-12
# Resolution of the grid used when no closed form is available.
_GRID_POINTS = 20001


def _check_density(rho):
    rho = np.asarray(rho, dtype=float)
    if np.any(~np.isfinite(rho)) or np.any(rho < -DENSITY_SLACK) or np.any(rho > 1 + DENSITY_SLACK):
        raise DomainError(f"density outside [0, 1]: {rho!r}")
    return np.clip(rho, 0.0, 1.0)


@dataclass(frozen=True)
class SpeedLaw:
    """Immutable speed law on [0, 1].

    Use :meth:`greenshields` or :meth:`analytic` rather than the constructor.
    The unchecked ``_v``/``_dv`` kernels are what the solvers call in their
    inner loops; the public methods validate their argument first.
    """

    family: str
    params: dict = field(default_factory=dict)
    _v: ArrayFn = field(default=None, repr=False, compare=False)
    _dv: ArrayFn = field(default=None, repr=False, compare=False)
    _d2v: Optional[ArrayFn] = field(default=None, repr=False, compare=False)

    @classmethod
    def greenshields(cls, vmax: float = 1.0) -> "SpeedLaw":
        if not vmax > 0:
            raise DomainError(f"vmax must be positive, got {vmax}")
        vmax = float(vmax)
        return cls(
            family="greenshields",
            params={"vmax": vmax},
            _v=lambda r: vmax * (1.0 - r),
            _dv=lambda r: np.full_like(np.asarray(r, dtype=float), -vmax),
            _d2v=lambda r: np.zeros_like(np.asarray(r, dtype=float)),
        )

    @classmethod
    def analytic(cls, v: ArrayFn, dv: ArrayFn, d2v: Optional[ArrayFn] = None, name: str = "analytic") -> "SpeedLaw":
        """Wrap a user supplied law. Nothing is checked here; call :func:`validate`."""
        return cls(family="analytic", params={"name": name}, _v=v, _dv=dv, _d2v=d2v)

    # -- evaluation -----------------------------------------------------

    @property
    def vmax(self) -> float:
        """Free-flow speed v(0)."""
        return float(self._v(np.asarray(0.0)))

    def v(self, rho):
        return self._v(_check_density(rho))

    def dv(self, rho):
        return self._dv(_check_density(rho))

    def flux(self, rho):
        """f(rho) = rho v(rho), unchecked (solver kernel)."""
        rho = np.asarray(rho, dtype=float)
        return rho * self._v(rho)

    def dflux(self, rho):
        """f'(rho) = v(rho) + rho v'(rho), unchecked."""
        rho = np.asarray(rho, dtype=float)
        return self._v(rho) + rho * self._dv(rho)

    def d2flux(self, rho):
        """f''(rho) = 2 v'(rho) + rho v''(rho); requires ``d2v``."""
        if self._d2v is None:
            raise NotImplementedError("law was built without a second derivative")
        rho = np.asarray(rho, dtype=float)
        return 2.0 * self._dv(rho) + rho * self._d2v(rho)

    def u(self, rho):
        """Bounded Lipschitz extension of v to the whole real line.

        ``v(0)`` left of 0, ``v`` on [0, 1], and 0 right of 1.
        """
        rho = np.asarray(rho, dtype=float)
        return np.where(rho > 1.0, 0.0, self._v(np.clip(rho, 0.0, 1.0)))

    def inverse_dflux(self, xi):
        """Solve f'(rho) = xi for rho in [0, 1]; xi is clipped to [f'(1), f'(0)].

        Closed form for Greenshields, vectorised bisection otherwise (f' is
        strictly decreasing for a concave flux).
        """
        xi = np.asarray(xi, dtype=float)
        if self.family == "greenshields":
            vmax = self.params["vmax"]
            return np.clip(0.5 * (1.0 - xi / vmax), 0.0, 1.0)
        lo = np.zeros_like(xi)
        hi = np.ones_like(xi)
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            right = self.dflux(mid) > xi
            lo = np.where(right, mid, lo)
            hi = np.where(right, hi, mid)
            if np.all(hi - lo < 1e-13):
                break
        return 0.5 * (lo + hi)

    # -- cached constants -----------------------------------------------

    @cached_property
    def lipschitz(self) -> float:
        """Lip(v) = max |v'| on [0, 1]."""
        if self.family == "greenshields":
            return self.params["vmax"]
        return float(np.max(np.abs(self._dv(np.linspace(0.0, 1.0, _GRID_POINTS)))))

    @cached_property
    def max_char_speed(self) -> float:
        """Lambda = max |f'| on [0, 1]."""
        if self.family == "greenshields":
            return self.params["vmax"]
        return float(np.max(np.abs(self.dflux(np.linspace(0.0, 1.0, _GRID_POINTS)))))


def eval_v(law: SpeedLaw, rho):
    return law.v(rho)


def eval_extended_u(law: SpeedLaw, rho):
    return law.u(rho)


@dataclass(frozen=True)
class ValidationReport:
    checks: dict
    passed: bool

    def failures(self):
        return [name for name, ok in self.checks.items() if not ok]


def validate(law: SpeedLaw, n_samples: int = 1001) -> ValidationReport:
    """Check the structural hypotheses on ``law`` over a uniform grid.

    Comparisons are exact (no tolerance). Concavity is checked through f''
    at every sample, endpoints included, when the law carries ``v''``;
    otherwise through strict decrease of f' between consecutive samples.
    """
    if n_samples < 3:
        raise ValueError("n_samples must be at least 3")
    rho = np.linspace(0.0, 1.0, n_samples)
    v = np.asarray(law._v(rho), dtype=float)
    if law._d2v is not None:
        concave = bool(np.all(law.d2flux(rho) < 0.0))
    else:
        concave = bool(np.all(np.diff(law.dflux(rho)) < 0.0))
    checks = {
        "strictly_decreasing": bool(np.all(np.diff(v) < 0.0)),
        "vanishes_at_jam": bool(law._v(np.asarray(1.0)) == 0.0),
        "flux_strictly_concave": concave,
        "nonnegative": bool(np.all(v >= 0.0)),
    }
    return ValidationReport(checks=checks, passed=all(checks.values()))


def lipschitz_and_lambda(law: SpeedLaw):
    return law.lipschitz, law.max_char_speed


def alpha_from_ratio(max_ratio: float) -> float:
    """(1 + max_ratio)^-1."""
    if not max_ratio >= 0:
        raise DomainError(f"ratio maximum must be nonnegative, got {max_ratio}")
    return 1.0 / (1.0 + max_ratio)


def holder_alpha(law: SpeedLaw) -> float:
    """Exponent (1 + max_{0 < rho <= 1} (v(rho) - v(0)) / (rho v'(rho)))^-1.

    The ratio tends to 1 as rho -> 0 and is given that value there. The upper
    end of the range is the jam density 1.
    """
    if law.family == "greenshields":
        # (V(1 - r) - V) / (r * (-V)) == 1 identically.
        return 0.5
    rho = np.linspace(0.0, 1.0, _GRID_POINTS)[1:]
    dv = np.asarray(law._dv(rho), dtype=float)
    if np.any(dv == 0.0):
        raise DomainError("v' vanishes on (0, 1]; exponent undefined")
    ratio = (law._v(rho) - law.vmax) / (rho * dv)
    return alpha_from_ratio(max(1.0, float(np.max(ratio))))
