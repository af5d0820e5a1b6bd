"""Overactuation: pick the muscle-3 force reference as the midpoint of the
force window shared by all three muscles."""

from __future__ import annotations

import logging
from dataclasses import dataclass

from . import muscle as mm
from .errors import InfeasibleWindowError

log = logging.getLogger(__name__)

TIE_RTOL = 1e-12


@dataclass(frozen=True)
class ForceWindow:
    f_min: float
    f_max: float
    idx_min: int  # muscle (1..3) whose lower bound is active
    idx_max: int  # muscle (1..3) whose upper bound is active

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.f_min + self.f_max)

    @property
    def width(self) -> float:
        return self.f_max - self.f_min

    def contains(self, F: float) -> bool:
        return self.f_min <= F <= self.f_max


@dataclass(frozen=True)
class Allocation:
    F3: float
    F3_rate: float
    window: ForceWindow


def _bounds(params, eps):
    return [mm.force_range(params, e) for e in eps]


def feasible_window(params, eps1, eps2, eps3) -> ForceWindow:
    ranges = _bounds(params, (eps1, eps2, eps3))
    lows = [r[0] for r in ranges]
    highs = [r[1] for r in ranges]
    i_lo = max(range(3), key=lambda i: lows[i])
    i_hi = min(range(3), key=lambda i: highs[i])
    f_min, f_max = lows[i_lo], highs[i_hi]
    if f_min > f_max:
        raise InfeasibleWindowError(f_min, f_max, i_lo + 1, i_hi + 1)
    return ForceWindow(f_min, f_max, i_lo + 1, i_hi + 1)


def f3_reference(params, eps1, eps2, eps3) -> float:
    return feasible_window(params, eps1, eps2, eps3).midpoint


def _bound_rate(params, P, eps, eps_dot):
    # d/dt force(P, eps) at constant P
    return (mm.force_gain_H_deriv(params, eps) * (P - params.P0) + mm.force_offset_L_deriv(params, eps)) * eps_dot


def _active(values, rates, pick_max):
    """Index of the active bound; ties go to the muscle that stays active just after."""
    best = max(values) if pick_max else min(values)
    tol = TIE_RTOL * max(1.0, abs(best))
    tied = [i for i in range(3) if abs(values[i] - best) <= tol]
    if len(tied) == 1:
        return tied[0]
    return max(tied, key=lambda i: rates[i]) if pick_max else min(tied, key=lambda i: rates[i])


def allocate(params, geom, theta_x, theta_y, omega_x=0.0, omega_y=0.0) -> Allocation:
    """F3 reference and its time derivative along a pose/rate pair."""
    eps, eps_dot = mm.contractions(params, geom, theta_x, theta_y, omega_x, omega_y)
    ranges = _bounds(params, eps)
    lows = [r[0] for r in ranges]
    highs = [r[1] for r in ranges]
    low_rates = [_bound_rate(params, params.P_min_abs, e, d) for e, d in zip(eps, eps_dot)]
    high_rates = [_bound_rate(params, params.P_max_abs, e, d) for e, d in zip(eps, eps_dot)]
    i_lo = _active(lows, low_rates, pick_max=True)
    i_hi = _active(highs, high_rates, pick_max=False)
    f_min, f_max = lows[i_lo], highs[i_hi]
    if f_min > f_max:
        raise InfeasibleWindowError(f_min, f_max, i_lo + 1, i_hi + 1)
    window = ForceWindow(f_min, f_max, i_lo + 1, i_hi + 1)
    rate = 0.5 * (low_rates[i_lo] + high_rates[i_hi])
    return Allocation(window.midpoint, rate, window)


def f3_reference_rate(params, geom, theta_x, theta_y, omega_x, omega_y) -> float:
    return allocate(params, geom, theta_x, theta_y, omega_x, omega_y).F3_rate
