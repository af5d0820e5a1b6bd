"""Pneumatic artificial muscle: contraction kinematics, quasi-static force,
volume and pressure dynamics.

All functions are pure. Scalar inputs are plain floats; the force/volume
functions also broadcast over numpy arrays because they only use arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import (
    DegenerateGainError,
    NonPositiveVolumeError,
    SingularDenominatorError,
    ValidationError,
)

# contraction range covered by the +-15 deg platform envelope
EPS_RANGE = (-0.03, 0.21)

H_MIN = 1e-12  # m^2
DENOM_MIN = 1e-9


def _any(mask) -> bool:
    # plain floats skip the numpy call; this sits on the integrator hot path
    if isinstance(mask, (bool, np.bool_)):
        return mask
    return bool(np.any(mask))


@dataclass(frozen=True)
class MuscleParams:
    """Physical constants shared by the three (identical) muscles.

    Defaults are plausible commercial-muscle magnitudes, not measured values.
    ``V0_ref`` anchors the volume antiderivative; ``None`` selects the rest
    cylinder volume pi/4 * D0^2 * l0.
    """

    l0: float = 0.30  # m
    D0: float = 0.020  # m
    theta0: float = math.radians(23.0)  # rad
    alpha: float = 1.5
    K: float = 3000.0  # N
    eps_a: float = 0.25
    eps_b: float = 0.05
    eps0: float = 0.10
    k: float = 1.4
    r: float = 287.0  # J/(kg K)
    T: float = 293.0  # K
    P0: float = 1.013e5  # Pa
    P_min_abs: float = 1.25e5  # Pa
    P_max_abs: float = 7.0e5  # Pa
    V0_ref: float | None = field(default=None)

    def __post_init__(self):
        checks = [
            (self.l0 > 0, "l0 must be positive"),
            (self.D0 > 0, "D0 must be positive"),
            (0 < self.theta0 < math.pi / 2, "theta0 must lie in (0, pi/2)"),
            (self.K > 0, "K must be positive"),
            (self.eps_b > 0, "eps_b must be positive"),
            (self.alpha > 0, "alpha must be positive"),
            (self.k >= 1, "polytropic index k must be >= 1"),
            (self.r > 0, "r must be positive"),
            (self.T > 0, "T must be positive"),
            (self.P0 < self.P_min_abs < self.P_max_abs, "need P0 < P_min_abs < P_max_abs"),
            (self.V0_ref is None or self.V0_ref > 0, "V0_ref must be positive"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ValidationError(msg)

    @cached_property
    def area(self) -> float:
        return math.pi * self.D0**2 / 4

    @cached_property
    def inv_tan2(self) -> float:
        return 1.0 / math.tan(self.theta0) ** 2

    @cached_property
    def inv_sin2(self) -> float:
        return 1.0 / math.sin(self.theta0) ** 2

    @cached_property
    def rT(self) -> float:
        return self.r * self.T

    @cached_property
    def volume_constant(self) -> float:
        v0 = self.V0_ref if self.V0_ref is not None else self.area * self.l0
        # antiderivative evaluated at eps=0 is -area*l0*inv_tan2
        return v0 + self.area * self.l0 * self.inv_tan2


@dataclass(frozen=True)
class MuscleState:
    eps: float
    eps_dot: float
    P: float

    def __post_init__(self):
        if not self.P > 0:
            raise ValidationError("muscle pressure must be positive")


# -- kinematics ---------------------------------------------------------------


def contraction(params: MuscleParams, geom, theta_x, theta_y, i: int):
    """Contraction of muscle ``i`` (1..3) for the platform pose."""
    phi = geom.phi[_index(i)]
    return (geom.R / params.l0) * (
        math.cos(phi) * math.sin(theta_y) - math.sin(phi) * math.sin(theta_x) * math.cos(theta_y)
    ) + params.eps0


def contraction_rate(params: MuscleParams, geom, theta_x, theta_y, omega_x, omega_y, i: int):
    phi = geom.phi[_index(i)]
    sphi, cphi = math.sin(phi), math.cos(phi)
    return (geom.R / params.l0) * (
        -omega_x * sphi * math.cos(theta_x) * math.cos(theta_y)
        + omega_y * (cphi * math.cos(theta_y) + sphi * math.sin(theta_x) * math.sin(theta_y))
    )


def contractions(params: MuscleParams, geom, theta_x, theta_y, omega_x=0.0, omega_y=0.0):
    """All three contractions and their rates as two 3-tuples."""
    eps = tuple(contraction(params, geom, theta_x, theta_y, i) for i in (1, 2, 3))
    rates = tuple(
        contraction_rate(params, geom, theta_x, theta_y, omega_x, omega_y, i) for i in (1, 2, 3)
    )
    return eps, rates


def _index(i):
    if i not in (1, 2, 3):
        raise ValueError(f"muscle index must be 1, 2 or 3, got {i!r}")
    return i - 1


# -- quasi-static force ------------------------------------------------------


def force_gain_H(p: MuscleParams, eps):
    """Pressure-to-force gain H(eps) in m^2."""
    return p.area * (3.0 * (1.0 - eps) ** p.alpha * p.inv_tan2 - p.inv_sin2)


def force_gain_H_deriv(p: MuscleParams, eps):
    return p.area * (-3.0 * p.alpha * (1.0 - eps) ** (p.alpha - 1.0) * p.inv_tan2)


def force_offset_L(p: MuscleParams, eps):
    denom = eps + p.eps_b
    if _any(abs(denom) < DENOM_MIN):
        raise SingularDenominatorError(f"eps + eps_b vanishes at eps={eps}")
    return p.K * eps * (eps - p.eps_a) / denom


def force_offset_L_deriv(p: MuscleParams, eps):
    denom = eps + p.eps_b
    if _any(abs(denom) < DENOM_MIN):
        raise SingularDenominatorError(f"eps + eps_b vanishes at eps={eps}")
    return p.K * ((2.0 * eps - p.eps_a) * denom - eps * (eps - p.eps_a)) / denom**2


def force(p: MuscleParams, P, eps):
    """Traction force (N, positive pulls) at absolute pressure ``P``."""
    return force_gain_H(p, eps) * (P - p.P0) + force_offset_L(p, eps)


def force_rate(p: MuscleParams, P, eps, eps_dot, P_dot):
    """Time derivative of the quasi-static force."""
    return (
        force_gain_H_deriv(p, eps) * (P - p.P0) + force_offset_L_deriv(p, eps)
    ) * eps_dot + force_gain_H(p, eps) * P_dot


def pressure_from_force(p: MuscleParams, F, eps):
    """Absolute pressure that makes the muscle exert ``F`` at contraction ``eps``."""
    H = force_gain_H(p, eps)
    if _any(abs(H) < H_MIN):
        raise DegenerateGainError(f"H(eps) vanishes at eps={eps}")
    return p.P0 + (F - force_offset_L(p, eps)) / H


def force_range(p: MuscleParams, eps):
    """(F_lo, F_hi): forces reachable between the pressure bounds."""
    return force(p, p.P_min_abs, eps), force(p, p.P_max_abs, eps)


# -- volume and pressure dynamics -------------------------------------------


def dV_deps(p: MuscleParams, eps):
    return p.area * p.l0 * (-p.inv_sin2 + (p.alpha + 1.0) * (1.0 - eps) ** p.alpha * p.inv_tan2)


def volume(p: MuscleParams, eps):
    V = p.area * p.l0 * (-eps * p.inv_sin2 - (1.0 - eps) ** (p.alpha + 1.0) * p.inv_tan2) + p.volume_constant
    if _any(V <= 0):
        raise NonPositiveVolumeError(f"muscle volume non-positive at eps={eps}")
    return V


def pressure_derivative(p: MuscleParams, P, eps, eps_dot, q):
    """dP/dt for mass inflow ``q`` (kg/s), absolute pressure form."""
    V = volume(p, eps)
    return (p.k * p.rT / V) * (q - (P / p.rT) * dV_deps(p, eps) * eps_dot)


def force_and_pressure_rate(p: MuscleParams, P: float, eps: float, eps_dot: float, q: float):
    """(force, dP/dt) for scalar inputs, sharing one power evaluation.

    Same values as ``force`` and ``pressure_derivative``; used by the
    integrator's right-hand side.
    """
    om = 1.0 - eps
    pa = om**p.alpha
    denom = eps + p.eps_b
    if abs(denom) < DENOM_MIN:
        raise SingularDenominatorError(f"eps + eps_b vanishes at eps={eps}")
    F = p.area * (3.0 * pa * p.inv_tan2 - p.inv_sin2) * (P - p.P0) + p.K * eps * (eps - p.eps_a) / denom
    al = p.area * p.l0
    V = al * (-eps * p.inv_sin2 - om * pa * p.inv_tan2) + p.volume_constant
    if V <= 0:
        raise NonPositiveVolumeError(f"muscle volume non-positive at eps={eps}")
    dV = al * (-p.inv_sin2 + (p.alpha + 1.0) * pa * p.inv_tan2)
    return F, p.k * (p.rT * q - P * dV * eps_dot) / V


def state_coeffs(p: MuscleParams, eps, eps_dot):
    """(a, b) with dP/dt = a*P + b*q.

    ``a`` multiplies the absolute pressure; written against gauge pressure the
    drift would miss an a*P0 term.
    """
    V = volume(p, eps)
    a = -(p.k / V) * dV_deps(p, eps) * eps_dot
    b = p.k * p.rT / V
    return a, b


# -- domain checks -----------------------------------------------------------


def gain_root(p: MuscleParams) -> float:
    """Contraction where H vanishes."""
    return 1.0 - (p.inv_sin2 / (3.0 * p.inv_tan2)) ** (1.0 / p.alpha)


def volume_slope_root(p: MuscleParams) -> float:
    """Contraction where dV/deps changes sign."""
    return 1.0 - (p.inv_sin2 / ((p.alpha + 1.0) * p.inv_tan2)) ** (1.0 / p.alpha)


def check_operating_range(p: MuscleParams, eps_range=EPS_RANGE, n: int = 2001):
    """Raise ValidationError unless H > 0, eps + eps_b > 0 and V > 0 on the range."""
    lo, hi = eps_range
    eps = np.linspace(lo, hi, n)
    if np.any(eps + p.eps_b <= DENOM_MIN):
        raise ValidationError(f"eps + eps_b not positive over [{lo}, {hi}]")
    # H is strictly decreasing, so its root is the only place it can vanish
    root = gain_root(p)
    if root <= hi or np.any(force_gain_H(p, eps) <= H_MIN):
        raise ValidationError(f"H(eps) vanishes at eps={root:.4f} inside [{lo}, {hi}]")
    try:
        volume(p, eps)
    except NonPositiveVolumeError as exc:
        raise ValidationError(str(exc)) from exc
