"""Rigid platform on a spherical hinge: geometry, torque matrices and
angular acceleration from muscle forces plus unmodelled torques."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ValidationError

DEFAULT_PHI = tuple(math.radians(a) for a in (-90.0, 30.0, 150.0))


@dataclass(frozen=True)
class PlatformGeometry:
    R: float = 0.20  # m, attachment radius
    J: float = 0.05  # kg m^2, about either horizontal axis
    phi: tuple = DEFAULT_PHI  # rad
    theta_limit: float = math.radians(15.0)

    def __post_init__(self):
        if not (self.R > 0 and self.J > 0):
            raise ValidationError("R and J must be positive")
        if len(self.phi) != 3:
            raise ValidationError("exactly three attachment angles are required")
        for a in range(3):
            for b in range(a + 1, 3):
                if abs(math.sin((self.phi[a] - self.phi[b]) / 2)) < 1e-12:
                    raise ValidationError("attachment angles must be distinct modulo 2*pi")
        if abs(math.sin(self.phi[1] - self.phi[0])) < 1e-12:
            raise ValidationError("sin(phi2 - phi1) must be non-zero")
        if not self.theta_limit > 0:
            raise ValidationError("theta_limit must be positive")

    @cached_property
    def sin_phi(self):
        return tuple(math.sin(a) for a in self.phi)

    @cached_property
    def cos_phi(self):
        return tuple(math.cos(a) for a in self.phi)

    @property
    def R_over_J(self) -> float:
        return self.R / self.J


@dataclass(frozen=True)
class PlantState:
    """x = [theta_x, theta_y, omega_x, omega_y, P1, P2, P3] (rad, rad/s, Pa)."""

    theta_x: float
    theta_y: float
    omega_x: float
    omega_y: float
    P1: float
    P2: float
    P3: float

    def __post_init__(self):
        if not (self.P1 > 0 and self.P2 > 0 and self.P3 > 0):
            raise ValidationError("pressures must be positive")

    def to_array(self) -> np.ndarray:
        return np.array(self.as_tuple())

    def as_tuple(self) -> tuple:
        return (self.theta_x, self.theta_y, self.omega_x, self.omega_y, self.P1, self.P2, self.P3)

    @classmethod
    def from_array(cls, x) -> "PlantState":
        return cls(*(float(v) for v in x))

    @property
    def pressures(self) -> tuple:
        return (self.P1, self.P2, self.P3)

    def out_of_bounds(self, geom: PlatformGeometry) -> bool:
        return abs(self.theta_x) > geom.theta_limit or abs(self.theta_y) > geom.theta_limit


@dataclass(frozen=True)
class Disturbance:
    """Unmodelled torques acting on the platform (N m).

    ``kind`` selects the time profile: ``none``, ``constant`` (gamma_x/y are
    the torques), ``sinusoid`` (gamma_x/y are amplitudes) or ``table``
    (rows of (t, gamma_x, gamma_y), linearly interpolated, held at the ends).
    ``viscous`` adds hinge friction -viscous * omega; it is part of the
    unmodelled torque, so controllers never see it.
    """

    kind: str = "none"
    gamma_x: float = 0.0
    gamma_y: float = 0.0
    frequency: float = 0.0  # Hz
    phase_x: float = 0.0  # rad
    phase_y: float = 0.0
    table: tuple = field(default=())
    viscous: float = 0.0  # N m s / rad

    def __post_init__(self):
        if self.kind not in ("none", "constant", "sinusoid", "table"):
            raise ValidationError(f"unknown disturbance kind {self.kind!r}")
        values = [self.gamma_x, self.gamma_y, self.frequency, self.phase_x, self.phase_y, self.viscous]
        if not all(math.isfinite(v) for v in values):
            raise ValidationError("disturbance values must be finite")
        if self.viscous < 0:
            raise ValidationError("viscous friction must be non-negative")
        if self.kind == "table":
            if len(self.table) < 1:
                raise ValidationError("table disturbance needs at least one row")
            times = [row[0] for row in self.table]
            if any(b <= a for a, b in zip(times, times[1:])):
                raise ValidationError("disturbance table times must be strictly increasing")

    @cached_property
    def _table_arrays(self):
        arr = np.asarray(self.table, dtype=float)
        return arr[:, 0], arr[:, 1], arr[:, 2]

    def profile(self, t: float) -> tuple:
        if self.kind == "none":
            return 0.0, 0.0
        if self.kind == "constant":
            return self.gamma_x, self.gamma_y
        if self.kind == "sinusoid":
            w = 2 * math.pi * self.frequency * t
            return self.gamma_x * math.sin(w + self.phase_x), self.gamma_y * math.sin(w + self.phase_y)
        ts, gx, gy = self._table_arrays
        return float(np.interp(t, ts, gx)), float(np.interp(t, ts, gy))

    def torque(self, t: float, omega_x: float = 0.0, omega_y: float = 0.0) -> tuple:
        gx, gy = self.profile(t)
        return gx - self.viscous * omega_x, gy - self.viscous * omega_y


def torque_rows(geom: PlatformGeometry, theta_x: float, theta_y: float):
    """Unscaled trigonometric rows of M as two 3-tuples (hot-path helper)."""
    ctx, stx = math.cos(theta_x), math.sin(theta_x)
    cty, sty = math.cos(theta_y), math.sin(theta_y)
    row1 = tuple(-s * ctx * cty for s in geom.sin_phi)
    row2 = tuple(c * cty + s * stx * sty for s, c in zip(geom.sin_phi, geom.cos_phi))
    return row1, row2


def torque_matrix(geom: PlatformGeometry, theta_x: float, theta_y: float) -> np.ndarray:
    """2x3 matrix M mapping muscle forces to angular accelerations."""
    return geom.R_over_J * np.array(torque_rows(geom, theta_x, theta_y))


def eg_matrices(geom: PlatformGeometry, theta_x: float, theta_y: float):
    """Split M into E (forces 1-2, 2x2) and G (force 3, 2x1)."""
    M = torque_matrix(geom, theta_x, theta_y)
    return M[:, :2].copy(), M[:, 2:].copy()


def angular_acceleration(geom: PlatformGeometry, state: PlantState, F, gamma=(0.0, 0.0)) -> np.ndarray:
    M = torque_matrix(geom, state.theta_x, state.theta_y)
    return M @ np.asarray(F, dtype=float) + np.asarray(gamma, dtype=float) / geom.J
