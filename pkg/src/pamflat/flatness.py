"""Flat-output machinery for the three-muscle platform.

State x = [theta_x, theta_y, omega_x, omega_y, P1, P2, P3], input q = mass
flows, flat output y = (theta_x, theta_y, F3) with characteristic indices
(3, 3, 1). The acceleration rows carry the R/J factor of the torque matrix
and the pressure drift uses absolute pressure, so f + g q reproduces the
plant ODE exactly.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import muscle as mm
from .errors import NearSingularError, ValidationError
from .platform import PlantState

log = logging.getLogger(__name__)

CHARACTERISTIC_INDICES = (3, 3, 1)
STATE_DIM = 7
ANGLE_GUARD = math.radians(89.0)
FD_REL_STEP = 1e-6
NEAR_SINGULAR_RATIO = 1e-14

assert sum(CHARACTERISTIC_INDICES) == STATE_DIM


@dataclass(frozen=True)
class FlatJet:
    """Flat output with derivatives: y1, y2 to order 3, y3 to order 1."""

    y1: tuple  # theta_x and 3 derivatives
    y2: tuple  # theta_y and 3 derivatives
    y3: tuple  # F3 (N) and its rate

    def __post_init__(self):
        lengths = (len(self.y1), len(self.y2), len(self.y3))
        if lengths != tuple(r + 1 for r in CHARACTERISTIC_INDICES):
            raise ValidationError(f"jet orders {lengths} do not match indices {CHARACTERISTIC_INDICES}")

    @property
    def top(self) -> tuple:
        """(y1^(3), y2^(3), y3^(1))."""
        return self.y1[3], self.y2[3], self.y3[1]


@dataclass(frozen=True)
class CouplingMatrix:
    matrix: np.ndarray  # 3x3
    m: float  # angular factor of the determinant

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.matrix))


class LieTerms(NamedTuple):
    lf2_y1: float
    lf2_y2: float
    lf_y3: float
    lf3_y1: float
    lf3_y2: float


# -- per-muscle evaluation ---------------------------------------------------


_warned = set()


def _warn_once(key, msg, *args):
    # first occurrence per process at WARNING, repeats at DEBUG
    log.log(logging.DEBUG if key in _warned else logging.WARNING, msg, *args)
    _warned.add(key)


def _guard(theta):
    if abs(theta) > ANGLE_GUARD:
        _warn_once("guard", "angle %.4f rad outside the +-89 deg guard, clamped", theta)
        return math.copysign(ANGLE_GUARD, theta)
    return theta


def _kinematics(params, geom, tx, ty, wx, wy):
    """Unscaled torque rows, contractions and contraction rates (3-lists)."""
    ctx, stx = math.cos(tx), math.sin(tx)
    cty, sty = math.cos(ty), math.sin(ty)
    scale = geom.R / params.l0
    row1, row2, eps, eps_dot = [], [], [], []
    for s, c in zip(geom.sin_phi, geom.cos_phi):
        r1 = -s * ctx * cty
        r2 = c * cty + s * stx * sty
        row1.append(r1)
        row2.append(r2)
        eps.append(scale * (c * sty - s * stx * cty) + params.eps0)
        eps_dot.append(scale * (r1 * wx + r2 * wy))
    return row1, row2, eps, eps_dot


def angular_factor_m(geom, theta_x, theta_y):
    """m(theta_x, theta_y); broadcasts over numpy arrays."""
    s1, s2 = geom.sin_phi[0], geom.sin_phi[1]
    c1, c2 = geom.cos_phi[0], geom.cos_phi[1]
    ctx, stx = np.cos(theta_x), np.sin(theta_x)
    cty, sty = np.cos(theta_y), np.sin(theta_y)
    return -s1 * ctx * cty * (c2 * cty + s2 * stx * sty) + s2 * ctx * cty * (c1 * cty + s1 * stx * sty)


# -- vector fields -----------------------------------------------------------


def _drift(params, geom, x) -> list:
    tx, ty, wx, wy = x[0], x[1], x[2], x[3]
    row1, row2, eps, eps_dot = _kinematics(params, geom, tx, ty, wx, wy)
    a1 = a2 = 0.0
    dP = []
    for i in range(3):
        P = x[4 + i]
        F = mm.force(params, P, eps[i])
        a1 += row1[i] * F
        a2 += row2[i] * F
        a, _ = mm.state_coeffs(params, eps[i], eps_dot[i])
        dP.append(a * P)
    k = geom.R_over_J
    return [wx, wy, k * a1, k * a2] + dP


def drift_field(params, geom, x) -> np.ndarray:
    """f(x): the state rate with zero inflow and no disturbance."""
    return np.array(_drift(params, geom, [float(v) for v in x]))


def input_fields(params, geom, x) -> np.ndarray:
    """7x3 matrix whose column i is g_i(x)."""
    tx, ty = float(x[0]), float(x[1])
    _, _, eps, _ = _kinematics(params, geom, tx, ty, 0.0, 0.0)
    g = np.zeros((STATE_DIM, 3))
    for i in range(3):
        g[4 + i, i] = params.k * params.rT / mm.volume(params, eps[i])
    return g


# -- Lie derivatives ---------------------------------------------------------


def second_level(params, geom, x) -> tuple:
    """(L_f^2 y1, L_f^2 y2): angular accelerations with no disturbance."""
    tx, ty = x[0], x[1]
    row1, row2, eps, _ = _kinematics(params, geom, tx, ty, 0.0, 0.0)
    a1 = a2 = 0.0
    for i in range(3):
        F = mm.force(params, x[4 + i], eps[i])
        a1 += row1[i] * F
        a2 += row2[i] * F
    k = geom.R_over_J
    return k * a1, k * a2


def output_y3(params, geom, x) -> float:
    eps3 = mm.contraction(params, geom, x[0], x[1], 3)
    return mm.force(params, x[6], eps3)


def lf_y3(params, geom, x) -> float:
    """L_f y3: rate of F3 along the drift (zero inflow)."""
    eps3 = mm.contraction(params, geom, x[0], x[1], 3)
    eps3_dot = mm.contraction_rate(params, geom, x[0], x[1], x[2], x[3], 3)
    a, _ = mm.state_coeffs(params, eps3, eps3_dot)
    return mm.force_rate(params, x[6], eps3, eps3_dot, a * x[6])


def fd_gradient(fn, x, rel_step=FD_REL_STEP) -> np.ndarray:
    """Central-difference gradient of a scalar or tuple-valued ``fn``."""
    x = [float(v) for v in x]
    cols = []
    for i, xi in enumerate(x):
        h = rel_step * max(1.0, abs(xi))
        xp = list(x)
        xm = list(x)
        xp[i] = xi + h
        xm[i] = xi - h
        cols.append((np.asarray(fn(xp)) - np.asarray(fn(xm))) / (2 * h))
    return np.stack(cols, axis=-1)


def lie_derivative(h, vector, x, rel_step=FD_REL_STEP) -> float:
    """L_v h at x by a central difference along the direction ``vector``."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(vector, dtype=float)
    vmax = np.max(np.abs(v))
    if vmax == 0:
        return 0.0
    s = rel_step * max(1.0, float(np.max(np.abs(x)))) / vmax
    return (h(x + s * v) - h(x - s * v)) / (2 * s)


def lie_outputs(params, geom, x) -> LieTerms:
    """Lie derivatives entering the control law.

    L_f^3 y1 and L_f^3 y2 are the central-difference gradient of the closed
    forms for L_f^2 dotted with f.
    """
    x = [float(v) for v in x]
    lf2 = second_level(params, geom, x)
    f = _drift(params, geom, x)
    lf3_1 = lf3_2 = 0.0
    for i, xi in enumerate(x):
        h = FD_REL_STEP * max(1.0, abs(xi))
        x[i] = xi + h
        p1, p2 = second_level(params, geom, x)
        x[i] = xi - h
        m1, m2 = second_level(params, geom, x)
        x[i] = xi
        lf3_1 += (p1 - m1) / (2 * h) * f[i]
        lf3_2 += (p2 - m2) / (2 * h) * f[i]
    return LieTerms(lf2[0], lf2[1], lf_y3(params, geom, x), lf3_1, lf3_2)


# -- coupling matrix ---------------------------------------------------------


def _hb(params, eps):
    return mm.force_gain_H(params, eps) * params.k * params.rT / mm.volume(params, eps)


def coupling_matrix(params, geom, x) -> CouplingMatrix:
    tx, ty = _guard(float(x[0])), _guard(float(x[1]))
    row1, row2, eps, _ = _kinematics(params, geom, tx, ty, 0.0, 0.0)
    hb = [_hb(params, e) for e in eps]
    k = geom.R_over_J
    D = np.array(
        [
            [k * row1[i] * hb[i] for i in range(3)],
            [k * row2[i] * hb[i] for i in range(3)],
            [0.0, 0.0, hb[2]],
        ]
    )
    m = float(angular_factor_m(geom, tx, ty))
    det = k * k * hb[0] * hb[1] * hb[2] * m
    det0 = k * k * _hb(params, params.eps0) ** 3 * float(angular_factor_m(geom, 0.0, 0.0))
    if abs(det) < NEAR_SINGULAR_RATIO * abs(det0):
        raise NearSingularError(f"coupling matrix near singular at theta=({tx:.4g}, {ty:.4g})")
    return CouplingMatrix(D, m)


def solve_coupled(D, rhs) -> np.ndarray:
    """Solve D q = rhs using the zero pattern of the last row."""
    q3 = rhs[2] / D[2, 2]
    r1 = rhs[0] - D[0, 2] * q3
    r2 = rhs[1] - D[1, 2] * q3
    det = D[0, 0] * D[1, 1] - D[0, 1] * D[1, 0]
    q1 = (D[1, 1] * r1 - D[0, 1] * r2) / det
    q2 = (D[0, 0] * r2 - D[1, 0] * r1) / det
    return np.array([q1, q2, q3])


# -- inversion and control law ----------------------------------------------


def flat_to_state(params, geom, jet: FlatJet) -> PlantState:
    """Reconstruct the plant state from (y, y', y'') of the flat output."""
    tx, ty = _guard(jet.y1[0]), _guard(jet.y2[0])
    wx, wy = jet.y1[1], jet.y2[1]
    row1, row2, eps, _ = _kinematics(params, geom, tx, ty, wx, wy)
    lo, hi = mm.EPS_RANGE
    if any(not lo <= e <= hi for e in eps):
        _warn_once("eps", "contractions %s outside the operating range", eps)
    F3 = jet.y3[0]
    k = geom.R_over_J
    b1 = jet.y1[2] / k - row1[2] * F3
    b2 = jet.y2[2] / k - row2[2] * F3
    det = row1[0] * row2[1] - row1[1] * row2[0]
    if abs(det) < 1e-12:
        raise NearSingularError("force-to-acceleration block is singular")
    F1 = (row2[1] * b1 - row1[1] * b2) / det
    F2 = (row1[0] * b2 - row2[0] * b1) / det
    P = [mm.pressure_from_force(params, F, e) for F, e in zip((F1, F2, F3), eps)]
    return PlantState(jet.y1[0], jet.y2[0], wx, wy, *P)


def feedforward_control(params, geom, ref: FlatJet, w=(0.0, 0.0, 0.0)) -> np.ndarray:
    """Mass flows from the flatness law evaluated at the reference state.

    ``w`` is the auxiliary input added to (y1''', y2''', y3').
    """
    xbar = flat_to_state(params, geom, ref).as_tuple()
    D = coupling_matrix(params, geom, xbar).matrix
    lie = lie_outputs(params, geom, xbar)
    top = ref.top
    rhs = np.array(
        [
            top[0] - lie.lf3_y1 + w[0],
            top[1] - lie.lf3_y2 + w[1],
            top[2] - lie.lf_y3 + w[2],
        ]
    )
    return solve_coupled(D, rhs)


def output_jet_from_state(params, geom, x, lf3=None) -> FlatJet:
    """Flat-output jet read off a plant state (no disturbance).

    Third derivatives need the input; they are left at zero unless ``lf3``
    (y1''', y2''', y3') is supplied.
    """
    lf2 = second_level(params, geom, x)
    top = lf3 if lf3 is not None else (0.0, 0.0, 0.0)
    return FlatJet(
        (x[0], x[2], lf2[0], top[0]),
        (x[1], x[3], lf2[1], top[1]),
        (output_y3(params, geom, x), top[2]),
    )
