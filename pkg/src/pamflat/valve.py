"""Static servovalve model q(P, v) and its inversion.

Two maps are available: a default analytic stand-in (linear in voltage,
pressure-ratio scaled, charging from supply and venting to atmosphere) and a
polynomial table q = sum c[j][k] v^j P^k loaded from CSV.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, UnreachableFlowError, ValidationError, ValveInversionError

BISECT_TOL = 1e-12  # V
BISECT_MAX_ITER = 200


@dataclass(frozen=True)
class AnalyticValve:
    k_q: float = 1e-3  # kg/(s V)
    v0: float = 5.0  # V
    P_s: float = 8e5  # Pa
    P0: float = 1.013e5  # Pa
    v_min: float = 0.0
    v_max: float = 10.0

    kind = "default-analytic"

    def __post_init__(self):
        if not self.k_q > 0:
            raise ValidationError("k_q must be positive")
        if not self.v_min < self.v0 < self.v_max:
            raise ValidationError("need v_min < v0 < v_max")
        if not self.P_s > self.P0:
            raise ValidationError("supply pressure must exceed atmospheric pressure")

    def flow(self, P, v):
        _check_voltage(self, v)
        dv = v - self.v0
        span = self.P_s - self.P0
        if dv >= 0:
            return self.k_q * dv * (self.P_s - P) / span
        return self.k_q * dv * (P - self.P0) / span

    def invert(self, P, q):
        if q == 0:
            return self.v0
        span = self.P_s - self.P0
        lo, hi = self.flow(P, self.v_min), self.flow(P, self.v_max)
        if q > 0:
            gain = self.k_q * (self.P_s - P) / span
            if gain <= 0 or q > hi:
                raise UnreachableFlowError(q, self.v_max)
        else:
            gain = self.k_q * (P - self.P0) / span
            if gain <= 0 or q < lo:
                raise UnreachableFlowError(q, self.v_min)
        return self.v0 + q / gain


@dataclass(frozen=True)
class PolynomialValve:
    """q(P, v) = sum_{j,k} coeffs[j][k] * v**j * P**k (SI units)."""

    coeffs: tuple  # (J+1) x (K+1) nested tuples
    v0: float = 5.0
    v_min: float = 0.0
    v_max: float = 10.0

    kind = "polynomial-table"

    def __post_init__(self):
        if not self.v_min < self.v0 < self.v_max:
            raise ValidationError("need v_min < v0 < v_max")

    def flow(self, P, v):
        _check_voltage(self, v)
        # nested Horner: outer in v, inner in P
        q = 0.0
        for row in reversed(self.coeffs):
            inner = 0.0
            for c in reversed(row):
                inner = inner * P + c
            q = q * v + inner
        return q

    def invert(self, P, q):
        lo, hi = self.flow(P, self.v_min), self.flow(P, self.v_max)
        if q < lo:
            raise UnreachableFlowError(q, self.v_min)
        if q > hi:
            raise UnreachableFlowError(q, self.v_max)
        a, b = self.v_min, self.v_max
        for _ in range(BISECT_MAX_ITER):
            mid = 0.5 * (a + b)
            if self.flow(P, mid) < q:
                a = mid
            else:
                b = mid
            if b - a <= BISECT_TOL:
                return 0.5 * (a + b)
        raise ValveInversionError(
            f"bisection did not reach {BISECT_TOL} V in {BISECT_MAX_ITER} iterations "
            f"(P={P}, q={q}, bracket=[{a}, {b}])"
        )


def _check_voltage(valve, v):
    if not valve.v_min <= v <= valve.v_max:
        raise ValidationError(f"voltage {v} outside [{valve.v_min}, {valve.v_max}]")


def flow(valve, P, v):
    return valve.flow(P, v)


def invert_flow(valve, P, q_desired):
    return valve.invert(P, q_desired)


def command(valve, P, q_desired):
    """Voltage for ``q_desired``, clamped at the valve limits.

    Returns (v, saturated).
    """
    try:
        return valve.invert(P, q_desired), False
    except UnreachableFlowError as exc:
        return exc.v_boundary, True


def check_valve(valve, P_lo, P_hi, n_pressures=20, n_voltages=100):
    """Raise ValidationError unless the map closes at v0 and rises with v."""
    voltages = np.linspace(valve.v_min, valve.v_max, n_voltages)
    for P in np.linspace(P_lo, P_hi, n_pressures + 2)[1:-1]:
        q0 = valve.flow(P, valve.v0)
        if abs(q0) > 1e-12:
            raise ValidationError(f"valve does not close at v0 for P={P:.6g} (q={q0:.3g})")
        qs = [valve.flow(P, v) for v in voltages]
        if any(b <= a for a, b in zip(qs, qs[1:])):
            raise ValidationError(f"valve flow not strictly increasing in v at P={P:.6g}")


def load_polynomial_csv(path, v0=5.0, v_min=0.0, v_max=10.0) -> PolynomialValve:
    """Read a coefficient table.

    Format: a ``# degrees: J K`` header line, then ``j,k,c`` rows. Missing
    (j, k) pairs are zero; duplicates are an error.
    """
    path = Path(path)
    degrees = None
    entries = {}
    with path.open(newline="") as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.strip()
            if not text:
                continue
            if text.startswith("#"):
                body = text[1:].strip()
                if body.lower().startswith("degrees:"):
                    parts = body.split(":", 1)[1].split()
                    if len(parts) != 2:
                        raise ConfigError(f"{path}:{lineno}: expected '# degrees: J K'")
                    degrees = (int(parts[0]), int(parts[1]))
                continue
            row = next(csv.reader([text]))
            if len(row) != 3:
                raise ConfigError(f"{path}:{lineno}: expected 'j,k,c'")
            try:
                j, k, c = int(row[0]), int(row[1]), float(row[2])
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: {exc}") from exc
            if (j, k) in entries:
                raise ConfigError(f"{path}:{lineno}: duplicate coefficient ({j}, {k})")
            entries[(j, k)] = c
    if degrees is None:
        raise ConfigError(f"{path}: missing '# degrees: J K' header")
    J, K = degrees
    for j, k in entries:
        if not (0 <= j <= J and 0 <= k <= K):
            raise ConfigError(f"{path}: coefficient ({j}, {k}) exceeds declared degrees {degrees}")
    coeffs = tuple(tuple(entries.get((j, k), 0.0) for k in range(K + 1)) for j in range(J + 1))
    if not all(math.isfinite(c) for row in coeffs for c in row):
        raise ConfigError(f"{path}: non-finite coefficient")
    return PolynomialValve(coeffs=coeffs, v0=v0, v_min=v_min, v_max=v_max)
