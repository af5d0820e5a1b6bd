"""Smooth reference trajectories with analytic derivatives up to order 3.

Each axis is a sum of sinusoids plus an optional piecewise polynomial
(C3 joins). Rest-to-rest motions between waypoints use septic segments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .allocation import allocate
from .errors import HorizonError, ValidationError
from .flatness import FlatJet

JOIN_TOL = 1e-9
ORDER = 3
# s(tau) = 35 tau^4 - 84 tau^5 + 70 tau^6 - 20 tau^7
SEPTIC_SHAPE = (0.0, 0.0, 0.0, 0.0, 35.0, -84.0, 70.0, -20.0)


@dataclass(frozen=True)
class Sinusoid:
    amplitude: float  # rad
    frequency: float  # Hz
    phase: float = 0.0  # rad

    def derivatives(self, t: float) -> tuple:
        w = 2 * math.pi * self.frequency
        s, c = math.sin(w * t + self.phase), math.cos(w * t + self.phase)
        A = self.amplitude
        return (A * s, A * w * c, -A * w * w * s, -A * w**3 * c)


@dataclass(frozen=True)
class PolySegment:
    """Polynomial in (t - t0), ascending coefficients, valid on [t0, t1]."""

    t0: float
    t1: float
    coeffs: tuple

    def __post_init__(self):
        if not self.t1 > self.t0:
            raise ValidationError("segment needs t1 > t0")

    def derivatives(self, t: float, order: int = ORDER) -> tuple:
        tau = t - self.t0
        out = []
        c = list(self.coeffs)
        for _ in range(order + 1):
            acc = 0.0
            for a in reversed(c):
                acc = acc * tau + a
            out.append(acc)
            c = [n * a for n, a in enumerate(c)][1:] or [0.0]
        return tuple(out)


def septic_segment(t0, t1, y0, y1) -> PolySegment:
    """Rest-to-rest move from y0 to y1: derivatives 1..3 vanish at both ends."""
    T = t1 - t0
    dy = y1 - y0
    coeffs = [dy * s / T**n for n, s in enumerate(SEPTIC_SHAPE)]
    coeffs[0] = y0
    return PolySegment(t0, t1, tuple(coeffs))


@dataclass(frozen=True)
class Piecewise:
    """Contiguous polynomial segments, held constant outside their span."""

    segments: tuple

    def __post_init__(self):
        if not self.segments:
            raise ValidationError("piecewise signal needs at least one segment")
        for a, b in zip(self.segments, self.segments[1:]):
            if abs(a.t1 - b.t0) > JOIN_TOL:
                raise ValidationError(f"segments not contiguous at t={a.t1}")
            da, db = a.derivatives(a.t1), b.derivatives(b.t0)
            for n, (u, v) in enumerate(zip(da, db)):
                if abs(u - v) > JOIN_TOL * max(1.0, abs(u)):
                    raise ValidationError(f"join at t={a.t1} not continuous in derivative {n}")
        # outside the span the signal is held, which needs resting ends
        for seg, t in ((self.segments[0], self.segments[0].t0), (self.segments[-1], self.segments[-1].t1)):
            d = seg.derivatives(t)
            if any(abs(v) > JOIN_TOL for v in d[1:]):
                raise ValidationError(f"piecewise signal does not start/end at rest (t={t})")

    def derivatives(self, t: float) -> tuple:
        first, last = self.segments[0], self.segments[-1]
        if t <= first.t0:
            return (first.derivatives(first.t0, 0)[0], 0.0, 0.0, 0.0)
        if t >= last.t1:
            return (last.derivatives(last.t1, 0)[0], 0.0, 0.0, 0.0)
        for seg in self.segments:
            if t <= seg.t1:
                return seg.derivatives(t)
        raise AssertionError("unreachable")


def waypoints_to_piecewise(waypoints) -> Piecewise:
    """Septic rest-to-rest segments through (t, value) waypoints."""
    pts = sorted(waypoints)
    if len(pts) < 2:
        raise ValidationError("need at least two waypoints")
    return Piecewise(tuple(septic_segment(t0, t1, y0, y1) for (t0, y0), (t1, y1) in zip(pts, pts[1:])))


@dataclass(frozen=True)
class AxisSignal:
    sinusoids: tuple = ()
    piecewise: Piecewise | None = None

    def derivatives(self, t: float) -> tuple:
        out = [0.0, 0.0, 0.0, 0.0]
        for s in self.sinusoids:
            out = [a + b for a, b in zip(out, s.derivatives(t))]
        if self.piecewise is not None:
            out = [a + b for a, b in zip(out, self.piecewise.derivatives(t))]
        return tuple(out)

    def bound(self) -> float:
        """Upper bound on |signal| over all time."""
        b = sum(abs(s.amplitude) for s in self.sinusoids)
        if self.piecewise is not None:
            b += _piecewise_bound(self.piecewise)
        return b


def _piecewise_bound(pw: Piecewise, n: int = 200) -> float:
    best = 0.0
    for seg in pw.segments:
        for j in range(n + 1):
            t = seg.t0 + (seg.t1 - seg.t0) * j / n
            best = max(best, abs(seg.derivatives(t, 0)[0]))
    return best


@dataclass(frozen=True)
class ReferenceProgram:
    x: AxisSignal = field(default_factory=AxisSignal)
    y: AxisSignal = field(default_factory=AxisSignal)
    duration: float = 60.0

    def __post_init__(self):
        if not self.duration >= 0:
            raise ValidationError("duration must be non-negative")

    def validate(self, geom) -> None:
        for name, axis in (("x", self.x), ("y", self.y)):
            if axis.bound() > geom.theta_limit:
                raise ValidationError(
                    f"reference on axis {name} may reach {math.degrees(axis.bound()):.3f} deg, "
                    f"beyond the {math.degrees(geom.theta_limit):.3f} deg limit"
                )


def default_program(duration: float = 60.0) -> ReferenceProgram:
    A = math.radians(5.0)
    return ReferenceProgram(
        x=AxisSignal((Sinusoid(A, 0.1, 0.0),)),
        y=AxisSignal((Sinusoid(A, 0.15, math.pi / 3),)),
        duration=duration,
    )


def sample(program: ReferenceProgram, t: float) -> tuple:
    """((theta_x, d1, d2, d3), (theta_y, d1, d2, d3)) at time t."""
    if not (-1e-12 <= t <= program.duration + 1e-12):
        raise HorizonError(f"t={t} outside [0, {program.duration}]")
    return program.x.derivatives(t), program.y.derivatives(t)


def reference_point(params, geom, program: ReferenceProgram, t: float):
    """(FlatJet, Allocation) at time t; the allocation carries the force window."""
    jx, jy = sample(program, t)
    alloc = allocate(params, geom, jx[0], jy[0], jx[1], jy[1])
    return FlatJet(jx, jy, (alloc.F3, alloc.F3_rate)), alloc


def assemble_jet(params, geom, program: ReferenceProgram, t: float) -> FlatJet:
    return reference_point(params, geom, program, t)[0]
