"""Continuous-time sampling of trajectories and playback-clock arithmetic.

Position, velocity, scale and color are interpolated linearly between
state knots; orientation uses shortest-arc slerp. Queries before the first
or after the last knot yield an invisible pose (objects appear when their
data starts and vanish when it ends).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .errors import ValidationError
from .model import ColorRGBA, QuatWXYZ, Trajectory, Vec3

SLERP_NLERP_DOT = 1.0 - 1e-6


@dataclass(frozen=True, slots=True)
class Location:
    """Result of a time query against an ordered knot list."""

    kind: str  # "before" | "after" | "at" | "between"
    index: Optional[int] = None  # knot index for "at", left knot for "between"
    u: Optional[float] = None    # fraction in (0, 1) for "between"


def locate(times: Sequence[float] | np.ndarray, t: float) -> Location:
    """Binary-search t against strictly increasing knot times."""
    times = np.asarray(times, dtype=np.float64)
    n = times.shape[0]
    if n == 0:
        raise ValidationError("locate requires a non-empty time list")
    j = int(np.searchsorted(times, t, side="left"))
    if j < n and times[j] == t:
        return Location("at", index=j)
    if j == 0:
        return Location("before")
    if j == n:
        return Location("after")
    t0 = float(times[j - 1])
    t1 = float(times[j])
    return Location("between", index=j - 1, u=(t - t0) / (t1 - t0))


def lerp_vec3(a: Vec3, b: Vec3, u: float) -> Vec3:
    return Vec3(a.x + (b.x - a.x) * u,
                a.y + (b.y - a.y) * u,
                a.z + (b.z - a.z) * u)


def lerp_color(a: ColorRGBA, b: ColorRGBA, u: float) -> ColorRGBA:
    def mix(x, y):
        return min(1.0, max(0.0, x + (y - x) * u))
    return ColorRGBA(mix(a.r, b.r), mix(a.g, b.g), mix(a.b, b.b), mix(a.a, b.a))


def slerp(q0: QuatWXYZ, q1: QuatWXYZ, u: float) -> QuatWXYZ:
    """Shortest-arc spherical interpolation between unit quaternions.

    Falls back to normalized linear interpolation when the inputs are
    nearly parallel; the result is always normalized.
    """
    a = q0.as_array()
    b = q1.as_array()
    dot = float(a @ b)
    if dot < 0.0:
        b = -b
        dot = -dot
    if dot > SLERP_NLERP_DOT:
        out = a + (b - a) * u
    else:
        theta = math.acos(min(1.0, dot))
        s = math.sin(theta)
        out = a * (math.sin((1.0 - u) * theta) / s) + b * (math.sin(u * theta) / s)
    out = out / np.linalg.norm(out)
    return QuatWXYZ.from_array(out)


@dataclass(frozen=True, slots=True)
class PoseSample:
    """State of one object at an arbitrary query time.

    When ``visible`` is false the object has no data at that time and the
    remaining fields are None; callers must not render it.
    """

    visible: bool
    p: Optional[Vec3] = None
    q: Optional[QuatWXYZ] = None
    v: Optional[Vec3] = None
    c: Optional[ColorRGBA] = None
    s: Optional[Vec3] = None

    @classmethod
    def hidden(cls) -> "PoseSample":
        return cls(visible=False)


def sample_trajectory(traj: Trajectory, t: float) -> PoseSample:
    """Evaluate a trajectory at time t. Exact knot hits return knot values."""
    loc = locate(traj.times, t)
    if loc.kind in ("before", "after"):
        return PoseSample.hidden()
    if loc.kind == "at":
        i = loc.index
        return PoseSample(
            visible=True,
            p=Vec3.from_array(traj.positions[i]),
            q=QuatWXYZ.from_array(traj.quaternions[i]),
            v=Vec3.from_array(traj.velocities[i]),
            c=ColorRGBA.from_array(traj.colors[i]),
            s=Vec3.from_array(traj.scales[i]),
        )
    i, u = loc.index, loc.u
    j = i + 1
    a = Vec3.from_array(traj.positions[i])
    b = Vec3.from_array(traj.positions[j])
    va = Vec3.from_array(traj.velocities[i])
    vb = Vec3.from_array(traj.velocities[j])
    sa = Vec3.from_array(traj.scales[i])
    sb = Vec3.from_array(traj.scales[j])
    ca = ColorRGBA.from_array(traj.colors[i])
    cb = ColorRGBA.from_array(traj.colors[j])
    return PoseSample(
        visible=True,
        p=lerp_vec3(a, b, u),
        q=slerp(QuatWXYZ.from_array(traj.quaternions[i]),
                QuatWXYZ.from_array(traj.quaternions[j]), u),
        v=lerp_vec3(va, vb, u),
        c=lerp_color(ca, cb, u),
        s=lerp_vec3(sa, sb, u),
    )


@dataclass(frozen=True, slots=True)
class PlaybackClock:
    """Pure playback state: current time, rate multiplier, loop flag."""

    t: float
    rate: float
    looping: bool
    t_range: tuple[float, float]

    def __post_init__(self):
        t0, t1 = self.t_range
        if not (t0 <= t1):
            raise ValidationError(f"clock range [{t0}, {t1}] is inverted")
        if not (t0 <= self.t <= t1):
            raise ValidationError(f"clock t={self.t} outside range [{t0}, {t1}]")


def advance(clock: PlaybackClock, wall_dt: float) -> PlaybackClock:
    """Advance the clock by wall time scaled by rate; wraps or clamps at the ends."""
    if wall_dt < 0.0:
        raise ValidationError("wall_dt must be >= 0")
    t0, t1 = clock.t_range
    span = t1 - t0
    t = clock.t + wall_dt * clock.rate
    if clock.looping:
        t = t0 if span == 0.0 else t0 + (t - t0) % span
    else:
        t = min(max(t, t0), t1)
    return replace(clock, t=t)


def timelapse_instants(t_range: tuple[float, float],
                       interval: Optional[float] = None) -> list[float]:
    """Evenly spaced instants {t0, t0+i, ...} over the range, always including t0.

    The last instant is t1 when the span is an exact multiple of the interval.
    When the interval is omitted it defaults to span/20; a degenerate range
    yields the single instant t0.
    """
    t0, t1 = t_range
    span = t1 - t0
    if span < 0.0:
        raise ValidationError("t_range is inverted")
    if interval is None:
        if span == 0.0:
            return [t0]
        interval = span / 20.0
    if interval <= 0.0:
        raise ValidationError("timelapse interval must be > 0")
    if span == 0.0:
        return [t0]
    # small relative slack so exact multiples survive float division
    k_max = int(math.floor(span / interval + 1e-9))
    return [t0 + k * interval for k in range(k_max + 1)]
