"""Domain types for trajectory scenes plus scene-level derived quantities.

Conventions used throughout the package:

* right-handed world frame, Z up, X forward
* quaternions are scalar-first (w, x, y, z), Hamilton product, body-to-world
* positions and scales in meters, velocities in m/s, colors RGBA in [0, 1]
* scale is a per-axis multiplier on the unit glyph

Moving objects are stored column-wise (one numpy array per field) so that
million-sample scenes stay cheap; ``StateSample`` is the record view used
at API boundaries and in tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .errors import ValidationError

QUAT_UNIT_TOL = 1e-9
QUAT_MIN_NORM = 1e-12

VALID_KINDS = ("vehicle", "dynamic")


def _require_finite(label: str, *values: float) -> None:
    for v in values:
        if not math.isfinite(v):
            raise ValidationError(f"{label} must be finite, got {v!r}")


@dataclass(frozen=True, slots=True)
class Vec3:
    x: float
    y: float
    z: float

    def __post_init__(self):
        _require_finite("Vec3 component", self.x, self.y, self.z)

    def __iter__(self):
        yield self.x
        yield self.y
        yield self.z

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=np.float64)

    @classmethod
    def from_array(cls, a) -> "Vec3":
        return cls(float(a[0]), float(a[1]), float(a[2]))


@dataclass(frozen=True, slots=True)
class QuatWXYZ:
    w: float
    x: float
    y: float
    z: float

    def __post_init__(self):
        _require_finite("quaternion component", self.w, self.x, self.y, self.z)

    def __iter__(self):
        yield self.w
        yield self.x
        yield self.y
        yield self.z

    def norm(self) -> float:
        return math.sqrt(self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z)

    def as_array(self) -> np.ndarray:
        return np.array([self.w, self.x, self.y, self.z], dtype=np.float64)

    @classmethod
    def from_array(cls, a) -> "QuatWXYZ":
        return cls(float(a[0]), float(a[1]), float(a[2]), float(a[3]))

    @classmethod
    def identity(cls) -> "QuatWXYZ":
        return cls(1.0, 0.0, 0.0, 0.0)


@dataclass(frozen=True, slots=True)
class ColorRGBA:
    r: float
    g: float
    b: float
    a: float

    def __post_init__(self):
        _require_finite("color component", self.r, self.g, self.b, self.a)
        for v in (self.r, self.g, self.b, self.a):
            if not 0.0 <= v <= 1.0:
                raise ValidationError(f"color component {v!r} outside [0, 1]")

    def __iter__(self):
        yield self.r
        yield self.g
        yield self.b
        yield self.a

    def as_array(self) -> np.ndarray:
        return np.array([self.r, self.g, self.b, self.a], dtype=np.float64)

    @classmethod
    def from_array(cls, a) -> "ColorRGBA":
        return cls(float(a[0]), float(a[1]), float(a[2]), float(a[3]))


class GlyphKind(Enum):
    SPHERE = "sphere"
    CUBE = "cube"
    CYLINDER = "cylinder"
    CONE = "cone"
    GATE = "gate"
    QUADROTOR = "quadrotor"

    @classmethod
    def from_name(cls, name: str) -> "GlyphKind":
        try:
            return cls(name.strip().lower())
        except ValueError:
            allowed = ", ".join(k.value for k in cls)
            raise ValidationError(
                f"unknown object type {name.strip()!r}; allowed: {{{allowed}}}"
            ) from None


@dataclass(frozen=True, slots=True)
class StateSample:
    """One timestamped rigid-body state: where it is, how it looks."""

    t: float
    p: Vec3
    q: QuatWXYZ
    v: Vec3
    c: ColorRGBA
    s: Vec3

    def __post_init__(self):
        _require_finite("sample time", self.t)
        if min(self.s.x, self.s.y, self.s.z) <= 0.0:
            raise ValidationError(f"scale components must be > 0, got {tuple(self.s)}")
        n = self.q.norm()
        if abs(n - 1.0) > QUAT_UNIT_TOL:
            raise ValidationError(f"sample quaternion must be unit (norm {n!r})")


@dataclass(frozen=True, slots=True)
class StaticObjectSpec:
    """Pose, color, scale and glyph kind of a non-moving object."""

    p: Vec3
    q: QuatWXYZ
    c: ColorRGBA
    s: Vec3
    obj: GlyphKind

    def __post_init__(self):
        if min(self.s.x, self.s.y, self.s.z) <= 0.0:
            raise ValidationError(f"scale components must be > 0, got {tuple(self.s)}")
        n = self.q.norm()
        if abs(n - 1.0) > QUAT_UNIT_TOL:
            raise ValidationError(f"static quaternion must be unit (norm {n!r})")


def _as_column(a, name: str, width: int | None) -> np.ndarray:
    arr = np.ascontiguousarray(np.asarray(a, dtype=np.float64))
    if width is None:
        if arr.ndim != 1:
            raise ValidationError(f"{name} must be a 1-D array")
    else:
        if arr.ndim != 2 or arr.shape[1] != width:
            raise ValidationError(f"{name} must have shape (n, {width})")
    if not np.isfinite(arr).all():
        raise ValidationError(f"{name} contains non-finite values")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Ordered state samples of one moving object, stored column-wise.

    Arrays are immutable (read-only numpy views) after construction, so a
    Trajectory can be shared freely across threads.
    """

    id: str
    kind: str  # "vehicle" or "dynamic"
    glyph: GlyphKind
    color_override: Optional[ColorRGBA]
    times: np.ndarray        # (n,), strictly increasing
    positions: np.ndarray    # (n, 3)
    quaternions: np.ndarray  # (n, 4) scalar-first, unit
    velocities: np.ndarray   # (n, 3)
    colors: np.ndarray       # (n, 4) in [0, 1]
    scales: np.ndarray       # (n, 3), strictly positive

    def __post_init__(self):
        if self.kind not in VALID_KINDS:
            raise ValidationError(f"trajectory kind must be one of {VALID_KINDS}, got {self.kind!r}")
        t = _as_column(self.times, "times", None)
        p = _as_column(self.positions, "positions", 3)
        q = _as_column(self.quaternions, "quaternions", 4)
        v = _as_column(self.velocities, "velocities", 3)
        c = _as_column(self.colors, "colors", 4)
        s = _as_column(self.scales, "scales", 3)
        n = t.shape[0]
        if n < 1:
            raise ValidationError(f"trajectory {self.id!r} has no samples")
        for name, arr in (("positions", p), ("quaternions", q), ("velocities", v),
                          ("colors", c), ("scales", s)):
            if arr.shape[0] != n:
                raise ValidationError(f"{name} length {arr.shape[0]} != times length {n}")
        if n > 1 and not (np.diff(t) > 0.0).all():
            i = int(np.flatnonzero(np.diff(t) <= 0.0)[0])
            raise ValidationError(
                f"trajectory {self.id!r}: times not strictly increasing at index {i + 1} "
                f"({t[i + 1]!r} follows {t[i]!r})"
            )
        norms = np.linalg.norm(q, axis=1)
        if np.abs(norms - 1.0).max() > QUAT_UNIT_TOL:
            raise ValidationError(f"trajectory {self.id!r}: quaternions must be unit")
        if (c < 0.0).any() or (c > 1.0).any():
            raise ValidationError(f"trajectory {self.id!r}: color components outside [0, 1]")
        if (s <= 0.0).any():
            raise ValidationError(f"trajectory {self.id!r}: scale components must be > 0")
        for fld, arr in (("times", t), ("positions", p), ("quaternions", q),
                         ("velocities", v), ("colors", c), ("scales", s)):
            object.__setattr__(self, fld, arr)

    @property
    def n_samples(self) -> int:
        return self.times.shape[0]

    @property
    def t_start(self) -> float:
        return float(self.times[0])

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    def sample(self, i: int) -> StateSample:
        return StateSample(
            t=float(self.times[i]),
            p=Vec3.from_array(self.positions[i]),
            q=QuatWXYZ.from_array(self.quaternions[i]),
            v=Vec3.from_array(self.velocities[i]),
            c=ColorRGBA.from_array(self.colors[i]),
            s=Vec3.from_array(self.scales[i]),
        )

    @property
    def samples(self) -> tuple[StateSample, ...]:
        return tuple(self.sample(i) for i in range(self.n_samples))

    @classmethod
    def from_samples(cls, id: str, kind: str, glyph: GlyphKind,
                     samples: Sequence[StateSample],
                     color_override: Optional[ColorRGBA] = None) -> "Trajectory":
        if len(samples) < 1:
            raise ValidationError(f"trajectory {id!r} needs at least one sample")
        return cls(
            id=id, kind=kind, glyph=glyph, color_override=color_override,
            times=np.array([s.t for s in samples], dtype=np.float64),
            positions=np.array([tuple(s.p) for s in samples], dtype=np.float64),
            quaternions=np.array([tuple(s.q) for s in samples], dtype=np.float64),
            velocities=np.array([tuple(s.v) for s in samples], dtype=np.float64),
            colors=np.array([tuple(s.c) for s in samples], dtype=np.float64),
            scales=np.array([tuple(s.s) for s in samples], dtype=np.float64),
        )

    def __eq__(self, other):
        if not isinstance(other, Trajectory):
            return NotImplemented
        return (self.id == other.id and self.kind == other.kind
                and self.glyph == other.glyph
                and self.color_override == other.color_override
                and np.array_equal(self.times, other.times)
                and np.array_equal(self.positions, other.positions)
                and np.array_equal(self.quaternions, other.quaternions)
                and np.array_equal(self.velocities, other.velocities)
                and np.array_equal(self.colors, other.colors)
                and np.array_equal(self.scales, other.scales))


@dataclass(frozen=True, slots=True)
class TrailConfig:
    duration_s: float = 1.0
    color: ColorRGBA = ColorRGBA(1.0, 0.0, 0.0, 1.0)

    def __post_init__(self):
        _require_finite("trail duration", self.duration_s)
        if self.duration_s < 0.0:
            raise ValidationError("trail duration_s must be >= 0")


SNAPSHOT_STYLES = ("line", "timelapse")
CAMERA_MODES = ("orbit", "follow")


@dataclass(frozen=True)
class SceneConfig:
    vehicle_dir: str
    dynamic_dir: str
    static_dir: str
    colors: dict[str, ColorRGBA] = field(default_factory=dict)
    snapshot_style: str = "line"
    camera: str = "orbit"
    follow_target: Optional[str] = None
    trail: TrailConfig = TrailConfig()
    timelapse_interval_s: Optional[float] = None
    lod_epsilon_m: float = 0.0
    line_width_px: float = 2.0
    background: ColorRGBA = ColorRGBA(0.1, 0.1, 0.12, 1.0)

    def __post_init__(self):
        if self.snapshot_style not in SNAPSHOT_STYLES:
            raise ValidationError(f"snapshot_style must be one of {SNAPSHOT_STYLES}")
        if self.camera not in CAMERA_MODES:
            raise ValidationError(f"camera must be one of {CAMERA_MODES}")
        if self.timelapse_interval_s is not None:
            _require_finite("timelapse_interval_s", self.timelapse_interval_s)
            if self.timelapse_interval_s < 0.0:
                raise ValidationError("timelapse_interval_s must be >= 0")
        _require_finite("lod_epsilon_m", self.lod_epsilon_m)
        if self.lod_epsilon_m < 0.0:
            raise ValidationError("lod_epsilon_m must be >= 0")
        _require_finite("line_width_px", self.line_width_px)
        if self.line_width_px <= 0.0:
            raise ValidationError("line_width_px must be > 0")


@dataclass(frozen=True, slots=True)
class Aabb:
    """Axis-aligned bounding box; zero extent is allowed."""

    min: Vec3
    max: Vec3

    def __post_init__(self):
        if self.min.x > self.max.x or self.min.y > self.max.y or self.min.z > self.max.z:
            raise ValidationError("Aabb min must be <= max componentwise")

    def center(self) -> Vec3:
        return Vec3((self.min.x + self.max.x) / 2.0,
                    (self.min.y + self.max.y) / 2.0,
                    (self.min.z + self.max.z) / 2.0)

    def half_diagonal(self) -> float:
        dx = self.max.x - self.min.x
        dy = self.max.y - self.min.y
        dz = self.max.z - self.min.z
        return 0.5 * math.sqrt(dx * dx + dy * dy + dz * dz)

    def contains(self, p: Vec3, tol: float = 0.0) -> bool:
        return (self.min.x - tol <= p.x <= self.max.x + tol
                and self.min.y - tol <= p.y <= self.max.y + tol
                and self.min.z - tol <= p.z <= self.max.z + tol)


@dataclass(frozen=True, eq=False)
class Scene:
    """All trajectories and static objects plus the resolved configuration.

    Immutable after construction; safe for concurrent read access.
    """

    trajectories: tuple[Trajectory, ...]
    statics: tuple[StaticObjectSpec, ...]
    config: SceneConfig
    t_range: tuple[float, float]
    bbox: Aabb

    @classmethod
    def assemble(cls, trajectories: Sequence[Trajectory],
                 statics: Sequence[StaticObjectSpec],
                 config: SceneConfig) -> "Scene":
        trajectories = tuple(trajectories)
        statics = tuple(statics)
        if not trajectories and not statics:
            raise ValidationError("scene is empty: no trajectories and no static objects")
        seen: set[str] = set()
        for traj in trajectories:
            if traj.id in seen:
                raise ValidationError(f"duplicate trajectory id {traj.id!r}")
            seen.add(traj.id)
        for cid in config.colors:
            if cid not in seen:
                raise ValidationError(f"config colors refer to unknown trajectory id {cid!r}")
        if config.follow_target is not None and config.follow_target not in seen:
            raise ValidationError(
                f"config follow_target refers to unknown trajectory id {config.follow_target!r}"
            )
        return cls(
            trajectories=trajectories,
            statics=statics,
            config=config,
            t_range=_time_range(trajectories),
            bbox=_bbox(trajectories, statics),
        )

    def trajectory_by_id(self, id: str) -> Trajectory:
        for traj in self.trajectories:
            if traj.id == id:
                return traj
        raise ValidationError(f"no trajectory with id {id!r}")


def _time_range(trajectories: Sequence[Trajectory]) -> tuple[float, float]:
    if not trajectories:
        return (0.0, 0.0)
    t0 = min(t.t_start for t in trajectories)
    t1 = max(t.t_end for t in trajectories)
    return (t0, t1)


def _bbox(trajectories: Sequence[Trajectory],
          statics: Sequence[StaticObjectSpec]) -> Aabb:
    lo = np.full(3, np.inf)
    hi = np.full(3, -np.inf)
    for traj in trajectories:
        lo = np.minimum(lo, traj.positions.min(axis=0))
        hi = np.maximum(hi, traj.positions.max(axis=0))
    for st in statics:
        p = st.p.as_array()
        lo = np.minimum(lo, p)
        hi = np.maximum(hi, p)
    if not np.isfinite(lo).all():
        raise ValidationError("cannot compute bounding box of an empty scene")
    return Aabb(Vec3.from_array(lo), Vec3.from_array(hi))


# ---------------------------------------------------------------------------
# operations

def normalize_quaternion(q: QuatWXYZ) -> QuatWXYZ:
    """Scale a quaternion to unit norm; the rotation it encodes is unchanged."""
    n = q.norm()
    if n <= QUAT_MIN_NORM:
        raise ValidationError(f"cannot normalize near-zero quaternion {tuple(q)}")
    return QuatWXYZ(q.w / n, q.x / n, q.y / n, q.z / n)


def rotate_vector(q: QuatWXYZ, v: Vec3) -> Vec3:
    """Rotate v by the unit quaternion q (body-to-world)."""
    # v' = v + 2 * qv x (qv x v + w v), the usual expansion of q v q*
    qv = np.array([q.x, q.y, q.z])
    vv = v.as_array()
    t = 2.0 * np.cross(qv, vv)
    out = vv + q.w * t + np.cross(qv, t)
    return Vec3.from_array(out)


def quat_to_matrix(q: QuatWXYZ) -> np.ndarray:
    """3x3 rotation matrix of a unit quaternion."""
    w, x, y, z = q.w, q.x, q.y, q.z
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ], dtype=np.float64)


def scene_time_range(scene: Scene) -> tuple[float, float]:
    """[min first-sample time, max last-sample time]; statics-only scenes get [0, 0]."""
    if not scene.trajectories:
        if scene.statics:
            return (0.0, 0.0)
        raise ValidationError("scene has no trajectories")
    return _time_range(scene.trajectories)


def scene_bbox(scene: Scene) -> Aabb:
    """Minimal AABB over every sampled position and every static position."""
    if not scene.trajectories and not scene.statics:
        raise ValidationError("cannot compute bounding box of an empty scene")
    return _bbox(scene.trajectories, scene.statics)
