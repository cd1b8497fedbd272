"""Scene -> renderer-agnostic draw primitives, and the bundle wire format.

A RenderBatch is what both the software rasterizer and the browser viewer
consume: colored polylines plus posed glyph instances. The SceneBundle is
the manifest + binary-blob interchange format between the core and the
viewer (version "flymation-bundle/1"): every per-sample array is stored as
tightly packed little-endian binary32, 4-byte aligned, with byte offsets
recorded in the manifest.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import BundleError, ValidationError
from .ingest import config_from_dict, config_to_dict
from .model import (ColorRGBA, GlyphKind, QuatWXYZ, Scene, SceneConfig,
                    StaticObjectSpec, TrailConfig, Trajectory, Vec3,
                    quat_to_matrix)
from .timeline import sample_trajectory, timelapse_instants

BUNDLE_VERSION = "flymation-bundle/1"
TIMELAPSE_PATH_ALPHA = 0.25

_ARRAY_ORDER = ("times", "positions", "quaternions", "velocities", "colors", "scales")
_ARRAY_WIDTH = {"times": 1, "positions": 3, "quaternions": 4,
                "velocities": 3, "colors": 4, "scales": 3}


@dataclass(frozen=True, eq=False)
class Polyline:
    vertices: np.ndarray  # (n, 3) world positions
    colors: np.ndarray    # (n, 4) per-vertex RGBA
    width_px: float

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=np.float64)
        c = np.asarray(self.colors, dtype=np.float64)
        if v.ndim != 2 or v.shape[1] != 3 or c.ndim != 2 or c.shape[1] != 4:
            raise ValidationError("polyline needs (n,3) vertices and (n,4) colors")
        if v.shape[0] != c.shape[0]:
            raise ValidationError("polyline vertex and color counts differ")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "colors", c)


@dataclass(frozen=True, eq=False)
class GlyphInstance:
    kind: GlyphKind
    transform: np.ndarray  # (4, 4), positive-determinant linear part
    color: ColorRGBA

    def __post_init__(self):
        m = np.asarray(self.transform, dtype=np.float64)
        if m.shape != (4, 4):
            raise ValidationError("glyph transform must be 4x4")
        if np.linalg.det(m[:3, :3]) <= 0.0:
            raise ValidationError("glyph transform must have positive determinant")
        object.__setattr__(self, "transform", m)


@dataclass(frozen=True, eq=False)
class RenderBatch:
    polylines: tuple[Polyline, ...]
    glyphs: tuple[GlyphInstance, ...]
    background: ColorRGBA


def pose_transform(p: Vec3, q: QuatWXYZ, s: Vec3) -> np.ndarray:
    """4x4 transform: translate by p, rotate by q, scale axes by s."""
    m = np.eye(4)
    m[:3, :3] = quat_to_matrix(q) * np.asarray(tuple(s), dtype=np.float64)
    m[:3, 3] = tuple(p)
    return m


def _static_glyphs(scene: Scene) -> list[GlyphInstance]:
    return [GlyphInstance(kind=st.obj, transform=pose_transform(st.p, st.q, st.s),
                          color=st.c) for st in scene.statics]


def _effective_colors(traj: Trajectory) -> np.ndarray:
    if traj.color_override is not None:
        return np.broadcast_to(traj.color_override.as_array(), (traj.n_samples, 4))
    return traj.colors


def _effective_sample_color(traj: Trajectory, c: ColorRGBA) -> ColorRGBA:
    return traj.color_override if traj.color_override is not None else c


def _path_polyline(traj: Trajectory, epsilon: float, width: float,
                   alpha_scale: float = 1.0) -> Polyline:
    pts = traj.positions
    colors = _effective_colors(traj)
    if epsilon > 0.0 and traj.n_samples >= 2:
        from .simplify import rdp
        idx = rdp(pts, epsilon)
        pts = pts[idx]
        colors = colors[idx]
    if alpha_scale != 1.0:
        colors = colors.copy()
        colors[:, 3] *= alpha_scale
    return Polyline(vertices=pts, colors=colors, width_px=width)


def compile_snapshot_line(scene: Scene, lod_epsilon: Optional[float] = None) -> RenderBatch:
    """Whole-trajectory view: one path polyline per trajectory, statics as glyphs.

    lod_epsilon falls back to the scene config; 0 disables simplification.
    """
    eps = scene.config.lod_epsilon_m if lod_epsilon is None else float(lod_epsilon)
    if eps < 0.0:
        raise ValidationError("lod_epsilon must be >= 0")
    width = scene.config.line_width_px
    polylines = tuple(_path_polyline(t, eps, width) for t in scene.trajectories)
    return RenderBatch(polylines=polylines, glyphs=tuple(_static_glyphs(scene)),
                       background=scene.config.background)


def compile_snapshot_timelapse(scene: Scene, interval: Optional[float] = None) -> RenderBatch:
    """Time-lapse view: one glyph per instant per visible trajectory.

    The full path is kept underneath at 25% alpha for context. The interval
    falls back to the config, then to span/20.
    """
    if interval is None:
        interval = scene.config.timelapse_interval_s
    instants = timelapse_instants(scene.t_range, interval)
    eps = scene.config.lod_epsilon_m
    width = scene.config.line_width_px
    polylines = []
    glyphs: list[GlyphInstance] = []
    for traj in scene.trajectories:
        polylines.append(_path_polyline(traj, eps, width, alpha_scale=TIMELAPSE_PATH_ALPHA))
        for t in instants:
            ps = sample_trajectory(traj, t)
            if not ps.visible:
                continue
            glyphs.append(GlyphInstance(
                kind=traj.glyph,
                transform=pose_transform(ps.p, ps.q, ps.s),
                color=_effective_sample_color(traj, ps.c),
            ))
    glyphs.extend(_static_glyphs(scene))
    return RenderBatch(polylines=tuple(polylines), glyphs=tuple(glyphs),
                       background=scene.config.background)


def _trail_polyline(traj: Trajectory, t: float, trail: TrailConfig,
                    width: float) -> Optional[Polyline]:
    t_lo = t - trail.duration_s
    start = max(t_lo, traj.t_start)
    if start >= t:
        return None
    # knot times strictly inside (start, t), plus interpolated end points
    i0 = int(np.searchsorted(traj.times, start, side="right"))
    i1 = int(np.searchsorted(traj.times, t, side="left"))
    ts = [start] + [float(v) for v in traj.times[i0:i1]] + [t]
    verts = np.empty((len(ts), 3))
    for k, tv in enumerate(ts):
        ps = sample_trajectory(traj, tv)
        verts[k] = tuple(ps.p)
    ramp = (np.asarray(ts) - t_lo) / trail.duration_s
    colors = np.empty((len(ts), 4))
    colors[:, 0] = trail.color.r
    colors[:, 1] = trail.color.g
    colors[:, 2] = trail.color.b
    colors[:, 3] = np.clip(ramp, 0.0, 1.0) * trail.color.a
    return Polyline(vertices=verts, colors=colors, width_px=width)


def compile_animation_frame(scene: Scene, t: float,
                            trail_cfg: Optional[TrailConfig] = None) -> RenderBatch:
    """One animation frame: a glyph per visible trajectory plus its fading trail."""
    t0, t1 = scene.t_range
    if not (t0 <= t <= t1):
        raise ValidationError(f"frame time {t} outside scene range [{t0}, {t1}]")
    trail = trail_cfg if trail_cfg is not None else scene.config.trail
    width = scene.config.line_width_px
    polylines = []
    glyphs: list[GlyphInstance] = []
    for traj in scene.trajectories:
        ps = sample_trajectory(traj, t)
        if not ps.visible:
            continue
        glyphs.append(GlyphInstance(
            kind=traj.glyph,
            transform=pose_transform(ps.p, ps.q, ps.s),
            color=_effective_sample_color(traj, ps.c),
        ))
        if trail.duration_s > 0.0:
            tp = _trail_polyline(traj, t, trail, width)
            if tp is not None:
                polylines.append(tp)
    glyphs.extend(_static_glyphs(scene))
    return RenderBatch(polylines=tuple(polylines), glyphs=tuple(glyphs),
                       background=scene.config.background)


# ---------------------------------------------------------------------------
# bundle serialization

@dataclass(frozen=True, eq=False)
class SceneBundle:
    manifest: dict
    blob: bytes

    def manifest_json(self) -> str:
        # canonical form: sorted keys, no whitespace
        return json.dumps(self.manifest, sort_keys=True, separators=(",", ":"))


def _align4(n: int) -> int:
    return (n + 3) & ~3


def serialize_bundle(scene: Scene) -> SceneBundle:
    """Pack the scene into a manifest + one binary32 buffer blob."""
    blob = bytearray()
    traj_entries = []
    for traj in scene.trajectories:
        offsets = {}
        for name in _ARRAY_ORDER:
            arr = {"times": traj.times, "positions": traj.positions,
                   "quaternions": traj.quaternions, "velocities": traj.velocities,
                   "colors": traj.colors, "scales": traj.scales}[name]
            raw = np.ascontiguousarray(arr, dtype="<f4").tobytes()
            pad = _align4(len(blob)) - len(blob)
            blob.extend(b"\x00" * pad)
            offsets[name] = len(blob)
            blob.extend(raw)
        traj_entries.append({
            "id": traj.id,
            "kind": traj.kind,
            "glyph": traj.glyph.value,
            "color": list(traj.color_override) if traj.color_override else None,
            "sample_count": traj.n_samples,
            "offsets": offsets,
        })
    manifest = {
        "version": BUNDLE_VERSION,
        "t_range": [scene.t_range[0], scene.t_range[1]],
        "bbox": {"min": list(scene.bbox.min), "max": list(scene.bbox.max)},
        "trajectories": traj_entries,
        "statics": [
            {"p": list(st.p), "q": list(st.q), "c": list(st.c),
             "s": list(st.s), "obj": st.obj.value}
            for st in scene.statics
        ],
        "config": config_to_dict(scene.config),
        "blob_bytes": len(blob),
    }
    return SceneBundle(manifest=manifest, blob=bytes(blob))


def _read_array(blob: bytes, offset, count: int, width: int,
                what: str) -> np.ndarray:
    if not isinstance(offset, int) or offset < 0 or offset % 4 != 0:
        raise BundleError(f"{what}: invalid byte offset {offset!r}")
    nbytes = count * width * 4
    if offset >= len(blob) and nbytes > 0:
        raise BundleError(f"{what}: offset {offset} out of bounds (blob has {len(blob)} bytes)")
    if offset + nbytes > len(blob):
        raise BundleError(f"{what}: truncated blob, need {offset + nbytes} bytes "
                          f"but blob has {len(blob)}")
    arr = np.frombuffer(blob, dtype="<f4", count=count * width, offset=offset)
    arr = arr.astype(np.float64)
    return arr if width == 1 else arr.reshape(count, width)


def deserialize_bundle(bundle: SceneBundle) -> Scene:
    """Rebuild a Scene from a bundle, re-checking every model invariant.

    Quaternions are re-normalized (binary32 rounding perturbs unit norm).
    """
    manifest = bundle.manifest
    if not isinstance(manifest, dict):
        raise BundleError("manifest must be a JSON object")
    version = manifest.get("version")
    if version != BUNDLE_VERSION:
        raise BundleError(f"unsupported bundle version {version!r} "
                          f"(expected {BUNDLE_VERSION!r})")
    try:
        config = config_from_dict({k: v for k, v in manifest["config"].items()
                                   if v is not None or k == "follow_target"})
        raw_trajs = manifest["trajectories"]
        raw_statics = manifest["statics"]
    except (KeyError, TypeError) as e:
        raise BundleError(f"manifest missing or malformed field: {e}") from None

    trajectories = []
    for entry in raw_trajs:
        try:
            tid = entry["id"]
            count = int(entry["sample_count"])
            offsets = entry["offsets"]
            kind = entry["kind"]
            glyph = GlyphKind.from_name(entry["glyph"])
            color = entry.get("color")
        except (KeyError, TypeError, ValidationError) as e:
            raise BundleError(f"malformed trajectory entry: {e}") from None
        if count < 1:
            raise BundleError(f"trajectory {tid!r}: sample_count must be >= 1")
        arrays = {}
        for name in _ARRAY_ORDER:
            if name not in offsets:
                raise BundleError(f"trajectory {tid!r}: missing offset for {name!r}")
            arrays[name] = _read_array(bundle.blob, offsets[name], count,
                                       _ARRAY_WIDTH[name], f"trajectory {tid!r} {name}")
        q = arrays["quaternions"]
        norms = np.linalg.norm(q, axis=1)
        if (norms <= 1e-12).any():
            raise BundleError(f"trajectory {tid!r}: zero-norm quaternion in blob")
        trajectories.append(Trajectory(
            id=tid, kind=kind, glyph=glyph,
            color_override=ColorRGBA(*color) if color is not None else None,
            times=arrays["times"], positions=arrays["positions"],
            quaternions=q / norms[:, None], velocities=arrays["velocities"],
            colors=arrays["colors"], scales=arrays["scales"],
        ))

    statics = []
    for entry in raw_statics:
        try:
            statics.append(StaticObjectSpec(
                p=Vec3(*entry["p"]),
                q=QuatWXYZ(*entry["q"]),
                c=ColorRGBA(*entry["c"]),
                s=Vec3(*entry["s"]),
                obj=GlyphKind.from_name(entry["obj"]),
            ))
        except (KeyError, TypeError, ValidationError) as e:
            raise BundleError(f"malformed static entry: {e}") from None

    return Scene.assemble(trajectories, statics, config)


# ---------------------------------------------------------------------------
# golden vectors

def export_goldens(scene: Scene, query_times: Sequence[float]) -> str:
    """Reference pose samples for cross-implementation conformance checks.

    One line per visible (trajectory, time) pair: id, t, then p, q, v, c, s
    components, comma separated at 9 significant digits. Deterministic for a
    given scene and query list.
    """
    lines = ["# id,t,px,py,pz,qw,qx,qy,qz,vx,vy,vz,cr,cg,cb,ca,sx,sy,sz"]
    for traj in scene.trajectories:
        if "," in traj.id:
            raise ValidationError(f"trajectory id {traj.id!r} contains a comma")
        for t in query_times:
            ps = sample_trajectory(traj, t)
            if not ps.visible:
                continue
            vals = [t, *ps.p, *ps.q, *ps.v, *ps.c, *ps.s]
            lines.append(traj.id + "," + ",".join(f"{v:.9g}" for v in vals))
    lines.append("")
    return "\n".join(lines)


def default_golden_times(scene: Scene, n_uniform: int = 33,
                         max_knots: int = 256) -> list[float]:
    """Uniform query times over the scene range, plus every knot when few."""
    t0, t1 = scene.t_range
    if t1 <= t0:
        return [t0]
    times = {t0 + (t1 - t0) * k / (n_uniform - 1) for k in range(n_uniform)}
    total_knots = sum(t.n_samples for t in scene.trajectories)
    if total_knots <= max_knots:
        for traj in scene.trajectories:
            times.update(float(v) for v in traj.times)
    return sorted(times)
