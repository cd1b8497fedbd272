"""Orbit and follow cameras, view/projection matrices, point projection.

View convention: right-handed, camera looks along its -Z axis, world is Z-up.
Projection maps the frustum to NDC [-1, 1]^3 with depth -1 at the near plane
and +1 at the far plane. Pixel (0, 0) is the top-left corner of the viewport.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple, Optional

import numpy as np

from .errors import ValidationError
from .model import Aabb, QuatWXYZ, Vec3, rotate_vector
from .timeline import PoseSample

RADIUS_MIN = 0.01
RADIUS_MAX = 1e6
ELEVATION_MAX = math.radians(89.0)
ROT_PER_PIXEL = 0.005  # radians of orbit per pixel of drag
ZOOM_STEP = 0.9        # radius multiplier per wheel step
VELOCITY_DEADBAND = 0.1  # m/s of horizontal speed below which yaw is used


def _clamp(v, lo, hi):
    return min(max(v, lo), hi)


@dataclass(frozen=True, slots=True)
class OrbitState:
    """Camera on a sphere around a pivot. Radius and elevation self-clamp."""

    pivot: Vec3
    radius: float
    azimuth: float
    elevation: float

    def __post_init__(self):
        object.__setattr__(self, "radius", _clamp(self.radius, RADIUS_MIN, RADIUS_MAX))
        object.__setattr__(self, "elevation",
                           _clamp(self.elevation, -ELEVATION_MAX, ELEVATION_MAX))


@dataclass(frozen=True, slots=True)
class FollowState:
    """Third-person chase camera behind and above the target's heading."""

    offset_back: float = 5.0
    offset_up: float = 2.0
    smoothing_tau: float = 0.3
    eye_smoothed: Optional[Vec3] = None
    target_smoothed: Optional[Vec3] = None

    def __post_init__(self):
        if self.smoothing_tau < 0.0:
            raise ValidationError("smoothing_tau must be >= 0")


@dataclass(frozen=True, slots=True)
class CameraMatrices:
    view: np.ndarray  # (4, 4)
    proj: np.ndarray  # (4, 4)
    viewport: tuple[int, int]  # (width_px, height_px)


class Projection(NamedTuple):
    pixel: Optional[tuple[float, float]]  # None when behind the camera
    depth: float
    in_front: bool


def look_at(eye: Vec3, target: Vec3, up_hint: Vec3 = Vec3(0.0, 0.0, 1.0)) -> np.ndarray:
    """Right-handed view matrix placing the camera at eye looking at target."""
    e = eye.as_array()
    d = target.as_array() - e
    dist = np.linalg.norm(d)
    if dist == 0.0:
        raise ValidationError("look_at: eye and target coincide")
    f = d / dist
    up = up_hint.as_array()
    un = np.linalg.norm(up)
    # degenerate up: substitute world +X
    if un == 0.0 or abs(float(f @ (up / un))) > 1.0 - 1e-6:
        up = np.array([1.0, 0.0, 0.0])
    r = np.cross(f, up)
    r = r / np.linalg.norm(r)
    u = np.cross(r, f)
    view = np.eye(4)
    view[0, :3] = r
    view[1, :3] = u
    view[2, :3] = -f
    view[0, 3] = -float(r @ e)
    view[1, 3] = -float(u @ e)
    view[2, 3] = float(f @ e)
    return view


def perspective(fov_y: float, aspect: float, near: float, far: float) -> np.ndarray:
    """Standard perspective projection; depth -1 at near, +1 at far."""
    if not (0.0 < fov_y < math.pi):
        raise ValidationError(f"fov_y must be in (0, pi), got {fov_y}")
    if aspect <= 0.0:
        raise ValidationError("aspect must be > 0")
    if near <= 0.0:
        raise ValidationError("near must be > 0")
    if far <= near:
        raise ValidationError("far must be > near")
    f = 1.0 / math.tan(fov_y / 2.0)
    proj = np.zeros((4, 4))
    proj[0, 0] = f / aspect
    proj[1, 1] = f
    proj[2, 2] = (far + near) / (near - far)
    proj[2, 3] = 2.0 * far * near / (near - far)
    proj[3, 2] = -1.0
    return proj


def make_camera(eye: Vec3, target: Vec3, fov_y: float,
                viewport: tuple[int, int], near: float, far: float,
                up_hint: Vec3 = Vec3(0.0, 0.0, 1.0)) -> CameraMatrices:
    w, h = viewport
    return CameraMatrices(
        view=look_at(eye, target, up_hint),
        proj=perspective(fov_y, w / h, near, far),
        viewport=(int(w), int(h)),
    )


def project_points(points: np.ndarray, cam: CameraMatrices
                   ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized projection of (n, 3) world points.

    Returns (pixels (n, 2), ndc depth (n,), in_front (n,)). Pixel values of
    points behind the camera are meaningless and flagged by in_front=False.
    """
    pts = np.asarray(points, dtype=np.float64)
    cam_pts = pts @ cam.view[:3, :3].T + cam.view[:3, 3]
    clip = cam_pts @ cam.proj[:3, :3].T + cam.proj[:3, 3]
    w_clip = -cam_pts[:, 2]
    in_front = cam_pts[:, 2] < 0.0
    safe_w = np.where(w_clip == 0.0, 1.0, w_clip)
    ndc = clip / safe_w[:, None]
    width, height = cam.viewport
    px = (ndc[:, 0] * 0.5 + 0.5) * width
    py = (0.5 - ndc[:, 1] * 0.5) * height
    return np.column_stack([px, py]), ndc[:, 2], in_front


def project(p: Vec3, cam: CameraMatrices) -> Projection:
    """Project one world point to pixel coordinates and NDC depth."""
    pixels, depth, in_front = project_points(p.as_array()[None, :], cam)
    if not in_front[0]:
        return Projection(pixel=None, depth=float(depth[0]), in_front=False)
    return Projection(pixel=(float(pixels[0, 0]), float(pixels[0, 1])),
                      depth=float(depth[0]), in_front=True)


def orbit_update(state: OrbitState, drag_dx: float, drag_dy: float,
                 wheel_steps: int = 0) -> OrbitState:
    """Apply a mouse drag (pixels) and wheel steps to the orbit state."""
    return OrbitState(
        pivot=state.pivot,
        radius=state.radius * ZOOM_STEP ** wheel_steps,
        azimuth=state.azimuth + drag_dx * ROT_PER_PIXEL,
        elevation=state.elevation - drag_dy * ROT_PER_PIXEL,
    )


def orbit_eye(state: OrbitState) -> Vec3:
    """Eye position on the orbit sphere (azimuth around Z, elevation above XY)."""
    ce = math.cos(state.elevation)
    return Vec3(
        state.pivot.x + state.radius * ce * math.cos(state.azimuth),
        state.pivot.y + state.radius * ce * math.sin(state.azimuth),
        state.pivot.z + state.radius * math.sin(state.elevation),
    )


def orbit_camera(state: OrbitState, fov_y: float, viewport: tuple[int, int],
                 near: float, far: float) -> CameraMatrices:
    return make_camera(orbit_eye(state), state.pivot, fov_y, viewport, near, far)


def auto_frame(bbox: Aabb, azimuth: float = math.radians(45.0),
               elevation: float = math.radians(30.0)) -> OrbitState:
    """Default framing: pivot at the bbox center, radius 1.8x its half-diagonal."""
    radius = 1.8 * bbox.half_diagonal()
    if radius < 1.0:
        radius = 1.0  # degenerate scenes (single point) still get a usable view
    return OrbitState(pivot=bbox.center(), radius=radius,
                      azimuth=azimuth, elevation=elevation)


def _heading(vehicle: PoseSample) -> tuple[float, float]:
    """Unit horizontal heading (x, y) from velocity, falling back to yaw."""
    v = vehicle.v
    speed_xy = math.hypot(v.x, v.y)
    if speed_xy > VELOCITY_DEADBAND:
        return v.x / speed_xy, v.y / speed_xy
    fwd = rotate_vector(vehicle.q, Vec3(1.0, 0.0, 0.0))
    fxy = math.hypot(fwd.x, fwd.y)
    if fxy < 1e-12:
        return 1.0, 0.0  # nose pointing straight up/down: arbitrary but fixed
    return fwd.x / fxy, fwd.y / fxy


def follow_pose(state: FollowState, vehicle: PoseSample, dt: float
                ) -> tuple[FollowState, Vec3, Vec3]:
    """One follow-camera step; returns (new state, eye, target).

    The desired eye sits offset_back behind the horizontal heading and
    offset_up above the vehicle; eye and target converge to the desired
    values with time constant smoothing_tau (tau=0: exact, memoryless).
    """
    if not vehicle.visible:
        raise ValidationError("follow target is not visible at this time")
    hx, hy = _heading(vehicle)
    p = vehicle.p
    desired_eye = Vec3(p.x - hx * state.offset_back,
                       p.y - hy * state.offset_back,
                       p.z + state.offset_up)
    desired_target = p
    if state.smoothing_tau == 0.0 or state.eye_smoothed is None:
        eye, target = desired_eye, desired_target
    else:
        alpha = 1.0 - math.exp(-dt / state.smoothing_tau)
        eye = lerp_exact(state.eye_smoothed, desired_eye, alpha)
        target = lerp_exact(state.target_smoothed, desired_target, alpha)
    new_state = replace(state, eye_smoothed=eye, target_smoothed=target)
    return new_state, eye, target


def lerp_exact(a: Vec3, b: Vec3, alpha: float) -> Vec3:
    return Vec3(a.x + (b.x - a.x) * alpha,
                a.y + (b.y - a.y) * alpha,
                a.z + (b.z - a.z) * alpha)
