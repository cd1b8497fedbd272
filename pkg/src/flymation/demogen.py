"""Deterministic demo-data generators in the ingest CSV format.

Two showcase scenes: a bundle of Lorenz-attractor butterflies (classical
parameters sigma=10, rho=28, beta=8/3, integrated with classical RK4), and a
circular race track with gates and one vehicle flying through them. Both are
fully deterministic for a given seed; the chosen parameters are recorded in a
README dropped next to the generated data.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .ingest import STATE_HEADER, write_static_csv
from .model import ColorRGBA, GlyphKind, QuatWXYZ, StaticObjectSpec, Vec3

PALETTE = (
    ColorRGBA(0.90, 0.10, 0.10, 1.0),
    ColorRGBA(0.10, 0.70, 0.15, 1.0),
    ColorRGBA(0.15, 0.35, 0.95, 1.0),
    ColorRGBA(0.95, 0.60, 0.05, 1.0),
    ColorRGBA(0.60, 0.15, 0.80, 1.0),
    ColorRGBA(0.05, 0.75, 0.75, 1.0),
    ColorRGBA(0.90, 0.85, 0.10, 1.0),
    ColorRGBA(0.90, 0.15, 0.65, 1.0),
)


@dataclass(frozen=True, slots=True)
class LorenzParams:
    sigma: float = 10.0
    rho: float = 28.0
    beta: float = 8.0 / 3.0
    dt: float = 0.01
    duration: float = 10.0

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ValidationError("dt must be > 0")
        if self.duration <= 0.0:
            raise ValidationError("duration must be > 0")
        if self.dt > self.duration:
            raise ValidationError("dt must be <= duration")


def _deriv(x, y, z, sigma, rho, beta):
    # works elementwise for floats and for numpy arrays alike
    return sigma * (y - x), x * (rho - z) - y, x * y - beta * z


def lorenz_derivative(state, params: LorenzParams = LorenzParams()) -> Vec3:
    x, y, z = state
    dx, dy, dz = _deriv(x, y, z, params.sigma, params.rho, params.beta)
    return Vec3(float(dx), float(dy), float(dz))


def _rk4(x, y, z, sigma, rho, beta, dt):
    k1x, k1y, k1z = _deriv(x, y, z, sigma, rho, beta)
    k2x, k2y, k2z = _deriv(x + 0.5 * dt * k1x, y + 0.5 * dt * k1y, z + 0.5 * dt * k1z,
                           sigma, rho, beta)
    k3x, k3y, k3z = _deriv(x + 0.5 * dt * k2x, y + 0.5 * dt * k2y, z + 0.5 * dt * k2z,
                           sigma, rho, beta)
    k4x, k4y, k4z = _deriv(x + dt * k3x, y + dt * k3y, z + dt * k3z, sigma, rho, beta)
    return (x + dt * (k1x + 2.0 * k2x + 2.0 * k3x + k4x) / 6.0,
            y + dt * (k1y + 2.0 * k2y + 2.0 * k3y + k4y) / 6.0,
            z + dt * (k1z + 2.0 * k2z + 2.0 * k3z + k4z) / 6.0)


def rk4_step(state, params: LorenzParams = LorenzParams(), dt=None) -> Vec3:
    """One classical 4th-order Runge-Kutta step of the attractor ODE."""
    if dt is None:
        dt = params.dt
    x, y, z = state
    nx, ny, nz = _rk4(float(x), float(y), float(z),
                      params.sigma, params.rho, params.beta, float(dt))
    return Vec3(nx, ny, nz)


def integrate_lorenz(initial: np.ndarray, params: LorenzParams, n_steps: int) -> np.ndarray:
    """Integrate (m, 3) initial states for n_steps; returns (n_steps+1, m, 3).

    Uses the same arithmetic as rk4_step (the expressions broadcast), so a
    batch of one reproduces the scalar path bit for bit.
    """
    states = np.empty((n_steps + 1,) + initial.shape, dtype=np.float64)
    states[0] = initial
    x, y, z = initial[..., 0].copy(), initial[..., 1].copy(), initial[..., 2].copy()
    for k in range(1, n_steps + 1):
        x, y, z = _rk4(x, y, z, params.sigma, params.rho, params.beta, params.dt)
        states[k, ..., 0] = x
        states[k, ..., 1] = y
        states[k, ..., 2] = z
    return states


def _fmt(v: float) -> str:
    return repr(float(v))


def _write_state_rows(path: Path, times, positions, quaternions, velocities,
                      color: ColorRGBA, scale: Vec3) -> None:
    """Stream one moving-object CSV (constant color and scale per file)."""
    c = ",".join(_fmt(v) for v in color)
    s = ",".join(_fmt(v) for v in scale)
    with path.open("w", encoding="utf-8", newline="\n") as f:
        f.write(STATE_HEADER + "\n")
        for i in range(len(times)):
            p = positions[i]
            q = quaternions[i]
            v = velocities[i]
            f.write(f"{_fmt(times[i])},{_fmt(p[0])},{_fmt(p[1])},{_fmt(p[2])},"
                    f"{_fmt(q[0])},{_fmt(q[1])},{_fmt(q[2])},{_fmt(q[3])},"
                    f"{_fmt(v[0])},{_fmt(v[1])},{_fmt(v[2])},{c},{s}\n")


def _make_dirs(out_dir: Path) -> tuple[Path, Path, Path]:
    dirs = (out_dir / "vehicle", out_dir / "dynamic", out_dir / "static")
    for d in dirs:
        d.mkdir(parents=True, exist_ok=True)
    return dirs


def _write_config(out_dir: Path, extra: dict | None = None) -> Path:
    cfg = {"vehicle_dir": "vehicle", "dynamic_dir": "dynamic", "static_dir": "static"}
    cfg.update(extra or {})
    path = out_dir / "scene.json"
    path.write_text(json.dumps(cfg, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def gen_lorenz_scene(out_dir, n_traj: int = 4,
                     params: LorenzParams = LorenzParams(),
                     seed: int = 7) -> Path:
    """Generate n_traj attractor trajectories as vehicle CSVs; returns scene.json.

    Initial states are (1, 1, 1) plus seeded uniform perturbations in
    [-0.1, 0.1]^3; trajectory colors cycle an 8-color palette. Identical
    arguments reproduce the folder byte for byte.
    """
    if n_traj < 1:
        raise ValidationError("n_traj must be >= 1")
    out_dir = Path(out_dir)
    vehicle_dir, _, _ = _make_dirs(out_dir)
    n_steps = int(round(params.duration / params.dt))
    rng = np.random.default_rng(seed)
    initial = 1.0 + rng.uniform(-0.1, 0.1, (n_traj, 3))
    states = integrate_lorenz(initial, params, n_steps)          # (n+1, m, 3)
    times = np.arange(n_steps + 1, dtype=np.float64) * params.dt
    sigma, rho, beta = params.sigma, params.rho, params.beta
    dx, dy, dz = _deriv(states[..., 0], states[..., 1], states[..., 2], sigma, rho, beta)
    velocities = np.stack([dx, dy, dz], axis=-1)
    identity = np.zeros((n_steps + 1, 4))
    identity[:, 0] = 1.0
    for i in range(n_traj):
        _write_state_rows(
            vehicle_dir / f"lorenz_{i:02d}.csv",
            times, states[:, i, :], identity, velocities[:, i, :],
            PALETTE[i % len(PALETTE)], Vec3(0.2, 0.2, 0.2),
        )
    (out_dir / "README.txt").write_text(
        "Lorenz attractor demo data\n"
        f"trajectories: {n_traj}\n"
        f"sigma={params.sigma} rho={params.rho} beta={params.beta}\n"
        f"integrator: classical RK4, dt={params.dt}, duration={params.duration}\n"
        f"initial states: (1,1,1) + uniform[-0.1,0.1]^3, seed={seed}\n"
        f"rows per file: {n_steps + 1}\n",
        encoding="utf-8")
    return _write_config(out_dir)


RACETRACK_RADIUS = 15.0
RACETRACK_SPEED = 5.0
RACETRACK_HEIGHT = 1.5
RACETRACK_GATE_SCALE = 2.5
SAMPLES_PER_GATE = 40


def _yaw_quat(yaw: float) -> tuple[float, float, float, float]:
    return (math.cos(yaw / 2.0), 0.0, 0.0, math.sin(yaw / 2.0))


def gen_racetrack_scene(out_dir, n_gates: int = 7, laps: int = 1) -> Path:
    """Generate gates on a circle plus one vehicle lapping through their centers.

    The flight path is a constant-speed circle (5 m/s, radius 15 m) sampled so
    every gate passage lands exactly on a knot; yaw follows the velocity.
    """
    if n_gates < 2:
        raise ValidationError("n_gates must be >= 2")
    if laps < 1:
        raise ValidationError("laps must be >= 1")
    out_dir = Path(out_dir)
    _, _, static_dir = _make_dirs(out_dir)
    r = RACETRACK_RADIUS
    v = RACETRACK_SPEED
    omega = v / r
    lap_time = 2.0 * math.pi * r / v
    dt = lap_time / (n_gates * SAMPLES_PER_GATE)
    n_steps = n_gates * SAMPLES_PER_GATE * laps
    times = np.arange(n_steps + 1, dtype=np.float64) * dt
    theta = omega * times
    positions = np.column_stack([r * np.cos(theta), r * np.sin(theta),
                                 np.full(n_steps + 1, RACETRACK_HEIGHT)])
    velocities = np.column_stack([-v * np.sin(theta), v * np.cos(theta),
                                  np.zeros(n_steps + 1)])
    yaw = theta + math.pi / 2.0
    quats = np.column_stack([np.cos(yaw / 2.0), np.zeros(n_steps + 1),
                             np.zeros(n_steps + 1), np.sin(yaw / 2.0)])
    _write_state_rows(out_dir / "vehicle" / "drone.csv",
                      times, positions, quats, velocities,
                      ColorRGBA(0.95, 0.55, 0.1, 1.0), Vec3(0.6, 0.6, 0.25))

    gates = []
    for k in range(n_gates):
        ang = 2.0 * math.pi * k / n_gates
        gates.append(StaticObjectSpec(
            p=Vec3(r * math.cos(ang), r * math.sin(ang), RACETRACK_HEIGHT),
            q=QuatWXYZ(*_yaw_quat(ang + math.pi / 2.0)),
            c=ColorRGBA(0.2, 0.45, 0.9, 1.0),
            s=Vec3(RACETRACK_GATE_SCALE, RACETRACK_GATE_SCALE, RACETRACK_GATE_SCALE),
            obj=GlyphKind.GATE,
        ))
    (static_dir / "gates.csv").write_text(write_static_csv(gates), encoding="utf-8")
    (out_dir / "README.txt").write_text(
        "Race track demo data\n"
        f"gates: {n_gates} on a circle of radius {r} m at height {RACETRACK_HEIGHT} m\n"
        f"vehicle: constant {v} m/s, {laps} lap(s), {SAMPLES_PER_GATE} samples per gate "
        f"segment (dt={dt!r})\n"
        "gate passages land exactly on trajectory knots\n",
        encoding="utf-8")
    return _write_config(out_dir, {
        "camera": "follow",
        "follow_target": "drone",
        "trail": {"duration_s": 1.5, "color": [1.0, 0.0, 0.0, 1.0]},
    })
