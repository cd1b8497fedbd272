"""Geometry reduction for large scenes: polyline simplification and chunking.

Decimation applies to rendered line geometry only; animation sampling always
uses the full data.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import ValidationError
from .model import Trajectory, Vec3

DEFAULT_CHUNK_POINTS = 65535  # fits 16-bit index buffers


def _as_points(points) -> np.ndarray:
    if isinstance(points, np.ndarray):
        pts = np.asarray(points, dtype=np.float64)
    else:
        pts = np.array([tuple(p) for p in points], dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValidationError("points must be an (n, 3) array or a list of Vec3")
    return pts


def _segment_distances(pts: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Euclidean distance from each point to the closed segment [a, b]."""
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0.0:
        return np.linalg.norm(pts - a, axis=1)
    t = np.clip((pts - a) @ ab / denom, 0.0, 1.0)
    closest = a + t[:, None] * ab
    return np.linalg.norm(pts - closest, axis=1)


def point_segment_distance(p: Vec3, a: Vec3, b: Vec3) -> float:
    """Distance from p to the closed segment [a, b]; a == b degenerates to a point."""
    return float(_segment_distances(
        np.asarray([tuple(p)], dtype=np.float64),
        np.asarray(tuple(a), dtype=np.float64),
        np.asarray(tuple(b), dtype=np.float64))[0])


def rdp(points, epsilon: float) -> np.ndarray:
    """Ramer-Douglas-Peucker simplification; returns kept indices.

    Splits at the point of maximum distance to the chord whenever that
    distance exceeds epsilon (ties broken by the lowest index); endpoints are
    always kept. Iterative with an explicit stack, so million-point inputs
    cannot blow the recursion limit.
    """
    if epsilon < 0.0:
        raise ValidationError("epsilon must be >= 0")
    pts = _as_points(points)
    n = pts.shape[0]
    if n < 2:
        raise ValidationError("rdp requires at least 2 points")
    keep = np.zeros(n, dtype=bool)
    keep[0] = keep[n - 1] = True
    stack = [(0, n - 1)]
    while stack:
        i, j = stack.pop()
        if j - i < 2:
            continue
        d = _segment_distances(pts[i + 1:j], pts[i], pts[j])
        k_rel = int(np.argmax(d))  # argmax returns the first maximum: lowest index
        if d[k_rel] > epsilon:
            k = i + 1 + k_rel
            keep[k] = True
            stack.append((k, j))
            stack.append((i, k))
    return np.flatnonzero(keep)


def uniform_decimate(n_points: int, max_points: int) -> np.ndarray:
    """Evenly spaced index subset of size max_points, always keeping 0 and n-1."""
    if max_points < 2:
        raise ValidationError("max_points must be >= 2")
    if n_points <= max_points:
        return np.arange(n_points, dtype=np.intp)
    idx = np.round(np.linspace(0.0, n_points - 1, max_points)).astype(np.intp)
    return idx


def chunk(traj, max_points_per_chunk: int = DEFAULT_CHUNK_POINTS) -> list[tuple[int, int]]:
    """Split a polyline into contiguous index ranges that share boundary points.

    Accepts a Trajectory or a plain point count. Ranges are inclusive
    (start_index, end_index); adjacent ranges overlap by exactly one index so
    the drawn polyline stays connected.
    """
    if max_points_per_chunk < 2:
        raise ValidationError("max_points_per_chunk must be >= 2")
    n = traj.n_samples if isinstance(traj, Trajectory) else int(traj)
    if n < 1:
        raise ValidationError("cannot chunk an empty polyline")
    if n == 1:
        return [(0, 0)]
    stride = max_points_per_chunk - 1
    return [(s, min(s + stride, n - 1)) for s in range(0, n - 1, stride)]
