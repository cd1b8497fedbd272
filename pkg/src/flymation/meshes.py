"""Canonical low-poly glyph meshes, one per GlyphKind.

All glyphs fit in the unit box (extent ~1 before scaling) and are wound
counter-clockwise viewed from outside. Pinned sizes: cube 8v/12t, icosphere
(one subdivision) 42v/80t, cylinder and cone use 16-gon cross sections, the
gate is a rectangular frame of 4 cuboids with its opening along +X, and the
quadrotor is a central cuboid, 4 arm cuboids and 4 rotor disks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ValidationError
from .model import GlyphKind

CIRCLE_SEGMENTS = 16


@dataclass(frozen=True)
class GlyphMesh:
    vertices: np.ndarray   # (n, 3) float64
    triangles: np.ndarray  # (m, 3) int32

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.vertices, dtype=np.float64))
        t = np.ascontiguousarray(np.asarray(self.triangles, dtype=np.int32))
        if v.ndim != 2 or v.shape[1] != 3:
            raise ValidationError("mesh vertices must be (n, 3)")
        if t.ndim != 2 or t.shape[1] != 3:
            raise ValidationError("mesh triangles must be (m, 3)")
        if t.size and (t.min() < 0 or t.max() >= v.shape[0]):
            raise ValidationError("mesh triangle index out of range")
        v.flags.writeable = False
        t.flags.writeable = False
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)


class _Builder:
    def __init__(self):
        self.vertices: list[tuple[float, float, float]] = []
        self.triangles: list[tuple[int, int, int]] = []

    def add_vertex(self, x, y, z) -> int:
        self.vertices.append((x, y, z))
        return len(self.vertices) - 1

    def add_tri(self, a, b, c):
        self.triangles.append((a, b, c))

    def add_box(self, center, half):
        """Axis-aligned cuboid, outward winding."""
        cx, cy, cz = center
        hx, hy, hz = half
        base = len(self.vertices)
        for sx in (-1, 1):
            for sy in (-1, 1):
                for sz in (-1, 1):
                    self.add_vertex(cx + sx * hx, cy + sy * hy, cz + sz * hz)
        # vertex index: (sx>0)*4 + (sy>0)*2 + (sz>0), outward-facing quads
        quads = [
            (0, 1, 3, 2),  # -x
            (4, 6, 7, 5),  # +x
            (0, 4, 5, 1),  # -y
            (2, 3, 7, 6),  # +y
            (0, 2, 6, 4),  # -z
            (1, 5, 7, 3),  # +z
        ]
        for a, b, c, d in quads:
            self.add_tri(base + a, base + b, base + c)
            self.add_tri(base + a, base + c, base + d)

    def build(self) -> GlyphMesh:
        return GlyphMesh(np.array(self.vertices, dtype=np.float64),
                         np.array(self.triangles, dtype=np.int32))


def _cube() -> GlyphMesh:
    b = _Builder()
    b.add_box((0.0, 0.0, 0.0), (0.5, 0.5, 0.5))
    return b.build()


def _icosphere() -> GlyphMesh:
    # icosahedron -> one midpoint subdivision -> 42 vertices, 80 triangles
    phi = (1.0 + math.sqrt(5.0)) / 2.0
    raw = [
        (-1, phi, 0), (1, phi, 0), (-1, -phi, 0), (1, -phi, 0),
        (0, -1, phi), (0, 1, phi), (0, -1, -phi), (0, 1, -phi),
        (phi, 0, -1), (phi, 0, 1), (-phi, 0, -1), (-phi, 0, 1),
    ]
    verts = [np.array(v, dtype=np.float64) / np.linalg.norm(v) for v in raw]
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    midpoint: dict[tuple[int, int], int] = {}

    def mid(i, j):
        key = (min(i, j), max(i, j))
        if key not in midpoint:
            m = verts[i] + verts[j]
            verts.append(m / np.linalg.norm(m))
            midpoint[key] = len(verts) - 1
        return midpoint[key]

    out = []
    for a, b, c in faces:
        ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
        out.extend([(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)])
    vertices = np.array(verts) * 0.5  # radius 0.5: unit diameter
    return GlyphMesh(vertices, np.array(out, dtype=np.int32))


def _ring(n, radius, z):
    return [(radius * math.cos(2.0 * math.pi * k / n),
             radius * math.sin(2.0 * math.pi * k / n), z) for k in range(n)]


def _cylinder() -> GlyphMesh:
    n = CIRCLE_SEGMENTS
    b = _Builder()
    bottom = [b.add_vertex(*v) for v in _ring(n, 0.5, -0.5)]
    top = [b.add_vertex(*v) for v in _ring(n, 0.5, 0.5)]
    c_bot = b.add_vertex(0.0, 0.0, -0.5)
    c_top = b.add_vertex(0.0, 0.0, 0.5)
    for k in range(n):
        k2 = (k + 1) % n
        b.add_tri(bottom[k], bottom[k2], top[k2])
        b.add_tri(bottom[k], top[k2], top[k])
        b.add_tri(c_bot, bottom[k2], bottom[k])
        b.add_tri(c_top, top[k], top[k2])
    return b.build()


def _cone() -> GlyphMesh:
    n = CIRCLE_SEGMENTS
    b = _Builder()
    base = [b.add_vertex(*v) for v in _ring(n, 0.5, -0.5)]
    apex = b.add_vertex(0.0, 0.0, 0.5)
    center = b.add_vertex(0.0, 0.0, -0.5)
    for k in range(n):
        k2 = (k + 1) % n
        b.add_tri(base[k], base[k2], apex)
        b.add_tri(center, base[k2], base[k])
    return b.build()


def _gate() -> GlyphMesh:
    # square frame in the Y-Z plane; a vehicle passes through along +X
    b = _Builder()
    t = 0.12   # bar thickness
    d = 0.06   # half depth along X
    b.add_box((0.0, 0.0, 0.5 - t / 2), (d, 0.5, t / 2))    # top bar
    b.add_box((0.0, 0.0, -0.5 + t / 2), (d, 0.5, t / 2))   # bottom bar
    b.add_box((0.0, 0.5 - t / 2, 0.0), (d, t / 2, 0.5 - t))
    b.add_box((0.0, -0.5 + t / 2, 0.0), (d, t / 2, 0.5 - t))
    return b.build()


def _disk(b: _Builder, center, radius, n):
    cx, cy, cz = center
    ring = [b.add_vertex(cx + radius * math.cos(2 * math.pi * k / n),
                         cy + radius * math.sin(2 * math.pi * k / n), cz)
            for k in range(n)]
    mid = b.add_vertex(cx, cy, cz)
    for k in range(n):
        b.add_tri(mid, ring[k], ring[(k + 1) % n])  # faces +Z


def _quadrotor() -> GlyphMesh:
    b = _Builder()
    b.add_box((0.0, 0.0, 0.0), (0.13, 0.13, 0.05))  # body
    arm_half = (0.16, 0.03, 0.02)
    for axis, sign in (("x", 1), ("x", -1), ("y", 1), ("y", -1)):
        cx = sign * 0.28 if axis == "x" else 0.0
        cy = sign * 0.28 if axis == "y" else 0.0
        half = arm_half if axis == "x" else (arm_half[1], arm_half[0], arm_half[2])
        b.add_box((cx, cy, 0.0), half)
    for axis, sign in (("x", 1), ("x", -1), ("y", 1), ("y", -1)):
        cx = sign * 0.42 if axis == "x" else 0.0
        cy = sign * 0.42 if axis == "y" else 0.0
        _disk(b, (cx, cy, 0.05), 0.14, CIRCLE_SEGMENTS)
    return b.build()


_BUILDERS = {
    GlyphKind.SPHERE: _icosphere,
    GlyphKind.CUBE: _cube,
    GlyphKind.CYLINDER: _cylinder,
    GlyphKind.CONE: _cone,
    GlyphKind.GATE: _gate,
    GlyphKind.QUADROTOR: _quadrotor,
}


@lru_cache(maxsize=None)
def glyph_mesh(kind: GlyphKind) -> GlyphMesh:
    return _BUILDERS[kind]()
