"""Deterministic headless software renderer: PNG snapshots and SVG export.

Pipeline per primitive: transform to camera space, clip against the near
plane, project, rasterize (DDA for lines, top-left-rule barycentric for
triangles), depth-test against a binary32 z-buffer. Opaque content (alpha
exactly 1) writes depth and resolves order-independently; translucent
content is drawn afterwards, back to front by centroid depth with a
content-derived tie break, blending source-over without writing depth.
Identical inputs produce byte-identical framebuffers.
"""

from __future__ import annotations

import hashlib
import struct
import zlib
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .compile import GlyphInstance, Polyline, RenderBatch
from .errors import ValidationError
from .camera import CameraMatrices
from .meshes import glyph_mesh
from .model import ColorRGBA, Vec3

LIGHT_DIR = np.array([1.0, 1.0, 1.0]) / np.sqrt(3.0)
SHADE_AMBIENT = 0.35
SHADE_DIFFUSE = 0.65
DEPTH_FAR_SENTINEL = np.float32(1.0)


@dataclass(eq=False)
class Framebuffer:
    width: int
    height: int
    color: np.ndarray  # (h, w, 4) uint8, row-major, top-left origin
    depth: np.ndarray  # (h, w) float32, 1.0 = far sentinel

    @classmethod
    def create(cls, width: int, height: int,
               background: ColorRGBA = ColorRGBA(0.0, 0.0, 0.0, 1.0)) -> "Framebuffer":
        if width < 1 or height < 1:
            raise ValidationError("framebuffer dimensions must be >= 1")
        color = np.empty((height, width, 4), dtype=np.uint8)
        color[:, :] = _to_bytes(background.as_array())
        depth = np.full((height, width), DEPTH_FAR_SENTINEL, dtype=np.float32)
        return cls(width=width, height=height, color=color, depth=depth)


def _to_bytes(rgba_float) -> np.ndarray:
    return np.floor(np.clip(rgba_float, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)


def _near_far(proj: np.ndarray) -> tuple[float, float]:
    near = proj[2, 3] / (proj[2, 2] - 1.0)
    far = proj[2, 3] / (proj[2, 2] + 1.0)
    return float(near), float(far)


def _world_to_cam(pts: np.ndarray, view: np.ndarray) -> np.ndarray:
    return pts @ view[:3, :3].T + view[:3, 3]


def _cam_to_screen(pts_cam: np.ndarray, cam: CameraMatrices
                   ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Project camera-space points (all in front) to pixel coords + NDC depth."""
    proj = cam.proj
    clip = pts_cam @ proj[:3, :3].T + proj[:3, 3]
    w = -pts_cam[:, 2]
    ndc = clip / w[:, None]
    width, height = cam.viewport
    px = (ndc[:, 0] * 0.5 + 0.5) * width
    py = (0.5 - ndc[:, 1] * 0.5) * height
    return px, py, ndc[:, 2]


# ---------------------------------------------------------------------------
# line rasterization

def _clip_chain(cam_pts: np.ndarray, colors: np.ndarray, near: float):
    """Clip consecutive segments of a polyline against z_cam <= -near.

    Returns per-kept-segment endpoint/color arrays plus a drop_first flag
    that is True where a segment continues an unbroken chain (its first
    pixel was already emitted by the previous segment).
    """
    z = cam_pts[:, 2]
    za, zb = z[:-1], z[1:]
    lim = -near
    in_a = za <= lim
    in_b = zb <= lim
    keep = in_a | in_b
    idx = np.flatnonzero(keep)
    if idx.size == 0:
        return None
    a = cam_pts[:-1][idx].copy()
    b = cam_pts[1:][idx].copy()
    ca = colors[:-1][idx].copy()
    cb = colors[1:][idx].copy()
    za_k = za[idx]
    zb_k = zb[idx]
    denom = zb_k - za_k
    # entering/exiting segments: move the outside endpoint onto the plane
    t_cross = np.where(denom != 0.0, (lim - za_k) / np.where(denom == 0.0, 1.0, denom), 0.0)
    clip_a = ~in_a[idx]
    clip_b = ~in_b[idx]
    if clip_a.any():
        t = t_cross[clip_a][:, None]
        orig_a = cam_pts[:-1][idx][clip_a]
        orig_b = cam_pts[1:][idx][clip_a]
        a[clip_a] = orig_a + (orig_b - orig_a) * t
        ca[clip_a] = ca[clip_a] + (cb[clip_a] - ca[clip_a]) * t
    if clip_b.any():
        t = t_cross[clip_b][:, None]
        orig_a = cam_pts[:-1][idx][clip_b]
        orig_b = cam_pts[1:][idx][clip_b]
        b[clip_b] = orig_a + (orig_b - orig_a) * t
        cb[clip_b] = ca[clip_b] + (cb[clip_b] - ca[clip_b]) * t
    # chain continues when the previous original segment was kept and the
    # junction vertex was not clipped on either side
    prev_kept = np.zeros(len(keep), dtype=bool)
    prev_kept[1:] = keep[:-1] & in_b[:-1]
    drop_first = prev_kept[idx] & in_a[idx]
    return a, b, ca, cb, drop_first


def _round_px(v: np.ndarray) -> np.ndarray:
    return np.floor(v + 0.5).astype(np.int64)


def _width_offsets(width_px: float) -> np.ndarray:
    w = max(1, int(round(width_px)))
    lo = -((w - 1) // 2)
    return np.arange(lo, lo + w, dtype=np.int64)


def _segment_fragments(x0, y0, z0, c0, x1, y1, z1, c1, drop_first,
                       width_px: float, viewport: tuple[int, int]):
    """DDA-walk an array of segments into (flat_index, depth, rgba) fragments.

    Steps along the major axis one pixel at a time; pixel = floor(v + 0.5) of
    the interpolated position. Both endpoints are included unless drop_first
    skips the shared chain junction.
    """
    ix0, iy0, ix1, iy1 = _round_px(x0), _round_px(y0), _round_px(x1), _round_px(y1)
    n = np.maximum(np.abs(ix1 - ix0), np.abs(iy1 - iy0))
    first = drop_first.astype(np.int64)
    counts = n + 1 - first
    counts = np.maximum(counts, 0)
    total = int(counts.sum())
    if total == 0:
        return (np.empty(0, np.int64), np.empty(0, np.float64), np.empty((0, 4)))
    seg = np.repeat(np.arange(len(n)), counts)
    base = np.cumsum(counts) - counts
    step = np.arange(total) - base[seg] + first[seg]
    denom = np.maximum(n[seg], 1)
    u = step / denom
    px = x0[seg] + (x1 - x0)[seg] * u
    py = y0[seg] + (y1 - y0)[seg] * u
    z = z0[seg] + (z1 - z0)[seg] * u
    rgba = c0[seg] + (c1 - c0)[seg] * u[:, None]
    ipx = _round_px(px)
    ipy = _round_px(py)

    offsets = _width_offsets(width_px)
    if offsets.size > 1:
        x_major = np.abs(ix1 - ix0)[seg] >= np.abs(iy1 - iy0)[seg]
        k = offsets.size
        ipx = np.repeat(ipx, k)
        ipy = np.repeat(ipy, k)
        off = np.tile(offsets, total)
        xm = np.repeat(x_major, k)
        ipy = ipy + np.where(xm, off, 0)
        ipx = ipx + np.where(xm, 0, off)
        z = np.repeat(z, k)
        rgba = np.repeat(rgba, k, axis=0)

    w, h = viewport
    ok = (ipx >= 0) & (ipx < w) & (ipy >= 0) & (ipy < h) & (z <= 1.0) & (z >= -1.0 - 1e-9)
    return (ipy[ok] * w + ipx[ok], z[ok], rgba[ok])


def _polyline_fragments(vertices: np.ndarray, colors: np.ndarray,
                        width_px: float, cam: CameraMatrices):
    """All fragments of a polyline: clip, project, DDA. None when invisible."""
    near, _ = _near_far(cam.proj)
    cam_pts = _world_to_cam(np.asarray(vertices, dtype=np.float64), cam.view)
    if cam_pts.shape[0] == 1:
        # degenerate single-point polyline: a dot
        if cam_pts[0, 2] > -near:
            return None
        px, py, z = _cam_to_screen(cam_pts, cam)
        c = np.asarray(colors, dtype=np.float64)
        return _segment_fragments(px, py, z, c, px, py, z, c,
                                  np.zeros(1, bool), width_px, cam.viewport)
    clipped = _clip_chain(cam_pts, np.asarray(colors, dtype=np.float64), near)
    if clipped is None:
        return None
    a, b, ca, cb, drop_first = clipped
    ax, ay, az = _cam_to_screen(a, cam)
    bx, by, bz = _cam_to_screen(b, cam)
    return _segment_fragments(ax, ay, az, ca, bx, by, bz, cb,
                              drop_first, width_px, cam.viewport)


# ---------------------------------------------------------------------------
# triangle rasterization

def _clip_triangle_cam(verts_cam: np.ndarray, colors: np.ndarray, near: float):
    """Sutherland-Hodgman clip of one triangle against z_cam <= -near.

    Yields 0, 1 or 2 (verts_cam, colors) triangles.
    """
    lim = -near
    inside = verts_cam[:, 2] <= lim
    n_in = int(inside.sum())
    if n_in == 0:
        return []
    if n_in == 3:
        return [(verts_cam, colors)]
    poly_v, poly_c = [], []
    for i in range(3):
        j = (i + 1) % 3
        vi, vj = verts_cam[i], verts_cam[j]
        ci, cj = colors[i], colors[j]
        if inside[i]:
            poly_v.append(vi)
            poly_c.append(ci)
        if inside[i] != inside[j]:
            t = (lim - vi[2]) / (vj[2] - vi[2])
            poly_v.append(vi + (vj - vi) * t)
            poly_c.append(ci + (cj - ci) * t)
    out = []
    for k in range(1, len(poly_v) - 1):
        out.append((np.array([poly_v[0], poly_v[k], poly_v[k + 1]]),
                    np.array([poly_c[0], poly_c[k], poly_c[k + 1]])))
    return out


def _triangle_fragments(px, py, z, rgba, viewport):
    """Rasterize one screen-space triangle with the top-left fill rule."""
    w, h = viewport
    area = (px[1] - px[0]) * (py[2] - py[0]) - (py[1] - py[0]) * (px[2] - px[0])
    if area == 0.0:
        return None
    if area < 0.0:
        px = px[[0, 2, 1]]
        py = py[[0, 2, 1]]
        z = z[[0, 2, 1]]
        rgba = rgba[[0, 2, 1]]
        area = -area
    x_lo = max(0, int(np.floor(px.min() - 0.5)))
    x_hi = min(w - 1, int(np.ceil(px.max() + 0.5)))
    y_lo = max(0, int(np.floor(py.min() - 0.5)))
    y_hi = min(h - 1, int(np.ceil(py.max() + 0.5)))
    if x_lo > x_hi or y_lo > y_hi:
        return None
    xs = np.arange(x_lo, x_hi + 1)
    ys = np.arange(y_lo, y_hi + 1)
    cx = xs + 0.5
    cy = ys + 0.5
    gx, gy = np.meshgrid(cx, cy)

    ws = []
    inside = np.ones(gx.shape, dtype=bool)
    for i, jj in ((1, 2), (2, 0), (0, 1)):
        ex = px[jj] - px[i]
        ey = py[jj] - py[i]
        e = ex * (gy - py[i]) - ey * (gx - px[i])
        # boundary pixels belong to top (horizontal, running +x) or left edges
        boundary_ok = (ey < 0.0) or (ey == 0.0 and ex > 0.0)
        inside &= (e >= 0.0) if boundary_ok else (e > 0.0)
        ws.append(e)
    if not inside.any():
        return None
    w0, w1, w2 = ws[0][inside], ws[1][inside], ws[2][inside]
    iy, ix = np.nonzero(inside)
    zf = (w0 * z[0] + w1 * z[1] + w2 * z[2]) / area
    cf = (w0[:, None] * rgba[0] + w1[:, None] * rgba[1] + w2[:, None] * rgba[2]) / area
    ok = (zf <= 1.0) & (zf >= -1.0 - 1e-9)
    flat = (iy + y_lo) * w + (ix + x_lo)
    return flat[ok], zf[ok], cf[ok]


def _shade_factor(normal_world: np.ndarray) -> float:
    return SHADE_AMBIENT + SHADE_DIFFUSE * max(0.0, float(normal_world @ LIGHT_DIR))


def _face_normal(v0, v1, v2) -> np.ndarray:
    n = np.cross(v1 - v0, v2 - v0)
    norm = np.linalg.norm(n)
    return n / norm if norm > 0.0 else np.array([0.0, 0.0, 1.0])


# ---------------------------------------------------------------------------
# framebuffer commits

def _commit_opaque(fb: Framebuffer, flat, z, rgba):
    """Depth-resolve a fragment stream and write color + depth.

    Winner per pixel: strictly smallest binary32 depth, earliest fragment on
    ties. Equivalent to drawing the stream sequentially with a less-than
    depth test.
    """
    if flat.size == 0:
        return
    z32 = z.astype(np.float32)
    order = np.lexsort((np.arange(flat.size), z32, flat))
    f = flat[order]
    first = np.ones(f.size, dtype=bool)
    first[1:] = f[1:] != f[:-1]
    win = order[first]
    wf = flat[win]
    wz = z32[win]
    passed = wz < fb.depth.reshape(-1)[wf]
    wf = wf[passed]
    fb.depth.reshape(-1)[wf] = wz[passed]
    fb.color.reshape(-1, 4)[wf] = _to_bytes(rgba[win][passed])


def _commit_blend(fb: Framebuffer, flat, z, rgba):
    """Source-over blend fragments (distinct pixels) with a read-only z-test."""
    if flat.size == 0:
        return
    z32 = z.astype(np.float32)
    passed = z32 < fb.depth.reshape(-1)[flat]
    if not passed.any():
        return
    flat = flat[passed]
    src = rgba[passed]
    dst = fb.color.reshape(-1, 4)[flat].astype(np.float64) / 255.0
    a = src[:, 3:4]
    out = np.empty_like(src)
    out[:, :3] = src[:, :3] * a + dst[:, :3] * (1.0 - a)
    out[:, 3:4] = a + dst[:, 3:4] * (1.0 - a)
    fb.color.reshape(-1, 4)[flat] = _to_bytes(out)


def _is_opaque(colors: np.ndarray) -> np.ndarray:
    return colors[:, 3] >= 1.0


# ---------------------------------------------------------------------------
# public drawing operations

def draw_line_3d(fb: Framebuffer, p0: Vec3, p1: Vec3, c0: ColorRGBA, c1: ColorRGBA,
                 cam: CameraMatrices, width_px: float = 1.0) -> None:
    """Draw one world-space segment: near-clipped, DDA-walked, z-tested.

    Fully opaque segments write depth; any translucency blends source-over
    without writing depth.
    """
    verts = np.array([tuple(p0), tuple(p1)], dtype=np.float64)
    colors = np.array([tuple(c0), tuple(c1)], dtype=np.float64)
    frags = _polyline_fragments(verts, colors, width_px, cam)
    if frags is None:
        return
    flat, z, rgba = frags
    if c0.a >= 1.0 and c1.a >= 1.0:
        _commit_opaque(fb, flat, z, rgba)
    else:
        _commit_blend(fb, flat, z, rgba)


def draw_triangle(fb: Framebuffer, vertices, colors, cam: CameraMatrices,
                  flat_normal_shade: bool = False) -> None:
    """Draw one world-space triangle (no backface culling, top-left fill rule).

    vertices: three Vec3; colors: three ColorRGBA. Flat shading multiplies
    color by ambient + diffuse * max(0, n . L) using the world face normal.
    """
    v_world = np.array([tuple(v) for v in vertices], dtype=np.float64)
    c = np.array([tuple(col) for col in colors], dtype=np.float64)
    if flat_normal_shade:
        factor = _shade_factor(_face_normal(*v_world))
        c = c.copy()
        c[:, :3] *= factor
    near, _ = _near_far(cam.proj)
    cam_verts = _world_to_cam(v_world, cam.view)
    opaque = bool((c[:, 3] >= 1.0).all())
    for tri_cam, tri_col in _clip_triangle_cam(cam_verts, c, near):
        px, py, z = _cam_to_screen(tri_cam, cam)
        frags = _triangle_fragments(px, py, z, tri_col, cam.viewport)
        if frags is None:
            continue
        flat, zf, cf = frags
        if opaque:
            _commit_opaque(fb, flat, zf, cf)
        else:
            _commit_blend(fb, flat, zf, cf)


# ---------------------------------------------------------------------------
# batch rendering

def _glyph_triangles(glyph: GlyphInstance):
    """World-space triangles of a glyph instance with flat-shaded colors."""
    mesh = glyph_mesh(glyph.kind)
    m = glyph.transform
    verts = mesh.vertices @ m[:3, :3].T + m[:3, 3]
    tris = mesh.triangles
    v0 = verts[tris[:, 0]]
    v1 = verts[tris[:, 1]]
    v2 = verts[tris[:, 2]]
    n = np.cross(v1 - v0, v2 - v0)
    norms = np.linalg.norm(n, axis=1)
    norms[norms == 0.0] = 1.0
    n = n / norms[:, None]
    factor = SHADE_AMBIENT + SHADE_DIFFUSE * np.maximum(0.0, n @ LIGHT_DIR)
    base = np.asarray(tuple(glyph.color), dtype=np.float64)
    face_rgb = factor[:, None] * base[:3]
    return v0, v1, v2, face_rgb, base[3]


def _digest(*arrays) -> bytes:
    h = hashlib.sha1()
    for a in arrays:
        h.update(np.ascontiguousarray(a, dtype=np.float64).tobytes())
    return h.digest()


def render(batch: RenderBatch, cam: CameraMatrices, width: int, height: int) -> Framebuffer:
    """Render a batch deterministically; output is independent of primitive order
    for opaque content, and translucent content uses a canonical back-to-front
    order, so permuting the batch does not change the image."""
    if cam.viewport != (width, height):
        cam = CameraMatrices(view=cam.view, proj=cam.proj, viewport=(width, height))
    fb = Framebuffer.create(width, height, batch.background)
    near, _ = _near_far(cam.proj)

    op_flat: list[np.ndarray] = []
    op_z: list[np.ndarray] = []
    op_rgba: list[np.ndarray] = []
    translucent: list[tuple[float, bytes, int, tuple]] = []

    def emit_opaque(frags):
        if frags is not None and frags[0].size:
            op_flat.append(frags[0])
            op_z.append(frags[1])
            op_rgba.append(frags[2])

    for glyph in batch.glyphs:
        v0, v1, v2, face_rgb, alpha = _glyph_triangles(glyph)
        opaque = alpha >= 1.0
        for i in range(v0.shape[0]):
            tri_world = np.array([v0[i], v1[i], v2[i]])
            tri_cam = _world_to_cam(tri_world, cam.view)
            col = np.empty((3, 4))
            col[:, :3] = face_rgb[i]
            col[:, 3] = alpha
            for tcam, tcol in _clip_triangle_cam(tri_cam, col, near):
                px, py, z = _cam_to_screen(tcam, cam)
                if opaque:
                    emit_opaque(_triangle_fragments(px, py, z, tcol, cam.viewport))
                else:
                    depth = float(z.mean())
                    translucent.append((depth, _digest(tcam, tcol), 0,
                                        (px, py, z, tcol)))

    for poly in batch.polylines:
        verts = poly.vertices
        colors = poly.colors
        if bool(_is_opaque(colors).all()):
            emit_opaque(_polyline_fragments(verts, colors, poly.width_px, cam))
        else:
            cam_pts = _world_to_cam(np.asarray(verts, dtype=np.float64), cam.view)
            if cam_pts.shape[0] < 2:
                continue
            clipped = _clip_chain(cam_pts, np.asarray(colors, dtype=np.float64), near)
            if clipped is None:
                continue
            a, b, ca, cb, drop_first = clipped
            ax, ay, az = _cam_to_screen(a, cam)
            bx, by, bz = _cam_to_screen(b, cam)
            for i in range(a.shape[0]):
                depth = float((az[i] + bz[i]) / 2.0)
                seg = (np.array([ax[i]]), np.array([ay[i]]), np.array([az[i]]),
                       ca[i][None, :], np.array([bx[i]]), np.array([by[i]]),
                       np.array([bz[i]]), cb[i][None, :],
                       np.array([drop_first[i]]), poly.width_px)
                translucent.append((depth, _digest(a[i], b[i], ca[i], cb[i]), 1, seg))

    if op_flat:
        _commit_opaque(fb, np.concatenate(op_flat), np.concatenate(op_z),
                       np.concatenate(op_rgba))

    # back to front: larger NDC depth first; digest makes the order canonical
    translucent.sort(key=lambda item: (-item[0], item[1]))
    for _, _, kind, payload in translucent:
        if kind == 0:
            px, py, z, tcol = payload
            frags = _triangle_fragments(px, py, z, tcol, cam.viewport)
            if frags is not None:
                _commit_blend(fb, *frags)
        else:
            ax, ay, az, ca, bx, by, bz, cb, drop_first, width_px = payload
            flat, z, rgba = _segment_fragments(ax, ay, az, ca, bx, by, bz, cb,
                                               drop_first, width_px, cam.viewport)
            _commit_blend(fb, flat, z, rgba)
    return fb


# ---------------------------------------------------------------------------
# encoders

def _png_chunk(tag: bytes, payload: bytes) -> bytes:
    body = tag + payload
    return struct.pack(">I", len(payload)) + body + struct.pack(">I", zlib.crc32(body))


def encode_png(fb: Framebuffer) -> bytes:
    """Encode as 8-bit RGBA PNG with fixed settings (deterministic bytes)."""
    h, w = fb.height, fb.width
    rows = np.zeros((h, 1 + w * 4), dtype=np.uint8)
    rows[:, 1:] = fb.color.reshape(h, w * 4)
    compressed = zlib.compress(rows.tobytes(), 6)
    ihdr = struct.pack(">IIBBBBB", w, h, 8, 6, 0, 0, 0)
    return (b"\x89PNG\r\n\x1a\n"
            + _png_chunk(b"IHDR", ihdr)
            + _png_chunk(b"IDAT", compressed)
            + _png_chunk(b"IEND", b""))


def _svg_color(rgba) -> tuple[str, float]:
    b = _to_bytes(np.asarray(rgba, dtype=np.float64))
    return (f"rgb({int(b[0])},{int(b[1])},{int(b[2])})",
            float(np.clip(float(rgba[3]), 0.0, 1.0)))


def export_svg(batch: RenderBatch, cam: CameraMatrices, width: int, height: int) -> str:
    """Vector export: painter's algorithm over primitive centroid depth.

    Intersecting primitives may sort imperfectly; this is the documented
    painter's-algorithm limitation of the SVG path.
    """
    if cam.viewport != (width, height):
        cam = CameraMatrices(view=cam.view, proj=cam.proj, viewport=(width, height))
    near, _ = _near_far(cam.proj)
    elements: list[tuple[float, bytes, str]] = []

    for glyph in batch.glyphs:
        v0, v1, v2, face_rgb, alpha = _glyph_triangles(glyph)
        for i in range(v0.shape[0]):
            tri_cam = _world_to_cam(np.array([v0[i], v1[i], v2[i]]), cam.view)
            col = np.empty((3, 4))
            col[:, :3] = face_rgb[i]
            col[:, 3] = alpha
            for tcam, tcol in _clip_triangle_cam(tri_cam, col, near):
                px, py, z = _cam_to_screen(tcam, cam)
                fill, opacity = _svg_color(tcol.mean(axis=0))
                d = (f"M {px[0]:.3f} {py[0]:.3f} L {px[1]:.3f} {py[1]:.3f} "
                     f"L {px[2]:.3f} {py[2]:.3f} Z")
                el = f'<path d="{d}" fill="{fill}" fill-opacity="{opacity:.4f}"/>'
                elements.append((float(z.mean()), _digest(tcam, tcol), el))

    for poly in batch.polylines:
        cam_pts = _world_to_cam(np.asarray(poly.vertices, dtype=np.float64), cam.view)
        colors = np.asarray(poly.colors, dtype=np.float64)
        if cam_pts.shape[0] < 2:
            continue
        clipped = _clip_chain(cam_pts, colors, near)
        if clipped is None:
            continue
        a, b, ca, cb, drop_first = clipped
        ax, ay, az = _cam_to_screen(a, cam)
        bx, by, bz = _cam_to_screen(b, cam)
        # contiguous runs (drop_first True continues the previous run)
        run_start = np.flatnonzero(~drop_first)
        run_end = np.append(run_start[1:], len(drop_first))
        for s, e in zip(run_start, run_end):
            xs = np.append(ax[s:e], bx[e - 1])
            ys = np.append(ay[s:e], by[e - 1])
            zs = np.append(az[s:e], bz[e - 1])
            cols = np.vstack([ca[s:e], cb[e - 1][None, :]])
            d = "M " + " L ".join(f"{x:.3f} {y:.3f}" for x, y in zip(xs, ys))
            stroke, opacity = _svg_color(cols.mean(axis=0))
            el = (f'<path d="{d}" fill="none" stroke="{stroke}" '
                  f'stroke-opacity="{opacity:.4f}" stroke-width="{poly.width_px:g}" '
                  f'stroke-linejoin="round" stroke-linecap="round"/>')
            elements.append((float(zs.mean()), _digest(xs, ys, cols), el))

    elements.sort(key=lambda item: (-item[0], item[1]))
    bg, bg_opacity = _svg_color(batch.background.as_array())
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="{bg}" '
        f'fill-opacity="{bg_opacity:.4f}"/>',
    ]
    lines.extend(el for _, _, el in elements)
    lines.append("</svg>")
    lines.append("")
    return "\n".join(lines)
