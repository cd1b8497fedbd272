"""CSV and JSON ingestion: the three-folder data layout -> a validated Scene.

State CSV format (moving objects), 18 columns, mandatory header::

    t,px,py,pz,qw,qx,qy,qz,vx,vy,vz,cr,cg,cb,ca,sx,sy,sz

Static-object CSV format, 15 columns, mandatory header::

    px,py,pz,qw,qx,qy,qz,cr,cg,cb,ca,sx,sy,sz,obj

Both are UTF-8 with '.' decimal points; LF or CRLF line endings are accepted
and lines starting with '#' are skipped as comments. Times must be strictly
increasing within a file. Quaternions are normalized on load; a warning is
recorded when the norm is off by more than 1e-3 (a hard error below 1e-12).

Bulk numeric parsing goes through pyarrow's CSV reader (correctly rounded,
fast); when it rejects a file we re-parse row by row in Python to report the
exact file, line and cell.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np
import pyarrow as pa
import pyarrow.csv as pacsv

from .errors import ConfigError, ParseError, ValidationError
from .model import (QUAT_MIN_NORM, CAMERA_MODES, SNAPSHOT_STYLES, ColorRGBA, GlyphKind,
                    QuatWXYZ, Scene, SceneConfig, StateSample, StaticObjectSpec,
                    TrailConfig, Trajectory, Vec3)

STATE_HEADER = "t,px,py,pz,qw,qx,qy,qz,vx,vy,vz,cr,cg,cb,ca,sx,sy,sz"
STATIC_HEADER = "px,py,pz,qw,qx,qy,qz,cr,cg,cb,ca,sx,sy,sz,obj"
STATE_COLUMNS = STATE_HEADER.split(",")
STATIC_COLUMNS = STATIC_HEADER.split(",")

QUAT_WARN_TOL = 1e-3

Warning_ = tuple[str, int, str]  # (file, line, message)


@dataclass
class IngestReport:
    files_read: int = 0
    rows_read: int = 0
    warnings: list[Warning_] = field(default_factory=list)


def _decode(text, source: str) -> str:
    if isinstance(text, bytes):
        try:
            return text.decode("utf-8")
        except UnicodeDecodeError as e:
            line = text[:e.start].count(b"\n") + 1
            raise ParseError(source, line, "invalid UTF-8") from None
    return text


def _split_lines(text: str) -> list[tuple[int, str]]:
    """Non-empty, non-comment lines with their 1-based line numbers."""
    out = []
    for lineno, raw in enumerate(text.split("\n"), start=1):
        s = raw.strip()
        if not s or s.startswith("#"):
            continue
        out.append((lineno, s))
    return out


def _check_header(lines: list[tuple[int, str]], expected: str, source: str
                  ) -> list[tuple[int, str]]:
    if not lines:
        raise ParseError(source, 1, f"missing header (expected {expected!r})")
    lineno, got = lines[0]
    if got.replace(" ", "") != expected:
        raise ParseError(source, lineno, f"incorrect header {got!r} (expected {expected!r})")
    return lines[1:]


def _parse_rows_slow(rows: list[tuple[int, str]], source: str, n_cols: int) -> np.ndarray:
    """Row-by-row fallback parser; pinpoints the offending line and cell."""
    out = np.empty((len(rows), n_cols), dtype=np.float64)
    for r, (lineno, line) in enumerate(rows):
        cells = line.split(",")
        if len(cells) != n_cols:
            raise ParseError(source, lineno,
                             f"expected {n_cols} columns, got {len(cells)}")
        for c, cell in enumerate(cells):
            try:
                out[r, c] = float(cell)
            except ValueError:
                raise ParseError(source, lineno,
                                 f"could not parse {cell.strip()!r} in column {c + 1}") from None
    return out


def _parse_numeric_rows(rows: list[tuple[int, str]], source: str, n_cols: int) -> np.ndarray:
    """Parse comma-separated float rows into an (n_rows, n_cols) float64 array."""
    if not rows:
        return np.empty((0, n_cols), dtype=np.float64)
    body = "\n".join(line for _, line in rows).encode("utf-8")
    names = [f"c{i}" for i in range(n_cols)]
    try:
        table = pacsv.read_csv(
            io.BytesIO(body),
            read_options=pacsv.ReadOptions(column_names=names),
            parse_options=pacsv.ParseOptions(delimiter=","),
            convert_options=pacsv.ConvertOptions(
                column_types={n: pa.float64() for n in names}),
        )
    except pa.ArrowInvalid:
        return _parse_rows_slow(rows, source, n_cols)
    cols = [table[n].to_numpy(zero_copy_only=False) for n in names]
    return np.column_stack(cols)


def _first_bad_row(mask: np.ndarray) -> int:
    return int(np.flatnonzero(mask)[0])


def _validate_pose_block(data: np.ndarray, rows: list[tuple[int, str]], source: str,
                         col: dict[str, int], warnings: list[Warning_]) -> None:
    """Shared checks for quaternion/color/scale columns; normalizes quats in place."""
    bad = ~np.isfinite(data).all(axis=1)
    if bad.any():
        i = _first_bad_row(bad)
        raise ParseError(source, rows[i][0], "non-finite value (nan/inf or empty cell)")
    c = data[:, col["cr"]:col["cr"] + 4]
    bad = ((c < 0.0) | (c > 1.0)).any(axis=1)
    if bad.any():
        i = _first_bad_row(bad)
        raise ParseError(source, rows[i][0], "color component outside [0, 1]")
    s = data[:, col["sx"]:col["sx"] + 3]
    bad = (s <= 0.0).any(axis=1)
    if bad.any():
        i = _first_bad_row(bad)
        raise ParseError(source, rows[i][0], "scale components must be > 0")
    q = data[:, col["qw"]:col["qw"] + 4]
    norms = np.linalg.norm(q, axis=1)
    bad = norms <= QUAT_MIN_NORM
    if bad.any():
        i = _first_bad_row(bad)
        raise ParseError(source, rows[i][0],
                         f"quaternion norm {norms[_first_bad_row(bad)]!r} is effectively zero")
    off = np.abs(norms - 1.0) > QUAT_WARN_TOL
    for i in np.flatnonzero(off):
        warnings.append((source, rows[int(i)][0],
                         f"quaternion norm {norms[int(i)]!r} off unit; normalized"))
    data[:, col["qw"]:col["qw"] + 4] = q / norms[:, None]


@dataclass
class StateTable:
    """Columnar result of parsing one state CSV."""

    times: np.ndarray
    positions: np.ndarray
    quaternions: np.ndarray
    velocities: np.ndarray
    colors: np.ndarray
    scales: np.ndarray
    warnings: list[Warning_]

    @property
    def n_rows(self) -> int:
        return self.times.shape[0]


def parse_state_table(text, source_name: str) -> StateTable:
    """Parse a state CSV into columnar arrays (the bulk-loading form)."""
    text = _decode(text, source_name)
    lines = _split_lines(text)
    rows = _check_header(lines, STATE_HEADER, source_name)
    data = _parse_numeric_rows(rows, source_name, len(STATE_COLUMNS))
    col = {name: i for i, name in enumerate(STATE_COLUMNS)}
    warnings: list[Warning_] = []
    if data.shape[0]:
        _validate_pose_block(data, rows, source_name, col, warnings)
        t = data[:, 0]
        dt = np.diff(t)
        if (dt <= 0.0).any():
            i = _first_bad_row(dt <= 0.0)
            raise ParseError(source_name, rows[i + 1][0],
                             f"non-increasing time: {t[i + 1]!r} follows {t[i]!r}")
    return StateTable(
        times=data[:, 0].copy(),
        positions=data[:, 1:4].copy(),
        quaternions=data[:, 4:8].copy(),
        velocities=data[:, 8:11].copy(),
        colors=data[:, 11:15].copy(),
        scales=data[:, 15:18].copy(),
        warnings=warnings,
    )


def parse_state_csv(text, source_name: str = "<string>") -> list[StateSample]:
    """Parse a state CSV into StateSample records (convenience form)."""
    table = parse_state_table(text, source_name)
    out = []
    for i in range(table.n_rows):
        out.append(StateSample(
            t=float(table.times[i]),
            p=Vec3.from_array(table.positions[i]),
            q=QuatWXYZ.from_array(table.quaternions[i]),
            v=Vec3.from_array(table.velocities[i]),
            c=ColorRGBA.from_array(table.colors[i]),
            s=Vec3.from_array(table.scales[i]),
        ))
    return out


def parse_static_csv(text, source_name: str = "<string>"
                     ) -> tuple[list[StaticObjectSpec], list[Warning_]]:
    """Parse a static-object CSV. Returns (objects, warnings)."""
    text = _decode(text, source_name)
    lines = _split_lines(text)
    rows = _check_header(lines, STATIC_HEADER, source_name)
    n_cols = len(STATIC_COLUMNS)
    out: list[StaticObjectSpec] = []
    warnings: list[Warning_] = []
    for lineno, line in rows:
        cells = line.split(",")
        if len(cells) != n_cols:
            raise ParseError(source_name, lineno,
                             f"expected {n_cols} columns, got {len(cells)}")
        vals = []
        for c, cell in enumerate(cells[:-1]):
            try:
                v = float(cell)
            except ValueError:
                raise ParseError(source_name, lineno,
                                 f"could not parse {cell.strip()!r} in column {c + 1}") from None
            if not math.isfinite(v):
                raise ParseError(source_name, lineno, "non-finite value (nan/inf)")
            vals.append(v)
        try:
            glyph = GlyphKind.from_name(cells[-1])
        except ValidationError as e:
            raise ParseError(source_name, lineno, str(e)) from None
        qn = math.sqrt(sum(v * v for v in vals[3:7]))
        if qn <= QUAT_MIN_NORM:
            raise ParseError(source_name, lineno,
                             f"quaternion norm {qn!r} is effectively zero")
        if abs(qn - 1.0) > QUAT_WARN_TOL:
            warnings.append((source_name, lineno,
                             f"quaternion norm {qn!r} off unit; normalized"))
        try:
            out.append(StaticObjectSpec(
                p=Vec3(vals[0], vals[1], vals[2]),
                q=QuatWXYZ(vals[3] / qn, vals[4] / qn, vals[5] / qn, vals[6] / qn),
                c=ColorRGBA(vals[7], vals[8], vals[9], vals[10]),
                s=Vec3(vals[11], vals[12], vals[13]),
                obj=glyph,
            ))
        except ValidationError as e:
            raise ParseError(source_name, lineno, str(e)) from None
    return out, warnings


# ---------------------------------------------------------------------------
# scene config

_CONFIG_KEYS = {"vehicle_dir", "dynamic_dir", "static_dir", "colors",
                "snapshot_style", "camera", "follow_target", "trail",
                "timelapse_interval_s", "lod_epsilon_m", "line_width_px",
                "background"}
_TRAIL_KEYS = {"duration_s", "color"}


def _color_from_json(value, what: str) -> ColorRGBA:
    if (not isinstance(value, list) or len(value) != 4
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)):
        raise ConfigError(f"{what} must be an [r, g, b, a] array of numbers")
    try:
        return ColorRGBA(*[float(v) for v in value])
    except ValidationError as e:
        raise ConfigError(f"{what}: {e}") from None


def _number(obj, key: str, minimum: Optional[float] = None) -> float:
    v = obj[key]
    if not isinstance(v, (int, float)) or isinstance(v, bool):
        raise ConfigError(f"{key} must be a number")
    v = float(v)
    if not math.isfinite(v):
        raise ConfigError(f"{key} must be finite")
    if minimum is not None and v < minimum:
        raise ConfigError(f"{key} must be >= {minimum}")
    return v


def config_from_dict(obj: dict) -> SceneConfig:
    if not isinstance(obj, dict):
        raise ConfigError("scene config must be a JSON object")
    unknown = set(obj) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for key in ("vehicle_dir", "dynamic_dir", "static_dir"):
        if key not in obj:
            raise ConfigError(f"missing required config key {key!r}")
        if not isinstance(obj[key], str):
            raise ConfigError(f"{key} must be a string path")
    kwargs: dict = {k: obj[k] for k in ("vehicle_dir", "dynamic_dir", "static_dir")}
    if "colors" in obj:
        if not isinstance(obj["colors"], dict):
            raise ConfigError("colors must be an object of id -> [r, g, b, a]")
        kwargs["colors"] = {
            str(k): _color_from_json(v, f"colors[{k!r}]") for k, v in obj["colors"].items()
        }
    if "snapshot_style" in obj:
        if obj["snapshot_style"] not in SNAPSHOT_STYLES:
            raise ConfigError(f"snapshot_style must be one of {SNAPSHOT_STYLES}")
        kwargs["snapshot_style"] = obj["snapshot_style"]
    if "camera" in obj:
        if obj["camera"] not in CAMERA_MODES:
            raise ConfigError(f"camera must be one of {CAMERA_MODES}")
        kwargs["camera"] = obj["camera"]
    if "follow_target" in obj:
        if obj["follow_target"] is not None and not isinstance(obj["follow_target"], str):
            raise ConfigError("follow_target must be a trajectory id string")
        kwargs["follow_target"] = obj["follow_target"]
    if "trail" in obj:
        trail = obj["trail"]
        if not isinstance(trail, dict):
            raise ConfigError("trail must be an object")
        unknown = set(trail) - _TRAIL_KEYS
        if unknown:
            raise ConfigError(f"unknown trail keys: {sorted(unknown)}")
        duration = _number(trail, "duration_s", minimum=0.0) if "duration_s" in trail else 1.0
        color = (_color_from_json(trail["color"], "trail color") if "color" in trail
                 else ColorRGBA(1.0, 0.0, 0.0, 1.0))
        kwargs["trail"] = TrailConfig(duration_s=duration, color=color)
    if "timelapse_interval_s" in obj:
        kwargs["timelapse_interval_s"] = _number(obj, "timelapse_interval_s", minimum=0.0)
    if "lod_epsilon_m" in obj:
        kwargs["lod_epsilon_m"] = _number(obj, "lod_epsilon_m", minimum=0.0)
    if "line_width_px" in obj:
        v = _number(obj, "line_width_px")
        if v <= 0.0:
            raise ConfigError("line_width_px must be > 0")
        kwargs["line_width_px"] = v
    if "background" in obj:
        kwargs["background"] = _color_from_json(obj["background"], "background")
    try:
        return SceneConfig(**kwargs)
    except ValidationError as e:
        raise ConfigError(str(e)) from None


def parse_scene_config(json_text) -> SceneConfig:
    """Parse the scene-config JSON document. Unknown keys are rejected."""
    if isinstance(json_text, bytes):
        json_text = _decode(json_text, "<config>")
    try:
        obj = json.loads(json_text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON: {e}") from None
    return config_from_dict(obj)


def config_to_dict(config: SceneConfig) -> dict:
    """Inverse of config_from_dict (used for bundle echo)."""
    return {
        "vehicle_dir": config.vehicle_dir,
        "dynamic_dir": config.dynamic_dir,
        "static_dir": config.static_dir,
        "colors": {k: list(v) for k, v in sorted(config.colors.items())},
        "snapshot_style": config.snapshot_style,
        "camera": config.camera,
        "follow_target": config.follow_target,
        "trail": {"duration_s": config.trail.duration_s, "color": list(config.trail.color)},
        "timelapse_interval_s": config.timelapse_interval_s,
        "lod_epsilon_m": config.lod_epsilon_m,
        "line_width_px": config.line_width_px,
        "background": list(config.background),
    }


# ---------------------------------------------------------------------------
# scene loading

_DEFAULT_GLYPH = {"vehicle": GlyphKind.QUADROTOR, "dynamic": GlyphKind.CUBE}


def _csv_files(folder: Path) -> list[Path]:
    if not folder.is_dir():
        raise ConfigError(f"data folder does not exist: {folder}")
    return sorted(p for p in folder.iterdir() if p.suffix == ".csv" and p.is_file())


def _load_trajectory(path: Path, kind: str, report: IngestReport) -> Trajectory:
    table = parse_state_table(path.read_bytes(), str(path))
    report.files_read += 1
    report.rows_read += table.n_rows
    report.warnings.extend(table.warnings)
    if table.n_rows == 0:
        raise ParseError(str(path), 1, "file contains no data rows")
    return Trajectory(
        id=path.stem, kind=kind, glyph=_DEFAULT_GLYPH[kind], color_override=None,
        times=table.times, positions=table.positions, quaternions=table.quaternions,
        velocities=table.velocities, colors=table.colors, scales=table.scales,
    )


def load_scene(config_path) -> tuple[Scene, IngestReport]:
    """Load a scene from a config file: three folders of CSVs, merged and validated.

    Files are loaded in lexicographic filename order, so the same folder
    contents always produce the same Scene. Folder paths in the config are
    resolved relative to the config file.
    """
    config_path = Path(config_path)
    config = parse_scene_config(config_path.read_bytes())
    base = config_path.parent
    report = IngestReport()

    trajectories: list[Trajectory] = []
    ids: dict[str, Path] = {}
    for kind, folder in (("vehicle", config.vehicle_dir), ("dynamic", config.dynamic_dir)):
        for path in _csv_files(base / folder):
            if path.stem in ids:
                raise ValidationError(
                    f"duplicate trajectory id {path.stem!r}: {ids[path.stem]} and {path}")
            ids[path.stem] = path
            trajectories.append(_load_trajectory(path, kind, report))

    statics: list[StaticObjectSpec] = []
    for path in _csv_files(base / config.static_dir):
        objs, warns = parse_static_csv(path.read_bytes(), str(path))
        report.files_read += 1
        report.rows_read += len(objs)
        report.warnings.extend(warns)
        statics.extend(objs)

    if config.colors:
        trajectories = [
            t if t.id not in config.colors else Trajectory(
                id=t.id, kind=t.kind, glyph=t.glyph,
                color_override=config.colors[t.id],
                times=t.times, positions=t.positions, quaternions=t.quaternions,
                velocities=t.velocities, colors=t.colors, scales=t.scales)
            for t in trajectories
        ]
    scene = Scene.assemble(trajectories, statics, config)
    return scene, report


# ---------------------------------------------------------------------------
# writing

def _fmt(v: float) -> str:
    # repr() gives the shortest decimal string that round-trips the float
    return repr(float(v))


def write_state_csv(samples) -> str:
    """Serialize samples to the state CSV format.

    Values use the shortest decimal representation that parses back to the
    identical float, so parse(write(x)) == x bit for bit. Accepts a list of
    StateSample or a Trajectory.
    """
    if isinstance(samples, Trajectory):
        cols = np.hstack([samples.times[:, None], samples.positions,
                          samples.quaternions, samples.velocities,
                          samples.colors, samples.scales])
        rows = cols.tolist()
    else:
        rows = [[s.t, *s.p, *s.q, *s.v, *s.c, *s.s] for s in samples]
    lines = [STATE_HEADER]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    lines.append("")
    return "\n".join(lines)


def write_static_csv(statics: Iterable[StaticObjectSpec]) -> str:
    """Serialize static objects to the static CSV format."""
    lines = [STATIC_HEADER]
    for st in statics:
        vals = [*st.p, *st.q, *st.c, *st.s]
        lines.append(",".join(_fmt(v) for v in vals) + "," + st.obj.value)
    lines.append("")
    return "\n".join(lines)
