"""Command-line interface: validate, snapshot, bake, bundle, goldens, serve, demo.

Exit codes: 0 success, 1 usage error, 2 data/validation error, 3 I/O error.
Diagnostics go to stderr; machine-readable output (JSON reports) to stdout.
The FLYMATION_LOG environment variable (error|warn|info|debug) sets verbosity.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import camera as cam_mod
from .compile import (compile_animation_frame, compile_snapshot_line,
                      compile_snapshot_timelapse, default_golden_times,
                      export_goldens, serialize_bundle)
from .errors import FlymationError, ValidationError
from .ingest import load_scene
from .model import Scene
from .raster import encode_png, export_svg, render
from .timeline import sample_trajectory, timelapse_instants

log = logging.getLogger("flymation")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_IO = 3

DEFAULT_FOV_DEG = 60.0


class UsageError(Exception):
    pass


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _setup_logging():
    level = {"error": logging.ERROR, "warn": logging.WARNING,
             "info": logging.INFO, "debug": logging.DEBUG}.get(
        os.environ.get("FLYMATION_LOG", "warn").lower(), logging.WARNING)
    logging.basicConfig(stream=sys.stderr, level=level,
                        format="%(levelname)s %(name)s: %(message)s")


def _build_parser() -> _ArgumentParser:
    p = _ArgumentParser(prog="flymation",
                        description="flight-trajectory visualization toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    def scene_arg(sp):
        sp.add_argument("scene", help="path to the scene config JSON")

    sp = sub.add_parser("validate", help="load a scene and report its stats")
    scene_arg(sp)

    sp = sub.add_parser("snapshot", help="render a whole-trajectory snapshot")
    scene_arg(sp)
    sp.add_argument("--mode", choices=["line", "timelapse"], default=None,
                    help="snapshot style (default: scene config)")
    sp.add_argument("--out", required=True, help="output file (.png or .svg)")
    sp.add_argument("--width", type=int, default=1280)
    sp.add_argument("--height", type=int, default=720)
    sp.add_argument("--interval", type=float, default=None,
                    help="time-lapse interval in seconds")
    sp.add_argument("--cam", default=None, metavar="AZ,EL,RADIUS",
                    help="orbit camera: azimuth/elevation in degrees, radius in m")
    sp.add_argument("--cam-auto", action="store_true",
                    help="frame the scene bounding box automatically")

    sp = sub.add_parser("bake", help="render animation frames to numbered PNGs")
    scene_arg(sp)
    sp.add_argument("--fps", type=float, default=30.0)
    sp.add_argument("--t0", type=float, default=None)
    sp.add_argument("--t1", type=float, default=None)
    sp.add_argument("--out", required=True, help="output directory")
    sp.add_argument("--width", type=int, default=1280)
    sp.add_argument("--height", type=int, default=720)
    sp.add_argument("--cam", default=None, metavar="AZ,EL,RADIUS")
    sp.add_argument("--cam-auto", action="store_true")
    sp.add_argument("--follow", default=None, metavar="ID",
                    help="third-person follow camera on this trajectory")

    sp = sub.add_parser("bundle", help="serialize the scene to manifest + blob")
    scene_arg(sp)
    sp.add_argument("--out", required=True, help="output directory")

    sp = sub.add_parser("goldens", help="write reference pose samples")
    scene_arg(sp)
    sp.add_argument("--out", required=True, help="output text file")
    sp.add_argument("--times", default=None,
                    help="comma-separated query times (default: auto grid)")

    sp = sub.add_parser("serve", help="serve the scene and viewer over HTTP")
    scene_arg(sp)
    sp.add_argument("--host", default="127.0.0.1")
    sp.add_argument("--port", type=int, default=8000)
    sp.add_argument("--assets", default=None,
                    help="directory of built viewer assets to serve at /")

    sp = sub.add_parser("demo", help="generate demo data")
    sp.add_argument("kind", choices=["lorenz", "racetrack"])
    sp.add_argument("--out", required=True, help="output directory")
    sp.add_argument("--n-traj", type=int, default=4, help="lorenz: trajectory count")
    sp.add_argument("--seed", type=int, default=7, help="lorenz: RNG seed")
    sp.add_argument("--duration", type=float, default=10.0, help="lorenz: seconds")
    sp.add_argument("--dt", type=float, default=0.01, help="lorenz: step seconds")
    sp.add_argument("--n-gates", type=int, default=7, help="racetrack: gate count")
    sp.add_argument("--laps", type=int, default=1, help="racetrack: lap count")
    return p


def _load(args) -> Scene:
    scene, report = load_scene(args.scene)
    for source, line, message in report.warnings:
        log.warning("%s:%s: %s", source, line, message)
    log.info("loaded %d trajectories, %d statics, %d rows",
             len(scene.trajectories), len(scene.statics), report.rows_read)
    return scene


def _orbit_from_flags(args, scene: Scene) -> cam_mod.OrbitState:
    if args.cam:
        parts = args.cam.split(",")
        if len(parts) != 3:
            raise UsageError("--cam expects AZ,EL,RADIUS")
        try:
            az, el, radius = (float(v) for v in parts)
        except ValueError:
            raise UsageError("--cam expects three numbers") from None
        return cam_mod.OrbitState(pivot=scene.bbox.center(), radius=radius,
                                  azimuth=math.radians(az), elevation=math.radians(el))
    return cam_mod.auto_frame(scene.bbox)


def _camera_for(scene: Scene, orbit: cam_mod.OrbitState,
                width: int, height: int) -> cam_mod.CameraMatrices:
    half_diag = max(scene.bbox.half_diagonal(), 0.5)
    far = orbit.radius + 3.0 * half_diag + 1.0
    near = max(far * 1e-4, 1e-3)
    return cam_mod.orbit_camera(orbit, math.radians(DEFAULT_FOV_DEG),
                                (width, height), near, far)


def _follow_camera(scene: Scene, state: cam_mod.FollowState, eye, target,
                   width: int, height: int) -> cam_mod.CameraMatrices:
    half_diag = max(scene.bbox.half_diagonal(), 0.5)
    far = 2.0 * half_diag + state.offset_back + 10.0
    near = max(far * 1e-4, 1e-3)
    return cam_mod.make_camera(eye, target, math.radians(DEFAULT_FOV_DEG),
                               (width, height), near, far)


def cmd_validate(args) -> int:
    try:
        scene, report = load_scene(args.scene)
    except FlymationError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA
    out = {
        "trajectories": len(scene.trajectories),
        "samples_total": int(sum(t.n_samples for t in scene.trajectories)),
        "statics": len(scene.statics),
        "t_range": [scene.t_range[0], scene.t_range[1]],
        "bbox": {"min": list(scene.bbox.min), "max": list(scene.bbox.max)},
        "warnings": [f"{s}:{l}: {m}" for s, l, m in report.warnings],
    }
    print(json.dumps(out, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_snapshot(args) -> int:
    out = Path(args.out)
    if out.suffix not in (".png", ".svg"):
        raise UsageError(f"unsupported snapshot extension {out.suffix!r} (use .png or .svg)")
    scene = _load(args)
    mode = args.mode or scene.config.snapshot_style
    if mode == "line":
        batch = compile_snapshot_line(scene)
    else:
        batch = compile_snapshot_timelapse(scene, args.interval)
        interval = (args.interval if args.interval is not None
                    else scene.config.timelapse_interval_s)
        instants = timelapse_instants(scene.t_range, interval)
        for traj in scene.trajectories:
            n_vis = sum(1 for t in instants if sample_trajectory(traj, t).visible)
            log.info("timelapse: trajectory %s -> %d glyph instants", traj.id, n_vis)
    camera = _camera_for(scene, _orbit_from_flags(args, scene), args.width, args.height)
    out.parent.mkdir(parents=True, exist_ok=True)
    if out.suffix == ".png":
        fb = render(batch, camera, args.width, args.height)
        out.write_bytes(encode_png(fb))
    else:
        out.write_text(export_svg(batch, camera, args.width, args.height),
                       encoding="utf-8")
    log.info("wrote %s", out)
    return EXIT_OK


def cmd_bake(args) -> int:
    scene = _load(args)
    t0 = scene.t_range[0] if args.t0 is None else args.t0
    t1 = scene.t_range[1] if args.t1 is None else args.t1
    if args.fps <= 0.0:
        raise UsageError("--fps must be > 0")
    if t0 > t1 or t0 < scene.t_range[0] - 1e-9 or t1 > scene.t_range[1] + 1e-9:
        raise UsageError(
            f"frame range [{t0}, {t1}] outside scene range "
            f"[{scene.t_range[0]}, {scene.t_range[1]}]")
    follow_traj = None
    if args.follow is not None:
        ids = [t.id for t in scene.trajectories]
        if args.follow not in ids:
            raise UsageError(f"unknown follow id {args.follow!r}; valid ids: {ids}")
        follow_traj = scene.trajectory_by_id(args.follow)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    orbit = _orbit_from_flags(args, scene)
    follow_state = cam_mod.FollowState()
    n_frames = int(math.floor((t1 - t0) * args.fps + 1e-9)) + 1
    for k in range(n_frames):
        t = t0 + k / args.fps
        t = min(t, scene.t_range[1])
        batch = compile_animation_frame(scene, t)
        if follow_traj is not None:
            pose = sample_trajectory(follow_traj, t)
            if pose.visible:
                follow_state, eye, target = cam_mod.follow_pose(
                    follow_state, pose, 1.0 / args.fps)
                camera = _follow_camera(scene, follow_state, eye, target,
                                        args.width, args.height)
            else:
                # target has no data here: fall back to the fixed orbit view
                camera = _camera_for(scene, orbit, args.width, args.height)
        else:
            camera = _camera_for(scene, orbit, args.width, args.height)
        fb = render(batch, camera, args.width, args.height)
        (out_dir / f"frame_{k:06d}.png").write_bytes(encode_png(fb))
    log.info("wrote %d frames to %s", n_frames, out_dir)
    print(json.dumps({"frames": n_frames, "dir": str(out_dir)}))
    return EXIT_OK


def cmd_bundle(args) -> int:
    scene = _load(args)
    bundle = serialize_bundle(scene)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest_path = out_dir / "manifest.json"
    blob_path = out_dir / "blob.bin"
    manifest_path.write_text(bundle.manifest_json(), encoding="utf-8")
    blob_path.write_bytes(bundle.blob)
    print(json.dumps({"manifest": str(manifest_path), "blob": str(blob_path),
                      "blob_bytes": len(bundle.blob)}))
    return EXIT_OK


def cmd_goldens(args) -> int:
    scene = _load(args)
    if args.times:
        try:
            times = [float(v) for v in args.times.split(",")]
        except ValueError:
            raise UsageError("--times expects comma-separated numbers") from None
    else:
        times = default_golden_times(scene)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(export_goldens(scene, times), encoding="utf-8")
    print(json.dumps({"goldens": str(out), "queries": len(times)}))
    return EXIT_OK


def cmd_serve(args) -> int:
    from .server import serve_scene
    scene = _load(args)
    assets = Path(args.assets) if args.assets else None
    if assets is not None and not assets.is_dir():
        raise UsageError(f"assets directory does not exist: {assets}")
    server = serve_scene(scene, host=args.host, port=args.port, assets_dir=assets)
    host, port = server.server_address[:2]
    print(f"serving scene on http://{host}:{port}/ (Ctrl-C to stop)", file=sys.stderr)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return EXIT_OK


def cmd_demo(args) -> int:
    from .demogen import LorenzParams, gen_lorenz_scene, gen_racetrack_scene
    if args.kind == "lorenz":
        params = LorenzParams(dt=args.dt, duration=args.duration)
        path = gen_lorenz_scene(args.out, n_traj=args.n_traj, params=params,
                                seed=args.seed)
    else:
        path = gen_racetrack_scene(args.out, n_gates=args.n_gates, laps=args.laps)
    print(str(path))
    return EXIT_OK


_COMMANDS = {
    "validate": cmd_validate,
    "snapshot": cmd_snapshot,
    "bake": cmd_bake,
    "bundle": cmd_bundle,
    "goldens": cmd_goldens,
    "serve": cmd_serve,
    "demo": cmd_demo,
}


def main(argv=None) -> int:
    _setup_logging()
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except FlymationError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA
    except OSError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return EXIT_IO


def entrypoint():
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
