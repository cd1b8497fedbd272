"""Flight-trajectory visualization core: ingest, timeline, cameras, rendering."""

from .errors import (BundleError, ConfigError, FlymationError, ParseError,
                     ValidationError)
from .model import (Aabb, ColorRGBA, GlyphKind, QuatWXYZ, Scene, SceneConfig,
                    StateSample, StaticObjectSpec, TrailConfig, Trajectory, Vec3,
                    normalize_quaternion, rotate_vector, scene_bbox,
                    scene_time_range)
from .timeline import (PlaybackClock, PoseSample, advance, lerp_color, lerp_vec3,
                       locate, sample_trajectory, slerp, timelapse_instants)
from .simplify import chunk, point_segment_distance, rdp, uniform_decimate
from .camera import (CameraMatrices, FollowState, OrbitState, auto_frame,
                     follow_pose, look_at, make_camera, orbit_camera, orbit_eye,
                     orbit_update, perspective, project, project_points)
from .ingest import (IngestReport, load_scene, parse_scene_config,
                     parse_state_csv, parse_static_csv, write_state_csv,
                     write_static_csv)
from .compile import (GlyphInstance, Polyline, RenderBatch, SceneBundle,
                      compile_animation_frame, compile_snapshot_line,
                      compile_snapshot_timelapse, default_golden_times,
                      deserialize_bundle, export_goldens, pose_transform,
                      serialize_bundle)
from .raster import (Framebuffer, draw_line_3d, draw_triangle, encode_png,
                     export_svg, render)
from .demogen import (LorenzParams, gen_lorenz_scene, gen_racetrack_scene,
                      lorenz_derivative, rk4_step)

__version__ = "0.1.0"
