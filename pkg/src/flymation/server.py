"""Read-only HTTP service bridging a loaded scene to the browser viewer.

Endpoints:
  GET /api/manifest   bundle manifest (application/json)
  GET /api/blob       binary sample buffer (application/octet-stream, Range OK)
  GET /api/goldens    reference pose samples (text/plain)
  GET /...            static viewer assets from an optional directory

The scene is loaded once; every response is computed from immutable bytes, so
concurrent requests are safe and identical.
"""

from __future__ import annotations

import logging
import mimetypes
import re
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Optional

from .compile import SceneBundle, default_golden_times, export_goldens, serialize_bundle
from .model import Scene

log = logging.getLogger("flymation.server")

_RANGE_RE = re.compile(r"bytes=(\d*)-(\d*)$")

_PLACEHOLDER_PAGE = b"""<!doctype html>
<html><head><meta charset="utf-8"><title>flymation</title></head>
<body style="font-family: sans-serif; background: #16161d; color: #ddd">
<h1>flymation scene server</h1>
<p>No viewer assets were configured (start with <code>--assets DIR</code>).
The data endpoints are live:</p>
<ul>
<li><a href="/api/manifest">/api/manifest</a></li>
<li><a href="/api/blob">/api/blob</a></li>
<li><a href="/api/goldens">/api/goldens</a></li>
</ul>
</body></html>
"""


class SceneServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, address, scene: Scene, assets_dir: Optional[Path] = None):
        self.manifest_bytes: bytes
        self.blob: bytes
        self.goldens_bytes: bytes
        bundle: SceneBundle = serialize_bundle(scene)
        self.manifest_bytes = bundle.manifest_json().encode("utf-8")
        self.blob = bundle.blob
        self.goldens_bytes = export_goldens(scene, default_golden_times(scene)).encode("utf-8")
        self.assets_dir = Path(assets_dir).resolve() if assets_dir else None
        super().__init__(address, SceneRequestHandler)


class SceneRequestHandler(BaseHTTPRequestHandler):
    server: SceneServer

    def log_message(self, fmt, *args):
        log.debug("%s %s", self.address_string(), fmt % args)

    def _send_bytes(self, payload: bytes, content_type: str, status: int = 200,
                    extra_headers: Optional[dict] = None):
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(payload)))
        for k, v in (extra_headers or {}).items():
            self.send_header(k, v)
        self.end_headers()
        self.wfile.write(payload)

    def _send_blob(self):
        blob = self.server.blob
        total = len(blob)
        range_header = self.headers.get("Range")
        if range_header:
            m = _RANGE_RE.match(range_header.strip())
            if not m or (not m.group(1) and not m.group(2)):
                self._send_bytes(b"bad Range", "text/plain", status=416,
                                 extra_headers={"Content-Range": f"bytes */{total}"})
                return
            if m.group(1):
                start = int(m.group(1))
                end = int(m.group(2)) if m.group(2) else total - 1
            else:
                # suffix form: last N bytes
                n = int(m.group(2))
                start = max(0, total - n)
                end = total - 1
            end = min(end, total - 1)
            if start > end or start >= total:
                self._send_bytes(b"range not satisfiable", "text/plain", status=416,
                                 extra_headers={"Content-Range": f"bytes */{total}"})
                return
            chunk = blob[start:end + 1]
            self._send_bytes(chunk, "application/octet-stream", status=206,
                             extra_headers={
                                 "Content-Range": f"bytes {start}-{end}/{total}",
                                 "Accept-Ranges": "bytes",
                             })
            return
        self._send_bytes(blob, "application/octet-stream",
                         extra_headers={"Accept-Ranges": "bytes"})

    def _send_asset(self, path: str):
        if self.server.assets_dir is None:
            if path in ("/", "/index.html"):
                self._send_bytes(_PLACEHOLDER_PAGE, "text/html; charset=utf-8")
            else:
                self._send_bytes(b"not found", "text/plain", status=404)
            return
        rel = path.lstrip("/") or "index.html"
        target = (self.server.assets_dir / rel).resolve()
        # no escaping the assets directory
        if not str(target).startswith(str(self.server.assets_dir)):
            self._send_bytes(b"forbidden", "text/plain", status=403)
            return
        if target.is_dir():
            target = target / "index.html"
        if not target.is_file():
            self._send_bytes(b"not found", "text/plain", status=404)
            return
        ctype = mimetypes.guess_type(str(target))[0] or "application/octet-stream"
        self._send_bytes(target.read_bytes(), ctype)

    def do_GET(self):
        path = self.path.split("?", 1)[0]
        if path == "/api/manifest":
            self._send_bytes(self.server.manifest_bytes, "application/json")
        elif path == "/api/blob":
            self._send_blob()
        elif path == "/api/goldens":
            self._send_bytes(self.server.goldens_bytes, "text/plain; charset=utf-8")
        else:
            self._send_asset(path)


def serve_scene(scene: Scene, host: str = "127.0.0.1", port: int = 8000,
                assets_dir=None) -> SceneServer:
    """Create (but do not run) a scene server; call serve_forever() on it."""
    return SceneServer((host, port), scene, assets_dir=assets_dir)
