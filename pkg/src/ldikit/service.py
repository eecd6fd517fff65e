"""HTTP render service for interactive viewers.

Serves one immutable LDI. Rendering is pure, so concurrent requests need no
locking and identical requests produce byte-identical PNG responses (the
viewer relies on that to compare void regions pixel-exactly).

Endpoints:
    GET  /meta    camera intrinsics and image size as JSON
    GET  /layers  raw LDI planes as base64 PNG strings
    POST /render  body {"dx","dy","dz","use_ldi"}; returns image/png with an
                  X-Void-Count header
"""

from __future__ import annotations

import base64
import io
import json
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np
from PIL import Image

from .errors import LdikitError
from .ldi import LayeredDepthImage
from .render import RenderedView, ViewPerturbation, render_ldi, render_single_layer

DEFAULT_PORT = 8754


def _png_bytes(array: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(array).save(buf, format="PNG")
    return buf.getvalue()


def _png_b64(array: np.ndarray) -> str:
    return base64.b64encode(_png_bytes(array)).decode("ascii")


def render_for_request(ldi: LayeredDepthImage, body: dict) -> RenderedView:
    """Validate a /render body and run the requested render path."""
    if not isinstance(body, dict):
        raise ValueError("body must be a JSON object")
    offsets = {}
    for key in ("dx", "dy", "dz"):
        value = body.get(key, 0.0)
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ValueError(f"{key} must be a number")
        offsets[key] = float(value)
    use_ldi = body.get("use_ldi", True)
    if not isinstance(use_ldi, bool):
        raise ValueError("use_ldi must be a boolean")
    pert = ViewPerturbation(**offsets)
    return render_ldi(ldi, pert) if use_ldi else render_single_layer(ldi, pert)


class LdiServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, address, ldi: LayeredDepthImage, quiet: bool = True):
        super().__init__(address, _Handler)
        self.ldi = ldi
        self.quiet = quiet

    @property
    def port(self) -> int:
        return self.server_address[1]


class _Handler(BaseHTTPRequestHandler):
    server: LdiServer

    def log_message(self, fmt, *args):
        if not self.server.quiet:
            super().log_message(fmt, *args)

    def _cors(self):
        self.send_header("Access-Control-Allow-Origin", "*")

    def _send(self, status: int, content_type: str, payload: bytes, extra: dict | None = None):
        self.send_response(status)
        self._cors()
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(payload)))
        for key, value in (extra or {}).items():
            self.send_header(key, value)
        self.end_headers()
        self.wfile.write(payload)

    def _send_json(self, status: int, obj: dict, extra: dict | None = None):
        self._send(status, "application/json", json.dumps(obj).encode("utf-8"), extra)

    def do_OPTIONS(self):
        self.send_response(204)
        self._cors()
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.end_headers()

    def do_GET(self):
        ldi = self.server.ldi
        if self.path == "/meta":
            cam = ldi.camera
            self._send_json(
                200,
                {
                    "width": cam.width,
                    "height": cam.height,
                    "fx": cam.fx,
                    "fy": cam.fy,
                    "cx": cam.cx,
                    "cy": cam.cy,
                    "fg_mask_pixels": int(np.count_nonzero(ldi.fg_mask)),
                    "bg_valid_pixels": int(np.count_nonzero(ldi.background.valid)),
                },
            )
        elif self.path == "/layers":
            self._send_json(
                200,
                {
                    "width": ldi.camera.width,
                    "height": ldi.camera.height,
                    "fg_color": _png_b64(ldi.foreground.color),
                    "bg_color": _png_b64(ldi.background.color),
                    "fg_mask": _png_b64(np.where(ldi.fg_mask, 255, 0).astype(np.uint8)),
                    "bg_valid": _png_b64(np.where(ldi.background.valid, 255, 0).astype(np.uint8)),
                },
            )
        else:
            self._send_json(404, {"error": f"unknown path {self.path}"})

    def do_POST(self):
        if self.path != "/render":
            self._send_json(404, {"error": f"unknown path {self.path}"})
            return
        try:
            length = int(self.headers.get("Content-Length", "0"))
            body = json.loads(self.rfile.read(length) or b"{}")
            view = render_for_request(self.server.ldi, body)
        except (ValueError, json.JSONDecodeError) as exc:
            self._send_json(400, {"error": str(exc)})
            return
        except LdikitError as exc:
            self._send_json(500, {"error": str(exc)})
            return
        self._send(200, "image/png", _png_bytes(view.color), {"X-Void-Count": str(view.void_count)})


def make_server(ldi: LayeredDepthImage, port: int = 0, host: str = "127.0.0.1", quiet: bool = True) -> LdiServer:
    """Create (but do not start) a server; port 0 picks a free one."""
    return LdiServer((host, port), ldi, quiet=quiet)


def run_server(ldi: LayeredDepthImage, port: int = DEFAULT_PORT, host: str = "127.0.0.1") -> None:
    """Blocking entry point used by the CLI."""
    server = make_server(ldi, port=port, host=host, quiet=False)
    print(f"serving LDI on http://{host}:{server.port} (meta, layers, render)")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
