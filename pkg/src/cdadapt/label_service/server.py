"""HTTP front end for the annotation queue.

Endpoints (JSON unless noted; every JSON body carries schema_version):
  GET  /tasks                      queue summary
  POST /tasks/next {annotator}     lease the next task
  GET  /image/{sample_id}/{which}  PNG, which in {t1, t2, hint}
  POST /tasks/{task_id}/mask       binary PNG body -> receipt
  POST /export {out_dir?}          write the micro-label dataset
  GET  /progress                   {pending, in_progress, done}

CORS headers are always sent so the browser annotator can run from another
origin. An optional shared token gates all routes.
"""

from __future__ import annotations

import json
import re
import signal
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from .store import SCHEMA_VERSION, LabelStore


class LabelServiceHandler(BaseHTTPRequestHandler):
    store: LabelStore
    token: str | None = None
    default_export_dir: Path | None = None
    protocol_version = "HTTP/1.1"

    def log_message(self, fmt, *args):  # quiet by default
        pass

    # -- helpers -------------------------------------------------------------

    def _cors(self) -> None:
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type, X-Annotator, X-Auth-Token")

    def _json(self, status: int, payload: dict) -> None:
        payload = {"schema_version": SCHEMA_VERSION, **payload}
        body = json.dumps(payload).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self._cors()
        self.end_headers()
        self.wfile.write(body)

    def _png(self, data: bytes) -> None:
        self.send_response(200)
        self.send_header("Content-Type", "image/png")
        self.send_header("Content-Length", str(len(data)))
        self._cors()
        self.end_headers()
        self.wfile.write(data)

    def _body(self) -> bytes:
        length = int(self.headers.get("Content-Length") or 0)
        return self.rfile.read(length) if length else b""

    def _authorized(self) -> bool:
        if self.token is None:
            return True
        supplied = self.headers.get("X-Auth-Token")
        auth = self.headers.get("Authorization", "")
        if auth.startswith("Bearer "):
            supplied = supplied or auth[len("Bearer ") :]
        return supplied == self.token

    # -- routes ----------------------------------------------------------------

    def do_OPTIONS(self):
        self.send_response(204)
        self._cors()
        self.send_header("Content-Length", "0")
        self.end_headers()

    def do_GET(self):
        if not self._authorized():
            return self._json(401, {"error": "missing or invalid token"})
        try:
            if self.path == "/tasks":
                return self._json(200, {"tasks": self.store.tasks_summary()})
            if self.path == "/progress":
                return self._json(200, {"progress": self.store.progress()})
            m = re.fullmatch(r"/image/([\w.-]+)/(t1|t2|hint)", self.path)
            if m:
                path = self.store.image_path(m.group(1), m.group(2))
                if not path.exists():
                    return self._json(404, {"error": f"no {m.group(2)} image for {m.group(1)}"})
                return self._png(path.read_bytes())
            return self._json(404, {"error": f"unknown route {self.path}"})
        except FileNotFoundError as exc:
            return self._json(404, {"error": str(exc)})
        except Exception as exc:  # noqa: BLE001 - surface as a 500 body
            return self._json(500, {"error": str(exc)})

    def do_POST(self):
        if not self._authorized():
            return self._json(401, {"error": "missing or invalid token"})
        try:
            if self.path == "/tasks/next":
                body = json.loads(self._body() or b"{}")
                annotator = body.get("annotator") or self.headers.get("X-Annotator") or "anonymous"
                task = self.store.next_task(annotator)
                if task is None:
                    return self._json(
                        200, {"drained": True, "progress": self.store.progress()}
                    )
                return self._json(
                    200,
                    {
                        "drained": False,
                        "task": task.to_dict(),
                        "images": {
                            "t1": f"/image/{task.sample_id}/t1",
                            "t2": f"/image/{task.sample_id}/t2",
                            "hint": f"/image/{task.sample_id}/hint",
                        },
                    },
                )
            m = re.fullmatch(r"/tasks/([\w.-]+)/mask", self.path)
            if m:
                annotator = self.headers.get("X-Annotator") or "anonymous"
                receipt = self.store.submit_mask(m.group(1), self._body(), annotator)
                return self._json(200, {"receipt": receipt})
            if self.path == "/export":
                body = json.loads(self._body() or b"{}")
                out_dir = body.get("out_dir") or self.default_export_dir
                if out_dir is None:
                    return self._json(400, {"error": "no export directory configured"})
                manifest = self.store.export_labels(out_dir)
                return self._json(200, {"manifest": manifest})
            return self._json(404, {"error": f"unknown route {self.path}"})
        except KeyError as exc:
            return self._json(404, {"error": str(exc)})
        except PermissionError as exc:
            return self._json(409, {"error": str(exc)})
        except ValueError as exc:
            return self._json(400, {"error": str(exc)})
        except Exception as exc:  # noqa: BLE001
            return self._json(500, {"error": str(exc)})


def make_server(
    store: LabelStore,
    host: str = "127.0.0.1",
    port: int = 0,
    token: str | None = None,
    default_export_dir: str | Path | None = None,
) -> ThreadingHTTPServer:
    handler = type(
        "BoundHandler",
        (LabelServiceHandler,),
        {
            "store": store,
            "token": token,
            "default_export_dir": Path(default_export_dir) if default_export_dir else None,
        },
    )
    return ThreadingHTTPServer((host, port), handler)


def serve_forever(server: ThreadingHTTPServer) -> None:
    """Run until SIGINT/SIGTERM, then drain in-flight requests and stop."""
    stop = threading.Event()

    def _handle(signum, frame):
        stop.set()
        threading.Thread(target=server.shutdown, daemon=True).start()

    signal.signal(signal.SIGINT, _handle)
    signal.signal(signal.SIGTERM, _handle)
    server.serve_forever()
    server.server_close()
