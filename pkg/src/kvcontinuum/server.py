"""HTTP JSON API over the same handlers as the CLI.

Stateless, one computation per request, stdlib http.server only. Serves
the web explorer's static bundle when a directory is supplied.
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from .continuum import DomainError
from .serialization import canonical_json, request_handlers
from .workloads import SpecError

_CONTENT_TYPES = {
    ".html": "text/html",
    ".js": "application/javascript",
    ".css": "text/css",
    ".svg": "image/svg+xml",
    ".json": "application/json",
}

API_POST_ROUTES = {
    "/api/cost": "cost",
    "/api/navigate": "navigate",
    "/api/auto": "auto",
    "/api/grid": "grid",
    "/api/sgd": "sgd",
    "/api/transition": "transition",
}


def make_server(port: int, static_dir: str | None = None) -> ThreadingHTTPServer:
    handlers = request_handlers()
    static_root = Path(static_dir).resolve() if static_dir else None

    class Handler(BaseHTTPRequestHandler):
        def log_message(self, fmt, *args):  # quiet by default
            pass

        def _send(self, status: int, payload: dict) -> None:
            body = canonical_json(payload).encode()
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.send_header("Access-Control-Allow-Origin", "*")
            self.end_headers()
            self.wfile.write(body)

        def _error(self, status: int, code: str, message: str) -> None:
            self._send(status, {"code": code, "message": message})

        def do_GET(self):
            if self.path == "/api/presets":
                self._send(200, handlers["presets"]({}))
                return
            if static_root is not None:
                rel = self.path.lstrip("/") or "index.html"
                target = (static_root / rel).resolve()
                if static_root in target.parents or target == static_root:
                    if target.is_file():
                        data = target.read_bytes()
                        self.send_response(200)
                        ctype = _CONTENT_TYPES.get(target.suffix, "application/octet-stream")
                        self.send_header("Content-Type", ctype)
                        self.send_header("Content-Length", str(len(data)))
                        self.end_headers()
                        self.wfile.write(data)
                        return
            self._error(404, "not_found", f"no route for GET {self.path}")

        def do_POST(self):
            name = API_POST_ROUTES.get(self.path)
            if name is None:
                self._error(404, "not_found", f"no route for POST {self.path}")
                return
            length = int(self.headers.get("Content-Length", 0))
            raw = self.rfile.read(length) if length else b"{}"
            try:
                body = json.loads(raw)
            except json.JSONDecodeError as exc:
                self._error(400, "bad_json", f"request body: {exc.msg}")
                return
            try:
                payload = handlers[name](body)
            except KeyError as exc:
                self._error(400, "missing_field", f"missing required field {exc.args[0]!r}")
                return
            except (DomainError, SpecError, ValueError) as exc:
                self._error(400, "invalid_request", str(exc))
                return
            except Exception as exc:  # pragma: no cover - defensive
                self._error(500, "internal_error", str(exc))
                return
            self._send(200, payload)

    return ThreadingHTTPServer(("127.0.0.1", port), Handler)


def serve(port: int, static_dir: str | None = None) -> None:
    server = make_server(port, static_dir)
    print(f"listening on http://127.0.0.1:{server.server_address[1]}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()


class ServerThread:
    """Run the API server on a background thread (used by tests)."""

    def __init__(self, port: int = 0, static_dir: str | None = None):
        self.server = make_server(port, static_dir)
        self.port = self.server.server_address[1]
        self._thread = threading.Thread(target=self.server.serve_forever, daemon=True)

    def __enter__(self):
        self._thread.start()
        return self

    def __exit__(self, *exc):
        self.server.shutdown()
        self.server.server_close()
        self._thread.join(timeout=5)
