"""Minimal JSON-over-HTTP plumbing shared by the oracle and client nodes.

Routes are plain functions from (query params, body) to a JSON-encodable
object. Handlers signal user-facing failures by raising ApiError; anything
else becomes a 500. The client side wraps urllib so callers see exactly two
failure modes: TransportError (could not reach the peer) and ApiError (the
peer answered with an error payload).
"""

from __future__ import annotations

import json
import threading
import urllib.error
import urllib.parse
import urllib.request
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Callable

Handler = Callable[[dict, dict | None], object]

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "application/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".json": "application/json",
    ".svg": "image/svg+xml",
    ".png": "image/png",
    ".ico": "image/x-icon",
    ".map": "application/json",
}


class ApiError(Exception):
    """An error the peer reported (or a handler raised) with an HTTP status."""

    def __init__(self, status: int, message: str) -> None:
        super().__init__(message)
        self.status = status


class TransportError(Exception):
    """The peer could not be reached at all."""


class JsonHttpServer:
    """Threaded HTTP server over a route table, with optional static files."""

    def __init__(self, host: str = "127.0.0.1", port: int = 0, static_dir: str | Path | None = None) -> None:
        self.routes: dict[tuple[str, str], Handler] = {}
        self.static_dir = Path(static_dir) if static_dir else None
        server = self

        class _Handler(BaseHTTPRequestHandler):
            def log_message(self, fmt, *args):  # quiet by default
                pass

            def _respond(self, status: int, payload: object) -> None:
                body = json.dumps(payload).encode("utf-8")
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(body)))
                self.send_header("Access-Control-Allow-Origin", "*")
                self.end_headers()
                self.wfile.write(body)

            def _dispatch(self, method: str) -> None:
                parsed = urllib.parse.urlsplit(self.path)
                handler = server.routes.get((method, parsed.path))
                if handler is None:
                    if method == "GET" and server.static_dir and self._serve_static(parsed.path):
                        return
                    self._respond(404, {"error": f"no route {method} {parsed.path}"})
                    return
                query = {k: v[-1] for k, v in urllib.parse.parse_qs(parsed.query).items()}
                body = None
                length = int(self.headers.get("Content-Length") or 0)
                if length:
                    try:
                        body = json.loads(self.rfile.read(length).decode("utf-8"))
                    except (json.JSONDecodeError, UnicodeDecodeError):
                        self._respond(400, {"error": "request body is not valid JSON"})
                        return
                try:
                    result = handler(query, body)
                except ApiError as exc:
                    self._respond(exc.status, {"error": str(exc)})
                except Exception as exc:  # pragma: no cover - defensive
                    self._respond(500, {"error": f"internal error: {exc}"})
                else:
                    self._respond(200, result)

            def _serve_static(self, path: str) -> bool:
                rel = path.lstrip("/") or "index.html"
                target = (server.static_dir / rel).resolve()
                if not target.is_relative_to(server.static_dir.resolve()) or not target.is_file():
                    return False
                data = target.read_bytes()
                self.send_response(200)
                self.send_header("Content-Type", _CONTENT_TYPES.get(target.suffix, "application/octet-stream"))
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)
                return True

            def do_GET(self):
                self._dispatch("GET")

            def do_POST(self):
                self._dispatch("POST")

        self._httpd = ThreadingHTTPServer((host, port), _Handler)
        self._httpd.daemon_threads = True
        self._thread: threading.Thread | None = None

    def add_route(self, method: str, path: str, handler: Handler) -> None:
        self.routes[(method, path)] = handler

    @property
    def url(self) -> str:
        host, port = self._httpd.server_address[:2]
        return f"http://{host}:{port}"

    def start(self) -> None:
        self._thread = threading.Thread(target=self._httpd.serve_forever, name="http", daemon=True)
        self._thread.start()

    def stop(self) -> None:
        self._httpd.shutdown()
        self._httpd.server_close()
        if self._thread:
            self._thread.join(timeout=5)


def _request(url: str, data: bytes | None, timeout: float) -> dict:
    req = urllib.request.Request(
        url,
        data=data,
        headers={"Content-Type": "application/json"} if data else {},
        method="POST" if data is not None else "GET",
    )
    try:
        with urllib.request.urlopen(req, timeout=timeout) as resp:
            payload = json.loads(resp.read().decode("utf-8"))
    except urllib.error.HTTPError as exc:
        try:
            message = json.loads(exc.read().decode("utf-8")).get("error", str(exc))
        except Exception:
            message = str(exc)
        raise ApiError(exc.code, message) from exc
    except (urllib.error.URLError, OSError, TimeoutError) as exc:
        raise TransportError(f"cannot reach {url}: {exc}") from exc
    if not isinstance(payload, dict):
        raise ApiError(502, f"unexpected response payload from {url}")
    return payload


def get_json(url: str, params: dict | None = None, timeout: float = 10.0) -> dict:
    if params:
        url = url + "?" + urllib.parse.urlencode(params)
    return _request(url, None, timeout)


def post_json(url: str, body: dict, timeout: float = 30.0) -> dict:
    return _request(url, json.dumps(body).encode("utf-8"), timeout)
