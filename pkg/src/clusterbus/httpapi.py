"""HTTP control API over the service layer.

JSON request/response on every endpoint; the operator dashboard's static
build can be served from the same process via ``static_dir``. Mutating
requests take their actor string from the ``X-Actor`` header (anonymous
access is allowed by design). Worker threads are per-request; the service
layer's FIFO lock serializes actual bus transactions in arrival order.

Endpoints:

    GET  /nodes                      registry as a JSON array
    GET  /nodes/{addr}               one record (+ emulator diagnostics)
    POST /nodes/{addr}/power         {"state": "on"|"off"}
    GET  /nodes/{addr}/sensors       tenths of degC / %RH
    POST /power/broadcast            {"state": "on"|"off"}, no responses
    POST /bus/scan                   {"from": 1, "to": 254}
    GET  /bus/trace?limit=N          recent bus events
    GET  /blocks                     {name: [addresses]}
    POST /blocks                     {"name": ..., "nodes": [...]}
    POST /blocks/{name}/power        {"state": "on"|"off"}
    GET  /audit?since&until&actor&target
    GET  /health
    GET  /, /ui/*                    dashboard static files (if configured)
"""

from __future__ import annotations

import json
import logging
import os
import re
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Callable, Optional
from urllib.parse import parse_qs, urlparse

from .master import (
    BusDetachedError,
    NonBroadcastableError,
    UnknownBlockError,
)
from .protocol import InvalidAddressError, ProtocolError
from .service import ControlService, MalformedPayloadError, SensorTimeoutError

log = logging.getLogger(__name__)

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "application/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".map": "application/json; charset=utf-8",
    ".svg": "image/svg+xml",
    ".ico": "image/x-icon",
}


def parse_bind(bind: str) -> tuple[str, int]:
    """Split 'host:port' into its parts."""
    host, sep, port = bind.rpartition(":")
    if not sep:
        raise ValueError(f"bind address must be host:port, got {bind!r}")
    return host or "127.0.0.1", int(port)


class ApiServer:
    """Threading HTTP server bound to one ControlService."""

    def __init__(
        self,
        service: ControlService,
        bind: str = "127.0.0.1:8735",
        static_dir: Optional[str] = None,
    ) -> None:
        self.service = service
        self.static_dir = os.path.abspath(static_dir) if static_dir else None
        host, port = parse_bind(bind)
        handler = _make_handler(service, self.static_dir)
        self._httpd = ThreadingHTTPServer((host, port), handler)
        self._thread: Optional[threading.Thread] = None

    @property
    def address(self) -> tuple[str, int]:
        return self._httpd.server_address[:2]

    @property
    def url(self) -> str:
        host, port = self.address
        return f"http://{host}:{port}"

    def start(self) -> "ApiServer":
        """Serve on a background thread (tests, embedded use)."""
        self._thread = threading.Thread(
            target=self.serve_forever, name="clusterbus-api", daemon=True
        )
        self._thread.start()
        return self

    def serve_forever(self) -> None:
        self._httpd.serve_forever(poll_interval=0.05)

    def stop(self) -> None:
        self._httpd.shutdown()
        self._httpd.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)


def _make_handler(service: ControlService, static_dir: Optional[str]):
    routes: list[tuple[str, re.Pattern, Callable]] = []

    def route(method: str, pattern: str):
        def register(fn):
            routes.append((method, re.compile(pattern), fn))
            return fn

        return register

    @route("GET", r"^/nodes$")
    def get_nodes(handler, match, body, query):
        return 200, service.node_records()

    @route("GET", r"^/nodes/(\d+)$")
    def get_node(handler, match, body, query):
        address = int(match.group(1))
        record = service.node_record(address)
        if record is None:
            return 404, {"error": f"node {address} not in registry"}
        return 200, record

    @route("POST", r"^/nodes/(\d+)/power$")
    def post_node_power(handler, match, body, query):
        address = int(match.group(1))
        outcome = service.power_node(address, _state_of(body), handler.actor)
        return 200, {
            "outcome": outcome.status,
            "attempts": outcome.attempts,
            "elapsed_us": outcome.elapsed_us,
        }

    @route("GET", r"^/nodes/(\d+)/sensors$")
    def get_node_sensors(handler, match, body, query):
        return 200, service.read_sensors(int(match.group(1)), handler.actor)

    @route("POST", r"^/power/broadcast$")
    def post_broadcast(handler, match, body, query):
        service.broadcast_power(_state_of(body), handler.actor)
        return 200, {"outcome": "acked", "detail": "by convention"}

    @route("POST", r"^/bus/scan$")
    def post_scan(handler, match, body, query):
        start = int(body.get("from", 1))
        stop = int(body.get("to", 254))
        responders = service.scan_bus(start, stop, handler.actor)
        return 200, {"responders": responders}

    @route("GET", r"^/bus/trace$")
    def get_trace(handler, match, body, query):
        limit = int(query.get("limit", ["200"])[0])
        return 200, service.recent_trace(limit)

    @route("GET", r"^/blocks$")
    def get_blocks(handler, match, body, query):
        return 200, service.blocks()

    @route("POST", r"^/blocks$")
    def post_blocks(handler, match, body, query):
        name = body.get("name")
        addresses = body.get("nodes")
        if not isinstance(name, str) or not isinstance(addresses, list):
            raise ValueError('body must be {"name": str, "nodes": [addresses]}')
        service.define_block(name, [int(a) for a in addresses])
        return 201, {"name": name, "nodes": sorted(int(a) for a in addresses)}

    @route("POST", r"^/blocks/([^/]+)/power$")
    def post_block_power(handler, match, body, query):
        outcomes = service.power_block(match.group(1), _state_of(body), handler.actor)
        return 200, {
            "outcomes": {str(addr): o.status for addr, o in outcomes.items()}
        }

    @route("GET", r"^/audit$")
    def get_audit(handler, match, body, query):
        filters = {
            key: query[key][0]
            for key in ("since", "until", "actor", "target")
            if key in query
        }
        return 200, [entry.to_json() for entry in service.audit_query(**filters)]

    @route("GET", r"^/health$")
    def get_health(handler, match, body, query):
        return 200, {"status": "ok", "now_us": service.bus.now_us}

    class Handler(BaseHTTPRequestHandler):
        server_version = "clusterbus"
        protocol_version = "HTTP/1.1"

        @property
        def actor(self) -> str:
            return self.headers.get("X-Actor", "anonymous").strip() or "anonymous"

        def log_message(self, fmt, *args):  # quiet by default
            log.debug("%s %s", self.address_string(), fmt % args)

        def do_OPTIONS(self):
            self.send_response(204)
            self._cors()
            self.send_header("Content-Length", "0")
            self.end_headers()

        def do_GET(self):
            self._dispatch("GET")

        def do_POST(self):
            self._dispatch("POST")

        def _dispatch(self, method: str) -> None:
            parsed = urlparse(self.path)
            path = parsed.path.rstrip("/") or "/"
            query = parse_qs(parsed.query)
            for verb, pattern, fn in routes:
                if verb != method:
                    continue
                match = pattern.match(path)
                if not match:
                    continue
                try:
                    body = self._read_body() if method == "POST" else {}
                    status, payload = fn(self, match, body, query)
                except (InvalidAddressError, NonBroadcastableError, ValueError) as exc:
                    status, payload = 400, {"error": str(exc)}
                except UnknownBlockError as exc:
                    status, payload = 404, {"error": f"unknown block {exc.args[0]!r}"}
                except SensorTimeoutError as exc:
                    status, payload = 504, {"error": "timeout", "leg": exc.leg}
                except MalformedPayloadError as exc:
                    status, payload = 502, {"error": "malformed-payload", "leg": exc.leg}
                except BusDetachedError as exc:
                    status, payload = 503, {"error": str(exc)}
                except ProtocolError as exc:
                    status, payload = 400, {"error": str(exc)}
                except Exception as exc:  # last-resort: never kill the worker
                    log.exception("unhandled API error")
                    status, payload = 500, {"error": str(exc)}
                self._send_json(status, payload)
                return
            # Unrouted GETs fall back to the dashboard's static build.
            if method == "GET" and static_dir and self._try_static(path):
                return
            self._send_json(404, {"error": f"no route for {method} {path}"})

        def _read_body(self) -> dict:
            length = int(self.headers.get("Content-Length", 0) or 0)
            if length == 0:
                return {}
            raw = self.rfile.read(length)
            try:
                body = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise ValueError(f"request body is not valid JSON: {exc}") from exc
            if not isinstance(body, dict):
                raise ValueError("request body must be a JSON object")
            return body

        def _send_json(self, status: int, payload) -> None:
            data = json.dumps(payload).encode("utf-8")
            self.send_response(status)
            self._cors()
            self.send_header("Content-Type", "application/json; charset=utf-8")
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)

        def _cors(self) -> None:
            self.send_header("Access-Control-Allow-Origin", "*")
            self.send_header("Access-Control-Allow-Headers", "Content-Type, X-Actor")
            self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")

        def _try_static(self, path: str) -> bool:
            if path == "/":
                candidate = "index.html"
            elif path.startswith("/ui/"):
                candidate = path[len("/ui/") :] or "index.html"
            else:
                candidate = path.lstrip("/")
            root = os.path.realpath(static_dir)
            full = os.path.realpath(os.path.join(root, candidate))
            if full != root and not full.startswith(root + os.sep):
                self._send_json(403, {"error": "forbidden"})
                return True
            if not os.path.isfile(full):
                return False  # fall through to the JSON 404
            ext = os.path.splitext(full)[1].lower()
            with open(full, "rb") as fp:
                data = fp.read()
            self.send_response(200)
            self._cors()
            self.send_header(
                "Content-Type", _CONTENT_TYPES.get(ext, "application/octet-stream")
            )
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)
            return True

    return Handler


def _state_of(body: dict) -> str:
    state = body.get("state")
    if state not in ("on", "off"):
        raise ValueError(f'"state" must be "on" or "off", got {state!r}')
    return state
