"""Networked control plane for the simulator.

Plain HTTP, JSON bodies, no client-side installation needed:

  POST /api/command                     apply a CommandMessage
  GET  /api/telemetry/stream            newline-delimited TelemetryFrame JSON
  GET  /api/samples?id=...&from=&to=    stored sensor samples
  GET  /                                the web panel, when assets are built

Sessions are issued by the Subscribe command; the first claimant holds
the single driver token and only that session may send Drive or
ActuatorSet.  The token is released when the session's telemetry stream
disconnects, which is the explicit handoff point for the next claimant.

Request handlers never touch simulation state directly: commands go
through the serialized queue and block until their tick boundary, and
telemetry is fanned out as immutable snapshots through per-subscriber
queues.  A subscriber that cannot keep up is disconnected rather than
ever stalling the tick loop.
"""

from __future__ import annotations

import json
import logging
import mimetypes
import queue
import threading
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

from .daps import UnknownSensorError
from .simulation import CommandError, Simulation, TelemetryFrame, parse_command

logger = logging.getLogger(__name__)

MAX_BODY_BYTES = 1 << 20
SUBSCRIBER_QUEUE_FRAMES = 256
DEFAULT_STREAM_PERIOD_MS = 100


class AuthorizationError(Exception):
    """Command requires a session or the driver token the caller lacks."""


class BindError(OSError):
    """Listen address could not be bound."""


@dataclass
class Session:
    session_id: str
    driver: bool


class SessionManager:
    """Tracks live sessions and the single driver token.

    The token goes to the first claimant and moves only through an
    explicit release (stream disconnect or service shutdown), so there
    is exactly one driver at any instant no matter how many Subscribe
    requests race.
    """

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._sessions: dict[str, Session] = {}
        self._driver_id: str | None = None
        self._counter = 0

    def subscribe(self) -> Session:
        with self._lock:
            self._counter += 1
            sid = f"s-{self._counter}"
            driver = self._driver_id is None
            if driver:
                self._driver_id = sid
            session = Session(sid, driver)
            self._sessions[sid] = session
            return session

    def get(self, session_id: str | None) -> Session:
        if not session_id:
            raise AuthorizationError("command requires a session; Subscribe first")
        with self._lock:
            session = self._sessions.get(session_id)
        if session is None:
            raise AuthorizationError(f"unknown session {session_id!r}")
        return session

    def end(self, session_id: str) -> None:
        with self._lock:
            session = self._sessions.pop(session_id, None)
            if session is not None and self._driver_id == session_id:
                self._driver_id = None

    def driver_id(self) -> str | None:
        with self._lock:
            return self._driver_id


@dataclass
class _Subscriber:
    period_ms: int
    session_id: str
    frames: "queue.Queue[TelemetryFrame]" = field(
        default_factory=lambda: queue.Queue(maxsize=SUBSCRIBER_QUEUE_FRAMES)
    )
    dropped: bool = False


class RobotService:
    """Glues the HTTP surface onto one Simulation."""

    def __init__(self, sim: Simulation, assets_dir: Path | str | None = None) -> None:
        self.sim = sim
        self.sessions = SessionManager()
        self.assets_dir = Path(assets_dir) if assets_dir else None
        self._subscribers: list[_Subscriber] = []
        self._sub_lock = threading.Lock()
        self._stopping = threading.Event()
        self._httpd: ThreadingHTTPServer | None = None
        self._server_thread: threading.Thread | None = None
        sim.on_frame(self._broadcast)

    # -- telemetry fan-out -------------------------------------------

    def _broadcast(self, frame: TelemetryFrame) -> None:
        # tick-thread context: never block, never raise
        with self._sub_lock:
            subs = list(self._subscribers)
        for sub in subs:
            if sub.dropped or frame.t_ms % sub.period_ms != 0:
                continue
            try:
                sub.frames.put_nowait(frame)
            except queue.Full:
                sub.dropped = True  # too slow; its handler will disconnect it

    def add_subscriber(self, period_ms: int, session_id: str) -> _Subscriber:
        sub = _Subscriber(period_ms, session_id)
        with self._sub_lock:
            self._subscribers.append(sub)
        return sub

    def remove_subscriber(self, sub: _Subscriber) -> None:
        with self._sub_lock:
            if sub in self._subscribers:
                self._subscribers.remove(sub)

    # -- command path ------------------------------------------------

    def handle_command(self, body: object) -> dict:
        """Validate and apply one command body; returns the reply object."""
        if not isinstance(body, dict):
            raise CommandError("command must be a JSON object")
        envelope = dict(body)
        session_id = envelope.pop("session", None)
        if session_id is not None and not isinstance(session_id, str):
            raise CommandError("session must be a string")
        msg = parse_command(envelope)

        if msg.kind == "Subscribe":
            session = self.sessions.subscribe()
            return {
                "ok": True,
                "applied_tick": self.sim.tick,
                "session": session.session_id,
                "driver": session.driver,
            }

        session = self.sessions.get(session_id)
        if msg.kind in ("Drive", "ActuatorSet") and not session.driver:
            raise AuthorizationError("not the driver; the token is already held")
        applied_tick = self.sim.submit(msg).wait()
        return {"ok": True, "applied_tick": applied_tick}

    # -- lifecycle ---------------------------------------------------

    def start(self, host: str, port: int) -> tuple[str, int]:
        """Bind and serve in a background thread; returns the bound address."""
        service = self

        class Handler(_ApiHandler):
            pass

        Handler.service = service
        try:
            self._httpd = ThreadingHTTPServer((host, port), Handler)
        except OSError as exc:
            raise BindError(f"cannot bind {host}:{port}: {exc}") from exc
        self._httpd.daemon_threads = True
        self._server_thread = threading.Thread(
            target=self._httpd.serve_forever, name="http", daemon=True
        )
        self._server_thread.start()
        bound = self._httpd.server_address
        logger.info("serving on http://%s:%d", bound[0], bound[1])
        return bound[0], bound[1]

    @property
    def port(self) -> int:
        assert self._httpd is not None
        return self._httpd.server_address[1]

    def stop(self) -> None:
        self._stopping.set()
        if self._httpd is not None:
            self._httpd.shutdown()
            self._httpd.server_close()
            self._httpd = None


class _ApiHandler(BaseHTTPRequestHandler):
    """One request; all routes catch their own errors and answer JSON."""

    service: RobotService  # injected per server
    protocol_version = "HTTP/1.1"

    # -- plumbing ----------------------------------------------------

    def log_message(self, fmt: str, *args) -> None:
        logger.debug("%s %s", self.address_string(), fmt % args)

    def _reply(self, status: int, obj: dict) -> None:
        data = json.dumps(obj, separators=(",", ":")).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def _error(self, status: int, message: str) -> None:
        self._reply(status, {"ok": False, "error": message})

    # -- routes ------------------------------------------------------

    def do_POST(self) -> None:  # noqa: N802 (http.server API)
        try:
            path = urlparse(self.path).path
            if path != "/api/command":
                self._error(404, f"no such endpoint {path}")
                return
            try:
                length = int(self.headers.get("Content-Length", "0"))
            except ValueError:
                self._error(400, "bad Content-Length")
                return
            if length < 0 or length > MAX_BODY_BYTES:
                self._error(413, "body too large")
                return
            raw = self.rfile.read(length)
            try:
                body = json.loads(raw)
            except (UnicodeDecodeError, json.JSONDecodeError) as exc:
                self._error(400, f"body is not valid JSON: {exc}")
                return
            try:
                reply = self.service.handle_command(body)
            except CommandError as exc:
                self._error(400, str(exc))
                return
            except AuthorizationError as exc:
                self._error(403, str(exc))
                return
            except TimeoutError as exc:
                self._error(503, str(exc))
                return
            self._reply(200, reply)
        except BrokenPipeError:
            pass
        except Exception as exc:  # keep the service alive whatever comes in
            logger.exception("command handler failed")
            try:
                self._error(500, f"internal error: {type(exc).__name__}")
            except OSError:
                pass

    def do_GET(self) -> None:  # noqa: N802
        try:
            url = urlparse(self.path)
            if url.path == "/api/telemetry/stream":
                self._stream(parse_qs(url.query))
            elif url.path == "/api/samples":
                self._samples(parse_qs(url.query))
            elif url.path.startswith("/api"):
                self._error(404, f"no such endpoint {url.path}")
            else:
                self._static(url.path)
        except BrokenPipeError:
            pass
        except Exception as exc:
            logger.exception("GET handler failed")
            try:
                self._error(500, f"internal error: {type(exc).__name__}")
            except OSError:
                pass

    # -- telemetry stream --------------------------------------------

    def _stream(self, params: dict[str, list[str]]) -> None:
        tick_ms = self.service.sim.tick_ms
        try:
            period = int(params.get("period_ms", [str(DEFAULT_STREAM_PERIOD_MS)])[0])
        except ValueError:
            self._error(400, "period_ms must be an integer")
            return
        if period < tick_ms or period % tick_ms != 0:
            self._error(400, f"period_ms must be a multiple of the {tick_ms} ms tick")
            return
        session_id = params.get("session", [None])[0]
        try:
            session = self.service.sessions.get(session_id)
        except AuthorizationError as exc:
            self._error(403, str(exc))
            return

        sub = self.service.add_subscriber(period, session.session_id)
        self.send_response(200)
        self.send_header("Content-Type", "application/x-ndjson")
        self.send_header("Cache-Control", "no-store")
        self.send_header("Connection", "close")
        self.end_headers()
        self.close_connection = True
        try:
            while not self.service._stopping.is_set():
                if sub.dropped:
                    logger.info("dropping slow telemetry consumer %s", session.session_id)
                    break
                try:
                    frame = sub.frames.get(timeout=0.25)
                except queue.Empty:
                    continue
                self.wfile.write(frame.to_json().encode("utf-8") + b"\n")
                self.wfile.flush()
        except (BrokenPipeError, ConnectionResetError, OSError):
            pass
        finally:
            # disconnect is the explicit release point for the driver token
            self.service.remove_subscriber(sub)
            self.service.sessions.end(session.session_id)

    # -- stored samples ----------------------------------------------

    def _samples(self, params: dict[str, list[str]]) -> None:
        store = self.service.sim.registry.store
        sensor_id = params.get("id", [None])[0]
        if not sensor_id:
            self._error(400, "missing sensor id")
            return
        if store is None:
            self._error(404, "no sample store configured")
            return
        try:
            t_from = int(params["from"][0]) if "from" in params else None
            t_to = int(params["to"][0]) if "to" in params else None
        except ValueError:
            self._error(400, "from/to must be integers")
            return
        try:
            samples = store.query(sensor_id, t_from, t_to)
        except UnknownSensorError:
            self._error(404, f"unknown sensor {sensor_id!r}")
            return
        body = [
            {"id": s.sensor_id, "t": s.t_ms, "raw": s.raw, "filt": s.filtered} for s in samples
        ]
        data = json.dumps(body, separators=(",", ":")).encode("utf-8")
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    # -- static panel ------------------------------------------------

    def _static(self, path: str) -> None:
        assets = self.service.assets_dir
        if assets is None or not assets.is_dir():
            self._error(404, "web panel not built; the API is fully functional without it")
            return
        name = path.lstrip("/") or "index.html"
        target = (assets / name).resolve()
        try:
            inside = target.is_relative_to(assets.resolve())
        except AttributeError:  # pragma: no cover (3.10 has is_relative_to)
            inside = str(target).startswith(str(assets.resolve()))
        if not inside or not target.is_file():
            self._error(404, f"no such file {path}")
            return
        ctype = mimetypes.guess_type(str(target))[0] or "application/octet-stream"
        data = target.read_bytes()
        self.send_response(200)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)


def default_assets_dir() -> Path | None:
    """The packaged web panel, when the frontend bundle has been built."""
    candidate = Path(__file__).parent / "static"
    return candidate if candidate.is_dir() else None
