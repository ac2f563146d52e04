"""WebSocket-to-TCP screen bridge.

Browsers cannot open raw TCP connections to a VNC server, so the bridge
terminates WebSocket on one side and relays binary frames byte-exactly
to and from the TCP target. It is payload-agnostic: RFB (or anything
else) passes through untouched, with no compression negotiated and no
frame inspection beyond the binary/text distinction.

Close codes, all on the WebSocket side:

* 1000 - target half-closed; residual bytes were flushed first
* 1003 - client sent a text frame (binary-only endpoint)
* 1009 - client frame exceeded the 1 MiB cap
* 1011 - TCP target unreachable
* 1013 - session limit reached
"""

from __future__ import annotations

import socket
import threading
import time
import uuid
from dataclasses import dataclass

from websockets.exceptions import ConnectionClosed
from websockets.sync.server import ServerConnection, serve

DEFAULT_BRIDGE_PORT = 6080  # conventional websockify port, not mandated anywhere
DEFAULT_PATH = "/vnc"
MAX_FRAME_BYTES = 2**20
_TCP_CHUNK = 65536


@dataclass(frozen=True)
class BridgeConfig:
    """Listen/target endpoints plus session policy."""

    listen: tuple[str, int]
    target: tuple[str, int]
    max_sessions: int = 64
    idle_timeout: float | None = None
    path: str = DEFAULT_PATH

    def __post_init__(self):
        if self.listen == self.target:
            raise ValueError("listen and target endpoints must differ")
        if self.max_sessions < 1:
            raise ValueError("max_sessions must be >= 1")
        if self.idle_timeout is not None and self.idle_timeout <= 0:
            raise ValueError("idle_timeout must be positive")


@dataclass(frozen=True)
class BridgeSession:
    """Point-in-time stats for one relay session."""

    id: str
    bytes_up: int  # browser -> target
    bytes_down: int  # target -> browser
    opened_at: float


class _LiveSession:
    def __init__(self, ws: ServerConnection, tcp: socket.socket):
        self.id = uuid.uuid4().hex
        self.ws = ws
        self.tcp = tcp
        self.bytes_up = 0
        self.bytes_down = 0
        self.opened_at = time.time()
        self.last_activity = time.monotonic()
        self.lock = threading.Lock()

    def snapshot(self) -> BridgeSession:
        with self.lock:
            return BridgeSession(
                id=self.id,
                bytes_up=self.bytes_up,
                bytes_down=self.bytes_down,
                opened_at=self.opened_at,
            )

    def add_up(self, count: int) -> None:
        with self.lock:
            self.bytes_up += count
            self.last_activity = time.monotonic()

    def add_down(self, count: int) -> None:
        with self.lock:
            self.bytes_down += count
            self.last_activity = time.monotonic()


class ScreenBridge:
    """Accepts WebSocket sessions and relays each to one TCP connection."""

    def __init__(self, config: BridgeConfig):
        self.config = config
        self._sessions: dict[str, _LiveSession] = {}
        self._finished: list[BridgeSession] = []
        self._reserved = 0  # slots held between capacity check and registration
        self._lock = threading.Lock()
        self._server = None
        self._thread: threading.Thread | None = None
        self._watchdog: threading.Thread | None = None
        self._stopping = threading.Event()

    # -- lifecycle ----------------------------------------------------------

    def start(self) -> "ScreenBridge":
        """Bind the listener; raises OSError if the port is taken."""
        host, port = self.config.listen
        self._server = serve(
            self._handle,
            host,
            port,
            compression=None,
            max_size=MAX_FRAME_BYTES,
            select_subprotocol=_select_binary,
            process_request=self._check_path,
        )
        self._thread = threading.Thread(
            target=self._server.serve_forever, name="screen-bridge", daemon=True
        )
        self._thread.start()
        if self.config.idle_timeout is not None:
            self._watchdog = threading.Thread(
                target=self._idle_reaper, name="bridge-idle", daemon=True
            )
            self._watchdog.start()
        return self

    def stop(self, grace: float = 0.0) -> None:
        """Stop accepting, drain live sessions for ``grace`` seconds."""
        self._stopping.set()
        if self._server is not None:
            self._server.shutdown()
            self._server = None
        deadline = time.monotonic() + grace
        while time.monotonic() < deadline and self.active_count():
            time.sleep(0.05)
        for live in list(self._sessions.values()):
            _close_quietly(live, code=1001, reason="bridge shutting down")

    def __enter__(self) -> "ScreenBridge":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()

    @property
    def port(self) -> int:
        assert self._server is not None, "bridge not started"
        return self._server.socket.getsockname()[1]

    # -- stats --------------------------------------------------------------

    def sessions(self) -> list[BridgeSession]:
        """Snapshots of live sessions; safe to call while relaying."""
        with self._lock:
            return [live.snapshot() for live in self._sessions.values()]

    def finished_sessions(self) -> list[BridgeSession]:
        with self._lock:
            return list(self._finished)

    def active_count(self) -> int:
        with self._lock:
            return len(self._sessions)

    # -- connection handling --------------------------------------------------

    def _check_path(self, connection: ServerConnection, request):
        if request.path.split("?", 1)[0] != self.config.path:
            return connection.respond(404, "unknown path\n")
        return None

    def _handle(self, ws: ServerConnection) -> None:
        with self._lock:
            if (
                len(self._sessions) + self._reserved >= self.config.max_sessions
                or self._stopping.is_set()
            ):
                refused = True
            else:
                refused = False
                self._reserved += 1
        if refused:
            ws.close(1013, "session limit reached")
            return

        try:
            tcp = socket.create_connection(self.config.target, timeout=5.0)
        except OSError:
            with self._lock:
                self._reserved -= 1
            ws.close(1011, "target unreachable")
            return
        # drop the connect timeout: quiet screens must not kill the session
        tcp.settimeout(None)
        tcp.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)

        live = _LiveSession(ws, tcp)
        with self._lock:
            self._sessions[live.id] = live
            self._reserved -= 1
        pump = threading.Thread(
            target=self._pump_tcp_to_ws, args=(live,), daemon=True
        )
        try:
            pump.start()
            self._pump_ws_to_tcp(live)
        finally:
            _close_quietly(live)  # unblocks the pump if the target went quiet
            pump.join(timeout=5.0)
            with self._lock:
                self._sessions.pop(live.id, None)
                self._finished.append(live.snapshot())

    def _pump_ws_to_tcp(self, live: _LiveSession) -> None:
        try:
            for message in live.ws:
                if isinstance(message, str):
                    live.ws.close(1003, "binary frames only")
                    break
                live.tcp.sendall(message)
                live.add_up(len(message))
        except (ConnectionClosed, OSError):
            pass
        finally:
            # the browser is done: nothing more will reach the target
            _shutdown_quietly(live.tcp)

    def _pump_tcp_to_ws(self, live: _LiveSession) -> None:
        try:
            while True:
                chunk = live.tcp.recv(_TCP_CHUNK)
                if not chunk:
                    live.ws.close(1000, "target closed")
                    return
                live.ws.send(chunk)
                live.add_down(len(chunk))
        except (ConnectionClosed, OSError):
            pass

    def _idle_reaper(self) -> None:
        timeout = self.config.idle_timeout
        assert timeout is not None
        while not self._stopping.wait(min(timeout / 4, 1.0)):
            now = time.monotonic()
            for live in list(self._sessions.values()):
                with live.lock:
                    idle = now - live.last_activity
                if idle > timeout:
                    _close_quietly(live, code=1000, reason="idle timeout")


def _select_binary(connection, subprotocols):
    return "binary" if "binary" in subprotocols else None


def _close_quietly(live: _LiveSession, code: int = 1000, reason: str = "") -> None:
    try:
        live.ws.close(code, reason)
    except Exception:
        pass
    # shutdown wakes any thread blocked in recv on this socket; a bare
    # close would leave it hanging on the still-referenced description
    try:
        live.tcp.shutdown(socket.SHUT_RDWR)
    except OSError:
        pass
    try:
        live.tcp.close()
    except OSError:
        pass


def _shutdown_quietly(sock: socket.socket) -> None:
    try:
        sock.shutdown(socket.SHUT_WR)
    except OSError:
        pass
