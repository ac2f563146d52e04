"""Client operations against an ADB server.

One TCP connection per command, the smart-socket convention: connect,
issue a host service or a transport plus device service, read the reply,
close. The server endpoint defaults to 127.0.0.1:5037 and can be
overridden per client or through ``DROIDRANGE_ADB_ADDR``.
"""

from __future__ import annotations

import enum
import os
import socket
import time
import uuid
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Iterator

from . import protocol
from .protocol import (
    SYNC_DATA_MAX,
    AdbConnectionError,
    AdbFailure,
    AdbProtocolError,
)

DEFAULT_ENDPOINT = ("127.0.0.1", 5037)
ENDPOINT_ENV_VAR = "DROIDRANGE_ADB_ADDR"

SCREENRECORD_MAX_SECONDS = 180  # hard cap of the device-side screenrecord tool
_TMP_DIR = "/data/local/tmp"


class DeviceState(enum.Enum):
    DEVICE = "device"
    OFFLINE = "offline"
    UNAUTHORIZED = "unauthorized"

    @classmethod
    def from_wire(cls, text: str) -> "DeviceState":
        try:
            return cls(text)
        except ValueError:
            # adb reports more states (bootloader, recovery, ...); anything
            # we cannot act on is treated as offline
            return cls.OFFLINE


@dataclass(frozen=True)
class DeviceInfo:
    serial: str
    state: DeviceState


@dataclass(frozen=True)
class TransferSummary:
    bytes: int
    chunks: int


class TrackEventKind(enum.Enum):
    SNAPSHOT = "snapshot"
    DISCONNECT = "disconnect"
    ERROR = "error"


@dataclass(frozen=True)
class TrackEvent:
    kind: TrackEventKind
    devices: tuple[DeviceInfo, ...] = ()
    message: str | None = None


class InstallError(AdbFailure):
    """pm install did not report Success; detail is its verbatim output."""


def _resolve_endpoint(endpoint) -> tuple[str, int]:
    if endpoint is None:
        endpoint = os.environ.get(ENDPOINT_ENV_VAR)
    if endpoint is None:
        return DEFAULT_ENDPOINT
    if isinstance(endpoint, tuple):
        return endpoint[0], int(endpoint[1])
    host, sep, port = endpoint.rpartition(":")
    if not sep or not port.isdigit():
        raise ValueError(f"endpoint must be host:port, got {endpoint!r}")
    return host, int(port)


class _Connection:
    """One smart-socket conversation over a dedicated TCP connection."""

    def __init__(self, sock: socket.socket):
        self.sock = sock

    def request(self, payload: str | bytes) -> None:
        """Send a framed request and require an OKAY reply."""
        self.sock.sendall(protocol.encode_request(payload))
        reply = protocol.decode_reply(self.sock)
        if not reply.ok:
            raise AdbFailure(reply.detail or "request failed")

    def read_frame(self) -> bytes:
        return protocol.read_frame(self.sock)

    def read_until_close(self) -> bytes:
        chunks = []
        while True:
            try:
                chunk = self.sock.recv(65536)
            except OSError as exc:
                raise AdbConnectionError(
                    f"connection lost: {exc}", partial=b"".join(chunks)
                ) from exc
            if not chunk:
                return b"".join(chunks)
            chunks.append(chunk)

    def send_sync(self, tag: bytes, value: int, payload: bytes = b"") -> None:
        self.sock.sendall(protocol.pack_sync(tag, value, payload))

    def read_sync(self) -> protocol.SyncPacket:
        return protocol.read_sync(self.sock)


class AdbClient:
    """Talks to one ADB server; safe to share across threads.

    Every operation opens its own connection and closes it on every
    path, success or failure.
    """

    def __init__(self, endpoint: str | tuple[str, int] | None = None,
                 timeout: float = 10.0):
        self.endpoint = _resolve_endpoint(endpoint)
        self.timeout = timeout

    @contextmanager
    def _connect(self, timeout: float | None = -1.0) -> Iterator[_Connection]:
        if timeout == -1.0:
            timeout = self.timeout
        try:
            sock = socket.create_connection(self.endpoint, timeout=self.timeout)
            sock.settimeout(timeout)
        except OSError as exc:
            raise AdbConnectionError(
                f"adb server unreachable at {self.endpoint[0]}:{self.endpoint[1]}:"
                f" {exc}"
            ) from exc
        try:
            yield _Connection(sock)
        finally:
            try:
                sock.close()
            except OSError:
                pass

    def list_devices(self) -> list[DeviceInfo]:
        """Enumerate devices known to the server."""
        with self._connect() as conn:
            conn.request("host:devices")
            body = conn.read_frame().decode("utf-8", "replace")
        devices = []
        for line in body.splitlines():
            if not line.strip():
                continue
            serial, _, state = line.partition("\t")
            if not serial:
                raise AdbProtocolError(f"bad device line {line!r}")
            devices.append(DeviceInfo(serial, DeviceState.from_wire(state.strip())))
        return devices

    def shell(self, serial: str, command: str) -> bytes:
        """Run a shell command and return its raw output.

        Output is whatever the device wrote until it closed the stream.
        A mid-stream disconnect raises ``AdbConnectionError`` carrying
        the partial output.
        """
        if not command:
            raise ValueError("command must not be empty")
        if not serial:
            raise ValueError("serial must not be empty")
        with self._connect() as conn:
            conn.request(f"host:transport:{serial}")
            conn.request(f"shell:{command}")
            return conn.read_until_close()

    def push(self, serial: str, content: bytes, remote_path: str,
             mode: int = 0o644) -> TransferSummary:
        """Write ``content`` to ``remote_path`` via the sync protocol."""
        if not remote_path.startswith("/"):
            raise ValueError(f"remote path must be absolute, got {remote_path!r}")
        with self._connect() as conn:
            conn.request(f"host:transport:{serial}")
            conn.request("sync:")
            spec = f"{remote_path},{mode:d}".encode("utf-8")
            conn.send_sync(protocol.SYNC_SEND, len(spec), spec)
            chunks = 0
            for offset in range(0, len(content), SYNC_DATA_MAX):
                chunk = content[offset:offset + SYNC_DATA_MAX]
                conn.send_sync(protocol.SYNC_DATA, len(chunk), chunk)
                chunks += 1
            conn.send_sync(protocol.SYNC_DONE, int(time.time()))
            packet = conn.read_sync()
            if packet.id == protocol.SYNC_FAIL:
                raise AdbFailure(packet.payload.decode("utf-8", "replace"))
            if packet.id != protocol.SYNC_OKAY:
                raise AdbProtocolError(f"unexpected sync reply {packet.id!r}")
            conn.send_sync(protocol.SYNC_QUIT, 0)
        return TransferSummary(bytes=len(content), chunks=chunks)

    def pull(self, serial: str, remote_path: str) -> bytes:
        """Read a remote file via sync RECV."""
        with self._connect() as conn:
            conn.request(f"host:transport:{serial}")
            conn.request("sync:")
            path = remote_path.encode("utf-8")
            conn.send_sync(protocol.SYNC_RECV, len(path), path)
            chunks = []
            while True:
                packet = conn.read_sync()
                if packet.id == protocol.SYNC_DATA:
                    chunks.append(packet.payload)
                elif packet.id == protocol.SYNC_DONE:
                    break
                elif packet.id == protocol.SYNC_FAIL:
                    raise AdbFailure(packet.payload.decode("utf-8", "replace"))
                else:
                    raise AdbProtocolError(f"unexpected sync reply {packet.id!r}")
            conn.send_sync(protocol.SYNC_QUIT, 0)
        return b"".join(chunks)

    def install_apk(self, serial: str, apk: bytes) -> str:
        """Push an APK to the device and install it with pm.

        Returns pm's output on success; raises ``InstallError`` with the
        verbatim failure text otherwise.
        """
        if not apk:
            raise ValueError("apk must not be empty")
        remote = f"{_TMP_DIR}/{uuid.uuid4().hex}.apk"
        self.push(serial, apk, remote)
        output = self.shell(serial, f"pm install -r {remote}")
        text = output.decode("utf-8", "replace")
        if "Success" not in text:
            raise InstallError(text.strip())
        return text

    def screenrecord(self, serial: str, duration: int) -> bytes:
        """Record the screen for ``duration`` seconds and return the video.

        The device-side tool caps recordings at 180 seconds; longer
        requests are rejected up front. The temporary remote file is
        removed after retrieval.
        """
        if not 0 < duration <= SCREENRECORD_MAX_SECONDS:
            raise ValueError(
                f"duration must be in (0, {SCREENRECORD_MAX_SECONDS}],"
                f" got {duration}"
            )
        remote = f"{_TMP_DIR}/{uuid.uuid4().hex}.mp4"
        try:
            # the recording shell stays open for the whole duration
            with self._connect(timeout=duration + 30.0) as conn:
                conn.request(f"host:transport:{serial}")
                conn.request(f"shell:screenrecord --time-limit {int(duration)} {remote}")
                conn.read_until_close()
            return self.pull(serial, remote)
        finally:
            try:
                self.shell(serial, f"rm -f {remote}")
            except AdbFailure:
                pass

    def track_devices(self) -> Iterator[TrackEvent]:
        """Stream device-list snapshots from ``host:track-devices``.

        Yields one SNAPSHOT event per update; the stream always ends
        with a single DISCONNECT (clean close) or ERROR (malformed
        frame) event.
        """
        with self._connect(timeout=None) as conn:
            conn.request("host:track-devices")
            while True:
                try:
                    header = _recv_exactly_or_eof(conn.sock, 4)
                except OSError as exc:
                    yield TrackEvent(TrackEventKind.ERROR, message=str(exc))
                    return
                if header is None:
                    yield TrackEvent(TrackEventKind.DISCONNECT)
                    return
                try:
                    length = int(header, 16)
                    body = protocol.read_exact(conn.sock, length) if length else b""
                    devices = _parse_snapshot(body)
                except (AdbProtocolError, ValueError) as exc:
                    yield TrackEvent(TrackEventKind.ERROR, message=str(exc))
                    return
                yield TrackEvent(TrackEventKind.SNAPSHOT, devices=tuple(devices))


def _parse_snapshot(body: bytes) -> list[DeviceInfo]:
    devices = []
    for line in body.decode("utf-8", "replace").splitlines():
        if not line.strip():
            continue
        serial, sep, state = line.partition("\t")
        if not sep or not serial:
            raise AdbProtocolError(f"bad device line {line!r}")
        devices.append(DeviceInfo(serial, DeviceState.from_wire(state.strip())))
    return devices


def _recv_exactly_or_eof(sock: socket.socket, count: int) -> bytes | None:
    """Read ``count`` bytes; None on clean EOF at a frame boundary."""
    data = b""
    while len(data) < count:
        chunk = sock.recv(count - len(data))
        if not chunk:
            if not data:
                return None
            raise AdbProtocolError("stream truncated mid-frame")
        data += chunk
    return data
