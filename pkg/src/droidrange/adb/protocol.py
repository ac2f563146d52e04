"""ADB wire protocol primitives.

Constants and framing rules follow the public AOSP protocol documents:

* smart-socket framing and host services:
  ``packages/modules/adb/OVERVIEW.TXT`` and ``SERVICES.TXT``
* file sync sub-protocol:
  ``packages/modules/adb/SYNC.TXT`` and ``file_sync_protocol.h``

A smart-socket request is four ASCII lowercase hex digits encoding the
payload length, then the payload. Replies start with a 4-byte status
token (``OKAY``/``FAIL``); FAIL and value-bearing host replies carry a
hex-length-prefixed body. Sync packets use a 4-byte tag plus a 32-bit
little-endian length-or-value field.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass

MAX_PAYLOAD = 0xFFFF

OKAY = b"OKAY"
FAIL = b"FAIL"

# sync sub-protocol tags (SYNC.TXT)
SYNC_SEND = b"SEND"
SYNC_RECV = b"RECV"
SYNC_STAT = b"STAT"
SYNC_DATA = b"DATA"
SYNC_DONE = b"DONE"
SYNC_OKAY = b"OKAY"
SYNC_FAIL = b"FAIL"
SYNC_QUIT = b"QUIT"
SYNC_TAGS = {
    SYNC_SEND,
    SYNC_RECV,
    SYNC_STAT,
    SYNC_DATA,
    SYNC_DONE,
    SYNC_OKAY,
    SYNC_FAIL,
    SYNC_QUIT,
}

# largest DATA payload the sync service accepts (SYNC_DATA_MAX in AOSP)
SYNC_DATA_MAX = 64 * 1024

_SYNC_HEADER = struct.Struct("<4sI")


class AdbError(Exception):
    """Base class for ADB client failures."""


class AdbConnectionError(AdbError):
    """Server unreachable or connection lost mid-operation."""

    def __init__(self, message: str, partial: bytes = b""):
        super().__init__(message)
        self.partial = partial


class AdbProtocolError(AdbError):
    """Peer sent bytes that violate the framing rules."""


class AdbFailure(AdbError):
    """Server answered FAIL; ``detail`` carries its message."""

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


class ReplyStatus(enum.Enum):
    OKAY = "OKAY"
    FAIL = "FAIL"


@dataclass(frozen=True)
class AdbReply:
    status: ReplyStatus
    detail: str | None = None

    @property
    def ok(self) -> bool:
        return self.status is ReplyStatus.OKAY


@dataclass(frozen=True)
class SyncPacket:
    id: bytes
    value: int
    payload: bytes = b""


def encode_request(payload: bytes | str) -> bytes:
    """Frame a smart-socket request: 4 lowercase hex digits + payload."""
    if isinstance(payload, str):
        payload = payload.encode("utf-8")
    if not payload:
        raise ValueError("payload must not be empty")
    if len(payload) > MAX_PAYLOAD:
        raise ValueError(f"payload too large: {len(payload)} > {MAX_PAYLOAD}")
    return b"%04x%s" % (len(payload), payload)


def read_exact(stream, count: int) -> bytes:
    """Read exactly ``count`` bytes or raise on truncation.

    Accepts anything with a ``recv`` (sockets) or ``read`` (file-like)
    method.
    """
    receive = getattr(stream, "recv", None) or stream.read
    chunks = []
    remaining = count
    while remaining:
        chunk = receive(remaining)
        if not chunk:
            raise AdbProtocolError(
                f"stream truncated: wanted {count} bytes, got {count - remaining}"
            )
        chunks.append(chunk)
        remaining -= len(chunk)
    return b"".join(chunks)


def read_frame(stream) -> bytes:
    """Read one hex-length-prefixed frame."""
    header = read_exact(stream, 4)
    try:
        length = int(header, 16)
    except ValueError:
        raise AdbProtocolError(f"bad frame length {header!r}") from None
    if length == 0:
        return b""
    return read_exact(stream, length)


def decode_reply(stream) -> AdbReply:
    """Parse a status token; FAIL replies carry a framed detail message."""
    status = read_exact(stream, 4)
    if status == OKAY:
        return AdbReply(ReplyStatus.OKAY)
    if status == FAIL:
        detail = read_frame(stream).decode("utf-8", "replace")
        return AdbReply(ReplyStatus.FAIL, detail)
    raise AdbProtocolError(f"bad status token {status!r}")


def pack_sync(tag: bytes, value: int, payload: bytes = b"") -> bytes:
    if tag not in SYNC_TAGS:
        raise ValueError(f"unknown sync tag {tag!r}")
    return _SYNC_HEADER.pack(tag, value) + payload


def read_sync(stream) -> SyncPacket:
    """Read one sync packet header, plus the payload for data-bearing tags."""
    tag, value = _SYNC_HEADER.unpack(read_exact(stream, 8))
    if tag not in SYNC_TAGS:
        raise AdbProtocolError(f"bad sync tag {tag!r}")
    payload = b""
    if tag in (SYNC_DATA, SYNC_FAIL, SYNC_SEND, SYNC_RECV, SYNC_STAT):
        if value > SYNC_DATA_MAX:
            raise AdbProtocolError(f"sync payload too large: {value}")
        payload = read_exact(stream, value)
    return SyncPacket(tag, value, payload)
