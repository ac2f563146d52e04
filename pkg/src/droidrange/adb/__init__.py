"""Wire-level client for an ADB server (smart-socket and sync protocols)."""

from .client import (
    DEFAULT_ENDPOINT,
    ENDPOINT_ENV_VAR,
    AdbClient,
    DeviceInfo,
    DeviceState,
    InstallError,
    TrackEvent,
    TransferSummary,
)
from .protocol import (
    MAX_PAYLOAD,
    SYNC_DATA_MAX,
    AdbConnectionError,
    AdbError,
    AdbFailure,
    AdbProtocolError,
    AdbReply,
    ReplyStatus,
    SyncPacket,
    encode_request,
)

__all__ = [
    "AdbClient",
    "AdbConnectionError",
    "AdbError",
    "AdbFailure",
    "AdbProtocolError",
    "AdbReply",
    "DEFAULT_ENDPOINT",
    "DeviceInfo",
    "DeviceState",
    "ENDPOINT_ENV_VAR",
    "InstallError",
    "MAX_PAYLOAD",
    "ReplyStatus",
    "SYNC_DATA_MAX",
    "SyncPacket",
    "TrackEvent",
    "TransferSummary",
    "encode_request",
]
