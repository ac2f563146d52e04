"""Client for the Android emulator console (line-oriented TCP protocol).

The console greets with a banner ending in ``OK``, may demand ``auth
<token>`` first, and answers every command with output lines followed by
a terminal ``OK`` or ``KO: reason``. Used for the emulator-only
capabilities: SMS injection and GPS fixes.
"""

from __future__ import annotations

import enum
import os
import socket
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

DEFAULT_CONSOLE_PORT = 5554
TOKEN_FILE_ENV_VAR = "DROIDRANGE_CONSOLE_TOKEN_FILE"
DEFAULT_TOKEN_FILE = "~/.emulator_console_auth_token"

_AUTH_BANNER_MARKER = "Authentication required"


class ConsoleError(Exception):
    """Transport failures and local precondition violations."""


class ConsoleAuthError(ConsoleError):
    """Authentication was demanded and failed or no token is available."""


class ReplyStatus(enum.Enum):
    OK = "OK"
    KO = "KO"


@dataclass(frozen=True)
class ConsoleReply:
    status: ReplyStatus
    reason: str | None = None
    banner: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return self.status is ReplyStatus.OK


@dataclass(frozen=True)
class GeoFix:
    """A GPS position: longitude/latitude degrees, optional altitude meters."""

    longitude: float
    latitude: float
    altitude: float | None = None

    def __post_init__(self):
        if not -180.0 <= self.longitude <= 180.0:
            raise ValueError(f"longitude {self.longitude} outside [-180, 180]")
        if not -90.0 <= self.latitude <= 90.0:
            raise ValueError(f"latitude {self.latitude} outside [-90, 90]")

    def command_args(self) -> str:
        # the console takes longitude before latitude
        args = f"{_num(self.longitude)} {_num(self.latitude)}"
        if self.altitude is not None:
            args += f" {_num(self.altitude)}"
        return args


def _num(value: float) -> str:
    return f"{value:g}"


def parse_reply(lines: Iterable[str]) -> ConsoleReply:
    """Consume lines until the terminal ``OK``/``KO: reason`` status.

    Accepts both LF and CRLF terminated transcripts. Raises
    ``ConsoleError`` if the stream ends without a terminal status.
    """
    banner: list[str] = []
    for raw in lines:
        line = raw.rstrip("\r\n")
        if line == "OK":
            return ConsoleReply(ReplyStatus.OK, banner=tuple(banner))
        if line == "KO" or line.startswith("KO:"):
            reason = line[3:].strip() if line.startswith("KO:") else ""
            return ConsoleReply(
                ReplyStatus.KO, reason=reason or "unknown error", banner=tuple(banner)
            )
        banner.append(line)
    raise ConsoleError("console closed before a terminal OK/KO status")


class ConsoleSession:
    """One exclusive console connection with strict request/reply pacing."""

    def __init__(self, sock: socket.socket):
        self._sock = sock
        self._reader = sock.makefile("r", encoding="utf-8", newline="\n")
        self.banner: tuple[str, ...] = ()
        self._lock = threading.Lock()
        self.authenticated = False

    @classmethod
    def connect(
        cls,
        host: str = "127.0.0.1",
        port: int = DEFAULT_CONSOLE_PORT,
        token: str | None = None,
        token_file: str | os.PathLike | None = None,
        timeout: float = 5.0,
    ) -> "ConsoleSession":
        """Open a session, authenticating if the console demands it.

        The token is taken from ``token``, then the ``token_file``
        argument, then ``DROIDRANGE_CONSOLE_TOKEN_FILE``, then the
        emulator's standard token file in the user home.
        """
        try:
            sock = socket.create_connection((host, port), timeout=timeout)
        except OSError as exc:
            raise ConsoleError(f"console unreachable at {host}:{port}: {exc}") from exc
        session = cls(sock)
        try:
            greeting = parse_reply(session._reader)
        except (OSError, ConsoleError) as exc:
            session.close()
            raise ConsoleError(f"no console banner: {exc}") from exc

        session.banner = greeting.banner
        if any(_AUTH_BANNER_MARKER in line for line in greeting.banner):
            secret = token or _load_token(token_file)
            if not secret:
                session.close()
                raise ConsoleAuthError(
                    "console demands authentication but no token is available"
                )
            reply = session.command(f"auth {secret}")
            if not reply.ok:
                session.close()
                raise ConsoleAuthError(f"authentication rejected: {reply.reason}")
        session.authenticated = True
        return session

    def command(self, line: str) -> ConsoleReply:
        """Send one command line and read its reply."""
        if "\n" in line or "\r" in line:
            raise ConsoleError("command must be a single line")
        with self._lock:
            try:
                self._sock.sendall(line.encode("utf-8") + b"\r\n")
                return parse_reply(self._reader)
            except OSError as exc:
                raise ConsoleError(f"console connection lost: {exc}") from exc

    def send_sms(self, sender: str, text: str) -> ConsoleReply:
        """Inject an inbound SMS from ``sender`` into the emulator."""
        if not sender or any(ch.isspace() for ch in sender):
            raise ConsoleError(f"invalid sender {sender!r}")
        if "\n" in text or "\r" in text:
            raise ConsoleError("sms text must be a single line")
        return self.command(f"sms send {sender} {text}")

    def geo_fix(self, fix: GeoFix) -> ConsoleReply:
        """Set the emulator's GPS position."""
        return self.command(f"geo fix {fix.command_args()}")

    def close(self) -> None:
        try:
            self._reader.close()
        except OSError:
            pass
        try:
            self._sock.close()
        except OSError:
            pass

    def __enter__(self) -> "ConsoleSession":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def _load_token(token_file: str | os.PathLike | None) -> str | None:
    path = token_file or os.environ.get(TOKEN_FILE_ENV_VAR) or DEFAULT_TOKEN_FILE
    try:
        return Path(path).expanduser().read_text(encoding="utf-8").strip() or None
    except OSError:
        return None
