"""Scriptable in-process servers for exercising the clients and services.

These mocks speak the real wire protocols (ADB smart socket + sync,
emulator console, RFB preamble) closely enough to drive every client
operation without an Android device. They are shipped in the package so
downstream integrations can reuse them in their own test suites.
"""

from .mock_adb import MockAdbServer
from .mock_console import MockConsoleServer
from .mock_rfb import MockRfbServer
from .mock_vnc import MockVncServer

__all__ = ["MockAdbServer", "MockConsoleServer", "MockRfbServer", "MockVncServer"]
