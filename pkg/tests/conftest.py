import socket

import pytest

from droidrange.adb import AdbClient
from droidrange.testing import MockAdbServer, MockConsoleServer, MockVncServer


def free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


@pytest.fixture
def adb_server():
    with MockAdbServer() as server:
        yield server
        assert server.wait_idle(), "leaked adb connections"


@pytest.fixture
def adb_pair(adb_server):
    return AdbClient(endpoint=adb_server.endpoint), adb_server


@pytest.fixture
def console_server():
    with MockConsoleServer(token="secret-token") as server:
        yield server


@pytest.fixture
def vnc_server():
    with MockVncServer() as server:
        yield server
