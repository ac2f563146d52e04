"""Rule-driven TCP port forwarder.

Applies a table of bind-to-connect rules, one listener per rule, and
relays accepted connections bidirectionally with 64 KiB buffers.
Half-close propagates independently in each direction, and Nagle
coalescing is disabled on both legs so that low-rate traffic (the
1 byte/s heartbeat case) is never delayed.

The rule file format is one rule per line::

    # bind_addr bind_port connect_addr connect_port
    0.0.0.0 8257 core 8257
"""

from __future__ import annotations

import socket
import threading
from dataclasses import dataclass

_BUFFER = 65536


class RuleError(ValueError):
    """Malformed rule line or rule-table invariant violation."""


class BindConflict(RuleError):
    """A rule's bind endpoint is already taken."""


@dataclass(frozen=True)
class ForwardRule:
    bind_addr: str
    bind_port: int
    connect_addr: str
    connect_port: int

    def __post_init__(self):
        for port in (self.bind_port, self.connect_port):
            if not 1 <= port <= 65535:
                raise RuleError(f"port {port} out of range 1-65535")

    @property
    def key(self) -> tuple[str, int]:
        return (self.bind_addr, self.bind_port)

    @property
    def id(self) -> str:
        return f"{self.bind_addr}:{self.bind_port}"

    def render(self) -> str:
        return (
            f"{self.bind_addr} {self.bind_port}"
            f" {self.connect_addr} {self.connect_port}"
        )

    @classmethod
    def parse(cls, line: str) -> "ForwardRule":
        parts = line.split()
        if len(parts) != 4:
            raise RuleError(
                f"rule must be 'bindaddr bindport connectaddr connectport',"
                f" got {line!r}"
            )
        try:
            return cls(parts[0], int(parts[1]), parts[2], int(parts[3]))
        except ValueError as exc:
            raise RuleError(f"bad rule {line!r}: {exc}") from None


def parse_rules(text: str) -> list[ForwardRule]:
    """Parse a rinetd-style rule file: one rule per line, # comments."""
    rules = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            rules.append(ForwardRule.parse(line))
        except RuleError as exc:
            raise RuleError(f"line {lineno}: {exc}") from None
    return rules


@dataclass(frozen=True)
class ForwardStats:
    rule: ForwardRule
    active: int
    total: int
    bytes: int
    failures: int


class _RuleRuntime:
    def __init__(self, rule: ForwardRule, listener: socket.socket):
        self.rule = rule
        self.listener = listener
        self.lock = threading.Lock()
        self.active = 0
        self.total = 0
        self.bytes = 0
        self.failures = 0
        self.connections: set[socket.socket] = set()
        self.closing = False

    def stats(self) -> ForwardStats:
        with self.lock:
            return ForwardStats(
                rule=self.rule,
                active=self.active,
                total=self.total,
                bytes=self.bytes,
                failures=self.failures,
            )


class PortForwarder:
    """Holds the active rule table and its listeners.

    ``apply_rules`` diff-applies a new table: rules whose bind endpoint
    and target are unchanged keep their listener and any live
    connections; everything else is torn down or created.
    """

    def __init__(self, max_connections_per_rule: int | None = None):
        self.max_connections_per_rule = max_connections_per_rule
        self._runtimes: dict[tuple[str, int], _RuleRuntime] = {}
        self._lock = threading.Lock()

    # -- rule table management ----------------------------------------------

    def apply_rules(
        self, rules: list[ForwardRule]
    ) -> list[tuple[ForwardRule, str]]:
        """Install a new rule table; returns per-rule failures."""
        failures: list[tuple[ForwardRule, str]] = []
        wanted: dict[tuple[str, int], ForwardRule] = {}
        for rule in rules:
            if rule.key in wanted:
                failures.append((rule, f"duplicate bind endpoint {rule.id}"))
                continue
            wanted[rule.key] = rule

        with self._lock:
            current = dict(self._runtimes)
        for key, runtime in current.items():
            if key not in wanted or wanted[key] != runtime.rule:
                self._teardown(key)
        for key, rule in wanted.items():
            with self._lock:
                existing = self._runtimes.get(key)
            if existing is not None and existing.rule == rule:
                continue
            try:
                self._install(rule)
            except OSError as exc:
                failures.append((rule, f"bind failed: {exc}"))
        return failures

    def add_rule(self, rule: ForwardRule) -> str:
        """Install one rule; raises ``BindConflict`` if its bind is taken."""
        with self._lock:
            if rule.key in self._runtimes:
                raise BindConflict(f"bind endpoint {rule.id} already in use")
        try:
            self._install(rule)
        except OSError as exc:
            raise BindConflict(f"bind failed for {rule.id}: {exc}") from exc
        return rule.id

    def remove_rule(self, rule_id: str) -> bool:
        """Remove by id ("bindaddr:bindport"); False if not present."""
        host, sep, port = rule_id.rpartition(":")
        if not sep or not port.isdigit():
            return False
        return self._teardown((host, int(port)))

    def rules(self) -> list[ForwardRule]:
        with self._lock:
            return [rt.rule for rt in self._runtimes.values()]

    def stats(self) -> list[ForwardStats]:
        with self._lock:
            runtimes = list(self._runtimes.values())
        return [rt.stats() for rt in runtimes]

    def stats_for(self, rule_id: str) -> ForwardStats | None:
        for entry in self.stats():
            if entry.rule.id == rule_id:
                return entry
        return None

    def stop(self) -> None:
        with self._lock:
            keys = list(self._runtimes)
        for key in keys:
            self._teardown(key)

    def __enter__(self) -> "PortForwarder":
        return self

    def __exit__(self, *exc) -> None:
        self.stop()

    # -- listener plumbing ----------------------------------------------------

    def _install(self, rule: ForwardRule) -> None:
        listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        try:
            listener.bind((rule.bind_addr, rule.bind_port))
            listener.listen()
        except OSError:
            listener.close()
            raise
        runtime = _RuleRuntime(rule, listener)
        with self._lock:
            self._runtimes[rule.key] = runtime
        threading.Thread(
            target=self._accept_loop,
            args=(runtime,),
            name=f"forward-{rule.bind_port}",
            daemon=True,
        ).start()

    def _teardown(self, key: tuple[str, int]) -> bool:
        with self._lock:
            runtime = self._runtimes.pop(key, None)
        if runtime is None:
            return False
        runtime.closing = True
        # shutdown wakes the thread blocked in accept(); close alone would
        # leave the kernel socket alive behind the blocked syscall
        try:
            runtime.listener.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        try:
            runtime.listener.close()
        except OSError:
            pass
        with runtime.lock:
            conns = list(runtime.connections)
        for conn in conns:
            _force_close(conn)
        return True

    def _accept_loop(self, runtime: _RuleRuntime) -> None:
        while not runtime.closing:
            try:
                client, _ = runtime.listener.accept()
            except OSError:
                return
            cap = self.max_connections_per_rule
            if cap is not None:
                with runtime.lock:
                    over = runtime.active >= cap
                if over:
                    client.close()
                    continue
            threading.Thread(
                target=self._relay,
                args=(runtime, client),
                daemon=True,
            ).start()

    def _relay(self, runtime: _RuleRuntime, client: socket.socket) -> None:
        rule = runtime.rule
        try:
            target = socket.create_connection(
                (rule.connect_addr, rule.connect_port), timeout=5.0
            )
        except OSError:
            with runtime.lock:
                runtime.failures += 1
            client.close()
            return

        # the connect timeout must not linger: idle connections stay open
        target.settimeout(None)
        client.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        target.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        with runtime.lock:
            runtime.total += 1
            runtime.active += 1
            runtime.connections.update((client, target))
        try:
            pumps = [
                threading.Thread(
                    target=_pump, args=(client, target, runtime), daemon=True
                ),
                threading.Thread(
                    target=_pump, args=(target, client, runtime), daemon=True
                ),
            ]
            for pump in pumps:
                pump.start()
            for pump in pumps:
                pump.join()
        finally:
            for sock in (client, target):
                try:
                    sock.close()
                except OSError:
                    pass
            with runtime.lock:
                runtime.active -= 1
                runtime.connections.difference_update((client, target))


def _pump(src: socket.socket, dst: socket.socket, runtime: _RuleRuntime) -> None:
    """Relay one direction until EOF, then propagate the half-close.

    A hard error (reset, closed fd) tears down both sockets so the
    opposite pump cannot linger on a dead connection.
    """
    try:
        while True:
            chunk = src.recv(_BUFFER)
            if not chunk:
                try:
                    dst.shutdown(socket.SHUT_WR)
                except OSError:
                    pass
                return
            dst.sendall(chunk)
            with runtime.lock:
                runtime.bytes += len(chunk)
    except OSError:
        for sock in (src, dst):
            _force_close(sock)


def _force_close(sock: socket.socket) -> None:
    """shutdown + close: wakes any thread blocked in recv on the socket."""
    try:
        sock.shutdown(socket.SHUT_RDWR)
    except OSError:
        pass
    try:
        sock.close()
    except OSError:
        pass
