"""Domain model for lab scenarios.

A scenario describes the topology of a mobile lab: Android device nodes
(emulated or physically attached), extra containerized services, the
networks joining them, and the set of platform features each device
enables.
"""

from __future__ import annotations

import enum
import ipaddress
from dataclasses import dataclass, field

DEFAULT_NETWORK_NAME = "default"
DEFAULT_NETWORK_SUBNET = "10.5.0.0/24"


class DeviceKind(enum.Enum):
    EMULATOR = "emulator"
    REAL = "real"


class FeatureFlag(enum.Enum):
    """Platform feature identifiers (F01..F10).

    Documents may use either the bare identifier ("F04") or the readable
    alias ("gps"). Two identifiers have no alias: F08 (feature
    configuration is the scenario document itself) and F10 (physical
    device integration, normally implied by ``kind: real``).
    """

    F01 = "F01"  # virtual device execution, incl. emulator-only SMS automation
    F02 = "F02"  # browser screen access (vnc)
    F03 = "F03"  # adb access (shell, device management)
    F04 = "F04"  # virtualized component config (gps)
    F05 = "F05"  # app management (apk install)
    F06 = "F06"  # data collection (screen recording)
    F07 = "F07"  # network configuration (port forwarding, addressing)
    F08 = "F08"  # feature configuration
    F09 = "F09"  # third-party tool integration
    F10 = "F10"  # physical device integration

    @property
    def alias(self) -> str | None:
        return _ID_TO_ALIAS.get(self)

    @classmethod
    def parse(cls, text: str) -> "FeatureFlag":
        """Resolve a feature identifier or alias to its canonical flag."""
        token = text.strip()
        if token in FEATURE_ALIASES:
            return FEATURE_ALIASES[token]
        try:
            return cls(token.upper())
        except ValueError:
            raise ValueError(f"unknown feature {text!r}") from None


# Readable alias for each feature routed through the platform surface.
# The mapping is bijective: no two aliases share an identifier.
FEATURE_ALIASES: dict[str, FeatureFlag] = {
    "sms-automation": FeatureFlag.F01,
    "vnc": FeatureFlag.F02,
    "adb-shell": FeatureFlag.F03,
    "gps": FeatureFlag.F04,
    "app-install": FeatureFlag.F05,
    "recording": FeatureFlag.F06,
    "port-forward": FeatureFlag.F07,
    "extra-tools": FeatureFlag.F09,
}

_ID_TO_ALIAS = {flag: alias for alias, flag in FEATURE_ALIASES.items()}


class ThreatTag(enum.Enum):
    """Mobile threat-model vocabulary used to tag and audit scenarios."""

    T_P1 = "T.P1"
    T_P2 = "T.P2"
    T_P3 = "T.P3"
    T_P4 = "T.P4"
    T_C1 = "T.C1"
    T_C2 = "T.C2"
    T_A1 = "T.A1"
    T_A2 = "T.A2"
    T_A3 = "T.A3"
    T_A4 = "T.A4"
    T_A5 = "T.A5"
    T_A6 = "T.A6"
    T_D1 = "T.D1"
    T_D2 = "T.D2"

    @classmethod
    def parse(cls, text: str) -> "ThreatTag":
        try:
            return cls(text.strip().upper().replace("T_", "T."))
        except ValueError:
            raise ValueError(f"unknown threat tag {text!r}") from None


class Severity(enum.Enum):
    ERROR = "error"
    WARNING = "warning"


@dataclass(frozen=True)
class Diagnostic:
    """One validation finding, rendered as ``severity: path: message``."""

    severity: Severity
    path: str
    message: str

    def render(self) -> str:
        return f"{self.severity.value}: {self.path}: {self.message}"


@dataclass(frozen=True)
class PortMapping:
    """host:container TCP port pair exposed by a node."""

    host: int
    container: int

    def __str__(self) -> str:
        return f"{self.host}:{self.container}"

    @classmethod
    def parse(cls, text: str) -> "PortMapping":
        parts = str(text).split(":")
        if len(parts) != 2:
            raise ValueError(f"port mapping must be host:container, got {text!r}")
        try:
            host, container = int(parts[0]), int(parts[1])
        except ValueError:
            raise ValueError(f"port mapping must be numeric, got {text!r}") from None
        return cls(host, container)


@dataclass
class DeviceNode:
    """One Android device in the lab, emulated or physically attached."""

    name: str
    kind: DeviceKind = DeviceKind.EMULATOR
    features: set[FeatureFlag] = field(default_factory=set)
    exposed_ports: list[PortMapping] = field(default_factory=list)
    address: str | None = None
    env: dict[str, str] = field(default_factory=dict)
    network: str | None = None


@dataclass
class ExtraService:
    """A third-party container participating in the scenario."""

    name: str
    image: str
    ports: list[PortMapping] = field(default_factory=list)
    volumes: list[str] = field(default_factory=list)
    env: dict[str, str] = field(default_factory=dict)
    privileged: bool = False
    network_mode: str | None = None
    address: str | None = None
    tty: bool = False
    network: str | None = None


@dataclass
class NetworkDef:
    """A named IPv4 network with its subnet in CIDR form.

    The subnet string is preserved verbatim (compose tooling accepts
    non-canonical forms such as 10.5.0.1/24); use :meth:`subnet_network`
    for address arithmetic.
    """

    name: str
    subnet: str

    def subnet_network(self) -> ipaddress.IPv4Network:
        return ipaddress.ip_network(self.subnet, strict=False)


@dataclass
class ScenarioSpec:
    """Validated model of a whole lab scenario."""

    name: str
    devices: list[DeviceNode]
    services: list[ExtraService] = field(default_factory=list)
    networks: list[NetworkDef] = field(default_factory=list)
    version: str = "1"

    def network_named(self, name: str) -> NetworkDef | None:
        for net in self.networks:
            if net.name == name:
                return net
        return None

    def nodes(self) -> list[DeviceNode | ExtraService]:
        """Devices first, then services, both in declaration order."""
        return [*self.devices, *self.services]

    def enabled_features(self) -> set[FeatureFlag]:
        flags: set[FeatureFlag] = set()
        for device in self.devices:
            flags |= device.features
        return flags
