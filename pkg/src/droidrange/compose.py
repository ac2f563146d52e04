"""Compilation of scenario specs into compose documents.

The output is a plain compose file (schema version 3.8) that an external
engine runs. Rendering is canonical: fixed key order, two-space indent,
LF endings, byte-stable across runs so generated files can be diffed and
golden-tested.
"""

from __future__ import annotations

import ipaddress
import re
from dataclasses import dataclass, field

import yaml

from .scenario.model import (
    DeviceKind,
    DeviceNode,
    ExtraService,
    FeatureFlag,
    ScenarioSpec,
)
from .scenario.validate import validate

COMPOSE_VERSION = "3.8"
FEATURE_ENV_PREFIX = "DROIDRANGE_FEATURE_"

_PORT_RE = re.compile(r"^\d+:\d+$")
# scalars matching this render unquoted; everything else is double-quoted
_PLAIN_SCALAR_RE = re.compile(r"^[A-Za-z0-9._/@=:,+-]+$")


class ComposeError(ValueError):
    """Raised when a spec cannot be compiled into a compose document."""


@dataclass(frozen=True)
class CoreImages:
    """Container images used for device nodes.

    Defaults name the published core images; override to pin versions or
    point at a private registry.
    """

    emulator: str = "secsi/dockerized-android-core-emulator"
    real: str = "secsi/dockerized-android-core-real-device"

    def for_kind(self, kind: DeviceKind) -> str:
        return self.real if kind is DeviceKind.REAL else self.emulator


@dataclass
class ServiceEntry:
    image: str
    ports: list[str] = field(default_factory=list)
    volumes: list[str] = field(default_factory=list)
    environment: list[str] = field(default_factory=list)
    privileged: bool = False
    tty: bool = False
    network_mode: str | None = None
    networks: dict[str, dict[str, str]] = field(default_factory=dict)


@dataclass
class NetworkEntry:
    subnet: str


@dataclass
class ComposeDocument:
    version: str = COMPOSE_VERSION
    services: dict[str, ServiceEntry] = field(default_factory=dict)
    networks: dict[str, NetworkEntry] = field(default_factory=dict)

    def check(self) -> None:
        """Raise ``ComposeError`` on any structural invariant violation."""
        addresses: dict[str, set[str]] = {}
        for name, entry in self.services.items():
            for port in entry.ports:
                if not _PORT_RE.match(port):
                    raise ComposeError(f"service {name!r}: bad port string {port!r}")
            for net_name, net_cfg in entry.networks.items():
                if net_name not in self.networks:
                    raise ComposeError(
                        f"service {name!r} references undefined network {net_name!r}"
                    )
                address = net_cfg.get("ipv4_address")
                if address:
                    used = addresses.setdefault(net_name, set())
                    if address in used:
                        raise ComposeError(
                            f"duplicate address {address} on network {net_name!r}"
                        )
                    used.add(address)


def feature_env_name(flag: FeatureFlag) -> str:
    token = (flag.alias or flag.value).upper().replace("-", "_")
    return FEATURE_ENV_PREFIX + token


def feature_flags_from_environment(entries: list[str]) -> set[FeatureFlag]:
    """Recover the feature set from a service's environment entries."""
    by_name = {feature_env_name(flag): flag for flag in FeatureFlag}
    flags: set[FeatureFlag] = set()
    for entry in entries:
        name, _, value = entry.partition("=")
        if name in by_name and value == "true":
            flags.add(by_name[name])
    return flags


def allocate_addresses(spec: ScenarioSpec) -> dict[str, str]:
    """Assign a static IPv4 address to every node that joins a network.

    Explicit addresses are preserved; the rest get the lowest free host
    address per network, starting at .2 (.1 is reserved for the
    gateway), walking nodes in declaration order. Deterministic.
    """
    explicit: dict[str, set[ipaddress.IPv4Address]] = {}
    result: dict[str, str] = {}
    pending: list[tuple[str, str]] = []  # (node name, network name)

    for node in spec.nodes():
        if isinstance(node, ExtraService) and node.network_mode is not None:
            continue
        network_name = node.network or "default"
        net_def = spec.network_named(network_name)
        if net_def is None:
            raise ComposeError(
                f"node {node.name!r} references undefined network {network_name!r}"
            )
        if node.address is not None:
            address = ipaddress.IPv4Address(node.address)
            used = explicit.setdefault(network_name, set())
            if address in used:
                raise ComposeError(
                    f"duplicate explicit address {node.address} on network"
                    f" {network_name!r}"
                )
            used.add(address)
            result[node.name] = node.address
        else:
            pending.append((node.name, network_name))

    cursors: dict[str, ipaddress.IPv4Address] = {}
    for node_name, network_name in pending:
        network = spec.network_named(network_name).subnet_network()
        gateway = network.network_address + 1
        used = explicit.setdefault(network_name, set())
        candidate = cursors.get(network_name, network.network_address + 2)
        while candidate in used or candidate == gateway:
            candidate += 1
        if candidate >= network.broadcast_address:
            raise ComposeError(f"subnet exhausted on network {network_name!r}")
        used.add(candidate)
        cursors[network_name] = candidate + 1
        result[node_name] = str(candidate)
    return result


def generate_compose(
    spec: ScenarioSpec, images: CoreImages | None = None
) -> ComposeDocument:
    """Compile a validated spec into a compose document.

    Device nodes become services running the core image for their kind
    (always privileged: the emulator needs KVM, real-device cores need
    USB access); enabled features become one environment entry each.
    """
    errors = [d for d in validate(spec) if d.severity.value == "error"]
    if errors:
        raise ComposeError(
            "spec has validation errors: " + "; ".join(d.render() for d in errors)
        )

    images = images or CoreImages()
    addresses = allocate_addresses(spec)
    doc = ComposeDocument(version=COMPOSE_VERSION)

    for node in spec.nodes():
        if isinstance(node, DeviceNode):
            entry = ServiceEntry(
                image=images.for_kind(node.kind),
                privileged=True,
                ports=[str(p) for p in node.exposed_ports],
                environment=_device_environment(node),
            )
        else:
            entry = ServiceEntry(
                image=node.image,
                ports=[str(p) for p in node.ports],
                volumes=list(node.volumes),
                environment=[f"{k}={v}" for k, v in node.env.items()],
                privileged=node.privileged,
                tty=node.tty,
                network_mode=node.network_mode,
            )
        if entry.network_mode is None:
            network_name = node.network or "default"
            entry.networks = {network_name: {"ipv4_address": addresses[node.name]}}
        doc.services[node.name] = entry

    for net in spec.networks:
        doc.networks[net.name] = NetworkEntry(subnet=net.subnet)

    doc.check()
    return doc


def _device_environment(node: DeviceNode) -> list[str]:
    entries = [
        f"{feature_env_name(flag)}=true"
        for flag in sorted(node.features, key=lambda f: f.value)
    ]
    entries.extend(f"{k}={v}" for k, v in node.env.items())
    return entries


def render_yaml(doc: ComposeDocument) -> str:
    """Render a compose document to canonical YAML text.

    Key order is fixed (version, services, networks; within a service:
    image, privileged, tty, ports, volumes, environment, network_mode,
    networks) and the output is byte-identical across runs.
    """
    lines: list[str] = [f'version: "{doc.version}"']
    if doc.services:
        lines.append("services:")
        for name, entry in doc.services.items():
            lines.append(f"  {name}:")
            lines.append(f"    image: {_scalar(entry.image)}")
            if entry.privileged:
                lines.append("    privileged: true")
            if entry.tty:
                lines.append("    tty: true")
            if entry.ports:
                lines.append("    ports:")
                lines.extend(f'      - "{port}"' for port in entry.ports)
            if entry.volumes:
                lines.append("    volumes:")
                lines.extend(f"      - {_scalar(v)}" for v in entry.volumes)
            if entry.environment:
                lines.append("    environment:")
                lines.extend(f"      - {_scalar(e)}" for e in entry.environment)
            if entry.network_mode is not None:
                lines.append(f'    network_mode: "{entry.network_mode}"')
            if entry.networks:
                lines.append("    networks:")
                for net_name, net_cfg in entry.networks.items():
                    lines.append(f"      {net_name}:")
                    address = net_cfg.get("ipv4_address")
                    if address:
                        lines.append(f"        ipv4_address: {address}")
    if doc.networks:
        lines.append("networks:")
        for net_name, net_entry in doc.networks.items():
            lines.append(f"  {net_name}:")
            lines.append("    ipam:")
            lines.append("      config:")
            lines.append(f"        - subnet: {_scalar(net_entry.subnet)}")
    return "\n".join(lines) + "\n"


def parse_compose(text: str) -> ComposeDocument:
    """Parse compose YAML back into a :class:`ComposeDocument`.

    Supports the subset this module emits; used for round-trip checks
    and golden-file comparison.
    """
    raw = yaml.safe_load(text)
    if not isinstance(raw, dict):
        raise ComposeError("compose document must be a mapping")
    doc = ComposeDocument(version=str(raw.get("version", COMPOSE_VERSION)))
    for name, svc in (raw.get("services") or {}).items():
        if not isinstance(svc, dict):
            raise ComposeError(f"service {name!r} must be a mapping")
        networks_raw = svc.get("networks") or {}
        networks = {
            net_name: {
                key: str(value) for key, value in (net_cfg or {}).items()
            }
            for net_name, net_cfg in networks_raw.items()
        }
        doc.services[str(name)] = ServiceEntry(
            image=str(svc.get("image", "")),
            ports=[str(p) for p in svc.get("ports") or []],
            volumes=[str(v) for v in svc.get("volumes") or []],
            environment=[str(e) for e in svc.get("environment") or []],
            privileged=bool(svc.get("privileged", False)),
            tty=bool(svc.get("tty", False)),
            network_mode=svc.get("network_mode"),
            networks=networks,
        )
    for name, net in (raw.get("networks") or {}).items():
        config = ((net or {}).get("ipam") or {}).get("config") or []
        subnet = str(config[0]["subnet"]) if config else ""
        doc.networks[str(name)] = NetworkEntry(subnet=subnet)
    doc.check()
    return doc


def _scalar(value: str) -> str:
    if _PLAIN_SCALAR_RE.match(value):
        return value
    escaped = value.replace("\\", "\\\\").replace('"', '\\"')
    return f'"{escaped}"'
