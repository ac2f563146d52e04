"""Parsing and serialization of scenario documents.

The surface syntax is YAML with a fixed shape (see docs/scenario-format.md
for the grammar). Parsing is strict: unknown keys, duplicate names, and
unknown feature names are rejected with positioned errors. Semantic
checks that produce diagnostics rather than hard failures live in
:mod:`droidrange.scenario.validate`.
"""

from __future__ import annotations

import re
from typing import Any

import yaml

from .model import (
    DEFAULT_NETWORK_NAME,
    DEFAULT_NETWORK_SUBNET,
    DeviceKind,
    DeviceNode,
    ExtraService,
    FeatureFlag,
    NetworkDef,
    PortMapping,
    ScenarioSpec,
)

_IDENTIFIER_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9_.-]*$")

_DEVICE_KEYS = {"name", "kind", "features", "ports", "address", "env", "network"}
_SERVICE_KEYS = {
    "name",
    "image",
    "ports",
    "volumes",
    "env",
    "privileged",
    "network_mode",
    "address",
    "tty",
    "network",
}
_NETWORK_KEYS = {"name", "subnet"}
_TOP_KEYS = {"version", "name", "devices", "services", "networks"}


class ScenarioError(ValueError):
    """Raised for malformed scenario documents.

    ``location`` is a human-readable position: either "line L, column C"
    for syntax errors or a document path such as "devices[0].features".
    """

    def __init__(self, message: str, location: str | None = None):
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)


def parse_scenario(text: str) -> ScenarioSpec:
    """Parse a scenario document into a :class:`ScenarioSpec`.

    Devices and services that reference no network join an implicit
    network named "default" (10.5.0.0/24), which is added to the spec
    unless the document already defines a network of that name.
    """
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        location = None
        mark = getattr(exc, "problem_mark", None)
        if mark is not None:
            location = f"line {mark.line + 1}, column {mark.column + 1}"
        raise ScenarioError(f"invalid YAML: {exc}", location) from exc

    if raw is None:
        raise ScenarioError("empty document")
    if not isinstance(raw, dict):
        raise ScenarioError("top level must be a mapping")

    _reject_unknown_keys(raw, _TOP_KEYS, "document")

    version = str(raw.get("version", "1"))
    name = _identifier(raw.get("name", "lab"), "name")

    devices = [
        _parse_device(entry, f"devices[{i}]")
        for i, entry in enumerate(_node_list(raw, "devices"))
    ]
    if not devices:
        raise ScenarioError("at least one device is required", "devices")

    services = [
        _parse_service(entry, f"services[{i}]")
        for i, entry in enumerate(_node_list(raw, "services"))
    ]
    networks = [
        _parse_network(entry, f"networks[{i}]")
        for i, entry in enumerate(_node_list(raw, "networks"))
    ]

    _reject_duplicate_names(devices, services, networks)

    spec = ScenarioSpec(
        name=name,
        devices=devices,
        services=services,
        networks=networks,
        version=version,
    )
    _ensure_default_network(spec)
    return spec


def serialize_scenario(spec: ScenarioSpec) -> str:
    """Render a spec back to its document form.

    The output round-trips: ``parse_scenario(serialize_scenario(spec))``
    equals ``spec`` for any spec produced by :func:`parse_scenario`.
    """
    doc: dict[str, Any] = {"version": spec.version, "name": spec.name}
    doc["devices"] = [_device_to_doc(device) for device in spec.devices]
    if spec.services:
        doc["services"] = [_service_to_doc(service) for service in spec.services]
    if spec.networks:
        doc["networks"] = [
            {"name": net.name, "subnet": net.subnet} for net in spec.networks
        ]
    return yaml.safe_dump(doc, sort_keys=False, default_flow_style=False)


def _node_list(raw: dict, key: str) -> list[dict]:
    value = raw.get(key, [])
    if value is None:
        return []
    if not isinstance(value, list):
        raise ScenarioError("expected a list", key)
    for i, entry in enumerate(value):
        if not isinstance(entry, dict):
            raise ScenarioError("expected a mapping", f"{key}[{i}]")
    return value


def _reject_unknown_keys(entry: dict, allowed: set[str], path: str) -> None:
    unknown = [str(k) for k in entry if k not in allowed]
    if unknown:
        raise ScenarioError(f"unknown key {unknown[0]!r}", path)


def _identifier(value: Any, path: str) -> str:
    if not isinstance(value, str) or not _IDENTIFIER_RE.match(value):
        raise ScenarioError(f"invalid identifier {value!r}", path)
    return value


def _parse_device(entry: dict, path: str) -> DeviceNode:
    _reject_unknown_keys(entry, _DEVICE_KEYS, path)
    name = _identifier(entry.get("name"), f"{path}.name")

    kind_text = entry.get("kind", "emulator")
    try:
        kind = DeviceKind(kind_text)
    except ValueError:
        raise ScenarioError(
            f"kind must be 'emulator' or 'real', got {kind_text!r}", f"{path}.kind"
        ) from None

    features: set[FeatureFlag] = set()
    for i, token in enumerate(_string_list(entry.get("features"), f"{path}.features")):
        try:
            features.add(FeatureFlag.parse(token))
        except ValueError as exc:
            raise ScenarioError(str(exc), f"{path}.features[{i}]") from None

    if kind is DeviceKind.REAL and FeatureFlag.F01 in features:
        raise ScenarioError(
            "feature 'sms-automation' (F01) is unsupported on real devices",
            f"{path}.features",
        )

    return DeviceNode(
        name=name,
        kind=kind,
        features=features,
        exposed_ports=_parse_ports(entry.get("ports"), path),
        address=_optional_str(entry.get("address"), f"{path}.address"),
        env=_parse_env(entry.get("env"), f"{path}.env"),
        network=_optional_str(entry.get("network"), f"{path}.network"),
    )


def _parse_service(entry: dict, path: str) -> ExtraService:
    _reject_unknown_keys(entry, _SERVICE_KEYS, path)
    name = _identifier(entry.get("name"), f"{path}.name")
    image = entry.get("image")
    if not isinstance(image, str) or not image:
        raise ScenarioError("service requires an image", f"{path}.image")
    return ExtraService(
        name=name,
        image=image,
        ports=_parse_ports(entry.get("ports"), path),
        volumes=_string_list(entry.get("volumes"), f"{path}.volumes"),
        env=_parse_env(entry.get("env"), f"{path}.env"),
        privileged=_parse_bool(entry.get("privileged", False), f"{path}.privileged"),
        network_mode=_optional_str(entry.get("network_mode"), f"{path}.network_mode"),
        address=_optional_str(entry.get("address"), f"{path}.address"),
        tty=_parse_bool(entry.get("tty", False), f"{path}.tty"),
        network=_optional_str(entry.get("network"), f"{path}.network"),
    )


def _parse_network(entry: dict, path: str) -> NetworkDef:
    _reject_unknown_keys(entry, _NETWORK_KEYS, path)
    name = _identifier(entry.get("name"), f"{path}.name")
    subnet = entry.get("subnet")
    if not isinstance(subnet, str) or "/" not in subnet:
        raise ScenarioError("network requires a CIDR subnet", f"{path}.subnet")
    return NetworkDef(name=name, subnet=subnet)


def _parse_ports(value: Any, path: str) -> list[PortMapping]:
    mappings = []
    for i, token in enumerate(_string_list(value, f"{path}.ports")):
        try:
            mappings.append(PortMapping.parse(token))
        except ValueError as exc:
            raise ScenarioError(str(exc), f"{path}.ports[{i}]") from None
    return mappings


def _parse_env(value: Any, path: str) -> dict[str, str]:
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ScenarioError("env must be a mapping", path)
    return {str(key): _scalar_to_str(val) for key, val in value.items()}


def _parse_bool(value: Any, path: str) -> bool:
    if not isinstance(value, bool):
        raise ScenarioError(f"expected true/false, got {value!r}", path)
    return value


def _optional_str(value: Any, path: str) -> str | None:
    if value is None:
        return None
    if not isinstance(value, str) or not value:
        raise ScenarioError(f"expected a string, got {value!r}", path)
    return value


def _string_list(value: Any, path: str) -> list[str]:
    if value is None:
        return []
    if not isinstance(value, list):
        raise ScenarioError("expected a list", path)
    out = []
    for i, item in enumerate(value):
        if isinstance(item, (str, int)):
            out.append(str(item))
        else:
            raise ScenarioError(f"expected a string, got {item!r}", f"{path}[{i}]")
    return out


def _scalar_to_str(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def _reject_duplicate_names(devices, services, networks) -> None:
    seen: set[str] = set()
    for node in [*devices, *services]:
        if node.name in seen:
            raise ScenarioError(f"duplicate name {node.name!r}")
        seen.add(node.name)
    net_names: set[str] = set()
    for net in networks:
        if net.name in net_names:
            raise ScenarioError(f"duplicate network {net.name!r}")
        net_names.add(net.name)


def _ensure_default_network(spec: ScenarioSpec) -> None:
    needs_default = any(d.network is None for d in spec.devices) or any(
        s.network is None and s.network_mode is None for s in spec.services
    )
    if needs_default and spec.network_named(DEFAULT_NETWORK_NAME) is None:
        spec.networks.append(
            NetworkDef(name=DEFAULT_NETWORK_NAME, subnet=DEFAULT_NETWORK_SUBNET)
        )


def _device_to_doc(device: DeviceNode) -> dict[str, Any]:
    doc: dict[str, Any] = {"name": device.name, "kind": device.kind.value}
    if device.features:
        doc["features"] = sorted(
            (flag.alias or flag.value) for flag in device.features
        )
    if device.exposed_ports:
        doc["ports"] = [str(p) for p in device.exposed_ports]
    if device.address:
        doc["address"] = device.address
    if device.env:
        doc["env"] = dict(device.env)
    if device.network:
        doc["network"] = device.network
    return doc


def _service_to_doc(service: ExtraService) -> dict[str, Any]:
    doc: dict[str, Any] = {"name": service.name, "image": service.image}
    if service.ports:
        doc["ports"] = [str(p) for p in service.ports]
    if service.volumes:
        doc["volumes"] = list(service.volumes)
    if service.env:
        doc["env"] = dict(service.env)
    if service.privileged:
        doc["privileged"] = True
    if service.tty:
        doc["tty"] = True
    if service.network_mode:
        doc["network_mode"] = service.network_mode
    if service.address:
        doc["address"] = service.address
    if service.network:
        doc["network"] = service.network
    return doc
