"""Semantic validation of scenario specs.

Produces diagnostics instead of raising so that callers (CLI, API) can
report every problem at once. A spec is deployable iff the returned list
contains no error-severity entries.
"""

from __future__ import annotations

import ipaddress

from .model import (
    DeviceKind,
    DeviceNode,
    Diagnostic,
    ExtraService,
    FeatureFlag,
    ScenarioSpec,
    Severity,
)


def validate(spec: ScenarioSpec) -> list[Diagnostic]:
    """Check every model invariant, returning one diagnostic per violation."""
    diags: list[Diagnostic] = []

    if not spec.devices:
        diags.append(_error("devices", "at least one device is required"))

    _check_unique_names(spec, diags)
    _check_networks(spec, diags)

    addresses_by_network: dict[str, dict[str, str]] = {}

    for device in spec.devices:
        path = f"devices.{device.name}"
        if device.kind is DeviceKind.REAL and FeatureFlag.F01 in device.features:
            diags.append(
                _error(
                    f"{path}.features",
                    "feature 'sms-automation' (F01) is unsupported on real devices",
                )
            )
        _check_ports(device.exposed_ports, path, diags)
        _check_placement(spec, device, addresses_by_network, path, diags)

    for service in spec.services:
        path = f"services.{service.name}"
        _check_ports(service.ports, path, diags)
        if service.network_mode is not None:
            if service.address is not None:
                diags.append(
                    _error(
                        f"{path}.address",
                        "address cannot be combined with network_mode",
                    )
                )
            if service.network is not None:
                diags.append(
                    _error(
                        f"{path}.network",
                        "network cannot be combined with network_mode",
                    )
                )
            continue
        _check_placement(spec, service, addresses_by_network, path, diags)

    return diags


def _check_unique_names(spec: ScenarioSpec, diags: list[Diagnostic]) -> None:
    seen: set[str] = set()
    for node in spec.nodes():
        if node.name in seen:
            kind = "devices" if isinstance(node, DeviceNode) else "services"
            diags.append(_error(f"{kind}.{node.name}", f"duplicate name {node.name!r}"))
        seen.add(node.name)
    net_seen: set[str] = set()
    for net in spec.networks:
        if net.name in net_seen:
            diags.append(
                _error(f"networks.{net.name}", f"duplicate network {net.name!r}")
            )
        net_seen.add(net.name)


def _check_networks(spec: ScenarioSpec, diags: list[Diagnostic]) -> None:
    for net in spec.networks:
        path = f"networks.{net.name}"
        try:
            network = net.subnet_network()
        except ValueError:
            diags.append(_error(path, f"invalid subnet {net.subnet!r}"))
            continue
        if network.prefixlen > 30:
            diags.append(
                _error(
                    path,
                    f"subnet {net.subnet} too small: prefix length must be <= 30",
                )
            )


def _check_ports(ports, path: str, diags: list[Diagnostic]) -> None:
    seen_hosts: set[int] = set()
    for mapping in ports:
        for value in (mapping.host, mapping.container):
            if not 1 <= value <= 65535:
                diags.append(
                    _error(f"{path}.ports", f"port {value} out of range 1-65535")
                )
        if mapping.host in seen_hosts:
            diags.append(
                _error(f"{path}.ports", f"duplicate host port {mapping.host}")
            )
        seen_hosts.add(mapping.host)


def _check_placement(
    spec: ScenarioSpec,
    node: DeviceNode | ExtraService,
    addresses_by_network: dict[str, dict[str, str]],
    path: str,
    diags: list[Diagnostic],
) -> None:
    network_name = node.network or "default"
    net_def = spec.network_named(network_name)
    if net_def is None:
        message = (
            f"unknown network {node.network!r}"
            if node.network is not None
            else "no 'default' network defined"
        )
        diags.append(_error(f"{path}.network", message))
        return

    if node.address is None:
        return

    try:
        address = ipaddress.IPv4Address(node.address)
    except ValueError:
        diags.append(_error(f"{path}.address", f"invalid address {node.address!r}"))
        return

    try:
        network = net_def.subnet_network()
    except ValueError:
        return  # already reported against the network
    if address not in network:
        diags.append(
            _error(
                f"{path}.address",
                f"address {node.address} outside subnet {net_def.subnet}",
            )
        )
        return

    taken = addresses_by_network.setdefault(network_name, {})
    if node.address in taken:
        diags.append(
            _error(
                f"{path}.address",
                f"address {node.address} already used by {taken[node.address]!r}",
            )
        )
    else:
        taken[node.address] = node.name


def _error(path: str, message: str) -> Diagnostic:
    return Diagnostic(Severity.ERROR, path, message)
