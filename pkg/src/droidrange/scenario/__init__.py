"""Scenario language: model, parser, validation, and threat coverage."""

from .model import (
    DEFAULT_NETWORK_NAME,
    DEFAULT_NETWORK_SUBNET,
    DeviceKind,
    DeviceNode,
    Diagnostic,
    ExtraService,
    FeatureFlag,
    NetworkDef,
    PortMapping,
    ScenarioSpec,
    Severity,
    ThreatTag,
)
from .parse import ScenarioError, parse_scenario, serialize_scenario
from .threats import COVERAGE_RULES, ThreatCoverageReport, threat_coverage
from .validate import validate

__all__ = [
    "COVERAGE_RULES",
    "DEFAULT_NETWORK_NAME",
    "DEFAULT_NETWORK_SUBNET",
    "DeviceKind",
    "DeviceNode",
    "Diagnostic",
    "ExtraService",
    "FeatureFlag",
    "NetworkDef",
    "PortMapping",
    "ScenarioError",
    "ScenarioSpec",
    "Severity",
    "ThreatCoverageReport",
    "ThreatTag",
    "parse_scenario",
    "serialize_scenario",
    "threat_coverage",
    "validate",
]
