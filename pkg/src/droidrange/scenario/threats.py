"""Threat coverage analysis.

Four threats have a known mapping from threat to the platform features
that make the threat reproducible in a lab; the mapping is kept verbatim
in :data:`COVERAGE_RULES`. The remaining threat tags are vocabulary only:
no coverage is inferred for them and they always report as uncovered
("no rule").
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .model import FeatureFlag, ScenarioSpec, ThreatTag

# threat -> features that must all be enabled on a single device
COVERAGE_RULES: dict[ThreatTag, frozenset[FeatureFlag]] = {
    ThreatTag.T_D1: frozenset(
        {FeatureFlag.F01, FeatureFlag.F02, FeatureFlag.F08, FeatureFlag.F10}
    ),
    ThreatTag.T_A4: frozenset({FeatureFlag.F02, FeatureFlag.F03}),
    ThreatTag.T_A1: frozenset({FeatureFlag.F07}),
    ThreatTag.T_D2: frozenset({FeatureFlag.F07}),
    ThreatTag.T_P1: frozenset({FeatureFlag.F10}),
}


@dataclass
class ThreatCoverageReport:
    """Which requested threats the scenario can reproduce."""

    covered: dict[ThreatTag, list[FeatureFlag]] = field(default_factory=dict)
    uncovered: list[ThreatTag] = field(default_factory=list)

    def all_covered(self) -> bool:
        return not self.uncovered

    def has_rule(self, tag: ThreatTag) -> bool:
        return tag in COVERAGE_RULES


def threat_coverage(
    spec: ScenarioSpec, requested: list[ThreatTag | str]
) -> ThreatCoverageReport:
    """Report coverage of the requested threats by the spec's features.

    A threat is covered iff some device enables every feature in its
    rule. Tags without a rule are never covered. Raises ``ValueError``
    for an empty request or an unknown tag string.
    """
    if not requested:
        raise ValueError("requested threat list must not be empty")

    tags: list[ThreatTag] = []
    for item in requested:
        tags.append(item if isinstance(item, ThreatTag) else ThreatTag.parse(item))

    device_features = [device.features for device in spec.devices]
    report = ThreatCoverageReport()
    for tag in tags:
        required = COVERAGE_RULES.get(tag)
        if required is not None and any(
            required <= features for features in device_features
        ):
            report.covered[tag] = sorted(required, key=lambda f: f.value)
        elif tag not in report.uncovered and tag not in report.covered:
            report.uncovered.append(tag)
    return report
