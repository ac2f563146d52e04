"""Compose generation: address allocation, rendering, golden comparison."""

import ipaddress
from pathlib import Path

import pytest
import yaml
from hypothesis import given

from droidrange.compose import (
    ComposeDocument,
    ComposeError,
    CoreImages,
    NetworkEntry,
    ServiceEntry,
    allocate_addresses,
    feature_env_name,
    feature_flags_from_environment,
    generate_compose,
    parse_compose,
    render_yaml,
)
from droidrange.scenario import (
    DeviceNode,
    ExtraService,
    FeatureFlag,
    NetworkDef,
    ScenarioSpec,
    parse_scenario,
)

from .specgen import feature_sets, scenario_specs

ROOT = Path(__file__).resolve().parent.parent
GOLDEN = ROOT / "tests" / "fixtures" / "blueborne-compose.yaml"


def blueborne_spec():
    return parse_scenario((ROOT / "scenarios" / "blueborne.yaml").read_text())


def simple_spec(**device_kwargs):
    return ScenarioSpec(
        name="lab",
        devices=[DeviceNode(name="phone", **device_kwargs)],
        networks=[NetworkDef("default", "10.5.0.0/24")],
    )


class TestAddressAllocation:
    def test_sequential_from_dot_two(self):
        spec = ScenarioSpec(
            name="lab",
            devices=[DeviceNode(name=f"n{i}") for i in range(4)],
            networks=[NetworkDef("default", "10.5.0.1/24")],
        )
        assert allocate_addresses(spec) == {
            "n0": "10.5.0.2",
            "n1": "10.5.0.3",
            "n2": "10.5.0.4",
            "n3": "10.5.0.5",
        }

    def test_explicit_address_preserved(self):
        spec = simple_spec(address="10.5.0.2")
        assert allocate_addresses(spec) == {"phone": "10.5.0.2"}

    def test_explicit_addresses_never_reassigned(self):
        spec = ScenarioSpec(
            name="lab",
            devices=[
                DeviceNode(name="a"),
                DeviceNode(name="b", address="10.5.0.2"),
            ],
            networks=[NetworkDef("default", "10.5.0.0/24")],
        )
        assert allocate_addresses(spec) == {"b": "10.5.0.2", "a": "10.5.0.3"}

    def test_subnet_exhausted(self):
        spec = ScenarioSpec(
            name="lab",
            devices=[DeviceNode(name=f"n{i}") for i in range(3)],
            networks=[NetworkDef("default", "10.9.0.0/30")],
        )
        with pytest.raises(ComposeError, match="subnet exhausted"):
            allocate_addresses(spec)

    def test_duplicate_explicit_address(self):
        spec = ScenarioSpec(
            name="lab",
            devices=[
                DeviceNode(name="a", address="10.5.0.2"),
                DeviceNode(name="b", address="10.5.0.2"),
            ],
            networks=[NetworkDef("default", "10.5.0.0/24")],
        )
        with pytest.raises(ComposeError, match="duplicate explicit address"):
            allocate_addresses(spec)

    def test_host_network_services_not_allocated(self):
        spec = ScenarioSpec(
            name="lab",
            devices=[DeviceNode(name="phone")],
            services=[
                ExtraService(name="svc", image="img", network_mode="host")
            ],
            networks=[NetworkDef("default", "10.5.0.0/24")],
        )
        assert allocate_addresses(spec) == {"phone": "10.5.0.2"}


class TestGenerate:
    def test_blueborne_matches_golden_bytes(self):
        text = render_yaml(generate_compose(blueborne_spec()))
        assert text == GOLDEN.read_text()

    def test_blueborne_matches_golden_fields(self):
        rendered = yaml.safe_load(render_yaml(generate_compose(blueborne_spec())))
        golden = yaml.safe_load(GOLDEN.read_text())
        assert rendered == golden

    def test_blueborne_structure(self):
        doc = generate_compose(blueborne_spec())
        assert len(doc.services) == 5
        assert doc.services["ui"].ports == ["8080:80"]
        assert doc.services["attacker_phishing"].ports == ["3333:3333", "8081:8080"]
        host_net = [
            s for s in doc.services.values()
            if s.network_mode == "host" and s.privileged
        ]
        assert len(host_net) == 1
        assert doc.networks["blueborne-net"].subnet == "10.5.0.1/24"

    def test_single_emulator_device(self):
        doc = generate_compose(simple_spec())
        assert list(doc.services) == ["phone"]
        entry = doc.services["phone"]
        assert entry.image == CoreImages().emulator
        assert entry.privileged
        assert list(doc.networks) == ["default"]

    def test_core_images_configurable(self):
        images = CoreImages(emulator="local/emu:1", real="local/real:1")
        doc = generate_compose(simple_spec(), images=images)
        assert doc.services["phone"].image == "local/emu:1"

    def test_gps_feature_becomes_environment_entry(self):
        doc = generate_compose(simple_spec(features={FeatureFlag.F04}))
        assert doc.services["phone"].environment == ["DROIDRANGE_FEATURE_GPS=true"]

    def test_invalid_spec_rejected(self):
        spec = simple_spec(address="10.99.0.1")
        with pytest.raises(ComposeError, match="validation errors"):
            generate_compose(spec)

    @given(features=feature_sets)
    def test_feature_fidelity(self, features):
        doc = generate_compose(simple_spec(features=set(features)))
        recovered = feature_flags_from_environment(
            doc.services["phone"].environment
        )
        assert recovered == set(features)

    @given(spec=scenario_specs())
    def test_addresses_inside_declared_subnets(self, spec):
        doc = generate_compose(spec)
        seen: dict[str, set[str]] = {}
        for entry in doc.services.values():
            for net_name, net_cfg in entry.networks.items():
                address = net_cfg["ipv4_address"]
                subnet = ipaddress.ip_network(
                    doc.networks[net_name].subnet, strict=False
                )
                assert ipaddress.ip_address(address) in subnet
                assert address not in seen.setdefault(net_name, set())
                seen[net_name].add(address)


class TestRender:
    def test_deterministic(self):
        spec = blueborne_spec()
        outputs = {render_yaml(generate_compose(spec)) for _ in range(5)}
        assert len(outputs) == 1

    def test_empty_document(self):
        assert render_yaml(ComposeDocument()) == 'version: "3.8"\n'

    def test_render_parse_render_fixpoint(self):
        text = render_yaml(generate_compose(blueborne_spec()))
        assert render_yaml(parse_compose(text)) == text

    @given(spec=scenario_specs())
    def test_round_trip_property(self, spec):
        text = render_yaml(generate_compose(spec))
        assert render_yaml(parse_compose(text)) == text

    def test_quoting_of_awkward_scalars(self):
        doc = ComposeDocument(
            services={
                "svc": ServiceEntry(image="img", environment=["GREETING=hello world"])
            },
        )
        text = render_yaml(doc)
        assert '- "GREETING=hello world"' in text
        assert parse_compose(text).services["svc"].environment == [
            "GREETING=hello world"
        ]


class TestDocumentInvariants:
    def test_bad_port_string(self):
        doc = ComposeDocument(
            services={"s": ServiceEntry(image="i", ports=["8080:80:1"])}
        )
        with pytest.raises(ComposeError, match="bad port string"):
            doc.check()

    def test_undefined_network_reference(self):
        doc = ComposeDocument(
            services={
                "s": ServiceEntry(
                    image="i", networks={"ghost": {"ipv4_address": "10.0.0.2"}}
                )
            }
        )
        with pytest.raises(ComposeError, match="undefined network"):
            doc.check()

    def test_duplicate_static_address(self):
        doc = ComposeDocument(
            services={
                "a": ServiceEntry(
                    image="i", networks={"net": {"ipv4_address": "10.0.0.2"}}
                ),
                "b": ServiceEntry(
                    image="i", networks={"net": {"ipv4_address": "10.0.0.2"}}
                ),
            },
            networks={"net": NetworkEntry(subnet="10.0.0.0/24")},
        )
        with pytest.raises(ComposeError, match="duplicate address"):
            doc.check()
