"""Control API contract tests against the mock ADB and console servers."""

import pytest
from fastapi.testclient import TestClient

from droidrange.adb import AdbClient
from droidrange.api import ApiConfig, create_app, parse_feature_list, route_feature
from droidrange.console import ConsoleSession
from droidrange.forwarder import PortForwarder
from droidrange.scenario import FeatureFlag

from .conftest import free_port


@pytest.fixture
def api(adb_server, console_server):
    """App wired to live mocks, with every feature enabled."""
    config = ApiConfig(adb_endpoint=adb_server.endpoint)
    host, port = console_server.endpoint

    def console_factory(_host, _port):
        return ConsoleSession.connect(host, port, token="secret-token")

    forwarder = PortForwarder()
    app = create_app(
        config,
        adb=AdbClient(endpoint=adb_server.endpoint),
        forwarder=forwarder,
        console_factory=console_factory,
    )
    with TestClient(app) as client:
        yield client, adb_server, console_server
    forwarder.stop()


def make_client(features, adb_server=None, **kwargs):
    config = ApiConfig(
        features=features,
        adb_endpoint=adb_server.endpoint if adb_server else ("127.0.0.1", 1),
    )
    return TestClient(create_app(config, **kwargs))


class TestHealth:
    def test_reports_enabled_features(self):
        client = make_client({FeatureFlag.F02, FeatureFlag.F04})
        body = client.get("/health").json()
        assert body["status"] == "ok"
        assert body["features"] == ["F02", "F04"]

    def test_version_matches_package(self):
        import droidrange

        client = make_client(set())
        assert client.get("/health").json()["version"] == droidrange.__version__

    def test_always_200(self):
        client = make_client(set())
        for _ in range(50):
            assert client.get("/health").status_code == 200


class TestDevices:
    def test_lists_mock_devices(self, api):
        client, _, _ = api
        response = client.get("/devices")
        assert response.status_code == 200
        assert response.json() == [{"serial": "emulator-5554", "state": "device"}]

    def test_empty_list(self, api):
        client, adb_server, _ = api
        adb_server.devices = []
        response = client.get("/devices")
        assert response.status_code == 200
        assert response.json() == []

    def test_adb_down_502(self):
        client = make_client(set(FeatureFlag))
        response = client.get("/devices")
        assert response.status_code == 502
        assert response.json()["code"] == "adb_unreachable"


class TestSms:
    def test_emulator_ok(self, api):
        client, _, console_server = api
        response = client.post(
            "/devices/emulator-5554/sms",
            json={"sender": "5551234", "text": "click http://evil.example"},
        )
        assert response.status_code == 200
        assert response.json() == {"status": "OK"}
        assert console_server.sms_log == [("5551234", "click http://evil.example")]

    def test_real_device_409(self, api):
        client, _, _ = api
        response = client.post(
            "/devices/0123456789ABCDEF/sms",
            json={"sender": "5551234", "text": "hi"},
        )
        assert response.status_code == 409
        assert response.json()["code"] == "unsupported_on_real_device"

    def test_feature_disabled_404(self, api):
        client, _, _ = api
        disabled = make_client(set(FeatureFlag) - {FeatureFlag.F01})
        response = disabled.post(
            "/devices/emulator-5554/sms", json={"sender": "1", "text": "x"}
        )
        assert response.status_code == 404
        assert response.json()["code"] == "feature_disabled"

    def test_console_ko_502(self, api):
        client, _, console_server = api
        console_server.ko_commands["sms send"] = "sms emulation disabled"
        response = client.post(
            "/devices/emulator-5554/sms", json={"sender": "1", "text": "x"}
        )
        assert response.status_code == 502
        assert response.json()["code"] == "console_error"
        assert "sms emulation disabled" in response.json()["message"]

    def test_multiline_text_422(self, api):
        client, _, _ = api
        response = client.post(
            "/devices/emulator-5554/sms", json={"sender": "1", "text": "a\nb"}
        )
        assert response.status_code == 422
        assert response.json()["code"] == "validation_error"


class TestGeo:
    def test_fix_ok(self, api):
        client, _, console_server = api
        response = client.post(
            "/devices/emulator-5554/geo",
            json={"longitude": -122.084, "latitude": 37.422},
        )
        assert response.status_code == 200
        assert console_server.geo_log == ["-122.084 37.422"]

    def test_latitude_out_of_range_422(self, api):
        client, _, _ = api
        response = client.post(
            "/devices/emulator-5554/geo", json={"longitude": 0, "latitude": 91}
        )
        assert response.status_code == 422
        assert response.json()["code"] == "validation_error"

    def test_console_ko_502_with_reason(self, api):
        client, _, console_server = api
        console_server.ko_commands["geo fix"] = "geo fix unavailable"
        response = client.post(
            "/devices/emulator-5554/geo", json={"longitude": 1, "latitude": 2}
        )
        assert response.status_code == 502
        assert "geo fix unavailable" in response.json()["message"]

    def test_real_device_409(self, api):
        client, _, _ = api
        response = client.post(
            "/devices/realserial/geo", json={"longitude": 1, "latitude": 2}
        )
        assert response.status_code == 409


class TestApps:
    def test_install_success_201(self, api):
        client, adb_server, _ = api
        response = client.post(
            "/devices/emulator-5554/apps", content=b"PK\x03\x04fake"
        )
        assert response.status_code == 201
        assert "Success" in response.json()["output"]

    def test_pm_failure_502_with_code(self, api):
        client, adb_server, _ = api
        adb_server.pm_output = b"Failure [INSTALL_FAILED_OLDER_SDK]\n"
        response = client.post(
            "/devices/emulator-5554/apps", content=b"PK\x03\x04fake"
        )
        assert response.status_code == 502
        assert "INSTALL_FAILED_OLDER_SDK" in response.json()["message"]
        assert response.json()["code"] == "install_failed"

    def test_empty_body_400(self, api):
        client, _, _ = api
        response = client.post("/devices/emulator-5554/apps", content=b"")
        assert response.status_code == 400
        assert response.json()["code"] == "invalid_request"


class TestShell:
    def test_echo(self, api):
        client, _, _ = api
        response = client.post(
            "/devices/emulator-5554/shell", json={"command": "echo hi"}
        )
        assert response.status_code == 200
        assert response.json() == {"output": "hi\n"}

    def test_unknown_serial_502(self, api):
        client, _, _ = api
        response = client.post("/devices/ghost/shell", json={"command": "echo hi"})
        assert response.status_code == 502
        assert response.json()["code"] == "adb_error"

    def test_empty_command_400(self, api):
        client, _, _ = api
        response = client.post("/devices/emulator-5554/shell", json={"command": ""})
        assert response.status_code == 400

    def test_output_capped_413(self, api):
        client, adb_server, _ = api
        adb_server.shell_outputs["bigdump"] = b"x" * ((1 << 20) + 1)
        response = client.post(
            "/devices/emulator-5554/shell", json={"command": "bigdump"}
        )
        assert response.status_code == 413
        assert response.json()["code"] == "output_too_large"


class TestRecordings:
    def test_returns_video_bytes(self, api):
        client, _, _ = api
        response = client.post(
            "/devices/emulator-5554/recordings", json={"duration": 5}
        )
        assert response.status_code == 200
        assert response.headers["content-type"] == "video/mp4"
        assert response.content == b"\x00\x01\x02\x03"

    @pytest.mark.parametrize("duration", [0, 181])
    def test_duration_out_of_range_422(self, api, duration):
        client, _, _ = api
        response = client.post(
            "/devices/emulator-5554/recordings", json={"duration": duration}
        )
        assert response.status_code == 422


class TestForwardRules:
    def rule_body(self, port, target_port):
        return {
            "bind_addr": "127.0.0.1",
            "bind_port": port,
            "connect_addr": "127.0.0.1",
            "connect_port": target_port,
        }

    def test_crud_cycle(self, api):
        client, _, _ = api
        port = free_port()
        created = client.post("/forward-rules", json=self.rule_body(port, 18257))
        assert created.status_code == 201
        rule_id = created.json()["id"]
        assert rule_id == f"127.0.0.1:{port}"

        listing = client.get("/forward-rules")
        assert [r["id"] for r in listing.json()] == [rule_id]

        assert client.delete(f"/forward-rules/{rule_id}").status_code == 204
        assert client.get("/forward-rules").json() == []

    def test_duplicate_bind_409(self, api):
        client, _, _ = api
        port = free_port()
        assert (
            client.post("/forward-rules", json=self.rule_body(port, 1)).status_code
            == 201
        )
        response = client.post("/forward-rules", json=self.rule_body(port, 2))
        assert response.status_code == 409
        assert response.json()["code"] == "bind_conflict"
        client.delete(f"/forward-rules/127.0.0.1:{port}")

    def test_delete_unknown_404(self, api):
        client, _, _ = api
        response = client.delete("/forward-rules/127.0.0.1:65000")
        assert response.status_code == 404

    def test_invalid_port_422(self, api):
        client, _, _ = api
        response = client.post("/forward-rules", json=self.rule_body(0, 1))
        assert response.status_code == 422


class TestBridgeStats:
    def test_empty_without_bridge(self):
        client = make_client(set(FeatureFlag))
        body = client.get("/bridge/sessions").json()
        assert body == {"active": 0, "sessions": []}


class TestFeatureGating:
    GATED_ROUTES = [
        ("GET", "/devices", FeatureFlag.F03),
        ("POST", "/devices/emulator-5554/shell", FeatureFlag.F03),
        ("POST", "/devices/emulator-5554/sms", FeatureFlag.F01),
        ("POST", "/devices/emulator-5554/geo", FeatureFlag.F04),
        ("POST", "/devices/emulator-5554/apps", FeatureFlag.F05),
        ("POST", "/devices/emulator-5554/recordings", FeatureFlag.F06),
        ("GET", "/forward-rules", FeatureFlag.F07),
        ("POST", "/forward-rules", FeatureFlag.F07),
        ("DELETE", "/forward-rules/127.0.0.1:1", FeatureFlag.F07),
        ("GET", "/bridge/sessions", FeatureFlag.F02),
    ]

    def test_route_feature_table(self):
        for _, path, flag in self.GATED_ROUTES:
            assert route_feature(path) is flag
        assert route_feature("/health") is None

    def test_disabled_features_404_every_method(self, adb_server):
        for method, path, flag in self.GATED_ROUTES:
            client = make_client(set(FeatureFlag) - {flag}, adb_server=adb_server)
            for try_method in {"GET", "POST", "DELETE", method}:
                response = client.request(try_method, path)
                assert response.status_code == 404, (try_method, path)
                assert response.json()["code"] == "feature_disabled"

    def test_enabled_routes_never_feature_404(self, adb_server):
        client = make_client(set(FeatureFlag), adb_server=adb_server)
        for method, path, _ in self.GATED_ROUTES:
            response = client.request(method, path)
            if response.status_code == 404:
                assert response.json()["code"] != "feature_disabled", path


class TestErrorBodies:
    def test_unknown_path_uses_error_schema(self):
        client = make_client(set(FeatureFlag))
        response = client.get("/no-such-route")
        assert response.status_code == 404
        body = response.json()
        assert set(body) == {"code", "message"}
        assert body["code"] == "not_found"

    def test_wrong_method_uses_error_schema(self):
        client = make_client(set(FeatureFlag))
        response = client.delete("/health")
        assert response.status_code == 405
        assert response.json()["code"] == "method_not_allowed"

    def test_malformed_json_is_validation_error(self, adb_server):
        client = make_client(set(FeatureFlag), adb_server=adb_server)
        response = client.post(
            "/devices/emulator-5554/shell",
            content=b"not json",
            headers={"content-type": "application/json"},
        )
        assert response.status_code == 422
        assert response.json()["code"] == "validation_error"


class TestStatelessness:
    def test_restart_with_same_config_reproduces_behavior(self, adb_server):
        def boot():
            config = ApiConfig(
                adb_endpoint=adb_server.endpoint,
                features={FeatureFlag.F02, FeatureFlag.F03},
            )
            client = TestClient(
                create_app(config, adb=AdbClient(endpoint=adb_server.endpoint))
            )
            return client.get("/health").json(), client.get("/devices").json()

        first_health, first_devices = boot()
        second_health, second_devices = boot()
        assert first_health == second_health
        assert first_devices == second_devices


class TestOpenApiDocument:
    def test_shipped_document_matches_app(self):
        import json
        from pathlib import Path

        from droidrange.api import create_app

        shipped = json.loads(
            (Path(__file__).resolve().parent.parent / "docs" / "openapi.json")
            .read_text()
        )
        live = create_app().openapi()
        assert sorted(shipped["paths"]) == sorted(live["paths"])
        assert shipped["info"]["version"] == live["info"]["version"]


class TestConfig:
    def test_parse_feature_list_aliases_and_ids(self):
        flags = parse_feature_list("gps, adb-shell,F08")
        assert flags == {FeatureFlag.F04, FeatureFlag.F03, FeatureFlag.F08}

    def test_from_env(self, monkeypatch):
        monkeypatch.setenv("DROIDRANGE_API_ADDR", "0.0.0.0:9999")
        monkeypatch.setenv("DROIDRANGE_FEATURES", "vnc,gps")
        config = ApiConfig.from_env()
        assert config.listen == ("0.0.0.0", 9999)
        assert config.features == {FeatureFlag.F02, FeatureFlag.F04}
