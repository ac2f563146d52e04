"""HTTP control API unifying device, console, bridge, and forwarder access.

One JSON-over-HTTP surface for browser UIs and third-party tools. Routes
are feature-gated: a route whose feature is not in the configured set
answers 404 for every method, so disabled capability is indistinguishable
from absent capability. Error bodies always follow the same shape::

    {"code": "<machine-string>", "message": "<human text>"}

Machine codes form a closed set: feature_disabled, not_found,
method_not_allowed, validation_error, invalid_request,
unsupported_on_real_device, adb_unreachable, adb_error, install_failed,
console_error, output_too_large, bind_conflict, http_error.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field
from typing import Callable

from fastapi import FastAPI, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel
from starlette.exceptions import HTTPException as StarletteHTTPException

from . import __version__
from .adb import AdbClient, AdbConnectionError, AdbFailure, InstallError
from .bridge import ScreenBridge
from .console import ConsoleError, ConsoleSession, GeoFix
from .forwarder import BindConflict, ForwardRule, PortForwarder, RuleError
from .scenario.model import FeatureFlag

API_ADDR_ENV_VAR = "DROIDRANGE_API_ADDR"
FEATURES_ENV_VAR = "DROIDRANGE_FEATURES"

SHELL_OUTPUT_CAP = 1 << 20  # bytes of shell output returned per request
_EMULATOR_SERIAL_RE = re.compile(r"^emulator-(\d+)$")


@dataclass
class ApiConfig:
    """Service wiring: where to listen and which backends to talk to."""

    listen: tuple[str, int] = ("127.0.0.1", 8000)
    adb_endpoint: str | tuple[str, int] | None = None
    console_host: str = "127.0.0.1"
    console_port: int | None = None  # None: derive from the emulator serial
    token_file: str | None = None
    features: set[FeatureFlag] = field(default_factory=lambda: set(FeatureFlag))
    cors_allowed_origins: list[str] = field(default_factory=lambda: ["*"])

    @classmethod
    def from_env(cls) -> "ApiConfig":
        """Build a config from DROIDRANGE_* environment variables."""
        config = cls()
        addr = os.environ.get(API_ADDR_ENV_VAR)
        if addr:
            host, _, port = addr.rpartition(":")
            config.listen = (host or "127.0.0.1", int(port))
        raw = os.environ.get(FEATURES_ENV_VAR)
        if raw is not None:
            config.features = parse_feature_list(raw)
        return config


def parse_feature_list(raw: str) -> set[FeatureFlag]:
    """Parse a comma-joined list of feature aliases or identifiers."""
    flags: set[FeatureFlag] = set()
    for token in raw.split(","):
        token = token.strip()
        if token:
            flags.add(FeatureFlag.parse(token))
    return flags


def features_from_environ(environ=os.environ) -> set[FeatureFlag] | None:
    """Read features from the env: the joined form, else per-feature vars.

    The per-feature variables are the ones the compose generator emits
    into core services, so a generated lab configures its own API.
    """
    raw = environ.get(FEATURES_ENV_VAR)
    if raw is not None:
        return parse_feature_list(raw)
    from .compose import feature_env_name

    flags = {
        flag for flag in FeatureFlag if environ.get(feature_env_name(flag)) == "true"
    }
    return flags or None


class ApiError(Exception):
    """Carries the machine code, human message, and HTTP status."""

    def __init__(self, status: int, code: str, message: str):
        self.status = status
        self.code = code
        self.message = message
        super().__init__(message)


# gating table: first match wins, every HTTP method is covered
_ROUTE_FEATURES: list[tuple[re.Pattern, FeatureFlag]] = [
    (re.compile(r"^/devices/[^/]+/sms$"), FeatureFlag.F01),
    (re.compile(r"^/devices/[^/]+/geo$"), FeatureFlag.F04),
    (re.compile(r"^/devices/[^/]+/apps$"), FeatureFlag.F05),
    (re.compile(r"^/devices/[^/]+/recordings$"), FeatureFlag.F06),
    (re.compile(r"^/devices/[^/]+/shell$"), FeatureFlag.F03),
    (re.compile(r"^/devices$"), FeatureFlag.F03),
    (re.compile(r"^/forward-rules(/.*)?$"), FeatureFlag.F07),
    (re.compile(r"^/bridge/sessions$"), FeatureFlag.F02),
]


def route_feature(path: str) -> FeatureFlag | None:
    for pattern, flag in _ROUTE_FEATURES:
        if pattern.match(path):
            return flag
    return None


class SmsBody(BaseModel):
    sender: str
    text: str


class GeoBody(BaseModel):
    longitude: float
    latitude: float
    altitude: float | None = None


class ShellBody(BaseModel):
    command: str


class RecordingBody(BaseModel):
    duration: int


class RuleBody(BaseModel):
    bind_addr: str
    bind_port: int
    connect_addr: str
    connect_port: int


ConsoleFactory = Callable[[str, int], ConsoleSession]


def create_app(
    config: ApiConfig | None = None,
    *,
    adb: AdbClient | None = None,
    forwarder: PortForwarder | None = None,
    bridge: ScreenBridge | None = None,
    console_factory: ConsoleFactory | None = None,
) -> FastAPI:
    """Build the application; backends are injectable for testing."""
    config = config or ApiConfig()
    adb = adb or AdbClient(endpoint=config.adb_endpoint)
    forwarder = forwarder or PortForwarder()
    if console_factory is None:
        def console_factory(host: str, port: int) -> ConsoleSession:
            return ConsoleSession.connect(host, port, token_file=config.token_file)

    app = FastAPI(
        title="droidrange control API",
        version=__version__,
        description="Device, console, bridge, and forwarder control plane.",
    )
    app.add_middleware(
        CORSMiddleware,
        allow_origins=config.cors_allowed_origins,
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.config = config
    app.state.forwarder = forwarder
    app.state.bridge = bridge

    # -- error shaping -------------------------------------------------------

    @app.exception_handler(ApiError)
    async def _api_error(request: Request, exc: ApiError):
        return JSONResponse(
            status_code=exc.status, content={"code": exc.code, "message": exc.message}
        )

    @app.exception_handler(RequestValidationError)
    async def _validation_error(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=422,
            content={"code": "validation_error", "message": str(exc.errors()[:1])},
        )

    @app.exception_handler(StarletteHTTPException)
    async def _http_error(request: Request, exc: StarletteHTTPException):
        codes = {404: "not_found", 405: "method_not_allowed"}
        return JSONResponse(
            status_code=exc.status_code,
            content={
                "code": codes.get(exc.status_code, "http_error"),
                "message": str(exc.detail),
            },
        )

    @app.middleware("http")
    async def _feature_gate(request: Request, call_next):
        flag = route_feature(request.url.path)
        if flag is not None and flag not in config.features:
            return JSONResponse(
                status_code=404,
                content={
                    "code": "feature_disabled",
                    "message": f"feature {flag.value} is not enabled",
                },
            )
        return await call_next(request)

    # -- helpers ---------------------------------------------------------------

    def console_for(serial: str) -> ConsoleSession:
        match = _EMULATOR_SERIAL_RE.match(serial)
        if match is None:
            raise ApiError(
                409,
                "unsupported_on_real_device",
                f"device {serial!r} is not an emulator; the emulator console"
                " is unavailable on real devices",
            )
        port = config.console_port or int(match.group(1))
        try:
            return console_factory(config.console_host, port)
        except ConsoleError as exc:
            raise ApiError(502, "console_error", str(exc)) from exc

    def run_console(serial: str, action) -> dict:
        session = console_for(serial)
        try:
            reply = action(session)
        except ConsoleError as exc:
            raise ApiError(502, "console_error", str(exc)) from exc
        finally:
            session.close()
        if not reply.ok:
            raise ApiError(502, "console_error", reply.reason or "console KO")
        return {"status": "OK"}

    # -- routes ---------------------------------------------------------------

    @app.get("/health")
    def health():
        return {
            "status": "ok",
            "version": __version__,
            "features": sorted(flag.value for flag in config.features),
        }

    @app.get("/devices")
    def devices():
        try:
            listing = adb.list_devices()
        except AdbConnectionError as exc:
            raise ApiError(502, "adb_unreachable", str(exc)) from exc
        return [{"serial": d.serial, "state": d.state.value} for d in listing]

    @app.post("/devices/{serial}/sms")
    def send_sms(serial: str, body: SmsBody):
        if "\n" in body.text or "\r" in body.text:
            raise ApiError(422, "validation_error", "sms text must be a single line")
        if not body.sender or any(ch.isspace() for ch in body.sender):
            raise ApiError(422, "validation_error", f"invalid sender {body.sender!r}")
        return run_console(serial, lambda s: s.send_sms(body.sender, body.text))

    @app.post("/devices/{serial}/geo")
    def set_geo(serial: str, body: GeoBody):
        try:
            fix = GeoFix(
                longitude=body.longitude,
                latitude=body.latitude,
                altitude=body.altitude,
            )
        except ValueError as exc:
            raise ApiError(422, "validation_error", str(exc)) from exc
        return run_console(serial, lambda s: s.geo_fix(fix))

    @app.post("/devices/{serial}/apps", status_code=201)
    async def install_app(serial: str, request: Request):
        apk = await request.body()
        if not apk:
            raise ApiError(400, "invalid_request", "request body is empty")
        try:
            output = adb.install_apk(serial, apk)
        except InstallError as exc:
            raise ApiError(502, "install_failed", exc.detail) from exc
        except AdbConnectionError as exc:
            raise ApiError(502, "adb_unreachable", str(exc)) from exc
        except AdbFailure as exc:
            raise ApiError(502, "adb_error", exc.detail) from exc
        return {"status": "installed", "output": output}

    @app.post("/devices/{serial}/shell")
    def run_shell(serial: str, body: ShellBody):
        if not body.command:
            raise ApiError(400, "invalid_request", "command must not be empty")
        try:
            output = adb.shell(serial, body.command)
        except AdbConnectionError as exc:
            raise ApiError(502, "adb_unreachable", str(exc)) from exc
        except AdbFailure as exc:
            raise ApiError(502, "adb_error", exc.detail) from exc
        if len(output) > SHELL_OUTPUT_CAP:
            raise ApiError(
                413,
                "output_too_large",
                f"output exceeds {SHELL_OUTPUT_CAP} bytes",
            )
        return {"output": output.decode("utf-8", "replace")}

    @app.post("/devices/{serial}/recordings")
    def record_screen(serial: str, body: RecordingBody):
        if not 0 < body.duration <= 180:
            raise ApiError(
                422, "validation_error", "duration must be in (0, 180] seconds"
            )
        try:
            video = adb.screenrecord(serial, body.duration)
        except AdbConnectionError as exc:
            raise ApiError(502, "adb_unreachable", str(exc)) from exc
        except AdbFailure as exc:
            raise ApiError(502, "adb_error", exc.detail) from exc
        return Response(content=video, media_type="video/mp4")

    @app.get("/forward-rules")
    def list_rules():
        return [_rule_json(stats) for stats in forwarder.stats()]

    @app.post("/forward-rules", status_code=201)
    def add_rule(body: RuleBody):
        try:
            rule = ForwardRule(
                bind_addr=body.bind_addr,
                bind_port=body.bind_port,
                connect_addr=body.connect_addr,
                connect_port=body.connect_port,
            )
        except RuleError as exc:
            raise ApiError(422, "validation_error", str(exc)) from exc
        try:
            rule_id = forwarder.add_rule(rule)
        except BindConflict as exc:
            raise ApiError(409, "bind_conflict", str(exc)) from exc
        stats = forwarder.stats_for(rule_id)
        if stats is None:  # deleted concurrently between add and read
            raise ApiError(404, "not_found", f"no rule {rule_id!r}")
        return _rule_json(stats)

    @app.delete("/forward-rules/{rule_id}", status_code=204)
    def delete_rule(rule_id: str):
        if not forwarder.remove_rule(rule_id):
            raise ApiError(404, "not_found", f"no rule {rule_id!r}")
        return Response(status_code=204)

    @app.get("/bridge/sessions")
    def bridge_sessions():
        handle: ScreenBridge | None = app.state.bridge
        if handle is None:
            return {"active": 0, "sessions": []}
        sessions = handle.sessions()
        return {
            "active": len(sessions),
            "sessions": [
                {
                    "id": s.id,
                    "bytes_up": s.bytes_up,
                    "bytes_down": s.bytes_down,
                    "opened_at": s.opened_at,
                }
                for s in sessions
            ],
        }

    return app


def _rule_json(stats) -> dict:
    rule = stats.rule
    return {
        "id": rule.id,
        "bind_addr": rule.bind_addr,
        "bind_port": rule.bind_port,
        "connect_addr": rule.connect_addr,
        "connect_port": rule.connect_port,
        "active": stats.active,
        "total": stats.total,
        "bytes": stats.bytes,
    }
