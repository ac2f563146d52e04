"""Operator command line.

Subcommands: validate, generate, up, down, coverage, serve. Exit codes
form a closed set:

* 0 - success (validate: no errors; coverage: all covered)
* 1 - scenario invalid or requested threats uncovered
* 2 - usage problems: unreadable file, unknown threat tag, bad flags
* 3 - compose engine not found on PATH
* 4 - serve could not bind its ports
"""

from __future__ import annotations

import argparse
import json
import os
import shutil
import signal
import socket
import subprocess
import sys
import tempfile
import threading
from pathlib import Path

from . import __version__
from .scenario import (
    ScenarioError,
    ScenarioSpec,
    parse_scenario,
    threat_coverage,
    validate,
)
from .scenario.threats import COVERAGE_RULES

ENGINE_ENV_VAR = "DROIDRANGE_COMPOSE_ENGINE"
DEFAULT_ENGINE = "docker-compose"

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_USAGE = 2
EXIT_NO_ENGINE = 3
EXIT_BIND = 4


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except BrokenPipeError:
        return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="droidrange",
        description="Build and operate containerized Android lab scenarios.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("validate", help="check a scenario file")
    p.add_argument("scenario", help="path to the scenario document")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(handler=cmd_validate)

    p = sub.add_parser("generate", help="compile a scenario to compose YAML")
    p.add_argument("scenario")
    p.add_argument(
        "-o", "--output", default="-", help="output file, '-' for stdout"
    )
    p.set_defaults(handler=cmd_generate)

    p = sub.add_parser("up", help="generate and start the lab via the engine")
    p.add_argument("scenario")
    p.add_argument("--engine", default=None, help="compose engine command")
    p.set_defaults(handler=cmd_up)

    p = sub.add_parser("down", help="tear the lab down via the engine")
    p.add_argument("scenario")
    p.add_argument("--engine", default=None)
    p.set_defaults(handler=cmd_down)

    p = sub.add_parser("coverage", help="report threat coverage of a scenario")
    p.add_argument("scenario")
    p.add_argument(
        "--threats", nargs="+", required=True, metavar="TAG",
        help="threat tags to check, e.g. T.D1 T.A4",
    )
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(handler=cmd_coverage)

    p = sub.add_parser(
        "serve", help="run the control API, screen bridge, and forwarder"
    )
    p.add_argument("--api-addr", default="127.0.0.1:8000", metavar="HOST:PORT")
    p.add_argument("--bridge-listen", default="127.0.0.1:6080", metavar="HOST:PORT")
    p.add_argument(
        "--bridge-target", default="127.0.0.1:5900", metavar="HOST:PORT",
        help="VNC endpoint the bridge relays to",
    )
    p.add_argument("--adb", default=None, metavar="HOST:PORT")
    p.add_argument("--console-host", default="127.0.0.1")
    p.add_argument("--token-file", default=None)
    p.add_argument("--rules-file", default=None, help="forwarder rule file")
    p.add_argument(
        "--features", default=None,
        help="comma-joined feature aliases (default: all enabled)",
    )
    p.set_defaults(handler=cmd_serve)
    return parser


# -- helpers -----------------------------------------------------------------


def _load_spec(path: str) -> ScenarioSpec | int:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"error: cannot read {path}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return parse_scenario(text)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


def _parse_addr(text: str) -> tuple[str, int]:
    host, sep, port = text.rpartition(":")
    if not sep or not port.isdigit():
        raise ValueError(f"expected HOST:PORT, got {text!r}")
    return (host or "127.0.0.1", int(port))


# -- subcommands ---------------------------------------------------------------


def cmd_validate(args) -> int:
    spec = _load_spec(args.scenario)
    if isinstance(spec, int):
        return spec
    diags = validate(spec)
    if args.format == "json":
        print(
            json.dumps(
                {
                    "ok": not diags,
                    "diagnostics": [
                        {
                            "severity": d.severity.value,
                            "path": d.path,
                            "message": d.message,
                        }
                        for d in diags
                    ],
                },
                indent=2,
            )
        )
    else:
        for diag in diags:
            print(diag.render())
        if not diags:
            print(f"{args.scenario}: ok")
    return EXIT_OK if not diags else EXIT_INVALID


def cmd_generate(args) -> int:
    from .compose import ComposeError, generate_compose, render_yaml

    spec = _load_spec(args.scenario)
    if isinstance(spec, int):
        return spec
    try:
        text = render_yaml(generate_compose(spec))
    except ComposeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    if args.output == "-":
        sys.stdout.write(text)
    else:
        Path(args.output).write_text(text, encoding="utf-8")
    return EXIT_OK


def _engine_command(override: str | None) -> list[str] | None:
    raw = override or os.environ.get(ENGINE_ENV_VAR) or DEFAULT_ENGINE
    command = raw.split()
    if shutil.which(command[0]) is None:
        return None
    return command


def _run_engine(args, engine_args: list[str]) -> int:
    engine = _engine_command(args.engine)
    if engine is None:
        print("error: compose engine not found on PATH", file=sys.stderr)
        return EXIT_NO_ENGINE

    from .compose import ComposeError, generate_compose, render_yaml

    spec = _load_spec(args.scenario)
    if isinstance(spec, int):
        return spec
    try:
        text = render_yaml(generate_compose(spec))
    except ComposeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID

    with tempfile.NamedTemporaryFile(
        "w", suffix=".yaml", prefix="droidrange-", delete=False
    ) as handle:
        handle.write(text)
        compose_path = handle.name
    try:
        result = subprocess.run([*engine, "-f", compose_path, *engine_args])
        # keep the documented exit-code set closed: any engine failure is 1
        if result.returncode == 0:
            return EXIT_OK
        print(
            f"error: engine exited with code {result.returncode}",
            file=sys.stderr,
        )
        return EXIT_INVALID
    finally:
        try:
            os.unlink(compose_path)
        except OSError:
            pass


def cmd_up(args) -> int:
    return _run_engine(args, ["up", "-d"])


def cmd_down(args) -> int:
    return _run_engine(args, ["down"])


def cmd_coverage(args) -> int:
    spec = _load_spec(args.scenario)
    if isinstance(spec, int):
        return spec
    try:
        report = threat_coverage(spec, list(args.threats))
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    if args.format == "json":
        print(
            json.dumps(
                {
                    "covered": {
                        tag.value: [f.value for f in flags]
                        for tag, flags in report.covered.items()
                    },
                    "uncovered": [tag.value for tag in report.uncovered],
                    "all_covered": report.all_covered(),
                },
                indent=2,
            )
        )
    else:
        print(f"{'THREAT':<8} {'STATUS':<10} DETAIL")
        for tag, flags in report.covered.items():
            detail = ",".join(f.value for f in flags)
            print(f"{tag.value:<8} {'covered':<10} {detail}")
        for tag in report.uncovered:
            rule = COVERAGE_RULES.get(tag)
            detail = (
                "requires " + ",".join(sorted(f.value for f in rule))
                if rule
                else "no rule"
            )
            print(f"{tag.value:<8} {'uncovered':<10} {detail}")
    return EXIT_OK if report.all_covered() else EXIT_INVALID


def cmd_serve(args) -> int:
    import uvicorn

    from .api import ApiConfig, create_app, parse_feature_list
    from .bridge import BridgeConfig, ScreenBridge
    from .forwarder import PortForwarder, RuleError, parse_rules

    try:
        api_addr = _parse_addr(args.api_addr)
        bridge_listen = _parse_addr(args.bridge_listen)
        bridge_target = _parse_addr(args.bridge_target)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    rules = []
    if args.rules_file:
        try:
            rules = parse_rules(Path(args.rules_file).read_text(encoding="utf-8"))
        except (OSError, RuleError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_USAGE

    # refuse to start anything unless every port is free
    required = [api_addr, bridge_listen]
    required.extend((rule.bind_addr, rule.bind_port) for rule in rules)
    for addr in required:
        if not _bindable(addr):
            print(f"error: cannot bind {addr[0]}:{addr[1]}", file=sys.stderr)
            return EXIT_BIND

    config = ApiConfig(listen=api_addr, adb_endpoint=args.adb)
    config.console_host = args.console_host
    if args.token_file:
        config.token_file = args.token_file
    if args.features is not None:
        config.features = parse_feature_list(args.features)
    else:
        from .api import features_from_environ

        env_features = features_from_environ()
        if env_features is not None:
            config.features = env_features

    forwarder = PortForwarder()
    bridge = ScreenBridge(
        BridgeConfig(listen=bridge_listen, target=bridge_target)
    )
    app = create_app(config, forwarder=forwarder, bridge=bridge)

    failures = forwarder.apply_rules(rules)
    if failures:
        for rule, message in failures:
            print(f"error: {rule.id}: {message}", file=sys.stderr)
        forwarder.stop()
        return EXIT_BIND
    try:
        bridge.start()
    except OSError as exc:
        print(f"error: cannot bind bridge: {exc}", file=sys.stderr)
        forwarder.stop()
        return EXIT_BIND

    server = uvicorn.Server(
        uvicorn.Config(
            app, host=api_addr[0], port=api_addr[1], log_level="warning"
        )
    )
    api_thread = threading.Thread(target=server.run, name="control-api")
    api_thread.start()

    stop = threading.Event()

    def _signal_handler(signum, frame):
        stop.set()

    signal.signal(signal.SIGTERM, _signal_handler)
    signal.signal(signal.SIGINT, _signal_handler)

    print(
        f"control api on {api_addr[0]}:{api_addr[1]},"
        f" bridge on {bridge_listen[0]}:{bridge_listen[1]} -> "
        f"{bridge_target[0]}:{bridge_target[1]},"
        f" {len(rules)} forward rule(s)"
    )
    stop.wait()

    server.should_exit = True
    api_thread.join(timeout=10)
    bridge.stop(grace=5.0)
    forwarder.stop()
    return EXIT_OK


def _bindable(addr: tuple[str, int]) -> bool:
    with socket.socket(socket.AF_INET, socket.SOCK_STREAM) as sock:
        sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        try:
            sock.bind(addr)
            return True
        except OSError:
            return False


if __name__ == "__main__":
    sys.exit(main())
