"""Command-line front end.

Every subcommand except `serve` is a thin client of the HTTP API: by
default it talks to an in-process application instance, or to a remote
server when --server (or IAXRSW_SERVER) is set. All numbers, CSV text
and pass/fail decisions come from the service, so a local run and a
remote run of the same invocation produce byte-identical artifacts.

Config precedence: explicit flags beat --set overrides beat config-file
values beat built-in defaults. The effective config is echoed into the
header of every output file. Exit codes: 0 success, 1 decode or
acceptance failure, 2 configuration error, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import configparser
import json
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

ENV_CONFIG = "IAXRSW_CONFIG"
ENV_SERVER = "IAXRSW_SERVER"

EXIT_OK = 0
EXIT_DATA = 1
EXIT_CONFIG = 2
EXIT_IO = 3

# Error names (service JSON "error" field) that are configuration
# mistakes rather than bad wire data; everything else unlisted exits 1.
_CONFIG_ERROR_NAMES = {
    "InvalidConfig",
    "InvalidRelayConfig",
    "UnknownCodec",
    "NonIntegralRate",
    "InvalidCallNumber",
    "InvalidHex",
    "Validation",
}
_IO_ERROR_NAMES = {"BindFailure", "Relay", "NotRunning", "RelayConflict"}

_SCENARIO_KEYS = {
    "direction": str,
    "packet_count": int,
    "link_base_delay_ms": float,
    "link_jitter_span_ms": float,
    "gateway_processing_delay_ms": float,
    "buffer_capacity": int,
    "codec": str,
    "seed": int,
}
_RELAY_KEYS = {
    "iax_bind": "endpoint",
    "rsw_bind": "endpoint",
    "iax_peer": "endpoint",
    "rsw_peer": "endpoint",
    "call_number": int,
    "ssrc_seed": int,
    "codec": str,
}

_SIM_FLAG_MAP = {
    "direction": "direction",
    "packets": "packet_count",
    "base_delay_ms": "link_base_delay_ms",
    "jitter_span_ms": "link_jitter_span_ms",
    "processing_ms": "gateway_processing_delay_ms",
    "capacity": "buffer_capacity",
    "codec": "codec",
    "seed": "seed",
}


class ConfigError(ValueError):
    pass


class CliIoError(RuntimeError):
    pass


class ServiceError(RuntimeError):
    def __init__(self, name: str, message: str, status: int):
        super().__init__(f"{name}: {message}")
        self.name = name
        self.status = status

    @property
    def exit_code(self) -> int:
        if self.name in _CONFIG_ERROR_NAMES:
            return EXIT_CONFIG
        if self.name in _IO_ERROR_NAMES:
            return EXIT_IO
        return EXIT_DATA


@dataclass(frozen=True)
class CliInvocation:
    subcommand: str
    config_path: str | None
    overrides: tuple[str, ...]
    output_path: str | None


class ServiceClient:
    """Uniform .call() over an in-process app or a remote base URL."""

    def __init__(self, server: str | None):
        if server:
            import httpx

            self._client = httpx.Client(base_url=server, timeout=30.0)
        else:
            import warnings

            with warnings.catch_warnings():
                # this starlette build warns about its own httpx test client
                warnings.filterwarnings("ignore", message=".*httpx2.*")
                from fastapi.testclient import TestClient

            from .service import create_app

            self._client = TestClient(create_app())

    def call(self, method: str, path: str, body: dict | None = None) -> dict:
        import httpx

        try:
            response = self._client.request(method, path, json=body)
        except httpx.HTTPError as exc:
            raise CliIoError(f"cannot reach server: {exc}") from exc
        if response.status_code >= 400:
            raise _service_error(response)
        return response.json()

    def close(self) -> None:
        self._client.close()


def _service_error(response) -> ServiceError:
    try:
        payload = response.json()
    except ValueError:
        return ServiceError("Http", f"status {response.status_code}", response.status_code)
    if "error" in payload:
        return ServiceError(payload["error"], payload.get("message", ""), response.status_code)
    # FastAPI request-validation shape
    detail = payload.get("detail", payload)
    if isinstance(detail, list):
        parts = []
        for item in detail:
            loc = ".".join(str(p) for p in item.get("loc", ()) if p != "body")
            parts.append(f"{loc}: {item.get('msg', '')}")
        return ServiceError("Validation", "; ".join(parts), response.status_code)
    return ServiceError("Validation", str(detail), response.status_code)


def parse_endpoint(text: str) -> dict:
    host, sep, port = text.rpartition(":")
    if not sep or not host:
        raise ConfigError(f"endpoint '{text}' must look like host:port")
    try:
        port_num = int(port)
    except ValueError:
        raise ConfigError(f"endpoint '{text}': port must be an integer") from None
    if not 0 <= port_num <= 65535:
        raise ConfigError(f"endpoint '{text}': port out of range")
    return {"host": host, "port": port_num}


def _cast(section: str, key: str, raw: str, keys: dict):
    kind = keys[key]
    try:
        if kind == "endpoint":
            return parse_endpoint(raw)
        return kind(raw)
    except ConfigError:
        raise
    except ValueError:
        raise ConfigError(f"[{section}] {key}: cannot interpret '{raw}'") from None


def load_config_file(path: str) -> dict[str, dict[str, str]]:
    parser = configparser.ConfigParser()
    try:
        with open(path) as handle:
            parser.read_file(handle)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config file {path}: {exc}") from exc
    return {section: dict(parser[section]) for section in parser.sections()}


def collect_section(
    section: str,
    keys: dict,
    file_cfg: dict[str, dict[str, str]],
    overrides: list[str],
) -> dict:
    """File values then --set overrides, validated against known keys."""
    values: dict = {}
    for key, raw in file_cfg.get(section, {}).items():
        if key not in keys:
            raise ConfigError(f"unknown key '{key}' in [{section}]")
        values[key] = _cast(section, key, raw, keys)
    if "codec" in keys and "codec" not in values:
        name = file_cfg.get("codec", {}).get("name")
        if name:
            values["codec"] = name
    for item in overrides:
        key, sep, raw = item.partition("=")
        if not sep:
            raise ConfigError(f"--set needs key=value, got '{item}'")
        key = key.strip()
        if key.startswith(section + "."):
            key = key[len(section) + 1 :]
        elif key == "codec.name" and "codec" in keys:
            key = "codec"
        if key not in keys:
            raise ConfigError(f"--set '{item}': unknown key for [{section}]")
        values[key] = _cast(section, key, raw.strip(), keys)
    return values


def parse_counts(text: str) -> list[int]:
    """Packet-count spec: '50', '10,20,30', or inclusive 'start:stop:step'."""
    try:
        if ":" in text:
            parts = [int(p) for p in text.split(":")]
            if len(parts) == 2:
                parts.append(1)
            if len(parts) != 3:
                raise ConfigError(f"range '{text}' must be start:stop[:step]")
            start, stop, step = parts
            if start < 1 or stop < start or step < 1:
                raise ConfigError(f"range '{text}' must satisfy 1 <= start <= stop, step >= 1")
            return list(range(start, stop + 1, step))
        if "," in text:
            counts = [int(p) for p in text.split(",")]
        else:
            counts = [int(text)]
    except ValueError:
        raise ConfigError(f"cannot parse packet counts '{text}'") from None
    if any(c < 1 for c in counts):
        raise ConfigError("packet counts must be >= 1")
    return counts


def _atomic_write(path: str, text: str) -> None:
    target = Path(path)
    tmp = target.with_name(target.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, target)


def default_summary_path(out: str) -> str:
    target = Path(out)
    if target.suffix == ".csv":
        return str(target.with_suffix(".summary.csv"))
    return str(target.with_name(target.name + ".summary.csv"))


def _scenario_body(args, file_cfg, with_packets: bool = True) -> dict:
    values = collect_section("simnet", _SCENARIO_KEYS, file_cfg, args.set)
    for attr, key in _SIM_FLAG_MAP.items():
        if attr == "packets" and not with_packets:
            continue
        flag = getattr(args, attr, None)
        if flag is not None:
            values[key] = flag
    if values.get("packet_count", 1) < 1:
        raise ConfigError("packet_count must be >= 1")
    return values


def _print_checks(summaries: list[dict]) -> None:
    for summary in summaries:
        for check in summary["checks"]:
            verdict = "pass" if check["passed"] else "FAIL"
            print(
                f"  [{verdict}] {summary['direction']} {check['name']} "
                f"{check['value']:.3f} < {check['threshold']:.3f} ms"
            )


def cmd_sim(args, client: ServiceClient, file_cfg) -> int:
    body = _scenario_body(args, file_cfg)
    body["include_trace"] = True
    result = client.call("POST", "/simulate", body)
    print(result["table"], end="")
    _print_checks(result["summaries"])
    if args.out:
        _atomic_write(args.out, result["trace_csv"])
        summary_path = args.summary_out or default_summary_path(args.out)
        _atomic_write(summary_path, result["summary_csv"])
        print(f"trace written to {args.out}, summary to {summary_path}")
    elif args.summary_out:
        _atomic_write(args.summary_out, result["summary_csv"])
        print(f"summary written to {args.summary_out}")
    if args.no_check:
        return EXIT_OK
    return EXIT_OK if result["all_pass"] else EXIT_DATA


def cmd_sweep(args, client: ServiceClient, file_cfg) -> int:
    body = _scenario_body(args, file_cfg, with_packets=False)
    body.pop("packet_count", None)
    body["packet_counts"] = parse_counts(args.packets)
    result = client.call("POST", "/sweep", body)
    print(result["table"], end="")
    if args.out:
        _atomic_write(args.out, result["summary_csv"])
        print(f"summary written to {args.out}")
    if args.no_check:
        return EXIT_OK
    return EXIT_OK if result["all_pass"] else EXIT_DATA


def cmd_parse(args, client: ServiceClient, file_cfg) -> int:
    kind = {"mini": "iax", "rtp": "rsw", "auto": "auto"}[args.format]
    data_hex = "".join(args.hexdata)
    result = client.call("POST", "/parse", {"data_hex": data_hex, "kind": kind})
    if args.json:
        print(json.dumps(result, indent=2, sort_keys=True))
        return EXIT_OK
    if result["kind"] == "iax_mini":
        mini = result["mini"]
        print(
            f"iax_mini call={mini['source_call_number']} ts={mini['timestamp_low16']} "
            f"payload_len={result['payload_len']}"
        )
    else:
        rtp = result["rtp"]
        flags = "".join(
            label for label, on in (("P", rtp["padding"]), ("X", rtp["extension"]), ("M", rtp["marker"])) if on
        )
        print(
            f"rsw_rtp v={rtp['version']} PT={rtp['payload_type']} seq={rtp['sequence_number']} "
            f"ts={rtp['timestamp']} ssrc={rtp['ssrc']:#010x} flags={flags or '-'} "
            f"payload_len={result['payload_len']}"
        )
    return EXIT_OK


def cmd_codec_info(args, client: ServiceClient, file_cfg) -> int:
    values = collect_section("simnet", _SCENARIO_KEYS, file_cfg, args.set)
    name = args.name or values.get("codec") or "gsm"
    info = client.call("GET", f"/codecs/{name}")
    if args.json:
        print(json.dumps(info, indent=2, sort_keys=True))
        return EXIT_OK
    print(
        f"codec {info['name']}: {info['bitrate_bps']} bps, {info['frame_interval_ms']} ms frames, "
        f"{info['frame_payload_bytes']} bytes/frame, {info['frames_per_second']} frames/s, "
        f"PT {info['rtp_payload_type']}, {info['sample_rate_hz']} Hz"
    )
    print()
    print(f"{'side':<5} {'datagram_bytes':>14} {'on_wire_bytes':>13} {'bandwidth_bps':>13}")
    for side in ("iax", "rsw"):
        wire = info[side]
        print(
            f"{side:<5} {wire['datagram_bytes']:>14} {wire['on_wire_bytes']:>13} "
            f"{wire['bandwidth_bps']:>13}"
        )
    print(f"payload-only bandwidth: {info['payload_bandwidth_bps']} bps")
    print()
    print("side,datagram_bytes,on_wire_bytes,bandwidth_bps")
    for side in ("iax", "rsw"):
        wire = info[side]
        print(f"{side},{wire['datagram_bytes']},{wire['on_wire_bytes']},{wire['bandwidth_bps']}")
    return EXIT_OK


def _relay_body(args, file_cfg) -> dict:
    values = collect_section("relay", _RELAY_KEYS, file_cfg, args.set)
    for attr, key in (
        ("iax_bind", "iax_bind"),
        ("rsw_bind", "rsw_bind"),
        ("iax_peer", "iax_peer"),
        ("rsw_peer", "rsw_peer"),
    ):
        flag = getattr(args, attr)
        if flag is not None:
            values[key] = parse_endpoint(flag)
    for attr, key in (("call_number", "call_number"), ("ssrc_seed", "ssrc_seed"), ("codec", "codec")):
        flag = getattr(args, attr)
        if flag is not None:
            values[key] = flag
    return values


def _print_relay_stats(state: dict) -> None:
    for direction in ("iax_to_rsw", "rsw_to_iax"):
        c = state[direction]
        print(
            f"{direction}: in={c['packets_in']} out={c['packets_out']} "
            f"bytes_in={c['bytes_in']} bytes_out={c['bytes_out']} "
            f"parse_rejects={c['parse_rejects']} translate_drops={c['translate_drops']}"
        )


def cmd_relay(args, client: ServiceClient, file_cfg) -> int:
    state = client.call("POST", "/relay/start", _relay_body(args, file_cfg))
    print(
        f"relay up: iax {state['iax_address']['host']}:{state['iax_address']['port']} "
        f"<-> rsw {state['rsw_address']['host']}:{state['rsw_address']['port']} "
        f"call={state['call_number']} ssrc={state['ssrc']:#010x} codec={state['codec']}"
    )
    deadline = None if args.duration <= 0 else time.monotonic() + args.duration
    interval = max(args.stats_interval, 0.05)
    try:
        while deadline is None or time.monotonic() < deadline:
            if deadline is None:
                pause = interval
            else:
                pause = min(interval, deadline - time.monotonic())
            if pause > 0:
                time.sleep(pause)
            if deadline is None or time.monotonic() < deadline:
                _print_relay_stats(client.call("GET", "/relay/stats"))
    except KeyboardInterrupt:
        print("interrupted, stopping relay")
    final = client.call("POST", "/relay/stop")
    print("final stats:")
    _print_relay_stats(final)
    return EXIT_OK


def cmd_serve(args, client, file_cfg) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def _add_scenario_flags(parser: argparse.ArgumentParser, with_packets_int: bool) -> None:
    parser.add_argument("--direction", choices=["iax_to_rsw", "rsw_to_iax", "both"])
    if with_packets_int:
        parser.add_argument("--packets", type=int, help="frames per direction")
    parser.add_argument("--base-delay-ms", type=float, dest="base_delay_ms")
    parser.add_argument("--jitter-span-ms", type=float, dest="jitter_span_ms")
    parser.add_argument("--processing-ms", type=float, dest="processing_ms")
    parser.add_argument("--capacity", type=int, help="gateway buffer capacity")
    parser.add_argument("--codec")
    parser.add_argument("--seed", type=int)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help=f"config file path (default ${ENV_CONFIG})")
    common.add_argument("--server", help=f"remote API base URL (default ${ENV_SERVER}, else in-process)")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config key (repeatable)")

    parser = argparse.ArgumentParser(prog="iaxrsw", description="IAX/RSW media gateway toolkit")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p_sim = sub.add_parser("sim", parents=[common], help="run one simulated scenario")
    _add_scenario_flags(p_sim, with_packets_int=True)
    p_sim.add_argument("--out", help="trace CSV path (summary lands next to it)")
    p_sim.add_argument("--summary-out", dest="summary_out", help="summary CSV path")
    p_sim.add_argument("--no-check", action="store_true", dest="no_check",
                       help="exit 0 even when thresholds fail")
    p_sim.set_defaults(handler=cmd_sim)

    p_sweep = sub.add_parser("sweep", parents=[common], help="summaries across packet counts")
    _add_scenario_flags(p_sweep, with_packets_int=False)
    p_sweep.add_argument("--packets", default="10:100:10",
                         help="count, comma list, or inclusive start:stop:step")
    p_sweep.add_argument("--out", help="summary CSV path")
    p_sweep.add_argument("--no-check", action="store_true", dest="no_check")
    p_sweep.set_defaults(handler=cmd_sweep)

    p_relay = sub.add_parser("relay", parents=[common], help="run the live UDP relay")
    p_relay.add_argument("--iax-bind", dest="iax_bind", metavar="HOST:PORT")
    p_relay.add_argument("--rsw-bind", dest="rsw_bind", metavar="HOST:PORT")
    p_relay.add_argument("--iax-peer", dest="iax_peer", metavar="HOST:PORT")
    p_relay.add_argument("--rsw-peer", dest="rsw_peer", metavar="HOST:PORT")
    p_relay.add_argument("--call-number", dest="call_number", type=int)
    p_relay.add_argument("--ssrc-seed", dest="ssrc_seed", type=int)
    p_relay.add_argument("--codec")
    p_relay.add_argument("--duration", type=float, default=0.0,
                         help="seconds to run; 0 runs until interrupted")
    p_relay.add_argument("--stats-interval", dest="stats_interval", type=float, default=1.0)
    p_relay.set_defaults(handler=cmd_relay)

    p_info = sub.add_parser("codec-info", parents=[common], help="framing table for a codec")
    p_info.add_argument("name", nargs="?", help="codec name (default from config, else gsm)")
    p_info.add_argument("--json", action="store_true")
    p_info.set_defaults(handler=cmd_codec_info)

    p_parse = sub.add_parser("parse", parents=[common], help="decode a hex datagram")
    p_parse.add_argument("--format", choices=["rtp", "mini", "auto"], default="auto")
    p_parse.add_argument("--json", action="store_true")
    p_parse.add_argument("hexdata", nargs="+", help="hex chunks, concatenated")
    p_parse.set_defaults(handler=cmd_parse)

    p_serve = sub.add_parser("serve", parents=[common], help="run the HTTP API server")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8470)
    p_serve.set_defaults(handler=cmd_serve)

    return parser


def invocation_from_args(args: argparse.Namespace) -> CliInvocation:
    return CliInvocation(
        subcommand=args.subcommand,
        config_path=getattr(args, "config", None) or os.environ.get(ENV_CONFIG) or None,
        overrides=tuple(getattr(args, "set", ()) or ()),
        output_path=getattr(args, "out", None),
    )


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    invocation = invocation_from_args(args)
    client: ServiceClient | None = None
    try:
        file_cfg = load_config_file(invocation.config_path) if invocation.config_path else {}
        if args.handler is cmd_serve:
            return cmd_serve(args, None, file_cfg)
        client = ServiceClient(getattr(args, "server", None) or os.environ.get(ENV_SERVER) or None)
        return args.handler(args, client, file_cfg)
    except ConfigError as exc:
        print(f"error: Config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ServiceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except CliIoError as exc:
        print(f"error: Io: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: Io: {exc}", file=sys.stderr)
        return EXIT_IO
    finally:
        if client is not None:
            client.close()


if __name__ == "__main__":
    sys.exit(main())
