"""FastAPI application exposing the translator toolkit.

All numeric work happens in the core modules; routes only adapt between
pydantic models and core dataclasses. CSV artifacts are rendered here,
server side, so a thin client writes files byte-identical to what any
other client with the same request would get.
"""

from __future__ import annotations

import threading

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__, framing, metrics, simnet
from ..packets import (
    MINI_HEADER_LEN,
    RTP_HEADER_LEN,
    FrameKind,
    PacketError,
    classify_iax_datagram,
    parse_mini,
    parse_rtp,
)
from ..relay import (
    InvalidRelayConfigError,
    NotRunningError,
    RelayConfig,
    RelayConflictError,
    RelayError,
    UdpRelay,
)
from ..translator import InvalidCallNumberError, TranslationError
from . import schemas


class InvalidHexError(ValueError):
    pass


def _error_name(exc: Exception) -> str:
    name = type(exc).__name__
    return name[:-5] if name.endswith("Error") else name


_STATUS_OVERRIDES = {
    framing.UnknownCodecError: 404,
    RelayError: 409,
    NotRunningError: 409,
    RelayConflictError: 409,
}

_HANDLED = (
    PacketError,
    TranslationError,
    InvalidCallNumberError,
    InvalidHexError,
    framing.UnknownCodecError,
    framing.NonIntegralRateError,
    simnet.InvalidConfigError,
    InvalidRelayConfigError,
    RelayError,
    metrics.EmptyTraceError,
    metrics.CausalityViolationError,
)


def _decode_hex(text: str) -> bytes:
    compact = "".join(text.split())
    if compact.startswith(("0x", "0X")):
        compact = compact[2:]
    try:
        return bytes.fromhex(compact)
    except ValueError as exc:
        raise InvalidHexError(f"data_hex is not valid hex: {exc}") from exc


def _scenario_config(req: schemas.ScenarioRequest) -> simnet.ScenarioConfig:
    config = simnet.ScenarioConfig(
        direction=simnet.Direction(req.direction),
        packet_count=req.packet_count,
        link_base_delay_ms=req.link_base_delay_ms,
        link_jitter_span_ms=req.link_jitter_span_ms,
        gateway_processing_delay_ms=req.gateway_processing_delay_ms,
        buffer_capacity=req.buffer_capacity,
        codec=req.codec,
        seed=req.seed,
    )
    config.validate()
    return config


def _config_echo(config: simnet.ScenarioConfig) -> dict:
    echo: dict = {
        "direction": str(config.direction),
        "packet_count": config.packet_count,
        "link_base_delay_ms": config.link_base_delay_ms,
        "link_jitter_span_ms": config.link_jitter_span_ms,
        "gateway_processing_delay_ms": config.gateway_processing_delay_ms,
        "buffer_capacity": config.buffer_capacity,
        "codec": config.codec,
        "seed": config.seed,
        "rng": simnet.GENERATOR_NAME,
    }
    return echo


def _direction_summary(summary: metrics.MetricsSummary) -> schemas.DirectionSummary:
    report = metrics.check_acceptance(summary)
    return schemas.DirectionSummary(
        direction=summary.direction,
        packets=summary.packet_count,
        drops=summary.drops,
        delay_min_ms=summary.delay_min_ms,
        delay_mean_ms=summary.delay_mean_ms,
        delay_max_ms=summary.delay_max_ms,
        jitter_inst_max_ms=summary.jitter_inst_max_ms,
        jitter_smoothed_ms=summary.jitter_smoothed_ms,
        checks=[schemas.CheckModel(**vars(c)) for c in report.checks],
        passed=report.passed,
    )


def _codec_info(profile: framing.CodecProfile) -> schemas.CodecInfoResponse:
    def wire(side: framing.Side) -> schemas.WireInfo:
        header = RTP_HEADER_LEN if side is framing.Side.RSW else MINI_HEADER_LEN
        return schemas.WireInfo(
            datagram_bytes=header + profile.frame_payload_bytes,
            on_wire_bytes=framing.on_wire_bytes(profile, side),
            bandwidth_bps=framing.on_wire_bandwidth_bps(profile, side),
        )

    return schemas.CodecInfoResponse(
        name=profile.name,
        bitrate_bps=profile.bitrate_bps,
        frame_interval_ms=profile.frame_interval_ms,
        frame_payload_bytes=profile.frame_payload_bytes,
        rtp_payload_type=profile.rtp_payload_type,
        sample_rate_hz=profile.sample_rate_hz,
        frames_per_second=framing.frames_per_second(profile),
        payload_bandwidth_bps=framing.payload_bandwidth_bps(profile),
        iax=wire(framing.Side.IAX),
        rsw=wire(framing.Side.RSW),
    )


def _parse_datagram(req: schemas.ParseRequest) -> schemas.ParseResponse:
    data = _decode_hex(req.data_hex)
    kind = req.kind
    if kind == "auto":
        # RTP v2 always sets the top bit of byte 0; media mini frames never do.
        kind = "rsw" if data[:1] and data[0] & 0x80 else "iax"
    if kind == "iax":
        if classify_iax_datagram(data) is FrameKind.FULL:
            # parse_mini would misread a full frame, reject it up front
            raise PacketError("datagram is an IAX full frame, not a media mini frame")
        header, payload = parse_mini(data)
        return schemas.ParseResponse(
            kind="iax_mini",
            mini=schemas.MiniHeaderModel(
                source_call_number=header.source_call_number,
                timestamp_low16=header.timestamp_low16,
            ),
            payload_len=len(payload),
            payload_hex=payload.hex(),
        )
    header, payload = parse_rtp(data)
    return schemas.ParseResponse(
        kind="rsw_rtp",
        rtp=schemas.RtpHeaderModel(
            version=header.version,
            padding=header.padding,
            extension=header.extension,
            csrc_count=header.csrc_count,
            marker=header.marker,
            payload_type=header.payload_type,
            sequence_number=header.sequence_number,
            timestamp=header.timestamp,
            ssrc=header.ssrc,
        ),
        payload_len=len(payload),
        payload_hex=payload.hex(),
    )


def _sweep_preamble(config: simnet.ScenarioConfig, counts: list[int]) -> list[str]:
    lines = []
    for line in simnet.config_preamble(config):
        if line.startswith("packet_count ="):
            lines.append("packet_counts = " + ",".join(str(c) for c in counts))
        else:
            lines.append(line)
    return lines


def _relay_state(relay: UdpRelay, running: bool) -> schemas.RelayStateResponse:
    stats = relay.snapshot_stats()
    return schemas.RelayStateResponse(
        running=running,
        iax_address=schemas.Endpoint(host=relay.iax_address[0], port=relay.iax_address[1]),
        rsw_address=schemas.Endpoint(host=relay.rsw_address[0], port=relay.rsw_address[1]),
        call_number=relay.config.call_number,
        ssrc=relay.binding.rtp_ssrc,
        codec=relay.profile.name,
        iax_to_rsw=schemas.RelayCountersModel(**vars(stats.iax_to_rsw)),
        rsw_to_iax=schemas.RelayCountersModel(**vars(stats.rsw_to_iax)),
    )


def create_app() -> FastAPI:
    app = FastAPI(title="iaxrsw", version=__version__)
    app.state.relay = None
    app.state.relay_lock = threading.Lock()

    def handle(request: Request, exc: Exception) -> JSONResponse:
        status = 400
        for cls, code in _STATUS_OVERRIDES.items():
            if isinstance(exc, cls):
                status = code
        return JSONResponse(
            status_code=status,
            content={"error": _error_name(exc), "message": str(exc)},
        )

    for cls in _HANDLED:
        app.add_exception_handler(cls, handle)

    @app.get("/health", response_model=schemas.HealthResponse)
    def health() -> schemas.HealthResponse:
        return schemas.HealthResponse(version=__version__)

    @app.get("/codecs", response_model=schemas.CodecListResponse)
    def codec_list() -> schemas.CodecListResponse:
        return schemas.CodecListResponse(codecs=framing.known_profiles())

    @app.get("/codecs/{name}", response_model=schemas.CodecInfoResponse)
    def codec_info(name: str) -> schemas.CodecInfoResponse:
        return _codec_info(framing.get_profile(name))

    @app.post("/parse", response_model=schemas.ParseResponse, response_model_exclude_none=True)
    def parse(req: schemas.ParseRequest) -> schemas.ParseResponse:
        return _parse_datagram(req)

    @app.post("/simulate", response_model=schemas.SimulateResponse)
    def simulate(req: schemas.SimulateRequest) -> schemas.SimulateResponse:
        config = _scenario_config(req)
        result = simnet.run_scenario(config)
        summaries = [
            metrics.summarize_trace(
                result.events_for(d), str(d), result.dropped[d]
            )
            for d in config.simulated_directions()
        ]
        preamble = simnet.config_preamble(config)
        models = [_direction_summary(s) for s in summaries]
        return schemas.SimulateResponse(
            config=_config_echo(config),
            summaries=models,
            all_pass=all(m.passed for m in models),
            table=metrics.format_summary_table(summaries),
            summary_csv=metrics.render_csv(summaries, preamble),
            trace_csv=simnet.render_trace_csv(result, preamble) if req.include_trace else None,
        )

    @app.post("/sweep", response_model=schemas.SweepResponse)
    def sweep(req: schemas.SweepRequest) -> schemas.SweepResponse:
        config = _scenario_config(req)
        for count in req.packet_counts:
            if count < 1:
                raise simnet.InvalidConfigError(f"packet count {count} must be >= 1")
        summaries = simnet.run_sweep(config, req.packet_counts)
        preamble = _sweep_preamble(config, req.packet_counts)
        models = [_direction_summary(s) for s in summaries]
        return schemas.SweepResponse(
            config=_config_echo(config),
            summaries=models,
            all_pass=all(m.passed for m in models),
            table=metrics.format_summary_table(summaries),
            summary_csv=metrics.render_csv(summaries, preamble),
        )

    @app.post("/relay/start", response_model=schemas.RelayStateResponse)
    def relay_start(req: schemas.RelayStartRequest) -> schemas.RelayStateResponse:
        config = RelayConfig(
            iax_bind=req.iax_bind.as_tuple(),
            rsw_bind=req.rsw_bind.as_tuple(),
            iax_peer=req.iax_peer.as_tuple() if req.iax_peer else None,
            rsw_peer=req.rsw_peer.as_tuple() if req.rsw_peer else None,
            call_number=req.call_number,
            ssrc_seed=req.ssrc_seed,
            codec=req.codec,
        )
        with app.state.relay_lock:
            if app.state.relay is not None and app.state.relay.running:
                raise RelayConflictError("a relay is already running; stop it first")
            relay = UdpRelay(config)
            relay.start()
            app.state.relay = relay
        return _relay_state(relay, running=True)

    @app.get("/relay/stats", response_model=schemas.RelayStateResponse)
    def relay_stats() -> schemas.RelayStateResponse:
        relay = app.state.relay
        if relay is None:
            raise NotRunningError("no relay session")
        return _relay_state(relay, running=relay.running)

    @app.post("/relay/stop", response_model=schemas.RelayStateResponse)
    def relay_stop() -> schemas.RelayStateResponse:
        with app.state.relay_lock:
            relay = app.state.relay
            if relay is None:
                raise NotRunningError("no relay session")
            relay.stop()
            app.state.relay = None
        return _relay_state(relay, running=False)

    return app
