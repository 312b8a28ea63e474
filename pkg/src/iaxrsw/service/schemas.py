"""Request/response models for the HTTP API."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field


class Endpoint(BaseModel):
    host: str = Field(min_length=1)
    port: int = Field(ge=0, le=65535)

    def as_tuple(self) -> tuple[str, int]:
        return (self.host, self.port)


class HealthResponse(BaseModel):
    status: Literal["ok"] = "ok"
    version: str


class ErrorResponse(BaseModel):
    error: str
    message: str


class WireInfo(BaseModel):
    # datagram_bytes is the UDP payload; on_wire_bytes adds IP and UDP headers.
    datagram_bytes: int
    on_wire_bytes: int
    bandwidth_bps: int


class CodecInfoResponse(BaseModel):
    name: str
    bitrate_bps: int
    frame_interval_ms: int
    frame_payload_bytes: int
    rtp_payload_type: int
    sample_rate_hz: int
    frames_per_second: int
    payload_bandwidth_bps: int
    iax: WireInfo
    rsw: WireInfo


class CodecListResponse(BaseModel):
    codecs: list[str]


class ParseRequest(BaseModel):
    data_hex: str
    kind: Literal["auto", "iax", "rsw"] = "auto"


class MiniHeaderModel(BaseModel):
    source_call_number: int
    timestamp_low16: int


class RtpHeaderModel(BaseModel):
    version: int
    padding: bool
    extension: bool
    csrc_count: int
    marker: bool
    payload_type: int
    sequence_number: int
    timestamp: int
    ssrc: int


class ParseResponse(BaseModel):
    kind: Literal["iax_mini", "rsw_rtp"]
    mini: MiniHeaderModel | None = None
    rtp: RtpHeaderModel | None = None
    payload_len: int
    payload_hex: str


class ScenarioRequest(BaseModel):
    direction: Literal["iax_to_rsw", "rsw_to_iax", "both"] = "both"
    packet_count: int = Field(default=100, ge=1)
    link_base_delay_ms: float = Field(default=1.0, ge=0)
    link_jitter_span_ms: float = Field(default=5.0, ge=0)
    gateway_processing_delay_ms: float = Field(default=0.5, ge=0)
    buffer_capacity: int = Field(default=50, ge=0)
    codec: str = "gsm"
    seed: int = 1


class SimulateRequest(ScenarioRequest):
    include_trace: bool = True


class CheckModel(BaseModel):
    name: str
    value: float
    threshold: float
    margin: float
    passed: bool


class DirectionSummary(BaseModel):
    direction: str
    packets: int
    drops: int
    delay_min_ms: float
    delay_mean_ms: float
    delay_max_ms: float
    jitter_inst_max_ms: float
    jitter_smoothed_ms: float
    checks: list[CheckModel]
    passed: bool


class SimulateResponse(BaseModel):
    config: dict[str, str | int | float]
    summaries: list[DirectionSummary]
    all_pass: bool
    table: str
    summary_csv: str
    trace_csv: str | None = None


class SweepRequest(ScenarioRequest):
    packet_counts: list[int] = Field(min_length=1)


class SweepResponse(BaseModel):
    config: dict[str, str | int | float]
    summaries: list[DirectionSummary]
    all_pass: bool
    table: str
    summary_csv: str


class RelayStartRequest(BaseModel):
    iax_bind: Endpoint = Endpoint(host="127.0.0.1", port=0)
    rsw_bind: Endpoint = Endpoint(host="127.0.0.1", port=0)
    iax_peer: Endpoint | None = None
    rsw_peer: Endpoint | None = None
    call_number: int = Field(default=1, ge=1, le=0x7FFF)
    ssrc_seed: int = 1
    codec: str = "gsm"


class RelayCountersModel(BaseModel):
    packets_in: int
    packets_out: int
    bytes_in: int
    bytes_out: int
    parse_rejects: int
    translate_drops: int


class RelayStateResponse(BaseModel):
    running: bool
    iax_address: Endpoint
    rsw_address: Endpoint
    call_number: int
    ssrc: int
    codec: str
    iax_to_rsw: RelayCountersModel
    rsw_to_iax: RelayCountersModel
