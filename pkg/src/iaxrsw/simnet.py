"""Deterministic discrete-event simulation of the one-to-one gateway path.

Three elements: a sending client, the translation gateway, a receiving
client. Each packet is serialized in its source wire format, delayed on
the sender link (base + uniform jitter), parsed and buffered at the
gateway, translated on dequeue by a single-server FIFO with a fixed
processing time, then delayed on the receiver link. Virtual time, not
wall clock: the same ScenarioConfig always produces a bit-identical
trace.

Randomness comes from splitmix64 substreams with fixed slot indices
(payloads, binding, sender link, receiver link; slots 0-3 for the
IAX->RSW direction, 4-7 for RSW->IAX), all derived from the scenario
seed. Simultaneous events order by (time, event kind, packet id).
"""

from __future__ import annotations

import heapq
import os
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, TextIO

from . import metrics
from .framing import CodecProfile, generate_talkspurt, get_profile
from .packets import IaxMiniHeader, MediaPacket, RtpHeader, parse_mini, parse_rtp, serialize_mini, serialize_rtp
from .rng import GENERATOR_NAME, SplitMix64, stream_seeds
from .translator import TranslationBuffer, iax_to_rsw, open_binding, rsw_to_iax

TRACE_CSV_COLUMNS = "packet_id,direction,send_ms,gw_in_ms,gw_out_ms,recv_ms,bytes_in,bytes_out"

_SIM_CALL_NUMBER = 1

# Event kinds in tie-break order at equal times.
_CAPTURE, _DELIVER, _TRANSLATE, _RECEIVE = range(4)

_EPS = 1e-9


class InvalidConfigError(ValueError):
    pass


class Direction(str, Enum):
    IAX_TO_RSW = "iax_to_rsw"
    RSW_TO_IAX = "rsw_to_iax"
    BOTH = "both"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class ScenarioConfig:
    direction: Direction = Direction.BOTH
    packet_count: int = 100
    link_base_delay_ms: float = 1.0
    link_jitter_span_ms: float = 5.0
    gateway_processing_delay_ms: float = 0.5
    buffer_capacity: int = 50
    codec: str = "gsm"
    seed: int = 1

    def validate(self) -> None:
        if self.packet_count < 1:
            raise InvalidConfigError("packet_count must be >= 1")
        for name in ("link_base_delay_ms", "link_jitter_span_ms", "gateway_processing_delay_ms"):
            if getattr(self, name) < 0:
                raise InvalidConfigError(f"{name} must be >= 0")
        if self.buffer_capacity < 0:
            raise InvalidConfigError("buffer_capacity must be >= 0")

    def simulated_directions(self) -> list[Direction]:
        if self.direction is Direction.BOTH:
            return [Direction.IAX_TO_RSW, Direction.RSW_TO_IAX]
        return [self.direction]


@dataclass(frozen=True)
class PacketTraceEvent:
    packet_id: int
    direction: Direction
    send_time_ms: float
    gateway_in_ms: float
    gateway_out_ms: float
    receive_time_ms: float
    size_bytes_in: int
    size_bytes_out: int


@dataclass(frozen=True)
class ScenarioResult:
    config: ScenarioConfig
    events: tuple[PacketTraceEvent, ...]
    sent: dict[Direction, int]
    dropped: dict[Direction, int]

    def events_for(self, direction: Direction) -> list[PacketTraceEvent]:
        return [e for e in self.events if e.direction is direction]


def sample_link_delay(base_ms: float, span_ms: float, rng: SplitMix64) -> float:
    """base + uniform(0, span) milliseconds from the given substream."""
    if base_ms < 0 or span_ms < 0:
        raise ValueError("delay parameters must be >= 0")
    return rng.uniform(base_ms, base_ms + span_ms)


def _source_datagrams(
    direction: Direction, profile: CodecProfile, frames, binding
) -> list[bytes]:
    """Wire-format datagrams a client would emit for the talkspurt."""
    datagrams = []
    if direction is Direction.IAX_TO_RSW:
        for frame in frames:
            header = IaxMiniHeader(_SIM_CALL_NUMBER, frame.capture_time_ms & 0xFFFF)
            datagrams.append(serialize_mini(header, frame.payload))
    else:
        samples_per_ms = profile.sample_rate_hz // 1000
        for frame in frames:
            header = RtpHeader(
                marker=frame.frame_index == 0,
                payload_type=profile.rtp_payload_type,
                sequence_number=frame.frame_index & 0xFFFF,
                timestamp=(frame.capture_time_ms * samples_per_ms) & 0xFFFFFFFF,
                ssrc=binding.rtp_ssrc,
            )
            datagrams.append(serialize_rtp(header, frame.payload))
    return datagrams


def _translate(direction: Direction, datagram: bytes, binding, profile: CodecProfile) -> bytes:
    if direction is Direction.IAX_TO_RSW:
        header, payload = parse_mini(datagram)
        out = iax_to_rsw(MediaPacket(header, payload), binding, profile)
        return serialize_rtp(out.header, out.payload)
    header, payload = parse_rtp(datagram)
    out = rsw_to_iax(MediaPacket(header, payload), binding, profile)
    return serialize_mini(out.header, out.payload)


def _run_direction(
    config: ScenarioConfig,
    profile: CodecProfile,
    direction: Direction,
    seeds: list[int],
) -> tuple[list[PacketTraceEvent], int]:
    payload_seed, binding_seed, uplink_seed, downlink_seed = seeds
    uplink = SplitMix64(uplink_seed)
    downlink = SplitMix64(downlink_seed)
    binding = open_binding(_SIM_CALL_NUMBER, binding_seed)
    frames = generate_talkspurt(profile, config.packet_count, payload_seed)
    datagrams = _source_datagrams(direction, profile, frames, binding)
    buffer = TranslationBuffer(config.buffer_capacity)

    send_ms: dict[int, float] = {}
    gw_in_ms: dict[int, float] = {}
    service_start_ms: dict[int, float] = {}
    gw_out_ms: dict[int, float] = {}
    recv_ms: dict[int, float] = {}
    out_datagram: dict[int, bytes] = {}
    gateway_busy = False

    heap: list[tuple[float, int, int]] = []
    for i in range(config.packet_count):
        heapq.heappush(heap, (float(i * profile.frame_interval_ms), _CAPTURE, i))

    def start_service(now: float) -> None:
        nonlocal gateway_busy
        item = buffer.pop()
        if item is None:
            return
        pid, _ = item
        gateway_busy = True
        service_start_ms[pid] = now
        heapq.heappush(heap, (now + config.gateway_processing_delay_ms, _TRANSLATE, pid))

    while heap:
        now, kind, pid = heapq.heappop(heap)
        if kind == _CAPTURE:
            send_ms[pid] = now
            delay = sample_link_delay(config.link_base_delay_ms, config.link_jitter_span_ms, uplink)
            heapq.heappush(heap, (now + delay, _DELIVER, pid))
        elif kind == _DELIVER:
            gw_in_ms[pid] = now
            buffer.push((pid, datagrams[pid]))
            if not gateway_busy:
                start_service(now)
        elif kind == _TRANSLATE:
            out_datagram[pid] = _translate(direction, datagrams[pid], binding, profile)
            gw_out_ms[pid] = now
            delay = sample_link_delay(config.link_base_delay_ms, config.link_jitter_span_ms, downlink)
            heapq.heappush(heap, (now + delay, _RECEIVE, pid))
            gateway_busy = False
            start_service(now)
        else:
            recv_ms[pid] = now

    rows = []
    span = config.link_base_delay_ms + config.link_jitter_span_ms
    for pid in sorted(recv_ms):
        wait = service_start_ms[pid] - gw_in_ms[pid]
        e2e = recv_ms[pid] - send_ms[pid]
        assert wait >= -_EPS
        assert e2e <= 2 * span + config.gateway_processing_delay_ms + wait + _EPS
        rows.append(
            PacketTraceEvent(
                packet_id=pid,
                direction=direction,
                send_time_ms=send_ms[pid],
                gateway_in_ms=gw_in_ms[pid],
                gateway_out_ms=gw_out_ms[pid],
                receive_time_ms=recv_ms[pid],
                size_bytes_in=len(datagrams[pid]),
                size_bytes_out=len(out_datagram[pid]),
            )
        )
    assert len(rows) + buffer.dropped == config.packet_count
    return rows, buffer.dropped


def run_scenario(config: ScenarioConfig, profile: CodecProfile | None = None) -> ScenarioResult:
    """Simulate the configured direction(s) and return the packet trace."""
    config.validate()
    if profile is None:
        profile = get_profile(config.codec)
    seeds = stream_seeds(config.seed, 8)
    slot = {Direction.IAX_TO_RSW: 0, Direction.RSW_TO_IAX: 4}
    events: list[PacketTraceEvent] = []
    sent: dict[Direction, int] = {}
    dropped: dict[Direction, int] = {}
    for direction in config.simulated_directions():
        start = slot[direction]
        rows, drops = _run_direction(config, profile, direction, seeds[start : start + 4])
        events.extend(rows)
        sent[direction] = config.packet_count
        dropped[direction] = drops
    return ScenarioResult(config=config, events=tuple(events), sent=sent, dropped=dropped)


def run_sweep(
    base_config: ScenarioConfig,
    packet_counts: Iterable[int],
    profile: CodecProfile | None = None,
) -> list[metrics.MetricsSummary]:
    """One summary per (direction, packet count), for threshold tables."""
    counts = list(packet_counts)
    if not counts:
        raise InvalidConfigError("packet_counts must not be empty")
    summaries = []
    for count in counts:
        result = run_scenario(replace(base_config, packet_count=count), profile=profile)
        for direction in result.config.simulated_directions():
            summaries.append(
                metrics.summarize_trace(
                    result.events_for(direction), str(direction), result.dropped[direction]
                )
            )
    return summaries


def config_preamble(config: ScenarioConfig) -> list[str]:
    """Effective-config lines echoed into output file headers."""
    return [
        f"direction = {config.direction}",
        f"packet_count = {config.packet_count}",
        f"link_base_delay_ms = {config.link_base_delay_ms}",
        f"link_jitter_span_ms = {config.link_jitter_span_ms}",
        f"gateway_processing_delay_ms = {config.gateway_processing_delay_ms}",
        f"buffer_capacity = {config.buffer_capacity}",
        f"codec = {config.codec}",
        f"seed = {config.seed}",
        f"rng = {GENERATOR_NAME}",
    ]


def render_trace_csv(result: ScenarioResult, preamble: Iterable[str] = ()) -> str:
    """Trace CSV: provenance comments, header row, one row per delivered packet."""
    lines = [f"# {line}" for line in preamble]
    lines.append(TRACE_CSV_COLUMNS)
    for e in result.events:
        lines.append(
            f"{e.packet_id},{e.direction},{e.send_time_ms:.3f},{e.gateway_in_ms:.3f},"
            f"{e.gateway_out_ms:.3f},{e.receive_time_ms:.3f},{e.size_bytes_in},{e.size_bytes_out}"
        )
    return "\n".join(lines) + "\n"


def write_trace_csv(
    result: ScenarioResult,
    destination: str | Path | TextIO,
    preamble: Iterable[str] = (),
) -> None:
    text = render_trace_csv(result, preamble)
    if isinstance(destination, (str, Path)):
        path = Path(destination)
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_text(text)
        os.replace(tmp, path)
    else:
        destination.write(text)
