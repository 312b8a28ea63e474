"""Packet-delay and jitter computation with pass/fail thresholds.

Two jitter measures are reported and both are held to the same 30 ms
bound: the raw series of successive delay differences |d_i - d_{i-1}|,
and the standard smoothed estimator J <- J + (|D| - J)/16 folded over
that series. Delay is end-to-end, sender capture to receiver arrival,
with a 150 ms acceptance bound. Both comparisons are strict (<).
"""

from __future__ import annotations

import io
import os
import statistics
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Sequence, TextIO

if TYPE_CHECKING:  # pragma: no cover
    from .simnet import PacketTraceEvent

DELAY_THRESHOLD_MS = 150.0
JITTER_THRESHOLD_MS = 30.0

CSV_COLUMNS = "direction,packets,delay_min,delay_mean,delay_max,jitter_inst_max,jitter_smoothed,drops,pass"


class EmptyTraceError(ValueError):
    pass


class CausalityViolationError(ValueError):
    pass


@dataclass(frozen=True)
class MetricsSummary:
    direction: str
    packet_count: int
    delays_ms: tuple[float, ...]
    delay_min_ms: float
    delay_mean_ms: float
    delay_max_ms: float
    jitter_inst_ms: tuple[float, ...]
    jitter_inst_max_ms: float
    jitter_smoothed_ms: float
    drops: int
    delay_threshold_ms: float = DELAY_THRESHOLD_MS
    jitter_threshold_ms: float = JITTER_THRESHOLD_MS


@dataclass(frozen=True)
class AcceptanceCheck:
    name: str
    value: float
    threshold: float
    margin: float
    passed: bool


@dataclass(frozen=True)
class AcceptanceReport:
    checks: tuple[AcceptanceCheck, ...]
    passed: bool


def packet_delays(trace: Sequence["PacketTraceEvent"]) -> list[float]:
    """End-to-end delay (receive - send) per delivered packet, in send order."""
    if not trace:
        raise EmptyTraceError("no delivered packets in trace")
    ordered = sorted(trace, key=lambda e: (e.send_time_ms, e.packet_id))
    delays = []
    for event in ordered:
        if event.receive_time_ms < event.send_time_ms:
            raise CausalityViolationError(
                f"packet {event.packet_id} received at {event.receive_time_ms} "
                f"before send at {event.send_time_ms}"
            )
        delays.append(event.receive_time_ms - event.send_time_ms)
    return delays


def jitter_instantaneous(delays: Sequence[float]) -> list[float]:
    """|d_{i+1} - d_i| for each successive pair; empty for a single delay."""
    return [abs(b - a) for a, b in zip(delays, delays[1:])]


def jitter_smoothed(delays: Sequence[float]) -> float:
    """Final value of the 1/16-gain recursive estimator, starting at 0."""
    j = 0.0
    for a, b in zip(delays, delays[1:]):
        j += (abs(b - a) - j) / 16.0
    return j


def summarize(delays: Sequence[float], direction: str, drops: int = 0) -> MetricsSummary:
    if not delays:
        raise EmptyTraceError("cannot summarize an empty delay series")
    inst = jitter_instantaneous(delays)
    return MetricsSummary(
        direction=str(direction),
        packet_count=len(delays),
        delays_ms=tuple(delays),
        delay_min_ms=min(delays),
        delay_mean_ms=statistics.fmean(delays),
        delay_max_ms=max(delays),
        jitter_inst_ms=tuple(inst),
        jitter_inst_max_ms=max(inst) if inst else 0.0,
        jitter_smoothed_ms=jitter_smoothed(delays),
        drops=drops,
    )


def summarize_trace(trace: Sequence["PacketTraceEvent"], direction: str, drops: int = 0) -> MetricsSummary:
    return summarize(packet_delays(trace), direction, drops)


def check_acceptance(summary: MetricsSummary) -> AcceptanceReport:
    """Strict threshold checks; the report carries per-check margins."""
    checks = []
    for name, value, threshold in (
        ("delay_max_ms", summary.delay_max_ms, summary.delay_threshold_ms),
        ("jitter_inst_max_ms", summary.jitter_inst_max_ms, summary.jitter_threshold_ms),
        ("jitter_smoothed_ms", summary.jitter_smoothed_ms, summary.jitter_threshold_ms),
    ):
        checks.append(
            AcceptanceCheck(
                name=name,
                value=value,
                threshold=threshold,
                margin=threshold - value,
                passed=value < threshold,
            )
        )
    return AcceptanceReport(checks=tuple(checks), passed=all(c.passed for c in checks))


def _csv_row(summary: MetricsSummary) -> str:
    passed = check_acceptance(summary).passed
    return (
        f"{summary.direction},{summary.packet_count},"
        f"{summary.delay_min_ms:.3f},{summary.delay_mean_ms:.3f},{summary.delay_max_ms:.3f},"
        f"{summary.jitter_inst_max_ms:.3f},{summary.jitter_smoothed_ms:.3f},"
        f"{summary.drops},{'true' if passed else 'false'}"
    )


def render_csv(summaries: Iterable[MetricsSummary], preamble: Iterable[str] = ()) -> str:
    """Summary CSV text, rows ordered by (direction, packet count)."""
    lines = [f"# {line}" for line in preamble]
    lines.append(CSV_COLUMNS)
    for summary in sorted(summaries, key=lambda s: (s.direction, s.packet_count)):
        lines.append(_csv_row(summary))
    return "\n".join(lines) + "\n"


def write_csv(
    summaries: Iterable[MetricsSummary],
    destination: str | Path | TextIO,
    preamble: Iterable[str] = (),
) -> None:
    """Write the summary CSV to a path (atomically) or open text stream."""
    text = render_csv(summaries, preamble)
    if isinstance(destination, (str, Path)):
        path = Path(destination)
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_text(text)
        os.replace(tmp, path)
    else:
        destination.write(text)


def format_summary_table(summaries: Sequence[MetricsSummary]) -> str:
    """Aligned plain-text table of the per-direction summaries."""
    out = io.StringIO()
    header = (
        f"{'direction':<12} {'packets':>7} {'drops':>5} {'min_ms':>8} {'mean_ms':>8} "
        f"{'max_ms':>8} {'jit_inst':>8} {'jit_smooth':>10}  result"
    )
    out.write(header + "\n")
    for s in sorted(summaries, key=lambda s: (s.direction, s.packet_count)):
        ok = check_acceptance(s).passed
        out.write(
            f"{s.direction:<12} {s.packet_count:>7} {s.drops:>5} {s.delay_min_ms:>8.3f} "
            f"{s.delay_mean_ms:>8.3f} {s.delay_max_ms:>8.3f} {s.jitter_inst_max_ms:>8.3f} "
            f"{s.jitter_smoothed_ms:>10.3f}  {'pass' if ok else 'FAIL'}\n"
        )
    return out.getvalue()
