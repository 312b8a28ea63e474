"""Header translation between IAX mini frames and RTP, per call session.

The gateway keeps one SessionBinding per call and two FIFO buffers, one
per direction. Buffers hold packets in their source format; translation
happens when a packet is dequeued for forwarding.

Clock mapping: mini-frame timestamps are milliseconds truncated to 16
bits, RTP timestamps advance in audio samples (8 per ms at 8 kHz). Going
IAX->RSW the 16-bit value is first extended to full milliseconds against
the last seen time (so wraps every 65.536 s are transparent), then scaled
to sample ticks. Going RSW->IAX the sample delta from the session base is
scaled back to milliseconds and truncated to 16 bits.

Information loss, documented: mini frames carry no sequence number, so
RTP sequence numbers are synthesized (monotone, random start) on IAX->RSW
and discarded after loss/reorder accounting on RSW->IAX.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .framing import CodecProfile
from .packets import IaxMiniHeader, MAX_CALL_NUMBER, MediaPacket, RtpHeader
from .rng import SplitMix64

# Forward seq jumps beyond this are treated as a stream restart, not loss.
_MAX_SEQ_GAP = 3000


class TranslationError(ValueError):
    """Base class for per-packet translation failures."""


class CallNumberMismatchError(TranslationError):
    pass


class PayloadSizeMismatchError(TranslationError):
    pass


class SsrcMismatchError(TranslationError):
    pass


class NonIntegralTimestampError(TranslationError):
    pass


class InvalidCallNumberError(ValueError):
    pass


@dataclass
class SessionBinding:
    """Per-call translation state shared by both directions of a session."""

    iax_call_number: int
    rtp_ssrc: int
    next_rtp_seq: int
    rtp_ts_base: int = 0
    session_epoch_ms: int = 0
    last_extended_ms: int = 0
    first_packet_sent: bool = False
    # RSW->IAX loss/reorder accounting; the only use the incoming RTP
    # sequence number has, since mini frames cannot carry it.
    rtp_packets_received: int = 0
    rtp_last_seq: int | None = None
    rtp_seq_lost: int = 0


def open_binding(iax_call_number: int, ssrc_seed: int) -> SessionBinding:
    """Create a binding with SSRC and initial sequence drawn from the seed.

    The initial RTP sequence number is randomized (standard practice) but
    deterministic per seed, so peers and tests can derive the same binding.
    """
    if not 1 <= iax_call_number <= MAX_CALL_NUMBER:
        raise InvalidCallNumberError(
            f"call number must be in 1..{MAX_CALL_NUMBER}, got {iax_call_number}"
        )
    rng = SplitMix64(ssrc_seed)
    return SessionBinding(
        iax_call_number=iax_call_number,
        rtp_ssrc=rng.next_u64() & 0xFFFFFFFF,
        next_rtp_seq=rng.next_u64() & 0xFFFF,
    )


def extend_timestamp(low16: int, last_extended_ms: int) -> int:
    """Recover full milliseconds from a 16-bit truncated timestamp.

    Returns the unique v >= 0 with v mod 65536 == low16 that lies closest
    to last_extended_ms, ties broken upward. Monotone streams with
    inter-packet gaps under 32768 ms are extended without ambiguity.
    """
    base = (last_extended_ms >> 16) << 16
    best = -1
    best_dist = None
    for candidate in (base - 0x10000 + low16, base + low16, base + 0x10000 + low16):
        if candidate < 0:
            continue
        dist = abs(candidate - last_extended_ms)
        if best_dist is None or dist < best_dist or (dist == best_dist and candidate > best):
            best, best_dist = candidate, dist
    return best


def iax_to_rsw(packet: MediaPacket, binding: SessionBinding, profile: CodecProfile) -> MediaPacket:
    """Translate a mini-frame media packet into its RTP equivalent.

    Payload bytes are copied unchanged. The RTP header gets the binding's
    SSRC, the next synthesized sequence number (16-bit wrap), a timestamp
    scaled from the extended millisecond clock, and the marker bit on the
    first packet of the session only.
    """
    header = packet.header
    if not isinstance(header, IaxMiniHeader):
        raise TypeError("iax_to_rsw expects a mini-frame MediaPacket")
    if header.source_call_number != binding.iax_call_number:
        raise CallNumberMismatchError(
            f"packet call {header.source_call_number} != binding call {binding.iax_call_number}"
        )
    if len(packet.payload) != profile.frame_payload_bytes:
        raise PayloadSizeMismatchError(
            f"payload is {len(packet.payload)} bytes, profile expects {profile.frame_payload_bytes}"
        )
    extended = extend_timestamp(header.timestamp_low16, binding.last_extended_ms)
    # max() keeps last_extended_ms nondecreasing when late packets extend
    # to a time before the newest one already seen.
    binding.last_extended_ms = max(binding.last_extended_ms, extended)
    timestamp = (binding.rtp_ts_base + extended * profile.sample_rate_hz // 1000) & 0xFFFFFFFF
    seq = binding.next_rtp_seq
    binding.next_rtp_seq = (seq + 1) & 0xFFFF
    marker = not binding.first_packet_sent
    binding.first_packet_sent = True
    rtp = RtpHeader(
        marker=marker,
        payload_type=profile.rtp_payload_type,
        sequence_number=seq,
        timestamp=timestamp,
        ssrc=binding.rtp_ssrc,
    )
    return MediaPacket(header=rtp, payload=packet.payload)


def rsw_to_iax(packet: MediaPacket, binding: SessionBinding, profile: CodecProfile) -> MediaPacket:
    """Translate an RTP media packet into its mini-frame equivalent.

    The sample-tick delta from the session base (32-bit wrapping) is
    scaled back to milliseconds; its low 16 bits become the mini
    timestamp. The RTP sequence number cannot be represented in a mini
    frame and is dropped after loss accounting.
    """
    header = packet.header
    if not isinstance(header, RtpHeader):
        raise TypeError("rsw_to_iax expects an RTP MediaPacket")
    if header.ssrc != binding.rtp_ssrc:
        raise SsrcMismatchError(f"ssrc {header.ssrc:#010x} != binding ssrc {binding.rtp_ssrc:#010x}")
    if len(packet.payload) != profile.frame_payload_bytes:
        raise PayloadSizeMismatchError(
            f"payload is {len(packet.payload)} bytes, profile expects {profile.frame_payload_bytes}"
        )
    if profile.sample_rate_hz % 1000:
        raise ValueError("sample_rate_hz must be a whole number of samples per ms")
    samples_per_ms = profile.sample_rate_hz // 1000
    delta = (header.timestamp - binding.rtp_ts_base) & 0xFFFFFFFF
    if delta % samples_per_ms:
        raise NonIntegralTimestampError(
            f"sample delta {delta} is not a multiple of {samples_per_ms} samples/ms"
        )
    _account_rtp_seq(binding, header.sequence_number)
    mini = IaxMiniHeader(
        source_call_number=binding.iax_call_number,
        timestamp_low16=(delta // samples_per_ms) & 0xFFFF,
    )
    return MediaPacket(header=mini, payload=packet.payload)


def _account_rtp_seq(binding: SessionBinding, seq: int) -> None:
    binding.rtp_packets_received += 1
    if binding.rtp_last_seq is not None:
        gap = (seq - binding.rtp_last_seq) & 0xFFFF
        if 1 < gap < _MAX_SEQ_GAP:
            binding.rtp_seq_lost += gap - 1
        if gap == 0 or gap >= _MAX_SEQ_GAP:
            return
    binding.rtp_last_seq = seq


class TranslationBuffer:
    """Bounded FIFO of source-format packets awaiting translation.

    Overflow drops the oldest queued packet: for real-time audio a fresh
    packet is worth more than a stale one. ``dropped`` counts exactly the
    overflow discards.
    """

    def __init__(self, capacity: int):
        if capacity < 0:
            raise ValueError("capacity must be >= 0")
        self._capacity = capacity
        self._queue: deque = deque()
        self.dropped = 0

    @property
    def capacity(self) -> int:
        return self._capacity

    def __len__(self) -> int:
        return len(self._queue)

    def push(self, packet) -> bool:
        """Enqueue a packet; returns True iff the push caused a drop.

        At capacity 0 the new packet itself is the one dropped.
        """
        if self._capacity == 0:
            self.dropped += 1
            return True
        overflowed = len(self._queue) >= self._capacity
        if overflowed:
            self._queue.popleft()
            self.dropped += 1
        self._queue.append(packet)
        return overflowed

    def pop(self):
        """Dequeue in FIFO order; None when empty."""
        return self._queue.popleft() if self._queue else None
