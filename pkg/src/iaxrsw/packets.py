"""Byte-exact parsing and serialization of the two media-plane headers.

The RSW side carries audio in standard RTP (12-byte header); the IAX side
carries it in mini frames (4-byte header: F bit + 15-bit source call
number, then a 16-bit millisecond timestamp). Everything here operates on
UDP payloads: the IP and UDP headers belong to the network stack and are
only accounted for arithmetically in :mod:`iaxrsw.framing`.

All multi-byte fields are big-endian (network order). Parsers never read
past their input and raise typed errors instead of crashing on garbage.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from enum import Enum

RTP_HEADER_LEN = 12
MINI_HEADER_LEN = 4

_RTP_STRUCT = struct.Struct("!BBHII")
_MINI_STRUCT = struct.Struct("!HH")

MAX_CALL_NUMBER = 0x7FFF


class PacketError(ValueError):
    """Base class for wire-format failures."""


class TooShortError(PacketError):
    pass


class UnsupportedVersionError(PacketError):
    pass


class CsrcPresentError(PacketError):
    pass


class NotMediaFrameError(PacketError):
    pass


class ZeroCallNumberError(PacketError):
    pass


class InvalidHeaderError(PacketError):
    pass


class FrameKind(str, Enum):
    MINI = "mini"
    FULL = "full"
    INVALID = "invalid"

    def __str__(self) -> str:  # pragma: no cover - repr convenience
        return self.value


@dataclass(frozen=True)
class RtpHeader:
    """Fixed 12-byte RTP header (no CSRC list, no extension decoding).

    This gateway only ever emits version 2 with csrc_count 0, so the
    serialized header is always exactly 12 bytes.
    """

    version: int = 2
    padding: bool = False
    extension: bool = False
    csrc_count: int = 0
    marker: bool = False
    payload_type: int = 0
    sequence_number: int = 0
    timestamp: int = 0
    ssrc: int = 0

    def validate(self) -> None:
        if self.version != 2:
            raise InvalidHeaderError(f"RTP version must be 2, got {self.version}")
        if self.csrc_count != 0:
            raise InvalidHeaderError("CSRC lists are not supported (csrc_count must be 0)")
        if not 0 <= self.payload_type <= 0x7F:
            raise InvalidHeaderError(f"payload_type out of range: {self.payload_type}")
        if not 0 <= self.sequence_number <= 0xFFFF:
            raise InvalidHeaderError(f"sequence_number out of range: {self.sequence_number}")
        if not 0 <= self.timestamp <= 0xFFFFFFFF:
            raise InvalidHeaderError(f"timestamp out of range: {self.timestamp}")
        if not 0 <= self.ssrc <= 0xFFFFFFFF:
            raise InvalidHeaderError(f"ssrc out of range: {self.ssrc}")


@dataclass(frozen=True)
class IaxMiniHeader:
    """4-byte IAX mini-frame header: 15-bit call number + 16-bit ms timestamp.

    The high bit of the first word (the F bit) is always emitted as 0; a set
    F bit marks a full frame, which carries signaling and is out of scope.
    """

    source_call_number: int
    timestamp_low16: int = 0

    def validate(self) -> None:
        if not 1 <= self.source_call_number <= MAX_CALL_NUMBER:
            raise InvalidHeaderError(
                f"source_call_number must be in 1..{MAX_CALL_NUMBER}, got {self.source_call_number}"
            )
        if not 0 <= self.timestamp_low16 <= 0xFFFF:
            raise InvalidHeaderError(f"timestamp_low16 out of range: {self.timestamp_low16}")


@dataclass(frozen=True)
class MediaPacket:
    """A parsed media packet: either-format header plus opaque payload."""

    header: RtpHeader | IaxMiniHeader
    payload: bytes = field(default=b"")


def parse_rtp(datagram: bytes) -> tuple[RtpHeader, bytes]:
    """Decode an RTP datagram into (header, payload).

    Raises TooShortError below 12 bytes, UnsupportedVersionError for
    version != 2, CsrcPresentError when a CSRC list is announced. An
    extension header, if flagged, is left undecoded at the start of the
    payload.
    """
    if len(datagram) < RTP_HEADER_LEN:
        raise TooShortError(f"RTP datagram must be >= {RTP_HEADER_LEN} bytes, got {len(datagram)}")
    b0, b1, seq, ts, ssrc = _RTP_STRUCT.unpack_from(datagram)
    version = b0 >> 6
    if version != 2:
        raise UnsupportedVersionError(f"RTP version must be 2, got {version}")
    csrc_count = b0 & 0x0F
    if csrc_count != 0:
        raise CsrcPresentError(f"CSRC lists unsupported, csrc_count={csrc_count}")
    header = RtpHeader(
        version=version,
        padding=bool(b0 & 0x20),
        extension=bool(b0 & 0x10),
        csrc_count=csrc_count,
        marker=bool(b1 & 0x80),
        payload_type=b1 & 0x7F,
        sequence_number=seq,
        timestamp=ts,
        ssrc=ssrc,
    )
    return header, datagram[RTP_HEADER_LEN:]


def serialize_rtp(header: RtpHeader, payload: bytes = b"") -> bytes:
    """Encode header + payload; output is 12 + len(payload) bytes."""
    header.validate()
    b0 = (header.version << 6) | (int(header.padding) << 5) | (int(header.extension) << 4) | header.csrc_count
    b1 = (int(header.marker) << 7) | header.payload_type
    return _RTP_STRUCT.pack(b0, b1, header.sequence_number, header.timestamp, header.ssrc) + payload


def parse_mini(datagram: bytes) -> tuple[IaxMiniHeader, bytes]:
    """Decode an IAX mini-frame datagram into (header, payload).

    Raises TooShortError below 4 bytes, NotMediaFrameError when the F bit
    is set (full frame: signaling, out of scope), ZeroCallNumberError for
    call number 0.
    """
    if len(datagram) < MINI_HEADER_LEN:
        raise TooShortError(f"mini frame must be >= {MINI_HEADER_LEN} bytes, got {len(datagram)}")
    word0, ts = _MINI_STRUCT.unpack_from(datagram)
    if word0 & 0x8000:
        raise NotMediaFrameError("F bit set: full frame (signaling), not a media mini frame")
    call = word0 & MAX_CALL_NUMBER
    if call == 0:
        raise ZeroCallNumberError("source call number 0 is not a valid call")
    return IaxMiniHeader(source_call_number=call, timestamp_low16=ts), datagram[MINI_HEADER_LEN:]


def serialize_mini(header: IaxMiniHeader, payload: bytes = b"") -> bytes:
    """Encode header + payload; output is 4 + len(payload) bytes, F bit 0."""
    header.validate()
    return _MINI_STRUCT.pack(header.source_call_number, header.timestamp_low16) + payload


def classify_iax_datagram(datagram: bytes) -> FrameKind:
    """Total classification of an IAX-port datagram by length and F bit."""
    if len(datagram) < MINI_HEADER_LEN:
        return FrameKind.INVALID
    return FrameKind.FULL if datagram[0] & 0x80 else FrameKind.MINI
