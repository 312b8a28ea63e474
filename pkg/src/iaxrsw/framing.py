"""Codec framing model and on-wire bandwidth arithmetic.

Payloads are opaque: no signal processing happens anywhere in this
package. A codec profile only fixes sizes and timing. The GSM profile is
built in (13.2 kb/s, 20 ms frames -> 33 bytes per frame, 50 frames/s);
further profiles can be registered from config data.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .packets import MINI_HEADER_LEN, RTP_HEADER_LEN
from .rng import SplitMix64

IP_HEADER_LEN = 20
UDP_HEADER_LEN = 8


class NonIntegralRateError(ValueError):
    """Frame interval does not divide one second into a whole frame count."""


class UnknownCodecError(ValueError):
    pass


class Side(str, Enum):
    """Which network a datagram travels on; decides header overhead."""

    IAX = "iax"
    RSW = "rsw"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class CodecProfile:
    name: str
    bitrate_bps: int
    frame_interval_ms: int
    frame_payload_bytes: int
    rtp_payload_type: int
    sample_rate_hz: int

    def __post_init__(self):
        if self.frame_interval_ms <= 0:
            raise ValueError("frame_interval_ms must be positive")
        if self.frame_payload_bytes <= 0:
            raise ValueError("frame_payload_bytes must be positive")
        if self.bitrate_bps <= 0:
            raise ValueError("bitrate_bps must be positive")
        if self.sample_rate_hz <= 0:
            raise ValueError("sample_rate_hz must be positive")
        if not 0 <= self.rtp_payload_type <= 0x7F:
            raise ValueError("rtp_payload_type must fit in 7 bits")


@dataclass(frozen=True)
class AudioFrame:
    payload: bytes
    capture_time_ms: int
    frame_index: int


# 13.2 kb/s over 50 frames/s gives exactly 33 bytes per 20 ms frame.
# Payload type 3 is the standard static RTP assignment for GSM.
GSM_PROFILE = CodecProfile(
    name="gsm",
    bitrate_bps=13200,
    frame_interval_ms=20,
    frame_payload_bytes=33,
    rtp_payload_type=3,
    sample_rate_hz=8000,
)

_PROFILES: dict[str, CodecProfile] = {GSM_PROFILE.name: GSM_PROFILE}


def get_profile(name: str) -> CodecProfile:
    try:
        return _PROFILES[name]
    except KeyError:
        raise UnknownCodecError(f"unknown codec profile: {name!r}") from None


def register_profile(profile: CodecProfile) -> None:
    """Register a profile (declared in config, not code) by name."""
    _PROFILES[profile.name] = profile


def known_profiles() -> list[str]:
    return sorted(_PROFILES)


def frames_per_second(profile: CodecProfile) -> int:
    if 1000 % profile.frame_interval_ms:
        raise NonIntegralRateError(
            f"{profile.frame_interval_ms} ms frames do not divide one second evenly"
        )
    return 1000 // profile.frame_interval_ms


def on_wire_bytes(profile: CodecProfile, side: Side) -> int:
    """Full per-packet size on the wire: IP + UDP + media header + payload."""
    media_header = RTP_HEADER_LEN if side is Side.RSW else MINI_HEADER_LEN
    return IP_HEADER_LEN + UDP_HEADER_LEN + media_header + profile.frame_payload_bytes


def on_wire_bandwidth_bps(profile: CodecProfile, side: Side) -> int:
    return on_wire_bytes(profile, side) * 8 * frames_per_second(profile)


def payload_bandwidth_bps(profile: CodecProfile) -> int:
    """Bandwidth of the bare codec payload, headers excluded."""
    return profile.frame_payload_bytes * 8 * frames_per_second(profile)


def generate_talkspurt(profile: CodecProfile, n_frames: int, seed: int) -> list[AudioFrame]:
    """Deterministic opaque frames at the profile's interval, starting at 0 ms.

    The same (profile, n_frames, seed) always yields byte-identical
    payloads: frame bytes are drawn consecutively from SplitMix64(seed).
    """
    if n_frames < 0:
        raise ValueError("n_frames must be >= 0")
    rng = SplitMix64(seed)
    return [
        AudioFrame(
            payload=rng.bytes(profile.frame_payload_bytes),
            capture_time_ms=i * profile.frame_interval_ms,
            frame_index=i,
        )
        for i in range(n_frames)
    ]
