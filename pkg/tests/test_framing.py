import pytest

from iaxrsw.framing import (
    GSM_PROFILE,
    IP_HEADER_LEN,
    UDP_HEADER_LEN,
    CodecProfile,
    NonIntegralRateError,
    Side,
    UnknownCodecError,
    frames_per_second,
    generate_talkspurt,
    get_profile,
    known_profiles,
    on_wire_bandwidth_bps,
    on_wire_bytes,
    payload_bandwidth_bps,
    register_profile,
)


def test_gsm_profile_constants():
    assert GSM_PROFILE.bitrate_bps == 13200
    assert GSM_PROFILE.frame_interval_ms == 20
    assert GSM_PROFILE.frame_payload_bytes == 33
    assert GSM_PROFILE.rtp_payload_type == 3
    assert GSM_PROFILE.sample_rate_hz == 8000


def test_gsm_derived_framing_numbers():
    """20 ms at 50 fps on both wires, with per-side header overhead."""
    assert frames_per_second(GSM_PROFILE) == 50
    assert on_wire_bytes(GSM_PROFILE, Side.IAX) == 65
    assert on_wire_bytes(GSM_PROFILE, Side.RSW) == 73
    assert on_wire_bandwidth_bps(GSM_PROFILE, Side.IAX) == 26000
    assert on_wire_bandwidth_bps(GSM_PROFILE, Side.RSW) == 29200
    assert payload_bandwidth_bps(GSM_PROFILE) == 13200


def test_on_wire_includes_ip_and_udp():
    # 20 + 8 + 4 + 33 and 20 + 8 + 12 + 33
    assert on_wire_bytes(GSM_PROFILE, Side.IAX) == IP_HEADER_LEN + UDP_HEADER_LEN + 4 + 33
    assert on_wire_bytes(GSM_PROFILE, Side.RSW) == IP_HEADER_LEN + UDP_HEADER_LEN + 12 + 33


def test_get_profile_known_and_unknown():
    assert get_profile("gsm") is GSM_PROFILE
    assert "gsm" in known_profiles()
    with pytest.raises(UnknownCodecError):
        get_profile("g729")


def test_register_profile_roundtrip():
    profile = CodecProfile(
        name="pcmu-test",
        bitrate_bps=64000,
        frame_interval_ms=20,
        frame_payload_bytes=160,
        rtp_payload_type=0,
        sample_rate_hz=8000,
    )
    register_profile(profile)
    try:
        assert get_profile("pcmu-test") is profile
        assert on_wire_bandwidth_bps(profile, Side.RSW) == (20 + 8 + 12 + 160) * 8 * 50
    finally:
        known = known_profiles()
        assert "pcmu-test" in known


def test_non_integral_frame_rate_rejected():
    with pytest.raises(NonIntegralRateError):
        frames_per_second(
            CodecProfile(
                name="odd",
                bitrate_bps=1000,
                frame_interval_ms=30,  # 1000 % 30 != 0
                frame_payload_bytes=10,
                rtp_payload_type=96,
                sample_rate_hz=8000,
            )
        )


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(bitrate_bps=0),
        dict(frame_interval_ms=0),
        dict(frame_payload_bytes=0),
        dict(rtp_payload_type=200),
        dict(sample_rate_hz=0),
    ],
)
def test_profile_validation(kwargs):
    base = dict(
        name="x",
        bitrate_bps=13200,
        frame_interval_ms=20,
        frame_payload_bytes=33,
        rtp_payload_type=3,
        sample_rate_hz=8000,
    )
    base.update(kwargs)
    with pytest.raises(ValueError):
        CodecProfile(**base)


def test_talkspurt_shape_and_determinism():
    frames = generate_talkspurt(GSM_PROFILE, 5, seed=77)
    assert [f.frame_index for f in frames] == [0, 1, 2, 3, 4]
    assert [f.capture_time_ms for f in frames] == [0, 20, 40, 60, 80]
    assert all(len(f.payload) == 33 for f in frames)
    again = generate_talkspurt(GSM_PROFILE, 5, seed=77)
    assert [f.payload for f in frames] == [f.payload for f in again]
    other = generate_talkspurt(GSM_PROFILE, 5, seed=78)
    assert [f.payload for f in frames] != [f.payload for f in other]
