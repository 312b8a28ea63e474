import pytest
from hypothesis import given
from hypothesis import strategies as st

from iaxrsw.framing import GSM_PROFILE
from iaxrsw.packets import IaxMiniHeader, MediaPacket, RtpHeader
from iaxrsw.rng import SplitMix64
from iaxrsw.translator import (
    CallNumberMismatchError,
    InvalidCallNumberError,
    NonIntegralTimestampError,
    PayloadSizeMismatchError,
    SsrcMismatchError,
    TranslationBuffer,
    extend_timestamp,
    iax_to_rsw,
    open_binding,
    rsw_to_iax,
)

PAYLOAD = bytes(range(33))


def fresh_binding(call=1, seed=5):
    return open_binding(call, seed)


# -- timestamp extension ------------------------------------------------

@pytest.mark.parametrize(
    "low16,last,expected",
    [
        (5, 0, 5),
        (1, 65534, 65537),        # forward across the wrap
        (65535, 65537, 65535),    # slightly behind, stays in same epoch
        (0, 32768, 65536),        # exact tie resolves upward
        (0, 0, 0),
        (1234, 1234, 1234),
        (0, 65536, 65536),
        (65535, 0, 65535),        # tie between -1 (clipped) and 65535
    ],
)
def test_extend_timestamp_examples(low16, last, expected):
    assert extend_timestamp(low16, last) == expected


def test_extend_timestamp_never_negative_and_congruent():
    rng = SplitMix64(11)
    for _ in range(2000):
        low16 = rng.next_u64() & 0xFFFF
        last = rng.next_u64() % (1 << 34)
        value = extend_timestamp(low16, last)
        assert value >= 0
        assert value % 65536 == low16
        assert abs(value - last) <= 65536


@given(st.integers(0, 0xFFFF), st.integers(0, 1 << 40))
def test_extend_timestamp_is_nearest(low16, last):
    value = extend_timestamp(low16, last)
    # no other congruent candidate is strictly closer
    for other in (value - 65536, value + 65536):
        if other >= 0:
            assert abs(value - last) <= abs(other - last)


# -- forward translation ------------------------------------------------

def test_iax_to_rsw_basic_fields():
    binding = fresh_binding()
    first_seq = binding.next_rtp_seq
    packet = MediaPacket(IaxMiniHeader(1, 20), PAYLOAD)
    out = iax_to_rsw(packet, binding, GSM_PROFILE)
    assert isinstance(out.header, RtpHeader)
    assert out.header.payload_type == 3
    assert out.header.ssrc == binding.rtp_ssrc
    assert out.header.sequence_number == first_seq
    assert out.header.timestamp == 20 * 8  # 8 kHz sample clock
    assert out.header.marker  # first packet of the session
    assert out.payload == PAYLOAD


def test_marker_only_on_first_packet():
    binding = fresh_binding()
    first = iax_to_rsw(MediaPacket(IaxMiniHeader(1, 0), PAYLOAD), binding, GSM_PROFILE)
    second = iax_to_rsw(MediaPacket(IaxMiniHeader(1, 20), PAYLOAD), binding, GSM_PROFILE)
    assert first.header.marker and not second.header.marker


def test_sequence_numbers_wrap():
    binding = fresh_binding()
    binding.next_rtp_seq = 0xFFFF
    a = iax_to_rsw(MediaPacket(IaxMiniHeader(1, 0), PAYLOAD), binding, GSM_PROFILE)
    b = iax_to_rsw(MediaPacket(IaxMiniHeader(1, 20), PAYLOAD), binding, GSM_PROFILE)
    assert (a.header.sequence_number, b.header.sequence_number) == (0xFFFF, 0)


def test_timestamp_extension_across_wrap():
    binding = fresh_binding()
    iax_to_rsw(MediaPacket(IaxMiniHeader(1, 65500), PAYLOAD), binding, GSM_PROFILE)
    out = iax_to_rsw(MediaPacket(IaxMiniHeader(1, 36), PAYLOAD), binding, GSM_PROFILE)
    # 36 after 65500 means 65536 + 36 extended milliseconds
    assert out.header.timestamp == (65536 + 36) * 8
    assert binding.last_extended_ms == 65536 + 36


def test_last_extended_ms_never_decreases():
    binding = fresh_binding()
    iax_to_rsw(MediaPacket(IaxMiniHeader(1, 1000), PAYLOAD), binding, GSM_PROFILE)
    iax_to_rsw(MediaPacket(IaxMiniHeader(1, 900), PAYLOAD), binding, GSM_PROFILE)
    assert binding.last_extended_ms == 1000


def test_iax_to_rsw_call_mismatch():
    with pytest.raises(CallNumberMismatchError):
        iax_to_rsw(MediaPacket(IaxMiniHeader(2, 0), PAYLOAD), fresh_binding(call=1), GSM_PROFILE)


def test_iax_to_rsw_payload_size_mismatch():
    with pytest.raises(PayloadSizeMismatchError):
        iax_to_rsw(MediaPacket(IaxMiniHeader(1, 0), b"\x00" * 32), fresh_binding(), GSM_PROFILE)


# -- reverse translation ------------------------------------------------

def rtp_packet(binding, seq, ms, marker=False):
    header = RtpHeader(
        marker=marker,
        payload_type=3,
        sequence_number=seq,
        timestamp=(binding.rtp_ts_base + ms * 8) & 0xFFFFFFFF,
        ssrc=binding.rtp_ssrc,
    )
    return MediaPacket(header, PAYLOAD)


def test_rsw_to_iax_basic_fields():
    binding = fresh_binding(call=77)
    out = rsw_to_iax(rtp_packet(binding, 100, ms=20), binding, GSM_PROFILE)
    assert isinstance(out.header, IaxMiniHeader)
    assert out.header.source_call_number == 77
    assert out.header.timestamp_low16 == 20
    assert out.payload == PAYLOAD


def test_rsw_to_iax_low16_wraps():
    binding = fresh_binding()
    out = rsw_to_iax(rtp_packet(binding, 1, ms=65536 + 36), binding, GSM_PROFILE)
    assert out.header.timestamp_low16 == 36


def test_rsw_to_iax_ssrc_mismatch():
    binding = fresh_binding()
    packet = rtp_packet(binding, 1, ms=0)
    other = fresh_binding(seed=6)
    assert other.rtp_ssrc != binding.rtp_ssrc
    with pytest.raises(SsrcMismatchError):
        rsw_to_iax(packet, other, GSM_PROFILE)


def test_rsw_to_iax_non_integral_timestamp():
    binding = fresh_binding()
    header = RtpHeader(payload_type=3, sequence_number=1, timestamp=3, ssrc=binding.rtp_ssrc)
    with pytest.raises(NonIntegralTimestampError):
        rsw_to_iax(MediaPacket(header, PAYLOAD), binding, GSM_PROFILE)


def test_rsw_to_iax_payload_size_mismatch():
    binding = fresh_binding()
    header = RtpHeader(payload_type=3, timestamp=0, ssrc=binding.rtp_ssrc)
    with pytest.raises(PayloadSizeMismatchError):
        rsw_to_iax(MediaPacket(header, b""), binding, GSM_PROFILE)


def test_seq_loss_accounting():
    binding = fresh_binding()
    for seq, ms in ((10, 0), (11, 20), (14, 80), (15, 100)):
        rsw_to_iax(rtp_packet(binding, seq, ms), binding, GSM_PROFILE)
    assert binding.rtp_packets_received == 4
    assert binding.rtp_seq_lost == 2  # 12 and 13


def test_seq_loss_accounting_across_wrap():
    binding = fresh_binding()
    rsw_to_iax(rtp_packet(binding, 0xFFFF, 0), binding, GSM_PROFILE)
    rsw_to_iax(rtp_packet(binding, 2, 60), binding, GSM_PROFILE)
    assert binding.rtp_seq_lost == 2  # 0 and 1


def test_duplicate_seq_not_counted_as_loss():
    binding = fresh_binding()
    rsw_to_iax(rtp_packet(binding, 5, 0), binding, GSM_PROFILE)
    rsw_to_iax(rtp_packet(binding, 5, 0), binding, GSM_PROFILE)
    assert binding.rtp_seq_lost == 0
    assert binding.rtp_packets_received == 2


# -- binding ------------------------------------------------------------

def test_open_binding_deterministic():
    a = open_binding(9, ssrc_seed=1234)
    b = open_binding(9, ssrc_seed=1234)
    assert (a.rtp_ssrc, a.next_rtp_seq) == (b.rtp_ssrc, b.next_rtp_seq)
    assert 0 <= a.rtp_ssrc <= 0xFFFFFFFF
    assert 0 <= a.next_rtp_seq <= 0xFFFF


@pytest.mark.parametrize("call", [0, -1, 0x8000])
def test_open_binding_rejects_bad_call(call):
    with pytest.raises(InvalidCallNumberError):
        open_binding(call, 1)


# -- roundtrip property -------------------------------------------------

@given(
    st.integers(1, 0x7FFF),
    st.integers(0, 1 << 20),
    st.lists(st.integers(1, 1000), min_size=1, max_size=20),
)
def test_roundtrip_recovers_mini_stream(call, start_ms, steps):
    binding = open_binding(call, ssrc_seed=99)
    ms = start_ms
    for step in steps:
        mini_in = IaxMiniHeader(call, ms & 0xFFFF)
        rtp = iax_to_rsw(MediaPacket(mini_in, PAYLOAD), binding, GSM_PROFILE)
        back = rsw_to_iax(rtp, binding, GSM_PROFILE)
        assert back.header.timestamp_low16 == mini_in.timestamp_low16
        assert back.payload == PAYLOAD
        ms += step


# -- translation buffer -------------------------------------------------

def test_buffer_fifo_order():
    buf = TranslationBuffer(4)
    for i in range(4):
        assert buf.push(i) is False
    assert [buf.pop() for _ in range(4)] == [0, 1, 2, 3]
    assert buf.pop() is None


def test_buffer_drop_oldest_on_overflow():
    buf = TranslationBuffer(3)
    for i in range(3):
        buf.push(i)
    assert buf.push(3) is True  # drops 0
    assert buf.dropped == 1
    assert [buf.pop() for _ in range(3)] == [1, 2, 3]


def test_buffer_burst_drops_exactly_k_oldest():
    c, k = 5, 4
    buf = TranslationBuffer(c)
    for i in range(c + k):
        buf.push(i)
    assert buf.dropped == k
    assert [buf.pop() for _ in range(c)] == list(range(k, c + k))


def test_buffer_capacity_zero_drops_everything():
    buf = TranslationBuffer(0)
    assert buf.push("x") is True
    assert buf.pop() is None
    assert buf.dropped == 1


def test_buffer_rejects_negative_capacity():
    with pytest.raises(ValueError):
        TranslationBuffer(-1)


def test_buffer_len_tracks_occupancy():
    buf = TranslationBuffer(2)
    assert len(buf) == 0
    buf.push(1)
    assert len(buf) == 1
    buf.push(2)
    buf.push(3)
    assert len(buf) == 2  # bounded
    buf.pop()
    assert len(buf) == 1


@given(st.lists(st.sampled_from(["push", "pop"]), max_size=200), st.integers(0, 8))
def test_buffer_matches_deque_model(ops, capacity):
    from collections import deque

    buf = TranslationBuffer(capacity)
    model: deque = deque(maxlen=capacity or None)
    pushed = dropped = 0
    for op in ops:
        if op == "push":
            item = pushed
            pushed += 1
            overflowed = buf.push(item)
            if capacity == 0:
                dropped += 1
                assert overflowed
            elif len(model) == capacity:
                model.popleft()
                dropped += 1
                assert overflowed
                model.append(item)
            else:
                assert not overflowed
                model.append(item)
        else:
            expect = model.popleft() if model else None
            assert buf.pop() == expect
    assert buf.dropped == dropped
    assert len(buf) == len(model)
