import socket

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lanespace.core import RoadClass, SegmentationMask
from lanespace.pipeline import (
    HEADER_SIZE,
    MAGIC,
    MSG_MASK,
    MSG_REGIONS,
    VERSION,
    FrameMessage,
    LengthError,
    MagicError,
    MaskPayload,
    MessageTypeError,
    PayloadError,
    ProtocolError,
    RegionPayload,
    TruncatedError,
    VersionError,
    decode_frame,
    encode_frame,
    mask_frame,
    read_wire_frame,
)


def tiny_mask():
    return SegmentationMask(np.array([[0, 1], [2, 0]], dtype=np.uint8))


def good_frame_bytes(frame_id=7):
    return encode_frame(mask_frame(frame_id, tiny_mask(), RoadClass.HIGHWAY))


def test_header_is_fourteen_bytes():
    assert HEADER_SIZE == 14


def test_mask_frame_bytes_match_a_hand_assembled_frame():
    # 14-byte header, 5 fixed payload bytes, then 4 mask bytes: 23 in all.
    expected = (
        MAGIC
        + bytes([VERSION, MSG_MASK])
        + (7).to_bytes(4, "big")
        + (9).to_bytes(4, "big")
        + (2).to_bytes(2, "big")
        + (2).to_bytes(2, "big")
        + bytes([int(RoadClass.HIGHWAY)])
        + bytes([0, 1, 2, 0])
    )
    got = good_frame_bytes()
    assert len(got) == 23
    assert got == expected


def test_mask_round_trip():
    msg = decode_frame(good_frame_bytes(frame_id=41))
    assert msg.frame_id == 41
    assert isinstance(msg.payload, MaskPayload)
    assert msg.payload.road_class == RoadClass.HIGHWAY
    assert msg.payload.to_mask() == tiny_mask()


def test_region_round_trip():
    doc = b'{"frame_id":3,"regions":[]}'
    raw = encode_frame(FrameMessage(3, RegionPayload(doc)))
    msg = decode_frame(raw)
    assert isinstance(msg.payload, RegionPayload)
    assert msg.payload.document == doc


@given(
    st.integers(0, 2**32 - 1),
    st.integers(1, 9),
    st.integers(1, 9),
    st.sampled_from(sorted(RoadClass, key=int)),
    st.data(),
)
def test_any_mask_survives_the_wire(frame_id, w, h, road_class, data):
    cells = data.draw(
        st.lists(st.integers(0, 2), min_size=w * h, max_size=w * h)
    )
    mask = SegmentationMask(np.array(cells, dtype=np.uint8).reshape(h, w))
    msg = decode_frame(encode_frame(mask_frame(frame_id, mask, road_class)))
    assert msg.frame_id == frame_id
    assert msg.payload.road_class == road_class
    assert msg.payload.to_mask() == mask


def test_encode_rejects_inconsistent_mask_length():
    bad = MaskPayload(3, 3, RoadClass.UNKNOWN, b"\x00" * 4)
    with pytest.raises(ValueError):
        encode_frame(FrameMessage(0, bad))


# --- one test per malformation class ---------------------------------------


def test_short_data_is_truncated():
    with pytest.raises(TruncatedError):
        decode_frame(good_frame_bytes()[: HEADER_SIZE - 1])


def test_bad_magic():
    raw = b"XXXX" + good_frame_bytes()[4:]
    with pytest.raises(MagicError):
        decode_frame(raw)


def test_bad_version():
    raw = bytearray(good_frame_bytes())
    raw[4] = 99
    with pytest.raises(VersionError):
        decode_frame(bytes(raw))


def test_bad_message_type():
    raw = bytearray(good_frame_bytes())
    raw[5] = 3
    with pytest.raises(MessageTypeError):
        decode_frame(bytes(raw))


def test_implausible_payload_length():
    raw = bytearray(good_frame_bytes())
    raw[10:14] = (1 << 30).to_bytes(4, "big")
    with pytest.raises(LengthError):
        decode_frame(bytes(raw))


def test_truncated_payload():
    with pytest.raises(TruncatedError):
        decode_frame(good_frame_bytes()[:-1])


def test_trailing_garbage():
    with pytest.raises(LengthError):
        decode_frame(good_frame_bytes() + b"\x00")


def test_mask_payload_shorter_than_fixed_fields():
    raw = good_frame_bytes()[:HEADER_SIZE] + b"\x00\x02"
    raw = raw[:10] + (2).to_bytes(4, "big") + raw[14:]
    with pytest.raises(TruncatedError):
        decode_frame(raw)


def test_mask_byte_count_mismatch():
    # Claim 3x3 but ship 4 pixels; header length stays consistent.
    body = (3).to_bytes(2, "big") + (3).to_bytes(2, "big") + bytes([0]) + bytes(4)
    raw = (
        MAGIC
        + bytes([VERSION, MSG_MASK])
        + (0).to_bytes(4, "big")
        + len(body).to_bytes(4, "big")
        + body
    )
    with pytest.raises(LengthError):
        decode_frame(raw)


def test_invalid_road_class_code():
    raw = bytearray(good_frame_bytes())
    raw[HEADER_SIZE + 4] = 9
    with pytest.raises(PayloadError):
        decode_frame(bytes(raw))


def test_invalid_pixel_classes_fail_at_mask_construction():
    raw = bytearray(good_frame_bytes())
    raw[-1] = 7
    msg = decode_frame(bytes(raw))  # wire-valid: pixels are checked later
    with pytest.raises(ValueError):
        msg.payload.to_mask()


def test_every_protocol_error_is_a_value_error():
    for exc in (
        MagicError,
        VersionError,
        MessageTypeError,
        TruncatedError,
        LengthError,
        PayloadError,
    ):
        assert issubclass(exc, ProtocolError)
        assert issubclass(exc, ValueError)


def test_fuzzed_frames_never_escape_protocol_errors():
    rng = np.random.default_rng(99)
    base = good_frame_bytes()
    decoded = rejected = 0
    for _ in range(300):
        raw = bytearray(base)
        for _ in range(int(rng.integers(1, 4))):
            raw[int(rng.integers(len(raw)))] = int(rng.integers(256))
        if rng.random() < 0.3:
            raw = raw[: int(rng.integers(len(raw) + 1))]
        try:
            decode_frame(bytes(raw))
            decoded += 1
        except ProtocolError:
            rejected += 1
    assert decoded + rejected == 300
    assert rejected > 0


# --- stream reads -----------------------------------------------------------


def test_wire_read_round_trip_and_clean_eof():
    a, b = socket.socketpair()
    with a, b:
        a.sendall(good_frame_bytes(frame_id=5))
        a.shutdown(socket.SHUT_WR)
        msg = read_wire_frame(b)
        assert msg is not None and msg.frame_id == 5
        assert read_wire_frame(b) is None  # clean end-of-stream


def test_wire_read_rejects_mid_header_close():
    a, b = socket.socketpair()
    with a, b:
        a.sendall(good_frame_bytes()[:6])
        a.shutdown(socket.SHUT_WR)
        with pytest.raises(TruncatedError):
            read_wire_frame(b)


def test_wire_read_rejects_mid_payload_close():
    a, b = socket.socketpair()
    with a, b:
        a.sendall(good_frame_bytes()[:-2])
        a.shutdown(socket.SHUT_WR)
        with pytest.raises(TruncatedError):
            read_wire_frame(b)


def test_region_messages_pass_msg_type_constant():
    raw = encode_frame(FrameMessage(1, RegionPayload(b"{}")))
    assert raw[5] == MSG_REGIONS
    assert good_frame_bytes()[5] == MSG_MASK
