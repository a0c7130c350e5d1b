import struct

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from afc.errors import FramingError, ProtocolError
from afc.orchestrator.protocol import (
    Channel, FrameReader, MessageType, WireMessage, decode_message, encode_message,
)

int32 = st.integers(-(2**31), 2**31 - 1)
messages = st.builds(
    WireMessage,
    st.sampled_from(list(MessageType)),
    int32, int32, int32,
    st.lists(st.floats(width=64), max_size=40).map(np.array),
)


def random_frames(n, seed):
    rng = np.random.default_rng(seed)
    for _ in range(n):
        payload = rng.standard_normal(rng.integers(0, 300))
        if payload.size and rng.random() < 0.2:
            payload[rng.integers(payload.size)] = rng.choice([np.nan, np.inf, -0.0, 5e-324])
        msg = WireMessage(int(rng.integers(0, 6)), *(int(x) for x in rng.integers(-(2**31), 2**31 - 1, 3)),
                          payload)
        yield msg, encode_message(msg)


def test_state_frame_is_25_bytes():
    assert len(encode_message(WireMessage(MessageType.STATE, 0, 0, 0, [0.0]))) == 25


def test_roundtrip_randomized_frames():
    failures = 0
    for msg, raw in random_frames(10_000, 0):
        back = decode_message(raw)
        failures += (back != msg) or (encode_message(back) != raw)
    assert failures == 0


@settings(max_examples=300)
@given(messages)
def test_roundtrip_property(msg):
    raw = encode_message(msg)
    assert decode_message(raw) == msg
    assert encode_message(decode_message(raw)) == raw


@settings(max_examples=300)
@given(messages, st.data())
def test_truncation_always_errors(msg, data):
    raw = encode_message(msg)
    cut = data.draw(st.integers(0, len(raw) - 1))
    with pytest.raises(FramingError) as err:
        decode_message(raw[:cut])
    assert err.value.offset <= cut


def test_trailing_bytes_rejected():
    raw = encode_message(WireMessage(MessageType.ACTION, 1, 2, 3, [0.5]))
    with pytest.raises(FramingError):
        decode_message(raw + b"\x00")


def test_unknown_type():
    raw = bytearray(encode_message(WireMessage(MessageType.HELLO)))
    raw[4] = 42
    with pytest.raises(ProtocolError):
        decode_message(bytes(raw))


def test_bad_length_field():
    raw = struct.pack("<I", 14) + b"\x00" * 14
    with pytest.raises(FramingError):
        decode_message(raw)


def test_stream_reader_delivers_only_complete_frames():
    frames = [raw for _, raw in random_frames(50, 1)]
    stream = b"".join(frames)
    reader = FrameReader()
    out = []
    rng = np.random.default_rng(2)
    pos = 0
    while pos < len(stream):
        step = int(rng.integers(1, 200))
        out += reader.feed(stream[pos:pos + step])
        pos += step
    assert [encode_message(m) for m in out] == frames
    assert reader.pending == 0
    assert reader.feed(frames[0][:-3]) == []
    assert reader.pending == len(frames[0]) - 3


def test_channel_ordering():
    ch = Channel(0, 1)
    with pytest.raises(ProtocolError):
        ch.on_action(0)
    ch.on_state(0)
    ch.on_action(0)
    with pytest.raises(ProtocolError):
        ch.on_action(1)
    ch.on_next("state", 1, 2)
    ch.on_action(1)
    with pytest.raises(ProtocolError):
        ch.on_next("end", 1, 2)
    ch.on_next("end", 2, 2)
