"""Binary wire protocol between the coordinator and environment workers.

Frame layout, little-endian::

    uint32 length      bytes that follow this field (13 + 8 * n_payload)
    uint8  type        see MessageType
    int32  cfd_id
    int32  marl_id
    int32  step
    float64 payload[n_payload]

Conversation per worker and episode::

    worker -> coord   HELLO        payload [version, obs_size, act_size, n_marl]   (once, on connect)
    coord  -> worker  HELLO        payload [version, episode_seed]                 (starts an episode)
    worker -> coord   STATE t=0    payload obs                                      (per marl_id)
    coord  -> worker  ACTION t     payload [action]                                 (per marl_id)
    worker -> coord   STATE t+1    payload obs + [R_i, r_i]                         (reward piggybacked)
    ...
    worker -> coord   EPISODE_END  payload [R_i, r_i] + t[] + C_l[] + C_d[]         (after the last action)
    coord  -> worker  SHUTDOWN
"""
from __future__ import annotations

import enum
import struct
from dataclasses import dataclass, field

import numpy as np

from afc.errors import FramingError, ProtocolError

PROTOCOL_VERSION = 1
MAX_PAYLOAD = 2**24
_HEAD = struct.Struct("<IBiii")
HEADER_SIZE = _HEAD.size  # 17


class MessageType(enum.IntEnum):
    HELLO = 0
    STATE = 1
    ACTION = 2
    REWARD = 3
    EPISODE_END = 4
    SHUTDOWN = 5


@dataclass
class WireMessage:
    type: MessageType
    cfd_id: int = 0
    marl_id: int = 0
    step: int = 0
    payload: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        self.type = MessageType(self.type)
        self.payload = np.asarray(self.payload, dtype="<f8").reshape(-1)

    def __eq__(self, other):
        if not isinstance(other, WireMessage):
            return NotImplemented
        return (self.type == other.type and self.cfd_id == other.cfd_id
                and self.marl_id == other.marl_id and self.step == other.step
                and self.payload.tobytes() == other.payload.tobytes())


def encode_message(msg: WireMessage) -> bytes:
    n = msg.payload.size
    if n > MAX_PAYLOAD:
        raise ProtocolError(f"payload of {n} floats exceeds the {MAX_PAYLOAD} limit")
    head = _HEAD.pack(13 + 8 * n, int(msg.type), msg.cfd_id, msg.marl_id, msg.step)
    return head + msg.payload.astype("<f8", copy=False).tobytes()


def _parse(buf, offset=0):
    """Decode one frame starting at ``offset``; return ``(message, end offset)``."""
    avail = len(buf) - offset
    if avail < 4:
        raise FramingError("truncated length prefix", offset + avail)
    (length,) = struct.unpack_from("<I", buf, offset)
    if length < 13 or (length - 13) % 8:
        raise FramingError(f"invalid frame length {length}", offset)
    if (length - 13) // 8 > MAX_PAYLOAD:
        raise FramingError(f"payload length {(length - 13) // 8} exceeds limit", offset)
    if avail < 4 + length:
        raise FramingError(f"truncated frame: need {4 + length} bytes, have {avail}", offset + avail)
    _, kind, cfd_id, marl_id, step = _HEAD.unpack_from(buf, offset)
    try:
        kind = MessageType(kind)
    except ValueError:
        raise ProtocolError(f"unknown message type {kind}") from None
    n = (length - 13) // 8
    payload = np.frombuffer(buf, dtype="<f8", count=n, offset=offset + HEADER_SIZE).copy()
    return WireMessage(kind, cfd_id, marl_id, step, payload), offset + 4 + length


def decode_message(buf: bytes) -> WireMessage:
    """Decode exactly one frame; trailing bytes are a framing error."""
    msg, end = _parse(buf)
    if end != len(buf):
        raise FramingError(f"{len(buf) - end} trailing bytes after frame", end)
    return msg


class FrameReader:
    """Incremental decoder for a byte stream; yields only complete frames."""

    def __init__(self):
        self._buf = bytearray()

    def feed(self, data):
        self._buf += data
        out = []
        while len(self._buf) >= 4:
            (length,) = struct.unpack_from("<I", self._buf, 0)
            if len(self._buf) < 4 + length:
                break
            msg, end = _parse(bytes(self._buf[: 4 + length]))
            out.append(msg)
            del self._buf[:end]
        return out

    @property
    def pending(self):
        return len(self._buf)


class Channel:
    """Per-(cfd_id, marl_id) ordering guard on the coordinator side.

    Enforces STATE(t) -> ACTION(t) -> STATE(t+1) | EPISODE_END.
    """

    def __init__(self, cfd_id, marl_id):
        self.cfd_id, self.marl_id = cfd_id, marl_id
        self.expect = "state"
        self.step = 0

    def reset(self):
        self.expect = "state"
        self.step = 0

    def on_state(self, step):
        if self.expect != "state" or step != self.step:
            raise ProtocolError(
                f"channel ({self.cfd_id}, {self.marl_id}): unexpected state for step {step} "
                f"(expecting {self.expect} at step {self.step})"
            )
        self.expect = "action"

    def on_action(self, step):
        if self.expect != "action" or step != self.step:
            raise ProtocolError(
                f"channel ({self.cfd_id}, {self.marl_id}): action for step {step} sent before its state"
            )
        self.expect = "state_or_end"
        self.step += 1

    def on_next(self, kind, step, last_step):
        """Accept the message that follows an action: next state, or episode end."""
        if self.expect != "state_or_end" or step != self.step:
            raise ProtocolError(
                f"channel ({self.cfd_id}, {self.marl_id}): unexpected {kind} for step {step}"
            )
        if kind == "end":
            if step != last_step:
                raise ProtocolError(f"episode_end at step {step}, expected {last_step}")
            self.expect = "done"
        else:
            self.expect = "action"
