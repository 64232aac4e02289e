"""Wire messages exchanged between behavior agents."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

from .ids import NodeId, StreamId
from .sensors import PoseSample

RECORD_VERSION = 1

CONTROL_BYTES = 32
STREAM_ENTRY_BYTES = 16
DATA_BYTES = 64


class MsgKind(str, enum.Enum):
    JOIN_QUERY = "JoinQuery"
    JOIN_RESPONSE = "JoinResponse"
    ADVERTISE = "Advertise"
    SUBSCRIBE = "Subscribe"
    SUBSCRIBE_ACK = "SubscribeAck"
    REDIRECT_TO = "RedirectTo"
    DELEGATE_FORWARD = "DelegateForward"
    DELEGATE_NACK = "DelegateNack"
    REJECT = "Reject"
    UNSUBSCRIBE = "Unsubscribe"
    FORWARD_OFF = "ForwardOff"
    PING = "Ping"
    PONG = "Pong"
    DATA = "Data"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class ControlMessage:
    kind: MsgKind
    sender: NodeId
    stream: Optional[StreamId] = None
    forwarder: Optional[NodeId] = None
    new_consumer: Optional[NodeId] = None
    known_streams: tuple[StreamId, ...] = ()
    nonce: Optional[int] = None
    spare: Optional[int] = None
    reason: Optional[str] = None

    def __post_init__(self):
        needs_stream = self.kind not in (MsgKind.JOIN_QUERY, MsgKind.JOIN_RESPONSE,
                                         MsgKind.PING, MsgKind.PONG)
        if needs_stream and self.stream is None:
            raise ValueError(f"{self.kind} requires a stream")
        if self.kind is MsgKind.DATA:
            raise ValueError("use DataMessage for Data")

    @property
    def size_bytes(self) -> int:
        return CONTROL_BYTES + STREAM_ENTRY_BYTES * len(self.known_streams)

    def to_record(self) -> dict:
        rec = {"v": RECORD_VERSION, "kind": self.kind.value, "sender": self.sender}
        if self.stream is not None:
            rec["stream"] = self.stream.token
        if self.forwarder is not None:
            rec["forwarder"] = self.forwarder
        if self.new_consumer is not None:
            rec["new_consumer"] = self.new_consumer
        if self.kind in (MsgKind.JOIN_QUERY, MsgKind.JOIN_RESPONSE):
            rec["known_streams"] = [s.token for s in self.known_streams]
        if self.nonce is not None:
            rec["nonce"] = self.nonce
        if self.spare is not None:
            rec["spare"] = self.spare
        if self.reason is not None:
            rec["reason"] = self.reason
        return rec


@dataclass(frozen=True)
class DataMessage:
    sender: NodeId
    sample: PoseSample

    kind = MsgKind.DATA
    size_bytes = DATA_BYTES

    @property
    def stream(self) -> StreamId:
        return self.sample.stream

    def to_record(self) -> dict:
        s = self.sample
        return {
            "v": RECORD_VERSION,
            "kind": "Data",
            "sender": self.sender,
            "stream": s.stream.token,
            "seq": s.seq,
            "origin_time": s.origin_time,
            "hop_count": s.hop_count,
        }
