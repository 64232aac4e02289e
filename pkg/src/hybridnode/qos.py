"""Application-level QoS: windowed round-trip averages and admission."""

from __future__ import annotations

import math
from collections import Counter, deque
from dataclasses import dataclass
from typing import Iterable, Optional

from .ids import NodeId, node_key


@dataclass(frozen=True)
class QosConfig:
    max_consumers: int = 4
    artt_threshold_ms: float = 50.0
    ping_period_ms: float = 1000.0
    window: int = 16

    def __post_init__(self):
        for name in ("max_consumers", "artt_threshold_ms", "ping_period_ms", "window"):
            if not getattr(self, name) > 0:
                raise ValueError(f"QosConfig.{name} must be strictly positive")
        if int(self.max_consumers) != self.max_consumers or int(self.window) != self.window:
            raise ValueError("QosConfig.max_consumers and window must be integers")


class ArttTable:
    """Per-peer ring of the last ``window`` RTT samples (ms)."""

    def __init__(self, window: int = 16):
        if window <= 0:
            raise ValueError("window must be positive")
        self.window = window
        self._rings: dict[NodeId, deque] = {}
        self.counters = Counter()

    def record_rtt(self, peer: NodeId, sample_ms: float) -> bool:
        if not sample_ms >= 0:
            self.counters["negative_rtt"] += 1
            return False
        ring = self._rings.get(peer)
        if ring is None:
            ring = self._rings[peer] = deque(maxlen=self.window)
        ring.append(float(sample_ms))
        return True

    def artt(self, peer: NodeId) -> Optional[float]:
        ring = self._rings.get(peer)
        if not ring:
            return None
        return math.fsum(ring) / len(ring)

    def samples(self, peer: NodeId) -> tuple[float, ...]:
        return tuple(self._rings.get(peer, ()))

    def forget(self, peer: NodeId) -> None:
        self._rings.pop(peer, None)

    def __contains__(self, peer: NodeId) -> bool:
        return bool(self._rings.get(peer))

    def peers(self) -> list[NodeId]:
        return sorted((p for p, r in self._rings.items() if r), key=node_key)


def admit(config: QosConfig, table: ArttTable, current_consumer_count: int,
          requester: NodeId) -> bool:
    """Direct-connection test: spare capacity and an acceptable ARTT.

    A requester with no RTT history passes the latency half of the test;
    probing starts once it is admitted.
    """
    if current_consumer_count >= config.max_consumers:
        return False
    rtt = table.artt(requester)
    return rtt is None or rtt <= config.artt_threshold_ms


@dataclass(frozen=True)
class Candidate:
    node: NodeId
    artt: Optional[float]
    spare: int


def candidate_order(c: Candidate):
    return (math.inf if c.artt is None else c.artt, node_key(c.node))


def select_forwarder(candidates: Iterable[Candidate]) -> Optional[NodeId]:
    """First candidate with spare capacity, by ascending ARTT then node id."""
    for c in sorted(candidates, key=candidate_order):
        if c.spare > 0:
            return c.node
    return None
