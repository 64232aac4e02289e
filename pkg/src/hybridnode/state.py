"""Running-mode state machine of a hybrid node.

A node is in one of four modes and changes mode on four primitive events.
The transition table below is the complete set of single-event moves; any
other (state, event) pair is absorbed without effect, because duplicate or
stale control messages are normal in a distributed deployment.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass


class NodeState(str, enum.Enum):
    ACTIVE = "A"
    PASSIVE = "P"
    ACTIVE_FORWARDER = "AF"
    PASSIVE_FORWARDER = "PF"

    def __str__(self) -> str:
        return self.value


class NodeEvent(str, enum.Enum):
    SENSOR_ON = "00"
    SENSOR_OFF = "01"
    FORWARD_ON = "10"
    FORWARD_OFF = "11"

    def __str__(self) -> str:
        return self.value


class ServerAction(str, enum.Enum):
    TURN_ON = "TurnOn"
    TURN_OFF = "TurnOff"
    NO_CHANGE = "NoChange"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class TransitionResult:
    next: NodeState
    server_action: ServerAction
    applied: bool


A, P, AF, PF = (NodeState.ACTIVE, NodeState.PASSIVE,
                NodeState.ACTIVE_FORWARDER, NodeState.PASSIVE_FORWARDER)

#: (current, event) -> (next, action on the server thread)
TRANSITIONS: dict[tuple[NodeState, NodeEvent], tuple[NodeState, ServerAction]] = {
    (A, NodeEvent.SENSOR_OFF): (P, ServerAction.TURN_OFF),
    (A, NodeEvent.FORWARD_ON): (AF, ServerAction.NO_CHANGE),
    (P, NodeEvent.SENSOR_ON): (A, ServerAction.TURN_ON),
    (P, NodeEvent.FORWARD_ON): (PF, ServerAction.TURN_ON),
    (AF, NodeEvent.FORWARD_OFF): (A, ServerAction.NO_CHANGE),
    (AF, NodeEvent.SENSOR_OFF): (PF, ServerAction.NO_CHANGE),
    (PF, NodeEvent.FORWARD_OFF): (P, ServerAction.TURN_OFF),
    (PF, NodeEvent.SENSOR_ON): (AF, ServerAction.NO_CHANGE),
}

#: Two-event paths: (start, (first, second), end).
COMPOUND_PATHS: tuple[tuple[NodeState, tuple[NodeEvent, NodeEvent], NodeState], ...] = (
    (A, (NodeEvent.SENSOR_OFF, NodeEvent.FORWARD_ON), PF),
    (P, (NodeEvent.SENSOR_ON, NodeEvent.FORWARD_ON), AF),
    (AF, (NodeEvent.SENSOR_OFF, NodeEvent.FORWARD_OFF), P),
    (PF, (NodeEvent.SENSOR_ON, NodeEvent.FORWARD_OFF), A),
)


def step(current: NodeState, event: NodeEvent) -> TransitionResult:
    try:
        nxt, action = TRANSITIONS[(current, event)]
    except KeyError:
        return TransitionResult(current, ServerAction.NO_CHANGE, False)
    return TransitionResult(nxt, action, True)


def server_active(state: NodeState) -> bool:
    """Whether the node's server thread runs in ``state``."""
    return state is not NodeState.PASSIVE


def is_forwarding(state: NodeState) -> bool:
    return state in (NodeState.ACTIVE_FORWARDER, NodeState.PASSIVE_FORWARDER)


def is_producing(state: NodeState) -> bool:
    return state in (NodeState.ACTIVE, NodeState.ACTIVE_FORWARDER)


def run_events(start: NodeState, events) -> tuple[NodeState, list[TransitionResult]]:
    """Fold ``events`` through :func:`step` starting at ``start``."""
    state = start
    results = []
    for ev in events:
        res = step(state, ev)
        results.append(res)
        state = res.next
    return state, results
