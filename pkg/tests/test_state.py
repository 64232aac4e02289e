import itertools

import pytest
from hypothesis import given, strategies as st

from hybridnode.state import (COMPOUND_PATHS, NodeEvent, NodeState, ServerAction, TRANSITIONS,
                              is_forwarding, run_events, server_active, step)

A, P, AF, PF = NodeState.ACTIVE, NodeState.PASSIVE, NodeState.ACTIVE_FORWARDER, NodeState.PASSIVE_FORWARDER
E00, E01, E10, E11 = NodeEvent.SENSOR_ON, NodeEvent.SENSOR_OFF, NodeEvent.FORWARD_ON, NodeEvent.FORWARD_OFF
ON, OFF, NC = ServerAction.TURN_ON, ServerAction.TURN_OFF, ServerAction.NO_CHANGE

# Primitive rows of the transition table, typed in independently of the module.
PRIMITIVE_ROWS = [
    (A, E01, P, OFF),
    (A, E10, AF, NC),
    (P, E00, A, ON),
    (P, E10, PF, ON),
    (AF, E11, A, NC),
    (AF, E01, PF, NC),
    (PF, E11, P, OFF),
    (PF, E00, AF, NC),
]


@pytest.mark.parametrize("cur,ev,nxt,action", PRIMITIVE_ROWS)
def test_primitive_rows(cur, ev, nxt, action):
    assert step(cur, ev) == (step(cur, ev).__class__(nxt, action, True))


@pytest.mark.parametrize("cur,ev", [
    (cur, ev) for cur, ev in itertools.product(NodeState, NodeEvent)
    if (cur, ev) not in {(r[0], r[1]) for r in PRIMITIVE_ROWS}
])
def test_absorbed_pairs(cur, ev):
    res = step(cur, ev)
    assert not res.applied
    assert res.next is cur and res.server_action is NC


def test_table_examples():
    assert step(A, E01).next is P and step(A, E01).server_action is OFF
    assert step(P, E00).next is A and step(P, E00).server_action is ON
    assert step(AF, E01).next is PF and step(AF, E01).server_action is NC
    assert not step(A, E00).applied


def test_exactly_eight_applied():
    applied = [(s, e) for s, e in itertools.product(NodeState, NodeEvent) if step(s, e).applied]
    assert len(applied) == 8 and len(TRANSITIONS) == 8


@pytest.mark.parametrize("start,events,end", COMPOUND_PATHS)
def test_compound_paths(start, events, end):
    final, results = run_events(start, events)
    assert final is end
    assert all(r.applied for r in results)
    on = server_active(start)
    for r in results:
        if r.server_action is ON:
            on = True
        elif r.server_action is OFF:
            on = False
    assert on == server_active(end)


def test_predicates():
    assert [server_active(s) for s in (A, P, AF, PF)] == [True, False, True, True]
    assert [is_forwarding(s) for s in (A, P, AF, PF)] == [False, False, True, True]


def test_tokens():
    assert [s.value for s in (A, P, AF, PF)] == ["A", "P", "AF", "PF"]
    assert [e.value for e in (E00, E01, E10, E11)] == ["00", "01", "10", "11"]


def test_reachable_from_passive_within_two_events():
    reached = {P}
    frontier = {P}
    for _ in range(2):
        frontier = {step(s, e).next for s in frontier for e in NodeEvent}
        reached |= frontier
    assert reached == set(NodeState)


@given(st.lists(st.sampled_from(list(NodeEvent)), max_size=200), st.sampled_from(list(NodeState)))
def test_actions_track_server_flips(events, start):
    state = start
    for ev in events:
        res = step(state, ev)
        before, after = server_active(state), server_active(res.next)
        if res.server_action is ON:
            assert not before and after
        elif res.server_action is OFF:
            assert before and not after
        else:
            assert before == after
        assert step(state, ev) == res  # pure
        state = res.next
