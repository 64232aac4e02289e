import pytest
import yaml

from hybridnode.ids import StreamId
from hybridnode.scenario import BUILTINS, FIG5, ScenarioError, load_scenario


def test_fig5_shape():
    spec = load_scenario(FIG5)
    assert [n.id for n in spec.nodes] == ["N1", "N2", "N3", "N4", "N5"]
    assert sorted(s.token for s in spec.streams()) == ["N1/gui/0", "N1/sensor/0", "N3/sensor/0"]
    assert spec.links.bandwidth_bps == 100_000_000
    assert all(cfg.rate_hz == 60 for n in spec.nodes for cfg in n.sensors)
    assert load_scenario("fig5") == spec


@pytest.mark.parametrize("name", sorted(BUILTINS))
def test_builtins_parse(name):
    assert load_scenario(BUILTINS[name]).name == name


def base(**extra):
    doc = {"schema": 1, "t_end": 1000, "nodes": [{"id": "N1", "sensors": [{"rate_hz": 60}]}, {"id": "N2"}]}
    doc.update(extra)
    return doc


def errors_of(doc) -> list[str]:
    with pytest.raises(ScenarioError) as ei:
        load_scenario(yaml.safe_dump(doc))
    return ei.value.errors


def test_empty_nodes():
    assert any("nodes list is empty" in e for e in errors_of(base(nodes=[])))


def test_undeclared_stream_named():
    errs = errors_of(base(timeline=[{"at": 5, "subscribe": {"node": "N2", "stream": "N2/sensor/0"}}]))
    assert any("N2/sensor/0" in e for e in errs)


def test_all_errors_reported():
    doc = base(bogus=1, timeline=[
        {"at": 5000, "join": "N1"},
        {"at": 5, "subscribe": {"node": "N9", "stream": "N1/sensor/0"}},
    ])
    doc["nodes"][1]["gui_script"] = [{"t": 200, "translate": [0, 0, 1]}, {"t": 100, "translate": [0, 0, 1]}]
    doc["nodes"].append({"id": "N1"})
    errs = errors_of(doc)
    joined = "\n".join(errs)
    for needle in ("unknown key 'bogus'", "outside [0, t_end)", "unknown node 'N9'",
                   "out of order", "duplicate node id"):
        assert needle in joined
    assert len(errs) >= 5


def test_schema_guard():
    assert any("schema" in e for e in errors_of(base(schema=2)))


def test_own_stream_subscription_invalid():
    errs = errors_of(base(timeline=[{"at": 5, "subscribe": {"node": "N1", "stream": "N1/sensor/0"}}]))
    assert any("own stream" in e for e in errs)


def test_full_document_round_trip():
    doc = base(
        links={"base_latency_ms": 0.5, "overrides": [{"from": "N1", "to": "N2", "latency_ms": 3}],
               "jitter": {"half_width_ms": 0.1}},
        timing={"max_retries": 1, "retry_backoff_ms": 200},
        objects={"N1/sensor/0": "cross", "N2/gui/0": "cross"},
        timeline=[{"at": 0, "join": "N1"}, {"at": 1, "join": "N2"},
                  {"at": 10, "subscribe": {"node": "N2", "stream": "N1/sensor/0"}},
                  {"at": 500, "unsubscribe": {"node": "N2", "stream": "N1/sensor/0"}},
                  {"at": 900, "leave": "N2"}],
    )
    doc["nodes"][0]["sensors"][0]["trajectory"] = {"scripted": {"keyframes": [
        {"t": 0, "position": [0, 0, 0]}, {"t": 100, "position": [1, 0, 0], "orientation": [0, 0, 0, 1]}]}}
    doc["nodes"][1]["gui_script"] = [{"t": 50, "set_pose": {"position": [1, 1, 1]}},
                                     {"t": 60, "rotate": {"axis": [0, 1, 0], "angle_deg": 10}}]
    spec = load_scenario(yaml.safe_dump(doc))
    assert spec.links.latency("N2", "N1") == 3.0
    assert spec.links.jitter_half_width_ms == 0.1
    assert spec.timing.max_retries == 1
    assert spec.objects[StreamId.parse("N2/gui/0")] == "cross"
    assert [d.action for d in spec.timeline] == ["join", "join", "subscribe", "unsubscribe", "leave"]


def test_unparseable():
    with pytest.raises(ScenarioError):
        load_scenario("nodes: [unclosed")
