import pytest

from hybridnode.agent import HybridNode, ProtocolTiming
from hybridnode.ids import SourceKind, StreamId
from hybridnode.netsim import LinkModel, Network
from hybridnode.qos import QosConfig
from hybridnode.sensors import Circle, SensorConfig

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def sensor_stream(node, i=0):
    return StreamId(node, SourceKind.SENSOR, i)


class Cluster:
    """A handful of nodes on one network, joined at t=0."""

    def __init__(self, spec: dict, latency=0.2, timing=None, join=True):
        self.net = Network(LinkModel(latency))
        self.nodes = {}
        for nid, kw in spec.items():
            kw = dict(kw)
            cap = kw.pop("cap", 4)
            sensors = kw.pop("sensors", ())
            self.nodes[nid] = HybridNode(nid, self.net, qos=QosConfig(max_consumers=cap),
                                         sensors=sensors, timing=timing or ProtocolTiming(), **kw)
        if join:
            for n in self.nodes.values():
                n.join()

    def __getitem__(self, nid):
        return self.nodes[nid]

    def run(self, until):
        return self.net.run_until(until)


@pytest.fixture
def cluster():
    return Cluster


def producing(start=0.0, stop=None, rate=10.0):
    return (SensorConfig(rate, Circle(0.5, 10.0), start, stop),)
