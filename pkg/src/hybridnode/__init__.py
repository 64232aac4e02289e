"""Hybrid peer-to-peer/client-server nodes for sensor-driven shared scenes."""

from .agent import HybridNode, ProtocolTiming, SubscriptionDecision
from .harness import MetricsReport, export, export_trace, run_scenario
from .ids import SourceKind, StreamId
from .netsim import LinkModel, Network
from .qos import ArttTable, QosConfig, admit, select_forwarder
from .scenario import ScenarioError, ScenarioSpec, load_scenario
from .scene import SceneReplica
from .sensors import PoseSample, SensorConfig
from .state import NodeEvent, NodeState, ServerAction, is_forwarding, server_active, step

__all__ = [
    "ArttTable", "HybridNode", "LinkModel", "MetricsReport", "Network", "NodeEvent",
    "NodeState", "PoseSample", "ProtocolTiming", "QosConfig", "ScenarioError",
    "ScenarioSpec", "SceneReplica", "SensorConfig", "ServerAction", "SourceKind",
    "StreamId", "SubscriptionDecision", "admit", "export", "export_trace",
    "is_forwarding", "load_scenario", "run_scenario", "select_forwarder",
    "server_active", "step",
]
