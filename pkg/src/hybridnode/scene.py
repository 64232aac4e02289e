"""Per-node replica of the shared scene.

Stands in for the rendering agent: every node keeps the latest pose of each
scene object, whatever its source. Updates are resolved last-writer-wins on
the origin timestamp, so replicas converge regardless of arrival order.
"""

from __future__ import annotations

from dataclasses import dataclass
from types import MappingProxyType
from typing import Mapping

from .ids import NodeId, StreamId, node_key
from .sensors import PoseSample, Quat, Vec3

ObjectId = str


@dataclass(frozen=True)
class ObjectState:
    position: Vec3
    orientation: Quat
    last_seq: int
    last_origin_time: float
    last_source: NodeId
    stream: StreamId

    @classmethod
    def from_sample(cls, sample: PoseSample) -> "ObjectState":
        return cls(sample.position, sample.orientation, sample.seq,
                   sample.origin_time, sample.stream.origin, sample.stream)

    def to_record(self) -> dict:
        return {
            "position": list(self.position),
            "orientation": list(self.orientation),
            "seq": self.last_seq,
            "origin_time": self.last_origin_time,
            "source": self.last_source,
            "stream": self.stream.token,
        }


def supersedes(sample: PoseSample, current: ObjectState) -> bool:
    """Newer origin time wins; equal times go to the lower origin id, then higher seq."""
    if sample.origin_time != current.last_origin_time:
        return sample.origin_time > current.last_origin_time
    a, b = node_key(sample.stream.origin), node_key(current.last_source)
    if a != b:
        return a < b
    return sample.seq > current.last_seq


class SceneReplica:
    def __init__(self):
        self._objects: dict[ObjectId, ObjectState] = {}

    def apply_update(self, obj: ObjectId, sample: PoseSample) -> bool:
        cur = self._objects.get(obj)
        if cur is not None and not supersedes(sample, cur):
            return False
        self._objects[obj] = ObjectState.from_sample(sample)
        return True

    def get(self, obj: ObjectId):
        return self._objects.get(obj)

    def __len__(self) -> int:
        return len(self._objects)

    def snapshot(self) -> Mapping[ObjectId, ObjectState]:
        return MappingProxyType(dict(self._objects))


def snapshot_record(view: Mapping[ObjectId, ObjectState]) -> dict:
    return {k: view[k].to_record() for k in sorted(view)}
