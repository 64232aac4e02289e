"""Node and stream identifiers."""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass

NodeId = str

_NODE_RE = re.compile(r"^(.*?)(\d*)$")


def node_key(node: NodeId) -> tuple[str, int, str]:
    """Natural sort key so that ``N2 < N10``."""
    prefix, digits = _NODE_RE.match(node).groups()
    return (prefix, int(digits) if digits else -1, node)


class SourceKind(str, enum.Enum):
    SENSOR = "sensor"
    GUI = "gui"


@dataclass(frozen=True)
class StreamId:
    origin: NodeId
    source_kind: SourceKind
    index: int = 0

    @property
    def token(self) -> str:
        return f"{self.origin}/{self.source_kind.value}/{self.index}"

    def __str__(self) -> str:
        return self.token

    def sort_key(self):
        return (node_key(self.origin), self.source_kind.value, self.index)

    def __lt__(self, other: "StreamId") -> bool:
        return self.sort_key() < other.sort_key()

    @classmethod
    def parse(cls, token: str) -> "StreamId":
        parts = token.split("/")
        if len(parts) != 3 or not parts[0]:
            raise ValueError(f"malformed stream token {token!r}")
        origin, kind, index = parts
        try:
            return cls(origin, SourceKind(kind), int(index))
        except ValueError:
            raise ValueError(f"malformed stream token {token!r}") from None
