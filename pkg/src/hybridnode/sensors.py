"""Synthetic pose sources: tracked sensors on a trajectory and scripted GUI edits."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterator, Optional, Sequence, Union

from .ids import StreamId

Vec3 = tuple[float, float, float]
Quat = tuple[float, float, float, float]  # (w, x, y, z)

IDENTITY: Quat = (1.0, 0.0, 0.0, 0.0)
ORIGIN: Vec3 = (0.0, 0.0, 0.0)

_PLANES = {
    # plane -> (index of cos axis, index of sin axis, normal)
    "xy": (0, 1, (0.0, 0.0, 1.0)),
    "xz": (0, 2, (0.0, 1.0, 0.0)),
    "yz": (1, 2, (1.0, 0.0, 0.0)),
}


@dataclass(frozen=True)
class PoseSample:
    stream: StreamId
    seq: int
    origin_time: float
    position: Vec3
    orientation: Quat
    hop_count: int = 0

    def hopped(self) -> "PoseSample":
        return replace(self, hop_count=self.hop_count + 1)


def quat_norm(q: Sequence[float]) -> float:
    return math.sqrt(sum(c * c for c in q))


def normalize(q: Sequence[float]) -> Quat:
    n = quat_norm(q)
    if n == 0.0:
        raise ValueError("zero quaternion")
    return tuple(c / n for c in q)  # type: ignore[return-value]


def quat_mul(a: Quat, b: Quat) -> Quat:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return (
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    )


def axis_angle(axis: Sequence[float], angle_rad: float) -> Quat:
    n = math.sqrt(sum(c * c for c in axis))
    if n == 0.0:
        raise ValueError("zero rotation axis")
    s = math.sin(angle_rad / 2.0) / n
    return normalize((math.cos(angle_rad / 2.0), axis[0] * s, axis[1] * s, axis[2] * s))


# --- trajectories -----------------------------------------------------------

@dataclass(frozen=True)
class Circle:
    radius: float
    period_s: float
    plane: str = "xy"

    def __post_init__(self):
        if not self.period_s > 0:
            raise ValueError("circle period must be positive")
        if self.plane not in _PLANES:
            raise ValueError(f"unknown plane {self.plane!r}")

    def pose(self, t_ms: float) -> tuple[Vec3, Quat]:
        theta = 2.0 * math.pi * t_ms / (self.period_s * 1000.0)
        i, j, normal = _PLANES[self.plane]
        pos = [0.0, 0.0, 0.0]
        pos[i] = self.radius * math.cos(theta)
        pos[j] = self.radius * math.sin(theta)
        half = theta / 2.0
        s = math.sin(half)
        q = (math.cos(half), normal[0] * s, normal[1] * s, normal[2] * s)
        return tuple(pos), q  # type: ignore[return-value]


@dataclass(frozen=True)
class Fixed:
    position: Vec3 = ORIGIN
    orientation: Quat = IDENTITY

    def pose(self, t_ms: float) -> tuple[Vec3, Quat]:
        return self.position, normalize(self.orientation)


@dataclass(frozen=True)
class Keyframe:
    t: float
    position: Vec3
    orientation: Quat = IDENTITY


@dataclass(frozen=True)
class Scripted:
    """Piecewise-linear position with normalized-lerp orientation between keyframes."""

    keyframes: tuple[Keyframe, ...]

    def __post_init__(self):
        if not self.keyframes:
            raise ValueError("scripted trajectory needs at least one keyframe")
        times = [k.t for k in self.keyframes]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("keyframe times must strictly increase")

    def pose(self, t_ms: float) -> tuple[Vec3, Quat]:
        ks = self.keyframes
        if t_ms <= ks[0].t:
            return ks[0].position, normalize(ks[0].orientation)
        if t_ms >= ks[-1].t:
            return ks[-1].position, normalize(ks[-1].orientation)
        for a, b in zip(ks, ks[1:]):
            if a.t <= t_ms < b.t:
                u = (t_ms - a.t) / (b.t - a.t)
                pos = tuple(pa + u * (pb - pa) for pa, pb in zip(a.position, b.position))
                qa, qb = a.orientation, b.orientation
                if sum(x * y for x, y in zip(qa, qb)) < 0:
                    qb = tuple(-c for c in qb)
                q = normalize(tuple(x + u * (y - x) for x, y in zip(qa, qb)))
                return pos, q  # type: ignore[return-value]
        raise AssertionError("unreachable")


Trajectory = Union[Circle, Fixed, Scripted]


@dataclass(frozen=True)
class SensorConfig:
    rate_hz: float = 60.0
    trajectory: Trajectory = field(default_factory=lambda: Circle(0.5, 10.0))
    start_ms: float = 0.0
    stop_ms: Optional[float] = None  # None: runs until the simulation ends

    def __post_init__(self):
        if not self.rate_hz > 0:
            raise ValueError("rate_hz must be positive")
        if self.stop_ms is not None and self.stop_ms <= self.start_ms:
            raise ValueError("sensor stop must be after start")

    @property
    def interval_ms(self) -> float:
        return 1000.0 / self.rate_hz

    def tick_time(self, k: int) -> float:
        # indexed from start rather than accumulated, so there is no drift
        return self.start_ms + k * 1000.0 / self.rate_hz

    def active_at(self, t_ms: float) -> bool:
        return self.start_ms <= t_ms and (self.stop_ms is None or t_ms < self.stop_ms)


def next_sample(config: SensorConfig, stream: StreamId, t: float, seq: int) -> Optional[PoseSample]:
    """Sample the sensor at simulated time ``t``; None outside its active interval."""
    if not config.active_at(t):
        return None
    pos, q = config.trajectory.pose(t)
    return PoseSample(stream, seq, t, pos, q, 0)


def sample_times(config: SensorConfig, until_ms: float) -> Iterator[float]:
    """Tick times in the active interval, clipped to ``t <= until_ms``."""
    k = 0
    while True:
        t = config.tick_time(k)
        if t > until_ms or not config.active_at(t):
            return
        yield t
        k += 1


# --- GUI scripts ------------------------------------------------------------

@dataclass(frozen=True)
class SetPose:
    position: Vec3
    orientation: Quat = IDENTITY


@dataclass(frozen=True)
class Translate:
    delta: Vec3


@dataclass(frozen=True)
class Rotate:
    axis: Vec3
    angle_deg: float


GuiCommand = Union[SetPose, Translate, Rotate]


@dataclass(frozen=True)
class ScriptEntry:
    t: float
    command: GuiCommand


class GuiScript:
    """Time-ordered GUI manipulations applied to a node's GUI stream pose."""

    def __init__(self, entries: Sequence[ScriptEntry] = ()):
        entries = tuple(entries)
        for a, b in zip(entries, entries[1:]):
            if b.t <= a.t:
                raise ValueError(f"GUI script out of order at t={b.t}")
        self.entries = entries

    def __len__(self) -> int:
        return len(self.entries)

    def __bool__(self) -> bool:
        return bool(self.entries)

    def __eq__(self, other) -> bool:
        return isinstance(other, GuiScript) and self.entries == other.entries

    def __hash__(self) -> int:
        return hash(self.entries)

    def __repr__(self) -> str:
        return f"GuiScript({list(self.entries)!r})"


def apply_command(position: Vec3, orientation: Quat, cmd: GuiCommand) -> tuple[Vec3, Quat]:
    if isinstance(cmd, SetPose):
        return tuple(cmd.position), normalize(cmd.orientation)  # type: ignore[return-value]
    if isinstance(cmd, Translate):
        return tuple(p + d for p, d in zip(position, cmd.delta)), orientation  # type: ignore[return-value]
    if isinstance(cmd, Rotate):
        r = axis_angle(cmd.axis, math.radians(cmd.angle_deg))
        return position, normalize(quat_mul(r, orientation))
    raise TypeError(f"unknown GUI command {cmd!r}")


def gui_commands(script: GuiScript, stream: StreamId) -> Iterator[PoseSample]:
    """Yield the GUI-stream sample each scripted command produces."""
    pos, q = ORIGIN, IDENTITY
    for seq, entry in enumerate(script.entries):
        pos, q = apply_command(pos, q, entry.command)
        yield PoseSample(stream, seq, entry.t, pos, q, 0)


def gui_activity_windows(script: GuiScript, idle_timeout_ms: float) -> list[tuple[float, float]]:
    """Merged [rise, fall) intervals during which the GUI agent is active."""
    windows: list[list[float]] = []
    for entry in script.entries:
        end = entry.t + idle_timeout_ms
        if windows and entry.t <= windows[-1][1]:
            windows[-1][1] = end
        else:
            windows.append([entry.t, end])
    return [(a, b) for a, b in windows]
