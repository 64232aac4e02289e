import math

import pytest
from hypothesis import given, strategies as st

from hybridnode.ids import SourceKind, StreamId
from hybridnode.sensors import (Circle, Fixed, GuiScript, Keyframe, Rotate, ScriptEntry, Scripted,
                                SensorConfig, SetPose, Translate, gui_activity_windows, gui_commands,
                                next_sample, quat_norm, sample_times)

S = StreamId("N1", SourceKind.SENSOR, 0)
G = StreamId("N1", SourceKind.GUI, 0)


def test_circle_phase_zero():
    cfg = SensorConfig(60, Circle(0.5, 10.0))
    s = next_sample(cfg, S, 0.0, 0)
    assert s.position == (0.5, 0.0, 0.0)
    assert s.orientation == (1.0, 0.0, 0.0, 0.0)
    assert s.hop_count == 0


def test_circle_half_period():
    s = next_sample(SensorConfig(60, Circle(0.5, 10.0)), S, 5000.0, 0)
    assert s.position == pytest.approx((-0.5, 0.0, 0.0), abs=1e-12)
    # half turn about z
    assert s.orientation == pytest.approx((0.0, 0.0, 0.0, 1.0), abs=1e-12)


@pytest.mark.parametrize("plane,zero_axis", [("xy", 2), ("xz", 1), ("yz", 0)])
def test_circle_stays_in_plane(plane, zero_axis):
    c = Circle(1.0, 3.0, plane)
    for t in (0.0, 700.0, 1234.5):
        pos, q = c.pose(t)
        assert pos[zero_axis] == 0.0
        assert math.hypot(*pos) == pytest.approx(1.0)


def test_sixty_hz_interval_and_count():
    cfg = SensorConfig(60, Circle(0.5, 10.0), start_ms=0.0, stop_ms=1000.0)
    assert cfg.interval_ms == pytest.approx(16.667, abs=1e-3)
    assert len(list(sample_times(cfg, 10_000))) == 60


def test_outside_interval_no_sample():
    cfg = SensorConfig(60, Circle(0.5, 10.0), start_ms=100.0, stop_ms=200.0)
    assert next_sample(cfg, S, 50.0, 0) is None
    assert next_sample(cfg, S, 200.0, 0) is None
    assert next_sample(cfg, S, 100.0, 0) is not None


@given(st.floats(1, 240), st.floats(0, 5000), st.floats(1, 20000))
def test_sample_count_matches_rate(rate, start, dur):
    cfg = SensorConfig(rate, Circle(0.5, 10.0), start_ms=start, stop_ms=start + dur)
    n = len(list(sample_times(cfg, math.inf)))
    assert abs(n - math.floor(dur * rate / 1000.0)) <= 1


@given(st.floats(0, 1e6), st.floats(0.01, 100), st.sampled_from(["xy", "xz", "yz"]))
def test_determinism_and_unit_quaternion(t, period, plane):
    cfg = SensorConfig(60, Circle(0.7, period, plane))
    a, b = next_sample(cfg, S, t, 3), next_sample(cfg, S, t, 3)
    assert a == b
    assert abs(quat_norm(a.orientation) - 1.0) < 1e-9


def test_fixed_and_scripted():
    f = Fixed((1.0, 2.0, 3.0), (2.0, 0.0, 0.0, 0.0))
    assert f.pose(5.0) == ((1.0, 2.0, 3.0), (1.0, 0.0, 0.0, 0.0))
    sc = Scripted((Keyframe(0.0, (0.0, 0.0, 0.0)), Keyframe(100.0, (1.0, 0.0, 0.0))))
    assert sc.pose(50.0)[0] == (0.5, 0.0, 0.0)
    assert sc.pose(500.0)[0] == (1.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        Scripted((Keyframe(5.0, (0, 0, 0)), Keyframe(5.0, (1, 0, 0))))


def test_config_validation():
    with pytest.raises(ValueError):
        SensorConfig(0)
    with pytest.raises(ValueError):
        Circle(1.0, 0.0)
    with pytest.raises(ValueError):
        SensorConfig(60, start_ms=10, stop_ms=5)


def test_gui_single_command():
    script = GuiScript([ScriptEntry(100.0, SetPose((1.0, 0.0, 0.0)))])
    samples = list(gui_commands(script, G))
    assert len(samples) == 1
    assert samples[0].origin_time == 100.0 and samples[0].position == (1.0, 0.0, 0.0)


def test_gui_empty_and_ordering():
    assert list(gui_commands(GuiScript(), G)) == []
    assert gui_activity_windows(GuiScript(), 250) == []
    with pytest.raises(ValueError):
        GuiScript([ScriptEntry(200.0, Translate((1, 0, 0))), ScriptEntry(100.0, Translate((1, 0, 0)))])


def test_gui_composition_and_windows():
    script = GuiScript([
        ScriptEntry(100.0, Translate((0.5, 0.0, 0.0))),
        ScriptEntry(200.0, Rotate((0.0, 0.0, 1.0), 90.0)),
        ScriptEntry(900.0, Translate((0.0, 1.0, 0.0))),
    ])
    s = list(gui_commands(script, G))
    assert [x.seq for x in s] == [0, 1, 2]
    assert s[1].position == (0.5, 0.0, 0.0)
    assert s[1].orientation == pytest.approx((math.cos(math.pi / 4), 0, 0, math.sin(math.pi / 4)))
    assert s[2].position == (0.5, 1.0, 0.0)
    assert gui_activity_windows(script, 250.0) == [(100.0, 450.0), (900.0, 1150.0)]
