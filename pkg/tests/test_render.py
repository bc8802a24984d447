import re

from atomsched.circuit import Circuit
from atomsched.device import TimingParams
from atomsched.pulse_scheduler import BlockPlan, ScheduledBlock, ScheduleOrder, emit_timeline, schedule_pulse_level
from atomsched.render import UNIT, render_timeline
from atomsched.sequence import PulseSequence

from conftest import CZ


def lane(svg, name):
    m = re.search(rf'<g class="lane" data-channel="{name}">(.*?)</g>', svg, re.S)
    return m.group(1)


def widths(body, cls):
    return [float(w) for w in re.findall(rf'<rect class="{cls}" x="[^"]+" y="[^"]+" width="([^"]+)"', body)]


def test_empty_sequence_two_empty_lanes():
    svg = render_timeline(PulseSequence((), (), TimingParams(), 0))
    assert svg.count('<g class="lane"') == 2
    assert "<rect" not in svg


def test_single_cz_counts():
    c = Circuit(2, (CZ(0, 1),))
    seq = emit_timeline(ScheduleOrder(c, (ScheduledBlock(BlockPlan(0, (0, 1), 0, 1, ())),)), TimingParams())
    ryd = lane(render_timeline(seq), "rydberg")
    assert len(widths(ryd, "pulse")) == 3
    assert len(widths(ryd, "retarget")) == 3
    assert ryd.count("stroke-dasharray") == 3
    pi, two_pi, _ = widths(ryd, "pulse")
    assert two_pi == 2 * pi == 2 * UNIT


def test_showcase_raman_lane(showcase):
    seq = schedule_pulse_level(showcase)
    svg = render_timeline(seq)
    raman = lane(svg, "raman")
    assert len(widths(raman, "pulse")) == 7
    assert svg.count("R q") == 7


def test_render_is_deterministic(tmp_path, showcase):
    seq = schedule_pulse_level(showcase)
    a = render_timeline(seq, tmp_path / "a.svg")
    assert a == render_timeline(seq)
    assert (tmp_path / "a.svg").read_text() == a
