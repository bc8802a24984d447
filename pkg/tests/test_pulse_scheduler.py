from fractions import Fraction

import pytest

from atomsched.bench import GenConfig, generate_circuit
from atomsched.circuit import Circuit, layerize
from atomsched.device import TimingParams, lattice_for
from atomsched.gate_scheduler import schedule_gate_level
from atomsched.pulse_scheduler import (
    BlockPlan,
    ScheduledBlock,
    ScheduleOrder,
    build_order,
    emit_timeline,
    order_blocks,
    plan_absorption,
    schedule_pulse_level,
    standalone_sites,
)
from atomsched.sequence import block_spans, check_wellformed, duration, rydberg_idle_gaps
from atomsched.transpiler import transpile
from atomsched.verifier import check_equivalence

from conftest import CZ, R


def test_showcase_plan(showcase):
    plan = plan_absorption(layerize(showcase))
    (bp,) = plan.blocks
    assert bp.border == 2
    assert set(bp.absorbed_before) == {0, 1}
    assert set(bp.absorbed_after) == {0, 1}
    assert bp.n_absorbed == 4
    assert bp.two_pi == 0


def test_single_cz_before_only():
    c = Circuit(2, (R(0), R(1), CZ(0, 1)))
    (bp,) = plan_absorption(layerize(c)).blocks
    assert bp.absorbed_before == {0: 0}
    assert bp.absorbed_after == {}
    assert bp.border == 1
    order = order_blocks(layerize(c), plan_absorption(layerize(c)))
    # no earlier block exists, so the border's gate runs before the train
    assert order.items[0].pre_gates == (1,)
    assert order.trailing == ()


def test_block_without_neighbours():
    c = Circuit(2, (R(0), R(1), CZ(0, 1), CZ(0, 1)))
    plan = plan_absorption(layerize(c))
    second = plan.blocks[1]
    assert second.absorbed_before == {} and second.absorbed_after == {}
    assert second.border == 0


def test_border_never_absorbs():
    for seed in range(20):
        c, _ = transpile(generate_circuit(GenConfig(5, 6, seed)), lattice_for(5))
        for bp in plan_absorption(layerize(c)).blocks:
            assert bp.border not in bp.absorbed_before
            assert bp.border not in bp.absorbed_after
            assert bp.n_absorbed <= 2 * (len(bp.qubits) - 1)


def test_each_gate_absorbed_once():
    for seed in range(20):
        c, _ = transpile(generate_circuit(GenConfig(4, 8, seed)), lattice_for(4))
        seen = []
        for bp in plan_absorption(layerize(c)).blocks:
            seen += list(bp.absorbed_before.values()) + list(bp.absorbed_after.values())
        assert len(seen) == len(set(seen))


def test_empty_order():
    c = Circuit(0, ())
    seq = emit_timeline(ScheduleOrder(c, ()), TimingParams())
    assert seq.rydberg == () and seq.raman == ()
    assert duration(seq) == 0


def test_one_cz_without_absorption_lasts_seven():
    c = Circuit(2, (CZ(0, 1),))
    bp = BlockPlan(0, (0, 1), 0, 1, ())
    seq = emit_timeline(ScheduleOrder(c, (ScheduledBlock(bp),)), TimingParams())
    assert duration(seq) == 7


def test_showcase_saving_and_structure(showcase):
    pulse = schedule_pulse_level(showcase)
    gate = schedule_gate_level(showcase)
    assert duration(gate) - duration(pulse) == 8
    assert duration(pulse) == 14
    train = [i for i in pulse.rydberg if i.is_pulse]
    start, end = train[0].t_start, train[-1].t_end
    # the four absorbed gates and d all run while the CCZ train does
    inside = [i for i in pulse.raman if i.is_pulse and i.t_start < end and i.t_end > start]
    assert sorted(i.target for i in inside) == [0, 0, 1, 1, 3]
    assert sum(i.block == 4 for i in inside) == 4
    # the leading retarget span also covers c, issued while the Rydberg channel aims
    assert block_spans(pulse)[4] == (1, 12)
    assert check_wellformed(pulse, showcase).ok


def test_showcase_order(showcase):
    order = build_order(showcase)
    (item,) = order.items
    assert item.pre_gates == (2,)
    assert item.parallel_gates == (3,)
    assert order.trailing == (7,)


@pytest.mark.parametrize("layers", [2, 4, 7])
def test_two_qubit_duration_depends_on_layers_only(layers):
    durations = set()
    for seed in range(12):
        c, _ = transpile(generate_circuit(GenConfig(2, layers, seed)), lattice_for(2))
        assert layerize(c).n_layers == layers
        durations.add((duration(schedule_pulse_level(c)), duration(schedule_gate_level(c))))
    assert len(durations) == 1


@pytest.mark.parametrize("seed", range(8))
def test_random_schedules_equivalent(seed):
    c, _ = transpile(generate_circuit(GenConfig(4, 6, seed)), lattice_for(4))
    seq = schedule_pulse_level(c, TimingParams(Fraction(3, 2), Fraction(1, 2)))
    assert check_wellformed(seq, c).ok
    assert check_equivalence(c, seq).equivalent


def test_timing_scales_with_unit_timing():
    c, _ = transpile(generate_circuit(GenConfig(3, 5, 1)), lattice_for(3))
    base = duration(schedule_pulse_level(c, TimingParams(1, 1)))
    assert duration(schedule_pulse_level(c, TimingParams(3, 3))) == 3 * base


def test_standalone_sites_flag_leading_pre_gates():
    c = Circuit(2, (R(0), R(1), CZ(0, 1)))
    order = build_order(c)
    seq = emit_timeline(order, TimingParams())
    assert standalone_sites(order, seq) == {2}


@pytest.mark.parametrize("seed", range(15))
def test_rydberg_idle_only_at_flagged_blocks(seed):
    c, _ = transpile(generate_circuit(GenConfig(5, 8, seed)), lattice_for(5))
    order = build_order(c)
    seq = emit_timeline(order, TimingParams())
    flagged = standalone_sites(order, seq)
    for block, idle in rydberg_idle_gaps(seq):
        assert idle == 0 or block in flagged


def test_chained_border_beats_greedy():
    """Keeping one border across consecutive blocks skips a Rydberg retarget,
    which the priority rules do not consider."""
    c = Circuit(4, (R(0), R(1), R(2), R(3), CZ(0, 1), CZ(0, 2), R(2), CZ(0, 3)))
    greedy = schedule_pulse_level(c)
    items = (
        ScheduledBlock(BlockPlan(4, (0, 1), 0, 1, (), {1: 1}, {}), pre_gates=(0,)),
        ScheduledBlock(BlockPlan(5, (0, 2), 0, 2, (), {2: 2}, {2: 6})),
        ScheduledBlock(BlockPlan(7, (0, 3), 0, 3, (), {3: 3}, {})),
    )
    chained = emit_timeline(ScheduleOrder(c, items), TimingParams())
    assert check_wellformed(chained, c).ok
    assert check_equivalence(c, chained).equivalent
    assert duration(chained) == 20
    assert duration(greedy) == 21


@pytest.mark.parametrize("seed", range(40))
def test_one_parallel_slot_per_block(seed):
    n = 2 + seed % 6
    c, _ = transpile(generate_circuit(GenConfig(n, 4 + seed % 5, seed)), lattice_for(n))
    order = build_order(c)
    assert all(len(it.parallel_gates) <= 1 for it in order.items[:-1])
    assert len(order.trailing) <= 1


def test_ready_final_gate_fills_previous_block():
    # q2 finishes after the first CZ; its final gate rides alongside the second CZ
    c = Circuit(4, (R(0), R(1), R(2), R(3), CZ(1, 2), R(1), R(2), CZ(0, 1), R(0), R(1), CZ(0, 3), R(0), R(3)))
    order = build_order(c)
    assert order.items[0].parallel_gates == ()
    assert order.items[1].parallel_gates == (6,)
