"""Pulse-level scheduling with absorption.

Single-qubit gates adjacent to an MCZ are executed on the Raman channel while
the MCZ's pulse train runs, on qubits that are outside their involvement
window at the time. Two steps: choose what each MCZ absorbs, then order the
absorbed blocks and leftover gates; an ASAP emitter turns the order into a
two-channel timeline.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .circuit import MCZ, Circuit, LayeredCircuit, layerize, require_schedulable
from .device import TimingParams
from .sequence import PulseSequence, SequenceBuilder, mcz_pulse_train


@dataclass(frozen=True)
class BlockPlan:
    """What one MCZ absorbs, and how its pulse train is laid out."""

    mcz: int
    qubits: tuple[int, ...]
    border: int
    two_pi: int
    pi_order: tuple[int, ...]
    absorbed_before: dict = field(default_factory=dict)  # qubit -> gate index
    absorbed_after: dict = field(default_factory=dict)

    @property
    def n_absorbed(self) -> int:
        return len(self.absorbed_before) + len(self.absorbed_after)

    def train(self):
        return mcz_pulse_train(self.qubits, self.border, self.two_pi, self.pi_order)

    def pulse_rank(self) -> list[int]:
        """Qubits in the order their involvement windows start (= reverse of end order)."""
        return [self.border, *self.pi_order, self.two_pi]


@dataclass(frozen=True)
class AbsorptionPlan:
    blocks: tuple[BlockPlan, ...]

    def absorbed(self) -> set[int]:
        out = set()
        for b in self.blocks:
            out.update(b.absorbed_before.values())
            out.update(b.absorbed_after.values())
        return out


@dataclass(frozen=True)
class ScheduledBlock:
    plan: BlockPlan
    pre_gates: tuple[int, ...] = ()
    parallel_gates: tuple[int, ...] = ()
    lead_in: tuple[int, ...] = ()  # parallel gates that precede the next block


@dataclass(frozen=True)
class ScheduleOrder:
    circuit: Circuit
    items: tuple[ScheduledBlock, ...]
    trailing: tuple[int, ...] = ()

    def all_gates(self) -> list[int]:
        out = []
        for item in self.items:
            out += item.pre_gates
            out += item.plan.absorbed_before.values()
            out.append(item.plan.mcz)
            out += item.parallel_gates
            out += item.plan.absorbed_after.values()
        return out + list(self.trailing)


@dataclass(frozen=True)
class Neighbours:
    """Per-qubit single-qubit gates immediately around each MCZ."""

    before: dict  # (mcz, qubit) -> gate index
    after: dict
    predecessor: dict  # 1q gate -> MCZ right before it on its qubit (or None)
    successor: dict  # 1q gate -> MCZ right after it on its qubit (or None)

    @classmethod
    def of(cls, circuit: Circuit) -> "Neighbours":
        before, after, pred, succ = {}, {}, {}, {}
        for q, ops in enumerate(circuit.per_qubit_ops()):
            for k, i in enumerate(ops):
                if isinstance(circuit.gates[i], MCZ):
                    continue
                prev_op = ops[k - 1] if k > 0 else None
                next_op = ops[k + 1] if k + 1 < len(ops) else None
                pred[i] = prev_op
                succ[i] = next_op
                if prev_op is not None:
                    after[prev_op, q] = i
                if next_op is not None:
                    before[next_op, q] = i
        return cls(before, after, pred, succ)


def analysis_order(layered: LayeredCircuit) -> list[int]:
    """MCZs layer by layer, each layer by lowest qubit index."""
    return [i for layer in layered.multi_layers() for i in layer.gates]


def plan_absorption(layered: LayeredCircuit) -> AbsorptionPlan:
    circuit = layered.circuit
    nb = Neighbours.of(circuit)
    absorbed: set[int] = set()
    prev_border = None
    blocks = []
    for m in analysis_order(layered):
        qubits = circuit.gates[m].qubits
        cands = []
        avail = {}
        for q in qubits:
            b = nb.before.get((m, q))
            if b in absorbed:
                b = None
            a = nb.after.get((m, q))
            avail[q] = (b, a)
            if b is not None and q == prev_border:
                prio = 1
            elif b is not None and a is not None:
                prio = 2
            elif b is not None:
                prio = 3
            elif a is not None:
                prio = 4
            else:
                continue
            cands.append((prio, q))
        cands.sort()
        selected = [q for _, q in cands[: len(qubits) - 1]]
        unselected = [q for q in qubits if q not in selected]
        border = min(unselected, key=lambda q: (sum(g is not None for g in avail[q]), q))
        absorbed_before = {q: avail[q][0] for q in selected if avail[q][0] is not None}
        absorbed_after = {q: avail[q][1] for q in selected if avail[q][1] is not None}
        both = sorted(q for q in selected if q in absorbed_before and q in absorbed_after)
        two_pi = both[0] if both else min(q for q in qubits if q != border)
        pi_order = tuple(sorted(q for q in qubits if q not in (border, two_pi)))
        absorbed.update(absorbed_before.values())
        absorbed.update(absorbed_after.values())
        blocks.append(BlockPlan(m, tuple(qubits), border, two_pi, pi_order, absorbed_before, absorbed_after))
        prev_border = border
    return AbsorptionPlan(tuple(blocks))


class PlanError(RuntimeError):
    pass


def order_blocks(layered: LayeredCircuit, plan: AbsorptionPlan) -> ScheduleOrder:
    circuit = layered.circuit
    nb = Neighbours.of(circuit)
    absorbed = plan.absorbed()
    one_qubit = [i for i, g in enumerate(circuit.gates) if not isinstance(g, MCZ)]
    finals = [i for i in one_qubit if nb.successor[i] is None and i not in absorbed]
    ready = [i for i in finals if nb.predecessor[i] is None]
    scheduled = set(absorbed)
    done_mcz: set[int] = set()
    items: list[dict] = []

    for k, bp in enumerate(plan.blocks):
        m = bp.mcz
        if any(nb.predecessor.get(g) not in done_mcz | {None} for g in bp.absorbed_before.values()):
            raise PlanError(f"block {m} absorbs a gate whose predecessor is not scheduled")
        item = {"plan": bp, "pre": [], "par": [], "lead": []}
        preceding = [
            nb.before[m, q] for q in bp.qubits if (m, q) in nb.before and nb.before[m, q] not in scheduled
        ]
        if preceding:
            prev = items[-1] if items else None
            for g in sorted(preceding):
                q = circuit.gates[g].qubit
                if prev is not None and q not in prev["plan"].qubits:
                    prev["par"].append(g)
                    prev["lead"].append(g)
                else:
                    item["pre"].append(g)
                scheduled.add(g)
        elif items:
            # no lead-in gate: the previous block's slot takes a ready final gate instead
            prev = items[-1]
            options = [g for g in ready if g not in scheduled and nb.predecessor[g] != prev["plan"].mcz]
            if options:
                g = min(options)
                prev["par"].append(g)
                scheduled.add(g)
        items.append(item)
        done_mcz.add(m)
        for q in bp.qubits:
            a = nb.after.get((m, q))
            if a is not None and a in finals and a not in scheduled:
                ready.append(a)

    trailing = []
    leftovers = sorted(g for g in one_qubit if g not in scheduled)
    last_mcz = items[-1]["plan"].mcz if items else None
    for g in leftovers:
        if items and nb.predecessor[g] != last_mcz:
            items[-1]["par"].append(g)
        else:
            trailing.append(g)

    return ScheduleOrder(
        circuit,
        tuple(ScheduledBlock(it["plan"], tuple(it["pre"]), tuple(it["par"]), tuple(it["lead"])) for it in items),
        tuple(trailing),
    )


def emit_block(builder: SequenceBuilder, circuit: Circuit, item: ScheduledBlock) -> None:
    """Emit one absorbed block: pre gates, absorbed-before gates, the train,
    parallel gates, absorbed-after gates; every instruction as early as possible."""
    bp = item.plan
    for g in item.pre_gates:
        builder.place_raman(circuit.gates[g])
    rank = bp.pulse_rank()
    for q in sorted(bp.absorbed_before, key=rank.index):
        builder.place_raman(circuit.gates[bp.absorbed_before[q]], block=bp.mcz)
    builder.place_train(bp.train(), block=bp.mcz)
    for g in item.parallel_gates:
        builder.place_raman(circuit.gates[g])
    for q in sorted(bp.absorbed_after, key=rank.index, reverse=True):
        builder.place_raman(circuit.gates[bp.absorbed_after[q]], block=bp.mcz)


def emit_timeline(order: ScheduleOrder, timing: TimingParams, n_qubits: int | None = None) -> PulseSequence:
    circuit = order.circuit
    builder = SequenceBuilder(timing, circuit.n_qubits if n_qubits is None else n_qubits)
    for item in order.items:
        emit_block(builder, circuit, item)
    for g in order.trailing:
        builder.place_raman(circuit.gates[g])
    return builder.build()


def build_order(circuit: Circuit) -> ScheduleOrder:
    require_schedulable(circuit)
    layered = layerize(circuit)
    return order_blocks(layered, plan_absorption(layered))


def schedule_pulse_level(circuit: Circuit, timing: TimingParams | None = None) -> PulseSequence:
    timing = timing or TimingParams()
    return emit_timeline(build_order(circuit), timing)


def standalone_sites(order: ScheduleOrder, seq: PulseSequence) -> set[int]:
    """Blocks whose lead-in gate ran on its own instead of alongside a block.

    A block is flagged when it has a pre gate, or when the gate attached to the
    previous block for it did not finish before that block's train ended.
    """
    ends: dict[int, Fraction] = {}
    for ins in seq.rydberg:
        if ins.is_pulse and ins.block is not None:
            ends[ins.block] = max(ends.get(ins.block, Fraction(0)), ins.t_end)
    raman_end_by_qubit: dict[int, list[Fraction]] = {}
    for ins in seq.raman:
        if ins.is_pulse:
            raman_end_by_qubit.setdefault(ins.target, []).append(ins.t_end)
    circuit = order.circuit
    flagged = set()
    for k, item in enumerate(order.items):
        if item.pre_gates:
            flagged.add(item.plan.mcz)
        if k == 0 or not order.items[k - 1].lead_in:
            continue
        prev = order.items[k - 1]
        for g in prev.lead_in:
            q = circuit.gates[g].qubit
            # the lead-in gate is the last Raman pulse on q before this block
            start_of_block = min(
                ins.t_start for ins in seq.rydberg if ins.is_pulse and ins.block == item.plan.mcz
            )
            end = max((t for t in raman_end_by_qubit.get(q, []) if t <= start_of_block), default=None)
            if end is not None and end > ends[prev.plan.mcz]:
                flagged.add(item.plan.mcz)
    return flagged
