"""Exhaustive search over pulse-level schedules for small circuits.

The search space is every choice the absorption scheduler makes: block order
(any order consistent with per-qubit dependencies), border, 2pi recipient and
pi order of each block, which adjacent gates each block absorbs, and which
block slot (before a block, alongside it, or at the very end) every remaining
single-qubit gate is emitted in, including the emission order inside each
slot. Timing follows the same ASAP rules as the emitter but is recomputed
here on a compact state so that the two can be cross-checked.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .circuit import MCZ, Circuit, SingleQubit, require_schedulable, validate_practical_form
from .device import TimingParams
from .pulse_scheduler import Neighbours, ScheduleOrder
from .sequence import TWO_PI, mcz_pulse_train


@dataclass(frozen=True)
class _State:
    ryd_end: Fraction
    ryd_target: int | None
    ram_end: Fraction
    ram_target: int | None
    free: tuple


def _raman(state: _State, q: int, dpi, dt) -> _State:
    lead = state.ram_end + (0 if state.ram_target == q else dt)
    start = max(state.free[q], lead)
    free = list(state.free)
    free[q] = start + dpi
    return _State(state.ryd_end, state.ryd_target, start + dpi, q, tuple(free))


def _train(state: _State, train, dpi, dt) -> _State:
    free = list(state.free)
    end, target = state.ryd_end, state.ryd_target
    t = 0
    for q, role in train:
        length = 2 * dpi if role == TWO_PI else dpi
        start = max(t, free[q], end + (0 if target == q else dt))
        end, target, t = start + length, q, start + length
        free[q] = end
    return _State(end, target, state.ram_end, state.ram_target, tuple(free))


def replay_order(order: ScheduleOrder, timing: TimingParams) -> Fraction:
    """Duration of a ScheduleOrder under the oracle's own timing rules."""
    c = order.circuit
    dpi, dt = timing.delta_pi, timing.delta_t
    st = _State(Fraction(0), None, Fraction(0), None, tuple([Fraction(0)] * c.n_qubits))
    for item in order.items:
        bp = item.plan
        rank = bp.pulse_rank()
        for g in item.pre_gates:
            st = _raman(st, c.gates[g].qubit, dpi, dt)
        for q in sorted(bp.absorbed_before, key=rank.index):
            st = _raman(st, q, dpi, dt)
        st = _train(st, bp.train(), dpi, dt)
        for g in item.parallel_gates:
            st = _raman(st, c.gates[g].qubit, dpi, dt)
        for q in sorted(bp.absorbed_after, key=rank.index, reverse=True):
            st = _raman(st, q, dpi, dt)
    for g in order.trailing:
        st = _raman(st, c.gates[g].qubit, dpi, dt)
    return max(st.ryd_end, st.ram_end)


def brute_force_duration(
    circuit: Circuit, timing: TimingParams | None = None, max_mcz: int = 4, plan=None
) -> Fraction:
    """Minimum duration over the whole scheduling space (see module docstring).

    Slot contents are grown one gate at a time, so the memo collapses orders
    that reach the same timing state. ``plan`` (an AbsorptionPlan) pins the
    absorbed sets and train layout of every block, leaving only orders and slot
    assignments free.
    """
    timing = timing or TimingParams()
    require_schedulable(circuit)
    dpi, dt = timing.delta_pi, timing.delta_t
    nb = Neighbours.of(circuit)
    gates = circuit.gates
    mczs = [i for i, g in enumerate(gates) if isinstance(g, MCZ)]
    if len(mczs) > max_mcz:
        raise ValueError(f"brute force limited to {max_mcz} MCZs, circuit has {len(mczs)}")
    one_q = [i for i, g in enumerate(gates) if not isinstance(g, MCZ)]
    qubit = {i: gates[i].qubit for i in one_q}
    mcz_preds: dict[int, set[int]] = {}
    for ops in circuit.per_qubit_ops():
        ms = [i for i in ops if isinstance(gates[i], MCZ)]
        for a, b in zip(ms, ms[1:]):
            mcz_preds.setdefault(b, set()).add(a)

    fixed = {b.mcz: b for b in plan.blocks} if plan is not None else None
    layouts = {}
    for m in mczs:
        qs = gates[m].qubits
        layouts[m] = [
            (border, two_pi, perm)
            for border in qs
            for two_pi in qs
            if two_pi != border
            for perm in itertools.permutations([q for q in qs if q not in (border, two_pi)])
        ]

    trains = {(m, *lay): tuple(mcz_pulse_train(gates[m].qubits, *lay)) for m in mczs for lay in layouts[m]}

    # work in integer ticks
    scale = math.lcm(dpi.denominator, dt.denominator)
    dpi, dt = int(dpi * scale), int(dt * scale)
    mcz_qubits = {m: set(gates[m].qubits) for m in mczs}

    @lru_cache(maxsize=None)
    def live_sets(done, sched):
        live_ram = {qubit[g] for g in one_q if g not in sched}
        live_ryd = set().union(*(mcz_qubits[m] for m in mczs if m not in done))
        return live_ram, live_ryd, live_ram | live_ryd

    def canon(st: _State, done, sched):
        """Shift so the earlier channel ends at 0 and drop details that cannot
        affect the remaining work; returns (shift, state)."""
        base = min(st.ryd_end, st.ram_end)
        live_ram, live_ryd, live = live_sets(done, sched)
        free = tuple(max(f - base, 0) if q in live else 0 for q, f in enumerate(st.free))
        return base, _State(
            st.ryd_end - base,
            st.ryd_target if st.ryd_target in live_ryd else None,
            st.ram_end - base,
            st.ram_target if st.ram_target in live_ram else None,
            free,
        )

    def ready(g, done):
        p = nb.predecessor[g]
        return p is None or p in done

    def span(st: _State) -> Fraction:
        return max(st.ryd_end, st.ram_end)

    def finish(sched, st):
        base, c = canon(st, frozenset(mczs), sched)
        return base + _finish(sched, c)

    @lru_cache(maxsize=None)
    def _finish(sched: frozenset, st: _State):
        rest = [g for g in one_q if g not in sched]
        if not rest:
            return span(st)
        return min(finish(sched | {g}, _raman(st, qubit[g], dpi, dt)) for g in rest)

    def best(done, sched, st):
        base, c = canon(st, done, sched)
        val = _best(done, sched, c)
        return None if val is None else base + val

    @lru_cache(maxsize=None)
    def _best(done: frozenset, sched: frozenset, st: _State):
        if len(done) == len(mczs):
            return finish(sched, st)
        out = None
        for m in mczs:
            if m in done or not mcz_preds.get(m, set()) <= done:
                continue
            qs = gates[m].qubits
            need = [q for q in qs if (m, q) in nb.before and nb.before[m, q] not in sched]
            # the border can never absorb, so at least one qubit stays out
            for before in _subsets(need):
                if len(before) == len(qs):
                    continue
                if fixed and set(before) != set(fixed[m].absorbed_before):
                    continue
                val = pre_phase(done, sched, st, m, before)
                if val is not None and (out is None or val < out):
                    out = val
        return out

    def pre_phase(done, sched, st, m, before):
        base, c = canon(st, done, sched)
        val = _pre_phase(done, sched, c, m, before)
        return None if val is None else base + val

    @lru_cache(maxsize=None)
    def _pre_phase(done, sched, st, m, before):
        """Grow the standalone slot before block m, then run it."""
        qs = gates[m].qubits
        need = {q: nb.before[m, q] for q in qs if (m, q) in nb.before}
        reserved = {need[q] for q in before}
        options = []
        if all(need[q] in sched for q in need if q not in before):
            sched1 = sched | reserved
            done1 = done | {m}
            for order in itertools.permutations(before):
                s = st
                for q in order:
                    s = _raman(s, q, dpi, dt)
                for border, two_pi, perm in layouts[m]:
                    if border in before:
                        continue
                    if fixed and (border, two_pi, perm) != (fixed[m].border, fixed[m].two_pi, fixed[m].pi_order):
                        continue
                    s1 = _train(s, trains[m, border, two_pi, perm], dpi, dt)
                    after_opts = [
                        q for q in qs if q != border and (m, q) in nb.after and nb.after[m, q] not in sched1
                    ]
                    for after in _subsets(after_opts):
                        if fixed and set(after) != set(fixed[m].absorbed_after):
                            continue
                        options.append(par_phase(done1, sched1, s1, m, after))
        for g in one_q:
            if g not in sched and g not in reserved and ready(g, done):
                options.append(pre_phase(done, sched | {g}, _raman(st, qubit[g], dpi, dt), m, before))
        options = [v for v in options if v is not None]
        return min(options) if options else None

    def par_phase(done, sched, st, m, after):
        base, c = canon(st, done, sched)
        val = _par_phase(done, sched, c, m, after)
        return None if val is None else base + val

    @lru_cache(maxsize=None)
    def _par_phase(done, sched, st, m, after):
        reserved = {nb.after[m, q] for q in after}
        options = []
        for order in itertools.permutations(after):
            s = st
            for q in order:
                s = _raman(s, q, dpi, dt)
            options.append(best(done, sched | reserved, s))
        for g in one_q:
            if g not in sched and g not in reserved and ready(g, done):
                options.append(par_phase(done, sched | {g}, _raman(st, qubit[g], dpi, dt), m, after))
        options = [v for v in options if v is not None]
        return min(options) if options else None

    start = _State(0, None, 0, None, (0,) * circuit.n_qubits)
    return Fraction(best(frozenset(), frozenset(), start), scale)


def _subsets(items):
    items = list(items)
    for r in range(len(items) + 1):
        yield from itertools.combinations(items, r)


def exhaustive_family(max_qubits: int = 4, max_mcz: int = 3, max_arity: int = 3):
    """Every small schedulable circuit shape, one representative per qubit relabeling.

    Shapes vary over the MCZ sequence (1..max_mcz gates, each on 2..max_arity
    qubits, every qubit used) and over which optional single-qubit slots are
    filled: the slot between two MCZs on a qubit and the slot after its last
    MCZ. The slot before the first MCZ on each qubit is always filled. Angles
    do not affect timing and are fixed.
    """
    for n in range(2, max_qubits + 1):
        perms = list(itertools.permutations(range(n)))
        qubit_sets = [
            s for r in range(2, min(n, max_arity) + 1) for s in itertools.combinations(range(n), r)
        ]
        for k in range(1, max_mcz + 1):
            for seq in itertools.product(qubit_sets, repeat=k):
                if set().union(*seq) != set(range(n)):
                    continue
                images = [tuple(tuple(sorted(p[q] for q in qs)) for qs in seq) for p in perms]
                if min(images) != seq:
                    continue
                stabilizer = [p for p, img in zip(perms, images) if img == seq]
                slots = [(j, q) for j, qs in enumerate(seq) for q in qs]
                seen = set()
                for mask in range(1 << len(slots)):
                    filled = frozenset(slots[i] for i in range(len(slots)) if mask >> i & 1)
                    key = min(tuple(sorted((j, p[q]) for j, q in filled)) for p in stabilizer)
                    if key in seen:
                        continue
                    seen.add(key)
                    c = _shape_circuit(n, seq, filled)
                    if c is not None:
                        yield c


def _shape_circuit(n, seq, filled):
    g = [SingleQubit(q, math.pi / 2, 0.0) for q in range(n)]
    for j, qs in enumerate(seq):
        g.append(MCZ(tuple(qs)))
        g += [SingleQubit(q, math.pi / 2, 0.0) for q in qs if (j, q) in filled]
    c = Circuit(n, g)
    return c if validate_practical_form(c).ok else None
