"""Two-channel pulse timelines: MCZ pulse trains, timeline building and well-formedness."""

from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass
from fractions import Fraction

from .circuit import MCZ, Circuit, SingleQubit
from .device import TimingParams, fraction_str

RYDBERG = "rydberg"
RAMAN = "raman"
PI = "pi"
TWO_PI = "two_pi"
RAMAN_ROLE = "raman"


@dataclass(frozen=True)
class Instruction:
    channel: str
    kind: str  # "retarget" | "pulse"
    target: int
    t_start: Fraction
    duration: Fraction
    role: str | None = None
    theta: float | None = None
    phi: float | None = None
    block: int | None = None

    @property
    def t_end(self) -> Fraction:
        return self.t_start + self.duration

    @property
    def is_pulse(self) -> bool:
        return self.kind == "pulse"

    def to_dict(self) -> dict:
        if self.role == RAMAN_ROLE:
            role = {"raman": {"theta": self.theta, "phi": self.phi}}
        else:
            role = self.role
        return {
            "t_start": fraction_str(self.t_start),
            "kind": self.kind,
            "target": self.target,
            "duration": fraction_str(self.duration),
            "role": role,
            "block": self.block,
        }

    @classmethod
    def from_dict(cls, channel: str, d: dict) -> "Instruction":
        role = d.get("role")
        theta = phi = None
        if isinstance(role, dict):
            theta, phi = float(role["raman"]["theta"]), float(role["raman"]["phi"])
            role = RAMAN_ROLE
        return cls(
            channel,
            d["kind"],
            int(d["target"]),
            Fraction(d["t_start"]),
            Fraction(d["duration"]),
            role,
            theta,
            phi,
            d.get("block"),
        )


@dataclass(frozen=True)
class PulseSequence:
    rydberg: tuple[Instruction, ...]
    raman: tuple[Instruction, ...]
    timing: TimingParams
    n_qubits: int

    def channel(self, name: str) -> tuple[Instruction, ...]:
        return self.rydberg if name == RYDBERG else self.raman

    def instructions(self):
        yield from self.rydberg
        yield from self.raman

    def pulses(self) -> list[Instruction]:
        return sorted(
            (i for i in self.instructions() if i.is_pulse),
            key=lambda i: (i.t_start, i.channel != RYDBERG, i.target),
        )

    def without_raman(self) -> "PulseSequence":
        return PulseSequence(self.rydberg, (), self.timing, self.n_qubits)

    def to_dict(self) -> dict:
        return {
            "timing": self.timing.to_dict(),
            "n_qubits": self.n_qubits,
            "channels": {
                RYDBERG: [i.to_dict() for i in self.rydberg],
                RAMAN: [i.to_dict() for i in self.raman],
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "PulseSequence":
        channels = d["channels"]
        rydberg = tuple(Instruction.from_dict(RYDBERG, x) for x in channels.get(RYDBERG, []))
        raman = tuple(Instruction.from_dict(RAMAN, x) for x in channels.get(RAMAN, []))
        n = d.get("n_qubits")
        if n is None:
            n = 1 + max((i.target for i in rydberg + raman), default=-1)
        return cls(rydberg, raman, TimingParams.from_dict(d["timing"]), int(n))

    @classmethod
    def from_json(cls, text: str) -> "PulseSequence":
        return cls.from_dict(json.loads(text))


def duration(seq: PulseSequence) -> Fraction:
    return max((i.t_end for i in seq.instructions()), default=Fraction(0))


def mcz_pulse_train(qubits, border: int, two_pi_recipient: int, pi_order=None) -> list[tuple[int, str]]:
    """Palindromic train: pi pulses in order, a 2pi pulse, then the same pi pulses reversed.

    ``pi_order`` fixes the qubits pulsed between the border and the 2pi recipient;
    by default they go in ascending index order.
    """
    qubits = list(qubits)
    if len(qubits) < 2:
        raise ValueError("an MCZ train needs at least two qubits")
    if border == two_pi_recipient:
        raise ValueError("border and 2pi recipient must differ")
    if border not in qubits or two_pi_recipient not in qubits:
        raise ValueError("border and 2pi recipient must belong to the gate")
    inner = sorted(q for q in qubits if q not in (border, two_pi_recipient))
    if pi_order is not None:
        if sorted(pi_order) != inner:
            raise ValueError(f"pi_order {pi_order} must be a permutation of {inner}")
        inner = list(pi_order)
    first = [border] + inner
    return [(q, PI) for q in first] + [(two_pi_recipient, TWO_PI)] + [(q, PI) for q in reversed(first)]


def mcz_block_duration(n: int, timing: TimingParams) -> Fraction:
    """Pulse time plus the 2n-2 internal retargets (leading retarget excluded)."""
    if n < 2:
        raise ValueError("MCZ blocks need n >= 2")
    return 2 * n * timing.delta_pi + (2 * n - 2) * timing.delta_t


# ---------------------------------------------------------------- building


@dataclass
class _Pulse:
    start: Fraction
    length: Fraction
    target: int
    role: str
    theta: float | None = None
    phi: float | None = None
    block: int | None = None

    @property
    def end(self) -> Fraction:
        return self.start + self.length


class Channel:
    """Pulses on one channel; retargets are implied wherever the target changes.

    With ``gap_fill`` a new pulse may be slotted into an idle gap as long as the
    retargets it forces (before itself and before the following pulse) fit.
    """

    def __init__(self, delta_t: Fraction, gap_fill: bool = False):
        self.delta_t = delta_t
        self.gap_fill = gap_fill
        self.pulses: list[_Pulse] = []
        self._starts: list[Fraction] = []

    @property
    def end(self) -> Fraction:
        return self.pulses[-1].end if self.pulses else Fraction(0)

    @property
    def last_target(self) -> int | None:
        return self.pulses[-1].target if self.pulses else None

    def _lead(self, prev: _Pulse | None, target: int) -> Fraction:
        if prev is None:
            return self.delta_t
        return prev.end + (self.delta_t if prev.target != target else 0)

    def earliest(self, target: int, ready: Fraction, length: Fraction) -> Fraction:
        if not self.gap_fill or not self.pulses:
            return max(ready, self._lead(self.pulses[-1] if self.pulses else None, target))
        # gaps whose following pulse starts before ``ready`` cannot host the pulse
        for k in range(bisect.bisect_left(self._starts, ready), len(self.pulses) + 1):
            prev = self.pulses[k - 1] if k else None
            nxt = self.pulses[k] if k < len(self.pulses) else None
            start = max(ready, self._lead(prev, target))
            if nxt is None:
                return start
            tail = self.delta_t if nxt.target != target else 0
            if start + length + tail <= nxt.start:
                return start
        raise AssertionError("unreachable")

    def add(self, pulse: _Pulse):
        k = bisect.bisect_right(self._starts, pulse.start)
        self.pulses.insert(k, pulse)
        self._starts.insert(k, pulse.start)

    def instructions(self, name: str) -> list[Instruction]:
        out = []
        prev = None
        for p in self.pulses:
            if prev is None or prev.target != p.target:
                out.append(Instruction(name, "retarget", p.target, p.start - self.delta_t, self.delta_t, block=p.block))
            out.append(Instruction(name, "pulse", p.target, p.start, p.length, p.role, p.theta, p.phi, p.block))
            prev = p
        return out


class SequenceBuilder:
    """Mutable helper the schedulers use to place pulses; ``build`` freezes it."""

    def __init__(self, timing: TimingParams, n_qubits: int, raman_gap_fill: bool = False):
        self.timing = timing
        self.n_qubits = n_qubits
        self.rydberg = Channel(timing.delta_t)
        self.raman = Channel(timing.delta_t, gap_fill=raman_gap_fill)
        self.qubit_free = [Fraction(0)] * n_qubits

    def place_raman(self, gate: SingleQubit, ready: Fraction = Fraction(0), block: int | None = None) -> _Pulse:
        q = gate.qubit
        length = self.timing.delta_pi
        start = self.raman.earliest(q, max(ready, self.qubit_free[q]), length)
        pulse = _Pulse(start, length, q, RAMAN_ROLE, gate.theta, gate.phi, block)
        self.raman.add(pulse)
        self.qubit_free[q] = pulse.end
        return pulse

    def place_train(self, train, block: int, ready: Fraction = Fraction(0)) -> list[_Pulse]:
        """Place a pulse train pulse by pulse, each as early as possible."""
        placed = []
        t = ready
        for target, role in train:
            length = 2 * self.timing.delta_pi if role == TWO_PI else self.timing.delta_pi
            start = self.rydberg.earliest(target, max(t, self.qubit_free[target]), length)
            pulse = _Pulse(start, length, target, role, block=block)
            self.rydberg.add(pulse)
            placed.append(pulse)
            t = pulse.end
        for p in placed:
            self.qubit_free[p.target] = p.end
        return placed

    def build(self) -> PulseSequence:
        return PulseSequence(
            tuple(self.rydberg.instructions(RYDBERG)),
            tuple(self.raman.instructions(RAMAN)),
            self.timing,
            self.n_qubits,
        )


# ---------------------------------------------------------------- checking


@dataclass(frozen=True)
class Issue:
    clause: str
    message: str
    instructions: tuple = ()


@dataclass(frozen=True)
class WellformednessReport:
    issues: tuple[Issue, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.issues

    def __bool__(self) -> bool:
        return bool(self.issues)

    def clauses(self) -> set[str]:
        return {i.clause for i in self.issues}

    def summary(self) -> str:
        return "ok" if self.ok else "; ".join(f"({i.clause}) {i.message}" for i in self.issues)


@dataclass(frozen=True)
class InvolvementWindow:
    qubit: int
    block: int
    start: Fraction
    end: Fraction


def block_trains(seq: PulseSequence) -> dict[int, list[tuple[int, Instruction]]]:
    """Rydberg pulses grouped by block tag, as (channel index, instruction)."""
    blocks: dict[int, list] = {}
    for k, ins in enumerate(seq.rydberg):
        if ins.is_pulse and ins.block is not None:
            blocks.setdefault(ins.block, []).append((k, ins))
    return blocks


def involvement_windows(seq: PulseSequence) -> list[InvolvementWindow]:
    windows = []
    for block, pulses in block_trains(seq).items():
        by_qubit: dict[int, list[Instruction]] = {}
        for _, ins in pulses:
            by_qubit.setdefault(ins.target, []).append(ins)
        for q, ps in by_qubit.items():
            windows.append(InvolvementWindow(q, block, min(p.t_start for p in ps), max(p.t_end for p in ps)))
    return windows


def _overlaps(a0, a1, b0, b1) -> bool:
    return a0 < b1 and b0 < a1


def _angles_match(gate: SingleQubit, ins: Instruction) -> bool:
    if ins.theta is None or ins.phi is None:
        return False
    dphi = (gate.phi - ins.phi) % (2 * math.pi)
    return abs(gate.theta - ins.theta) < 1e-9 and min(dphi, 2 * math.pi - dphi) < 1e-9


def check_wellformed(seq: PulseSequence, circuit: Circuit) -> WellformednessReport:
    """Check the physical constraints every scheduler output must satisfy.

    Clauses: (a) channel overlap, (b) retargeting, (c) MCZ trains,
    (d) Raman pulses inside involvement windows, (e) per-qubit order,
    (f) every gate realized exactly once. Clause "0" covers malformed
    instructions (wrong channel, role or duration).
    """
    timing = seq.timing
    issues: list[Issue] = []

    for name in (RYDBERG, RAMAN):
        for k, ins in enumerate(seq.channel(name)):
            ref = ((name, k),)
            if ins.channel != name:
                issues.append(Issue("0", f"{name}[{k}] tagged for channel {ins.channel}", ref))
            if ins.kind == "retarget":
                if ins.duration != timing.delta_t:
                    issues.append(Issue("0", f"{name}[{k}] retarget lasts {ins.duration}", ref))
                continue
            if ins.kind != "pulse":
                issues.append(Issue("0", f"{name}[{k}] has unknown kind {ins.kind!r}", ref))
                continue
            if not 0 <= ins.target < max(seq.n_qubits, circuit.n_qubits):
                issues.append(Issue("0", f"{name}[{k}] targets missing qubit {ins.target}", ref))
            if name == RYDBERG:
                if ins.role == PI and not 0 < ins.duration <= timing.delta_pi:
                    issues.append(Issue("0", f"{name}[{k}] pi pulse lasts {ins.duration}", ref))
                elif ins.role == TWO_PI and ins.duration != 2 * timing.delta_pi:
                    issues.append(Issue("0", f"{name}[{k}] 2pi pulse lasts {ins.duration}", ref))
                elif ins.role not in (PI, TWO_PI):
                    issues.append(Issue("0", f"{name}[{k}] has role {ins.role!r} on the Rydberg channel", ref))
            else:
                if ins.role != RAMAN_ROLE:
                    issues.append(Issue("0", f"{name}[{k}] has role {ins.role!r} on the Raman channel", ref))
                elif not 0 < ins.duration <= timing.delta_pi:
                    issues.append(Issue("0", f"{name}[{k}] Raman pulse lasts {ins.duration}", ref))

        # (a) and (b)
        instrs = seq.channel(name)
        order = sorted(range(len(instrs)), key=lambda k: (instrs[k].t_start, instrs[k].t_end))
        if order != list(range(len(instrs))):
            issues.append(Issue("a", f"{name} instructions are not sorted by start time"))
        target = None
        prev = None
        for k in order:
            ins = instrs[k]
            if prev is not None and instrs[prev].t_end > ins.t_start:
                issues.append(Issue("a", f"{name}[{prev}] overlaps {name}[{k}]", ((name, prev), (name, k))))
            if ins.kind == "retarget":
                target = ins.target
            elif ins.is_pulse and ins.target != target:
                issues.append(Issue("b", f"{name}[{k}] pulses qubit {ins.target} while aimed at {target}", ((name, k),)))
            prev = k

    # (c)
    mcz_gates = {i: g for i, g in enumerate(circuit.gates) if isinstance(g, MCZ)}
    trains = block_trains(seq)
    rydberg_pulse_idx = [k for k, ins in enumerate(seq.rydberg) if ins.is_pulse]
    for k in rydberg_pulse_idx:
        if seq.rydberg[k].block is None:
            issues.append(Issue("c", f"rydberg[{k}] belongs to no MCZ block", ((RYDBERG, k),)))
    for block, pulses in trains.items():
        refs = tuple((RYDBERG, k) for k, _ in pulses)
        gate = mcz_gates.get(block)
        if gate is None:
            issues.append(Issue("f", f"block {block} is not an MCZ of the circuit", refs))
            continue
        positions = [rydberg_pulse_idx.index(k) for k, _ in pulses]
        if positions != list(range(positions[0], positions[0] + len(positions))):
            issues.append(Issue("c", f"block {block} is interrupted by other Rydberg pulses", refs))
        targets = [ins.target for _, ins in pulses]
        roles = [ins.role for _, ins in pulses]
        n = len(gate.qubits)
        mid = n - 1
        if (
            len(pulses) != 2 * n - 1
            or targets != targets[::-1]
            or set(targets) != set(gate.qubits)
            or roles[mid:mid + 1] != [TWO_PI]
            or any(r != PI for j, r in enumerate(roles) if j != mid)
            or len(set(targets[:mid + 1])) != n
        ):
            issues.append(Issue("c", f"block {block} is not a palindromic MCZ train over {gate.qubits}", refs))

    # (d)
    windows = involvement_windows(seq)
    win_by_qubit: dict[int, list[InvolvementWindow]] = {}
    for w in windows:
        win_by_qubit.setdefault(w.qubit, []).append(w)
    for k, ins in enumerate(seq.raman):
        if not ins.is_pulse:
            continue
        for w in win_by_qubit.get(ins.target, []):
            if _overlaps(ins.t_start, ins.t_end, w.start, w.end):
                issues.append(Issue("d", f"raman[{k}] acts on qubit {ins.target} inside block {w.block}", ((RAMAN, k),)))

    # (e) and (f)
    for q, gate_ids in enumerate(circuit.per_qubit_ops()):
        ops = [(ins.t_start, ins.t_end, "raman", k) for k, ins in enumerate(seq.raman) if ins.is_pulse and ins.target == q]
        ops += [(w.start, w.end, "mcz", w.block) for w in win_by_qubit.get(q, [])]
        ops.sort(key=lambda o: (o[0], o[1]))
        n_1q = sum(1 for i in gate_ids if not isinstance(circuit.gates[i], MCZ))
        n_raman = sum(1 for o in ops if o[2] == "raman")
        blocks_q = sorted(o[3] for o in ops if o[2] == "mcz")
        expected_blocks = sorted(i for i in gate_ids if isinstance(circuit.gates[i], MCZ))
        if n_raman != n_1q or blocks_q != expected_blocks:
            issues.append(Issue("f", f"qubit {q}: {n_raman} Raman pulses / blocks {blocks_q} "
                                     f"for {n_1q} single-qubit gates / MCZs {expected_blocks}"))
            continue
        for a, b in zip(ops, ops[1:]):
            if a[1] > b[0]:
                issues.append(Issue("e", f"qubit {q}: operations overlap at t={b[0]}"))
        for (start, end, kind, ref), gi in zip(ops, gate_ids):
            gate = circuit.gates[gi]
            if kind == "mcz":
                if ref != gi:
                    issues.append(Issue("e", f"qubit {q}: block {ref} out of order (expected gate {gi})"))
                    break
            elif not isinstance(gate, SingleQubit) or not _angles_match(gate, seq.raman[ref]):
                issues.append(Issue("e", f"qubit {q}: raman[{ref}] does not realize gate {gi}", ((RAMAN, ref),)))
                break

    return WellformednessReport(tuple(issues))


def block_spans(seq: PulseSequence) -> dict[int, tuple[Fraction, Fraction]]:
    """[start, end] of each block including a leading retarget tagged with it."""
    spans: dict[int, list[Fraction]] = {}
    for ins in seq.rydberg:
        if ins.block is None:
            continue
        s = spans.setdefault(ins.block, [ins.t_start, ins.t_end])
        s[0] = min(s[0], ins.t_start)
        s[1] = max(s[1], ins.t_end)
    return {b: (s[0], s[1]) for b, s in spans.items()}


def check_gate_level_busy(seq: PulseSequence, circuit: Circuit) -> WellformednessReport:
    """Stricter rule for gate-level schedules: an MCZ's qubits are busy for its whole span."""
    issues = []
    spans = block_spans(seq)
    for block, (start, end) in spans.items():
        qubits = set(circuit.gates[block].qubits)
        for k, ins in enumerate(seq.raman):
            if ins.is_pulse and ins.target in qubits and _overlaps(ins.t_start, ins.t_end, start, end):
                issues.append(Issue("busy", f"raman[{k}] acts on qubit {ins.target} during gate {block}", ((RAMAN, k),)))
    return WellformednessReport(tuple(issues))


def rydberg_idle_gaps(seq: PulseSequence) -> list[tuple[int, Fraction]]:
    """Idle Rydberg time before each block beyond its (optional) leading retarget.

    Returns (block, idle) for every block after the first, in channel order.
    """
    gaps = []
    prev_end = prev_target = None
    for block, pulses in sorted(block_trains(seq).items(), key=lambda kv: kv[1][0][1].t_start):
        first = pulses[0][1]
        if prev_end is not None:
            lead = seq.timing.delta_t if first.target != prev_target else 0
            gaps.append((block, first.t_start - prev_end - lead))
        prev_end = pulses[-1][1].t_end
        prev_target = pulses[-1][1].target
    return gaps
