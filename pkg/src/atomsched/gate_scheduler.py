"""Gate-level baseline: whole gates only, single-qubit gates parallelized with
disjoint MCZs but never absorbed."""

from __future__ import annotations

from .circuit import MCZ, Circuit, LayeredCircuit, layerize, require_schedulable
from .device import TimingParams
from .pulse_scheduler import Neighbours
from .sequence import PulseSequence, SequenceBuilder, mcz_pulse_train


def _gate_train(qubits):
    qs = sorted(qubits)
    return mcz_pulse_train(qs, qs[0], qs[1])


def schedule_gate_level(layered: LayeredCircuit | Circuit, timing: TimingParams | None = None) -> PulseSequence:
    """Layer by layer, MCZs sorted by when their qubits were last busy, then by
    how few single-qubit gates precede them. Each MCZ (leading retarget
    included) is an atomic unit that keeps all its qubits busy."""
    timing = timing or TimingParams()
    if isinstance(layered, Circuit):
        require_schedulable(layered)
        layered = layerize(layered)
    circuit = layered.circuit
    nb = Neighbours.of(circuit)
    builder = SequenceBuilder(timing, circuit.n_qubits, raman_gap_fill=True)
    free = builder.qubit_free
    done = set()

    for layer in layered.multi_layers():
        def key(m):
            qs = circuit.gates[m].qubits
            n_pre = sum((m, q) in nb.before for q in qs)
            return (max(free[q] for q in qs), n_pre, min(qs))

        for m in sorted(layer.gates, key=key):
            qs = circuit.gates[m].qubits
            pre = [nb.before[m, q] for q in qs if (m, q) in nb.before]
            for g in sorted(pre, key=lambda g: (free[circuit.gates[g].qubit], g)):
                builder.place_raman(circuit.gates[g])
                done.add(g)
            train = _gate_train(qs)
            unit_start = max([builder.rydberg.end] + [free[q] for q in qs])
            lead = 0 if builder.rydberg.last_target == train[0][0] else timing.delta_t
            placed = builder.place_train(train, block=m, ready=unit_start + lead)
            for q in qs:
                free[q] = placed[-1].end

    finals = [i for i, g in enumerate(circuit.gates) if not isinstance(g, MCZ) and i not in done]
    for g in sorted(finals, key=lambda g: (free[circuit.gates[g].qubit], g)):
        builder.place_raman(circuit.gates[g])
    return builder.build()
