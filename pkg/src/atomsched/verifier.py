"""Perfect-blockade qutrit simulator for pulse sequences.

Each atom has levels |0>, |1>, |r> (index 2). Rydberg pulses couple |0> and |r>
and are suppressed whenever another atom of the same MCZ block sits in |r>.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuit import Circuit, circuit_unitary, rotation_matrix
from .sequence import PI, RAMAN, TWO_PI, PulseSequence, check_wellformed

MAX_QUTRITS = 7
NORM_TOL = 1e-9
EQUIV_TOL = 1e-7


class IllFormedSequenceError(ValueError):
    pass


def _as_tensor(state: np.ndarray, n: int) -> np.ndarray:
    return state.reshape((3,) * n + (-1,))


def computational_basis(n: int) -> np.ndarray:
    """(3**n, 2**n) matrix whose columns are the computational basis states."""
    cols = np.zeros((3**n, 2**n), dtype=complex)
    for k in range(2**n):
        bits = [(k >> (n - 1 - q)) & 1 for q in range(n)]
        cols[int(np.ravel_multi_index(bits, (3,) * n)), k] = 1
    return cols


def computational_rows(n: int) -> np.ndarray:
    rows = []
    for k in range(2**n):
        bits = [(k >> (n - 1 - q)) & 1 for q in range(n)]
        rows.append(int(np.ravel_multi_index(bits, (3,) * n)))
    return np.array(rows, dtype=int)


def apply_raman_pulse(state: np.ndarray, n: int, target: int, theta: float, phi: float) -> np.ndarray:
    """R(theta, phi) on the {|0>, |1>} levels of ``target``; |r> untouched."""
    psi = np.moveaxis(_as_tensor(state, n), target, 0).copy()
    m = rotation_matrix(theta, phi)
    s0, s1 = psi[0].copy(), psi[1].copy()
    psi[0] = m[0, 0] * s0 + m[0, 1] * s1
    psi[1] = m[1, 0] * s0 + m[1, 1] * s1
    return np.moveaxis(psi, 0, target).reshape(state.shape)


def apply_rydberg_pulse(state: np.ndarray, n: int, target: int, role: str, context) -> np.ndarray:
    """Pi: |0> -> -i|r>, |r> -> -i|0>; TwoPi: |0> -> -|0>, |r> -> -|r>.

    Both act as identity on components where some ``context`` qubit is in |r>.
    """
    psi = np.moveaxis(_as_tensor(state, n), target, 0).copy()
    # remaining axes are the other qubits in order, then the batch axis
    others = [q for q in range(n) if q != target]
    free = np.ones((3,) * (n - 1), dtype=bool)
    for c in context:
        if c == target:
            continue
        axis = others.index(c)
        shape = [1] * (n - 1)
        shape[axis] = 3
        free = free & (np.arange(3) != 2).reshape(shape)
    free = free[..., None]
    s0, s2 = psi[0].copy(), psi[2].copy()
    if role == PI:
        psi[0] = np.where(free, -1j * s2, s0)
        psi[2] = np.where(free, -1j * s0, s2)
    elif role == TWO_PI:
        psi[0] = np.where(free, -s0, s0)
        psi[2] = np.where(free, -s2, s2)
    else:
        raise ValueError(f"unknown Rydberg role {role!r}")
    return np.moveaxis(psi, 0, target).reshape(state.shape)


def _block_members(seq: PulseSequence) -> dict[int, set[int]]:
    members: dict[int, set[int]] = {}
    for ins in seq.rydberg:
        if ins.is_pulse and ins.block is not None:
            members.setdefault(ins.block, set()).add(ins.target)
    return members


def run_sequence(seq: PulseSequence, n: int, columns: np.ndarray) -> np.ndarray:
    """Apply every pulse, in start-time order (Rydberg first on ties), to ``columns``."""
    if n > MAX_QUTRITS:
        raise ValueError(f"qutrit simulation supports at most {MAX_QUTRITS} qubits, got {n}")
    members = _block_members(seq)
    state = columns
    for ins in seq.pulses():
        if ins.channel == RAMAN:
            state = apply_raman_pulse(state, n, ins.target, ins.theta, ins.phi)
        else:
            context = members.get(ins.block, set()) - {ins.target}
            state = apply_rydberg_pulse(state, n, ins.target, ins.role, context)
    return state


def sequence_operator(seq: PulseSequence, n: int | None = None) -> np.ndarray:
    """Full 3^n x 3^n operator of the sequence."""
    n = seq.n_qubits if n is None else n
    if n > MAX_QUTRITS:
        raise ValueError(f"qutrit simulation supports at most {MAX_QUTRITS} qubits, got {n}")
    return run_sequence(seq, n, np.eye(3**n, dtype=complex))


@dataclass(frozen=True)
class EquivalenceReport:
    equivalent: bool
    leakage: float
    phase: complex
    distance: float

    def to_dict(self) -> dict:
        return {
            "equivalent": self.equivalent,
            "leakage": self.leakage,
            "phase": [self.phase.real, self.phase.imag],
        }


def check_equivalence(circuit: Circuit, seq: PulseSequence, require_wellformed: bool = True) -> EquivalenceReport:
    """Compare the sequence's action on the computational subspace with the circuit.

    Ill-formed sequences are rejected unless ``require_wellformed`` is False, in
    which case they are simulated as given (useful for probing broken trains).
    """
    n = circuit.n_qubits
    if n > MAX_QUTRITS:
        raise ValueError(f"equivalence check supports at most {MAX_QUTRITS} qubits, got {n}")
    if require_wellformed:
        report = check_wellformed(seq, circuit)
        if not report.ok:
            raise IllFormedSequenceError(report.summary())
    out = run_sequence(seq, n, computational_basis(n))
    rows = computational_rows(n)
    restricted = out[rows]
    leak_mask = np.ones(3**n, dtype=bool)
    leak_mask[rows] = False
    leakage = float(np.max(np.linalg.norm(out[leak_mask], axis=0))) if leak_mask.any() else 0.0
    target = circuit_unitary(circuit)
    overlap = np.vdot(target, restricted)
    phase = overlap / abs(overlap) if abs(overlap) > 1e-12 else 1.0 + 0j
    distance = float(np.max(np.abs(restricted - phase * target)))
    ok = leakage < EQUIV_TOL and distance < EQUIV_TOL
    return EquivalenceReport(ok, leakage, complex(phase), distance)
