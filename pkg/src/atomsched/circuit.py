"""Circuit representation, practical-form validation, gate-level passes and layering."""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

TWO_PI = 2 * math.pi
IDENTITY_TOL = 1e-9
MAX_UNITARY_QUBITS = 10


class CircuitStructureError(ValueError):
    """Raised for malformed circuits (bad indices, duplicate MCZ qubits, ...)."""


class NotPracticalFormError(ValueError):
    def __init__(self, report: "ValidationReport"):
        super().__init__(f"circuit is not in practical form: {report.summary()}")
        self.report = report


# ---------------------------------------------------------------- gates


@dataclass(frozen=True)
class SingleQubit:
    """Resonant Raman pulse R(theta, phi): rotation by theta about (cos phi, sin phi, 0)."""

    qubit: int
    theta: float
    phi: float

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.qubit,)


@dataclass(frozen=True)
class VirtualZ:
    qubit: int
    angle: float

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.qubit,)


@dataclass(frozen=True)
class MCZ:
    qubits: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(self.qubits))
        if len(self.qubits) < 2:
            raise CircuitStructureError(f"MCZ needs at least 2 qubits, got {self.qubits}")
        if len(set(self.qubits)) != len(self.qubits):
            raise CircuitStructureError(f"MCZ has duplicate qubits: {self.qubits}")


@dataclass(frozen=True)
class H:
    qubit: int

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.qubit,)


@dataclass(frozen=True)
class X:
    qubit: int

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.qubit,)


@dataclass(frozen=True)
class CNOT:
    control: int
    target: int

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.control, self.target)


@dataclass(frozen=True)
class SWAP:
    a: int
    b: int

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.a, self.b)


@dataclass(frozen=True)
class CCZ:
    qubits: tuple[int, int, int]

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(self.qubits))
        if len(self.qubits) != 3 or len(set(self.qubits)) != 3:
            raise CircuitStructureError(f"CCZ needs 3 distinct qubits, got {self.qubits}")


Gate = Union[SingleQubit, VirtualZ, MCZ, H, X, CNOT, SWAP, CCZ]
ONE_QUBIT_KINDS = (SingleQubit, VirtualZ, H, X)


def is_one_qubit(gate: Gate) -> bool:
    return isinstance(gate, ONE_QUBIT_KINDS)


def is_nondiagonal(gate: Gate) -> bool:
    """True if the gate can move population out of |0> on some qubit."""
    if isinstance(gate, SingleQubit):
        return not _angle_is_zero(gate.theta)
    return isinstance(gate, (H, X, CNOT, SWAP))


def _angle_is_zero(theta: float) -> bool:
    return abs(math.sin(theta / 2)) < IDENTITY_TOL


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    gates: tuple[Gate, ...] = ()
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        if self.n_qubits < 0:
            raise CircuitStructureError("n_qubits must be non-negative")
        for i, gate in enumerate(self.gates):
            for q in gate.qubits:
                if not 0 <= q < self.n_qubits:
                    raise CircuitStructureError(
                        f"gate {i} ({type(gate).__name__}) uses qubit {q} outside 0..{self.n_qubits - 1}"
                    )
            if isinstance(gate, (CNOT, SWAP)) and gate.qubits[0] == gate.qubits[1]:
                raise CircuitStructureError(f"gate {i} acts twice on qubit {gate.qubits[0]}")

    def __len__(self) -> int:
        return len(self.gates)

    def replace(self, gates, n_qubits: int | None = None, **metadata) -> "Circuit":
        meta = dict(self.metadata)
        meta.update(metadata)
        return Circuit(self.n_qubits if n_qubits is None else n_qubits, tuple(gates), meta)

    def mcz_indices(self) -> list[int]:
        return [i for i, g in enumerate(self.gates) if isinstance(g, MCZ)]

    def per_qubit_ops(self) -> list[list[int]]:
        """Gate indices touching each qubit, in circuit order."""
        ops: list[list[int]] = [[] for _ in range(self.n_qubits)]
        for i, gate in enumerate(self.gates):
            for q in gate.qubits:
                ops[q].append(i)
        return ops


# ---------------------------------------------------------------- JSON I/O


def gate_to_dict(gate: Gate) -> dict:
    if isinstance(gate, SingleQubit):
        return {"kind": "R", "qubit": gate.qubit, "theta": gate.theta, "phi": gate.phi}
    if isinstance(gate, VirtualZ):
        return {"kind": "RZ", "qubit": gate.qubit, "angle": gate.angle}
    if isinstance(gate, (H, X)):
        return {"kind": type(gate).__name__, "qubit": gate.qubit}
    if isinstance(gate, (MCZ, CCZ, CNOT, SWAP)):
        return {"kind": type(gate).__name__, "qubits": list(gate.qubits)}
    raise TypeError(f"not a gate: {gate!r}")


def gate_from_dict(d: dict) -> Gate:
    kind = d.get("kind")
    try:
        if kind == "R":
            return SingleQubit(int(d["qubit"]), float(d["theta"]), float(d["phi"]))
        if kind == "RZ":
            return VirtualZ(int(d["qubit"]), float(d["angle"]))
        if kind == "H":
            return H(int(d["qubit"]))
        if kind == "X":
            return X(int(d["qubit"]))
        if kind == "MCZ":
            return MCZ(tuple(int(q) for q in d["qubits"]))
        if kind == "CCZ":
            return CCZ(tuple(int(q) for q in d["qubits"]))
        if kind in ("CNOT", "SWAP"):
            a, b = (int(q) for q in d["qubits"])
            return CNOT(a, b) if kind == "CNOT" else SWAP(a, b)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, CircuitStructureError):
            raise
        raise CircuitStructureError(f"malformed {kind} gate: {d!r}") from exc
    raise CircuitStructureError(f"unknown gate kind {kind!r}")


def circuit_to_dict(circuit: Circuit) -> dict:
    return {
        "n_qubits": circuit.n_qubits,
        "gates": [gate_to_dict(g) for g in circuit.gates],
        "metadata": circuit.metadata,
    }


def circuit_from_dict(d: dict) -> Circuit:
    if not isinstance(d, dict) or "n_qubits" not in d or "gates" not in d:
        raise CircuitStructureError("circuit document needs 'n_qubits' and 'gates'")
    return Circuit(int(d["n_qubits"]), tuple(gate_from_dict(g) for g in d["gates"]), dict(d.get("metadata") or {}))


def dumps(circuit: Circuit) -> str:
    return json.dumps(circuit_to_dict(circuit), indent=2)


def loads(text: str) -> Circuit:
    return circuit_from_dict(json.loads(text))


# ---------------------------------------------------------------- matrices


def rotation_matrix(theta: float, phi: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array(
        [[c, -1j * cmath.exp(-1j * phi) * s], [-1j * cmath.exp(1j * phi) * s, c]],
        dtype=complex,
    )


def rz_matrix(angle: float) -> np.ndarray:
    return np.diag([cmath.exp(-0.5j * angle), cmath.exp(0.5j * angle)])


_HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
_PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)


def one_qubit_matrix(gate: Gate) -> np.ndarray:
    if isinstance(gate, SingleQubit):
        return rotation_matrix(gate.theta, gate.phi)
    if isinstance(gate, VirtualZ):
        return rz_matrix(gate.angle)
    if isinstance(gate, H):
        return _HADAMARD
    if isinstance(gate, X):
        return _PAULI_X
    raise TypeError(f"{type(gate).__name__} is not a one-qubit gate")


def phase_distance(u: np.ndarray, v: np.ndarray) -> float:
    """Max elementwise distance between u and v after removing the best global phase."""
    overlap = np.vdot(v, u)
    phase = overlap / abs(overlap) if abs(overlap) > 1e-15 else 1.0
    return float(np.max(np.abs(u - phase * v)))


def decompose_one_qubit(u: np.ndarray) -> tuple[float, float, float]:
    """Return (theta, phi, lam) with u ~ rz(lam) @ rotation(theta, phi) up to global phase.

    theta is in [0, pi]; phi and lam are reduced to [0, 2pi).
    """
    v = u / np.sqrt(np.linalg.det(u))
    alpha, beta = v[0, 0], v[1, 0]
    theta = 2 * math.atan2(abs(beta), abs(alpha))
    lam = -2 * cmath.phase(alpha) if abs(alpha) > 1e-12 else 0.0
    if abs(beta) > 1e-12:
        phi = cmath.phase(beta) + math.pi / 2 - lam / 2
    else:
        phi = 0.0
    return theta, phi % TWO_PI, lam % TWO_PI


def _apply_1q(state: np.ndarray, mat: np.ndarray, q: int, n: int) -> np.ndarray:
    # qubit 0 is the most significant bit
    psi = state.reshape((2,) * n + (-1,))
    psi = np.moveaxis(np.tensordot(mat, psi, axes=([1], [q])), 0, q)
    return psi.reshape(state.shape)


def _diag_phase_mask(qubits, n: int) -> np.ndarray:
    idx = np.arange(2**n)
    mask = np.ones(2**n, dtype=bool)
    for q in qubits:
        mask &= ((idx >> (n - 1 - q)) & 1).astype(bool)
    return mask


def apply_gate(state: np.ndarray, gate: Gate, n: int) -> np.ndarray:
    """Apply a gate to a (2**n, k) array of column states."""
    if is_one_qubit(gate):
        return _apply_1q(state, one_qubit_matrix(gate), gate.qubit, n)
    if isinstance(gate, (MCZ, CCZ)):
        out = state.copy()
        out[_diag_phase_mask(gate.qubits, n)] *= -1
        return out
    if isinstance(gate, CNOT):
        out = _apply_1q(state, _HADAMARD, gate.target, n)
        out[_diag_phase_mask(gate.qubits, n)] *= -1
        return _apply_1q(out, _HADAMARD, gate.target, n)
    if isinstance(gate, SWAP):
        a, b = gate.a, gate.b
        psi = state.reshape((2,) * n + (-1,))
        return np.swapaxes(psi, a, b).reshape(state.shape).copy()
    raise TypeError(f"unsupported gate {gate!r}")


def circuit_unitary(circuit: Circuit) -> np.ndarray:
    """Dense 2^n x 2^n unitary of the circuit (qubit 0 most significant)."""
    n = circuit.n_qubits
    if n > MAX_UNITARY_QUBITS:
        raise ValueError(f"circuit_unitary supports at most {MAX_UNITARY_QUBITS} qubits, got {n}")
    u = np.eye(2**n, dtype=complex)
    for gate in circuit.gates:
        u = apply_gate(u, gate, n)
    return u


def circuit_state(circuit: Circuit) -> np.ndarray:
    """Final state vector starting from |0...0>."""
    n = circuit.n_qubits
    if n > MAX_UNITARY_QUBITS:
        raise ValueError(f"circuit_state supports at most {MAX_UNITARY_QUBITS} qubits, got {n}")
    psi = np.zeros((2**n, 1), dtype=complex)
    psi[0, 0] = 1
    for gate in circuit.gates:
        psi = apply_gate(psi, gate, n)
    return psi[:, 0]


# ---------------------------------------------------------------- validation


@dataclass(frozen=True)
class Violation:
    criterion: int
    message: str
    gate: int | None = None
    qubit: int | None = None


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()
    notes: tuple[str, ...] = ()

    def __bool__(self) -> bool:
        return bool(self.violations)

    @property
    def ok(self) -> bool:
        return not self.violations

    def criteria(self) -> set[int]:
        return {v.criterion for v in self.violations}

    def summary(self) -> str:
        if not self.violations:
            return "ok"
        return "; ".join(f"[{v.criterion}] {v.message}" for v in self.violations)

    def to_dict(self) -> dict:
        return {
            "violations": [
                {"criterion": v.criterion, "gate": v.gate, "qubit": v.qubit, "message": v.message}
                for v in self.violations
            ],
            "notes": list(self.notes),
        }


def validate_practical_form(circuit: Circuit, graph=None, sites=None) -> ValidationReport:
    """Check the five practical-form criteria.

    ``graph`` is an optional connectivity graph; ``sites`` maps circuit qubit i
    to a graph site (identity if omitted). Without a graph the connectivity
    criterion is skipped and a note is added.
    """
    n = circuit.n_qubits
    for i, gate in enumerate(circuit.gates):
        for q in gate.qubits:
            if not 0 <= q < n:
                raise CircuitStructureError(f"gate {i} uses qubit {q} outside 0..{n - 1}")

    violations: list[Violation] = []
    notes: list[str] = []
    for i, gate in enumerate(circuit.gates):
        if not isinstance(gate, (SingleQubit, MCZ)):
            violations.append(Violation(1, f"gate {i} is a non-native {type(gate).__name__}", gate=i))

    if graph is None:
        notes.append("connectivity (criterion 2) not checked: no graph supplied")
    else:
        site_of = list(sites) if sites is not None else list(range(n))
        for i, gate in enumerate(circuit.gates):
            if len(gate.qubits) > 1 and not graph.is_mutually_connected([site_of[q] for q in gate.qubits]):
                violations.append(Violation(2, f"gate {i} acts on non-interacting sites", gate=i))

    last_was_1q = [False] * n
    seen = [False] * n
    rotated = [False] * n
    in_mcz = [False] * n
    for i, gate in enumerate(circuit.gates):
        if is_one_qubit(gate):
            q = gate.qubit
            if last_was_1q[q]:
                violations.append(Violation(3, f"gate {i} follows another single-qubit gate on qubit {q}", gate=i, qubit=q))
            if isinstance(gate, SingleQubit) and _angle_is_zero(gate.theta):
                violations.append(Violation(4, f"gate {i} is a zero-angle pulse", gate=i, qubit=q))
            last_was_1q[q] = True
            seen[q] = True
            rotated[q] |= is_nondiagonal(gate)
        else:
            for q in gate.qubits:
                if not seen[q]:
                    violations.append(Violation(4, f"first gate on qubit {q} is multi-qubit gate {i}", gate=i, qubit=q))
                elif isinstance(gate, (MCZ, CCZ)) and not rotated[q]:
                    violations.append(Violation(4, f"gate {i} is redundant: qubit {q} is still in |0>", gate=i, qubit=q))
                last_was_1q[q] = False
                seen[q] = True
                if isinstance(gate, (MCZ, CCZ)):
                    in_mcz[q] = True
                else:
                    rotated[q] = True
    for q in range(n):
        if not in_mcz[q]:
            violations.append(Violation(5, f"qubit {q} is not involved in any multi-qubit gate", qubit=q))
    return ValidationReport(tuple(violations), tuple(notes))


# Criteria the schedulers actually rely on. Classical-only qubits (criterion 5)
# are tolerated so that illustrative circuits with spectator qubits still schedule.
SCHEDULABLE_CRITERIA = frozenset({1, 3, 4})


def require_schedulable(circuit: Circuit) -> ValidationReport:
    report = validate_practical_form(circuit)
    blocking = tuple(v for v in report.violations if v.criterion in SCHEDULABLE_CRITERIA)
    if blocking:
        raise NotPracticalFormError(ValidationReport(blocking, report.notes))
    return report


# ---------------------------------------------------------------- passes


def _is_identity(u: np.ndarray) -> bool:
    return phase_distance(u, np.eye(2)) < IDENTITY_TOL


def merge_adjacent_1q(circuit: Circuit) -> Circuit:
    """Fuse runs of SingleQubit/VirtualZ gates on the same qubit.

    A run becomes one R(theta, phi) followed by one VirtualZ; identities vanish.
    Convenience gates (H, X, ...) end a run without being merged.
    """
    n = circuit.n_qubits
    out: list = []
    pending: dict[int, list[Gate]] = {}

    def flush(q: int):
        run = pending.pop(q, None)
        if not run:
            return
        if len(run) == 1:
            gate = run[0]
            if not _is_identity(one_qubit_matrix(gate)):
                out.append(gate)
            return
        u = np.eye(2, dtype=complex)
        for g in run:
            u = one_qubit_matrix(g) @ u
        if _is_identity(u):
            return
        theta, phi, lam = decompose_one_qubit(u)
        if not _angle_is_zero(theta):
            out.append(SingleQubit(q, theta, phi))
        if phase_distance(rz_matrix(lam), np.eye(2)) >= IDENTITY_TOL:
            out.append(VirtualZ(q, lam))

    for gate in circuit.gates:
        if isinstance(gate, (SingleQubit, VirtualZ)):
            pending.setdefault(gate.qubit, []).append(gate)
            continue
        for q in gate.qubits:
            flush(q)
        out.append(gate)
    for q in range(n):
        flush(q)
    return circuit.replace(out)


def eliminate_virtual_z(circuit: Circuit) -> Circuit:
    """Push frame changes to the right and fold them into later pulse phases."""
    frame = [0.0] * circuit.n_qubits
    out: list = []
    for gate in circuit.gates:
        if isinstance(gate, VirtualZ):
            frame[gate.qubit] += gate.angle
        elif isinstance(gate, SingleQubit):
            alpha = frame[gate.qubit]
            out.append(gate if alpha == 0 else SingleQubit(gate.qubit, gate.theta, (gate.phi - alpha) % TWO_PI))
        elif isinstance(gate, (MCZ, CCZ)):
            out.append(gate)
        else:
            # non-diagonal convenience gates do not commute with Z; materialize the frame first
            for q in gate.qubits:
                if frame[q] % TWO_PI:
                    out.append(VirtualZ(q, frame[q] % TWO_PI))
                frame[q] = 0.0
            out.append(gate)
    return circuit.replace(out)


def remove_redundant_mcz(circuit: Circuit) -> Circuit:
    """Drop every MCZ acting on a qubit that is certainly still in |0>."""
    gates = list(circuit.gates)
    while True:
        rotated = [False] * circuit.n_qubits
        kept = []
        for gate in gates:
            if isinstance(gate, (MCZ, CCZ)) and not all(rotated[q] for q in gate.qubits):
                continue
            if is_nondiagonal(gate):
                for q in gate.qubits:
                    rotated[q] = True
            kept.append(gate)
        if len(kept) == len(gates):
            return circuit.replace(kept)
        gates = kept


def strip_classical_qubits(circuit: Circuit) -> tuple[Circuit, list[int]]:
    """Remove qubits that take part in no multi-qubit gate and reindex the rest."""
    multi = set()
    for gate in circuit.gates:
        if len(gate.qubits) > 1:
            multi.update(gate.qubits)
    removed = [q for q in range(circuit.n_qubits) if q not in multi]
    if not removed:
        return circuit, []
    new_index = {q: i for i, q in enumerate(sorted(multi))}
    kept, dropped = [], []
    for gate in circuit.gates:
        if gate.qubits[0] in new_index:
            kept.append(_relabel(gate, new_index))
        else:
            dropped.append(gate_to_dict(gate))
    meta_removed = list(circuit.metadata.get("removed_qubits", []))
    meta_removed.append({"qubits": removed, "gates": dropped})
    kept_labels = circuit.metadata.get("qubit_labels")
    labels = [kept_labels[q] if kept_labels else q for q in sorted(multi)]
    return circuit.replace(kept, n_qubits=len(multi), removed_qubits=meta_removed, qubit_labels=labels), removed


def _relabel(gate: Gate, mapping) -> Gate:
    if isinstance(gate, SingleQubit):
        return SingleQubit(mapping[gate.qubit], gate.theta, gate.phi)
    if isinstance(gate, VirtualZ):
        return VirtualZ(mapping[gate.qubit], gate.angle)
    if isinstance(gate, (H, X)):
        return type(gate)(mapping[gate.qubit])
    if isinstance(gate, (MCZ, CCZ)):
        return type(gate)(tuple(mapping[q] for q in gate.qubits))
    if isinstance(gate, CNOT):
        return CNOT(mapping[gate.control], mapping[gate.target])
    if isinstance(gate, SWAP):
        return SWAP(mapping[gate.a], mapping[gate.b])
    raise TypeError(f"not a gate: {gate!r}")


def relabel(circuit: Circuit, mapping, n_qubits: int | None = None) -> Circuit:
    return circuit.replace([_relabel(g, mapping) for g in circuit.gates], n_qubits=n_qubits)


def optimize(circuit: Circuit, max_rounds: int = 16) -> Circuit:
    """Merge, fold frames, drop redundant MCZs and classical qubits until nothing changes."""
    current = circuit
    for _ in range(max_rounds):
        nxt = eliminate_virtual_z(merge_adjacent_1q(current))
        nxt = remove_redundant_mcz(nxt)
        nxt, _ = strip_classical_qubits(nxt)
        nxt = eliminate_virtual_z(merge_adjacent_1q(nxt))
        if nxt.n_qubits == current.n_qubits and nxt.gates == current.gates:
            return nxt
        current = nxt
    return current


# ---------------------------------------------------------------- layering


@dataclass(frozen=True)
class SingleQubitLayer:
    gates: dict  # qubit -> gate index


@dataclass(frozen=True)
class MultiQubitLayer:
    gates: tuple[int, ...]  # gate indices, sorted by lowest qubit


@dataclass(frozen=True)
class LayeredCircuit:
    circuit: Circuit
    layers: tuple

    @property
    def n_layers(self) -> int:
        """Number of multi-qubit layers (the benchmark depth)."""
        return sum(isinstance(layer, MultiQubitLayer) for layer in self.layers)

    def multi_layers(self) -> list[MultiQubitLayer]:
        return [layer for layer in self.layers if isinstance(layer, MultiQubitLayer)]

    def gate(self, index: int) -> Gate:
        return self.circuit.gates[index]

    def flatten(self) -> Circuit:
        order: list[int] = []
        for layer in self.layers:
            if isinstance(layer, SingleQubitLayer):
                order.extend(layer.gates[q] for q in sorted(layer.gates))
            else:
                order.extend(layer.gates)
        return self.circuit.replace([self.circuit.gates[i] for i in order])


def layerize(circuit: Circuit) -> LayeredCircuit:
    """Pack a practical-form circuit into alternating single/multi-qubit layers."""
    require_schedulable(circuit)
    last_layer = [-1] * circuit.n_qubits
    slots: dict[int, list[int]] = {}
    for i, gate in enumerate(circuit.gates):
        if isinstance(gate, SingleQubit):
            # layer 0 if untouched, otherwise the single layer after its last MCZ
            layer = last_layer[gate.qubit] + 1
        else:
            deepest = max(last_layer[q] for q in gate.qubits)
            layer = deepest + 1 if deepest % 2 == 0 else deepest + 2
        for q in gate.qubits:
            last_layer[q] = layer
        slots.setdefault(layer, []).append(i)

    if not slots:
        return LayeredCircuit(circuit, ())
    layers = []
    for k in range(max(slots) + 1):
        members = slots.get(k, [])
        if k % 2 == 0:
            layers.append(SingleQubitLayer({circuit.gates[i].qubit: i for i in members}))
        else:
            layers.append(MultiQubitLayer(tuple(sorted(members, key=lambda i: min(circuit.gates[i].qubits)))))
    return LayeredCircuit(circuit, tuple(layers))
