import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from atomsched.circuit import (
    CCZ,
    CNOT,
    MCZ,
    Circuit,
    CircuitStructureError,
    MultiQubitLayer,
    NotPracticalFormError,
    SingleQubit,
    SingleQubitLayer,
    VirtualZ,
    circuit_unitary,
    decompose_one_qubit,
    dumps,
    eliminate_virtual_z,
    layerize,
    loads,
    merge_adjacent_1q,
    one_qubit_matrix,
    optimize,
    phase_distance,
    remove_redundant_mcz,
    require_schedulable,
    rotation_matrix,
    rz_matrix,
    strip_classical_qubits,
    validate_practical_form,
)

from conftest import CZ, R


def same_up_to_phase(u, v, tol=1e-9):
    return phase_distance(u, v) < tol


# ---------------------------------------------------------------- gates and matrices


def test_mcz_rejects_duplicates_and_singletons():
    with pytest.raises((ValueError, CircuitStructureError)):
        MCZ((0, 0))
    with pytest.raises((ValueError, CircuitStructureError)):
        MCZ((1,))


def test_circuit_rejects_out_of_range_qubit():
    with pytest.raises((ValueError, CircuitStructureError)):
        Circuit(2, (CZ(0, 2),))


def test_cz_unitary_is_diag():
    u = circuit_unitary(Circuit(2, (CZ(0, 1),)))
    assert np.allclose(u, np.diag([1, 1, 1, -1]))


def test_ccz_flips_only_all_ones():
    u = circuit_unitary(Circuit(3, (MCZ((0, 1, 2)),)))
    d = np.ones(8)
    d[7] = -1
    assert np.allclose(u, np.diag(d))


def test_empty_circuit_unitary_is_identity():
    assert np.allclose(circuit_unitary(Circuit(2, ())), np.eye(4))
    assert circuit_unitary(Circuit(0, ())).shape == (1, 1)


def test_pi_rotation_matrix_is_unitary():
    u = circuit_unitary(Circuit(1, (R(0, math.pi, 0.0),)))
    assert np.allclose(u, rotation_matrix(math.pi, 0.0))
    assert np.allclose(u.conj().T @ u, np.eye(2))
    # resonant pi pulse: |0> -> -i|1>
    assert np.allclose(u[:, 0], [0, -1j])


def test_virtual_z_matrix():
    a = 0.7
    assert np.allclose(one_qubit_matrix(VirtualZ(0, a)), rz_matrix(a))
    assert np.allclose(rz_matrix(a), np.diag([np.exp(-0.5j * a), np.exp(0.5j * a)]))


@settings(max_examples=60, deadline=None)
@given(st.floats(-3, 3), st.floats(0, 6.28), st.floats(-3, 3), st.floats(0, 6.28))
def test_decompose_reproduces_product(t1, p1, t2, p2):
    u = rotation_matrix(t2, p2) @ rotation_matrix(t1, p1)
    theta, phi, lam = decompose_one_qubit(u)
    assert same_up_to_phase(rz_matrix(lam) @ rotation_matrix(theta, phi), u, 1e-7)


def test_json_roundtrip():
    c = Circuit(3, (R(0), R(1, 1.0, 2.0), MCZ((0, 1)), VirtualZ(2, 0.3), CNOT(0, 2), CCZ((0, 1, 2))), {"k": 1})
    assert loads(dumps(c)) == c


# ---------------------------------------------------------------- validation


def test_validate_practical_form_accepts_showcase(showcase):
    report = validate_practical_form(showcase)
    # q3 never meets an MCZ in the showcase
    assert report.criteria() == {5}


def test_validate_empty():
    assert validate_practical_form(Circuit(0, ())).ok


def test_classical_qubit_flags_criterion_5():
    c = Circuit(3, (R(0), R(1), R(2), CZ(0, 1)))
    report = validate_practical_form(c)
    assert [(v.criterion, v.qubit) for v in report.violations] == [(5, 2)]


def test_consecutive_and_first_gate_violations():
    c = Circuit(2, (R(0), R(0), CZ(0, 1), R(1)))
    report = validate_practical_form(c)
    found = {(v.criterion, v.gate, v.qubit) for v in report.violations}
    assert (3, 1, 0) in found
    assert any(crit == 4 and q == 1 for crit, _, q in found)


def test_non_native_gate_is_criterion_1():
    report = validate_practical_form(Circuit(2, (R(0), R(1), CNOT(0, 1))))
    assert 1 in report.criteria()


def test_connectivity_checked_only_with_graph():
    from atomsched.device import triangular_lattice

    c = Circuit(2, (R(0), R(1), CZ(0, 1)))
    assert validate_practical_form(c).notes
    far = triangular_lattice(1, 5)
    assert 2 in validate_practical_form(c, far, sites=[0, 4]).criteria()
    assert validate_practical_form(c, far, sites=[0, 1]).ok


def test_require_schedulable_raises_with_report():
    with pytest.raises(NotPracticalFormError) as exc:
        require_schedulable(Circuit(2, (CZ(0, 1),)))
    assert 4 in exc.value.report.criteria()


# ---------------------------------------------------------------- passes


def test_merge_same_axis():
    out = merge_adjacent_1q(Circuit(1, (R(0, math.pi / 2, 0), R(0, math.pi / 2, 0))))
    assert len(out.gates) == 1
    assert same_up_to_phase(one_qubit_matrix(out.gates[0]), rotation_matrix(math.pi, 0))


def test_merge_inverse_pair_vanishes():
    out = merge_adjacent_1q(Circuit(1, (R(0, 0.8, 1.1), R(0, -0.8, 1.1))))
    assert out.gates == ()


def test_merge_general_pair_matches_matrix_product():
    c = Circuit(1, (R(0, math.pi / 2, 0), R(0, math.pi / 2, math.pi / 2)))
    out = merge_adjacent_1q(c)
    assert 1 <= len(out.gates) <= 2
    assert sum(isinstance(g, SingleQubit) for g in out.gates) == 1
    expected = rotation_matrix(math.pi / 2, math.pi / 2) @ rotation_matrix(math.pi / 2, 0)
    assert same_up_to_phase(circuit_unitary(out), expected)


def test_virtual_z_folds_into_rotation():
    a, theta, phi = 0.9, 1.2, 0.4
    c = Circuit(1, (VirtualZ(0, a), R(0, theta, phi)))
    out = eliminate_virtual_z(c)
    rots = [g for g in out.gates if isinstance(g, SingleQubit)]
    assert len(rots) == 1
    assert math.isclose(rots[0].theta, theta)
    assert math.isclose((rots[0].phi - (phi - a)) % (2 * math.pi), 0, abs_tol=1e-9) or math.isclose(
        (rots[0].phi - (phi - a)) % (2 * math.pi), 2 * math.pi, abs_tol=1e-9
    )
    # the trailing frame change has no observable effect on |0...0>-started runs but the
    # operator must still match the original up to a final diagonal
    assert same_up_to_phase(
        one_qubit_matrix(rots[0]), rz_matrix(-a) @ rotation_matrix(theta, phi) @ rz_matrix(a)
    )


def test_virtual_z_commutes_past_mcz_and_drops():
    out = eliminate_virtual_z(Circuit(2, (R(0), R(1), VirtualZ(0, 0.5), CZ(0, 1))))
    assert not any(isinstance(g, VirtualZ) for g in out.gates)
    assert [type(g) for g in out.gates] == [SingleQubit, SingleQubit, MCZ]


def test_virtual_z_noop():
    c = Circuit(2, (R(0), R(1), CZ(0, 1)))
    assert eliminate_virtual_z(c) == c


def test_redundant_leading_mcz_removed():
    c = Circuit(2, (CZ(0, 1), R(0, 1.0, 0.5), R(1, 1.0, 0.5)))
    assert remove_redundant_mcz(c).gates == (R(0, 1.0, 0.5), R(1, 1.0, 0.5))


def test_needed_mcz_kept():
    c = Circuit(2, (R(0), R(1), CZ(0, 1)))
    assert remove_redundant_mcz(c) == c


def test_mcz_on_unrotated_qubit_removed():
    c = Circuit(2, (R(0), CZ(0, 1), CZ(0, 1)))
    out = remove_redundant_mcz(c)
    assert not any(isinstance(g, MCZ) for g in out.gates)
    psi0 = np.zeros(4)
    psi0[0] = 1
    assert np.allclose(circuit_unitary(out) @ psi0, circuit_unitary(c) @ psi0)


def test_strip_classical_qubits():
    c = Circuit(3, (R(0), R(1), R(2), CZ(0, 1)))
    out, removed = strip_classical_qubits(c)
    assert removed == [2]
    assert out.n_qubits == 2
    all_used = Circuit(2, (R(0), R(1), CZ(0, 1)))
    assert strip_classical_qubits(all_used) == (all_used, [])
    no_mcz = Circuit(2, (R(0), R(1)))
    out, removed = strip_classical_qubits(no_mcz)
    assert removed == [0, 1]
    assert out.n_qubits == 0 and out.gates == ()


gate_strategy = st.one_of(
    st.builds(lambda q, t, p: ("r", q, t, p), st.integers(0, 2), st.floats(-3, 3), st.floats(0, 6.2)),
    st.builds(lambda q, a: ("z", q, a), st.integers(0, 2), st.floats(-3, 3)),
    st.builds(lambda a, b: ("cz", a, b), st.integers(0, 2), st.integers(0, 2)).filter(lambda g: g[1] != g[2]),
)


def _build(spec):
    gates = []
    for g in spec:
        if g[0] == "r":
            gates.append(SingleQubit(g[1], g[2], g[3]))
        elif g[0] == "z":
            gates.append(VirtualZ(g[1], g[2]))
        else:
            gates.append(MCZ((g[1], g[2])))
    return Circuit(3, tuple(gates))


@settings(max_examples=80, deadline=None)
@given(st.lists(gate_strategy, max_size=12))
def test_register_preserving_passes_keep_ground_state_action(spec):
    c = _build(spec)
    out = remove_redundant_mcz(eliminate_virtual_z(merge_adjacent_1q(c)))
    psi0 = np.zeros(8)
    psi0[0] = 1
    before = circuit_unitary(c) @ psi0
    after = circuit_unitary(out) @ psi0
    # trailing frame changes are diagonal, so only populations must agree
    assert np.allclose(np.abs(before), np.abs(after), atol=1e-7)


@settings(max_examples=80, deadline=None)
@given(st.lists(gate_strategy, max_size=12))
def test_optimize_reaches_practical_form(spec):
    out = optimize(_build(spec))
    assert not validate_practical_form(out).criteria() & {1, 3, 4, 5}


# ---------------------------------------------------------------- layering


def test_layerize_showcase(showcase):
    lc = layerize(showcase)
    assert lc.n_layers == 1
    assert len(lc.layers) == 3
    first, multi, last = lc.layers
    assert isinstance(first, SingleQubitLayer) and sorted(first.gates) == [0, 1, 2, 3]
    assert isinstance(multi, MultiQubitLayer) and multi.gates == (4,)
    assert sorted(last.gates) == [0, 1, 2]


def test_layerize_empty():
    assert layerize(Circuit(0, ())).n_layers == 0


def test_layerize_two_cz_chain():
    c = Circuit(2, (R(0), R(1), CZ(0, 1), R(0), CZ(0, 1)))
    lc = layerize(c)
    assert lc.n_layers == 2
    kinds = [type(layer) for layer in lc.layers]
    assert kinds == [SingleQubitLayer, MultiQubitLayer, SingleQubitLayer, MultiQubitLayer]
    assert sorted(lc.layers[2].gates) == [0]
    assert lc.flatten() == c


def test_layer_1q_slot_follows_own_mcz():
    c = Circuit(3, (R(0), R(1), R(2), CZ(0, 1), R(0), CZ(1, 2), R(2)))
    lc = layerize(c)
    for k, layer in enumerate(lc.layers):
        if isinstance(layer, SingleQubitLayer) and k > 0:
            prev = {q for i in lc.layers[k - 1].gates for q in c.gates[i].qubits}
            assert set(layer.gates) <= prev
    assert np.allclose(circuit_unitary(lc.flatten()), circuit_unitary(c))
