
import numpy as np
import pytest

from atomsched.bench import GenConfig, generate_circuit
from atomsched.circuit import (
    CCZ,
    CNOT,
    MCZ,
    SWAP,
    Circuit,
    H,
    circuit_state,
    circuit_unitary,
    layerize,
    phase_distance,
    validate_practical_form,
)
from atomsched.device import ConnectivityGraph, triangular_lattice
from atomsched.transpiler import (
    CapacityError,
    RoutingError,
    Placement,
    decompose_nonnative,
    place_initial,
    route,
    transpile,
)

from conftest import CZ, R


def embed(state, n_sites, sites):
    """Place an n-qubit state on ``n_sites`` qubits, logical qubit q at sites[q], rest |0>."""
    n = len(sites)
    psi = state.reshape((2,) * n) if n else state.reshape(())
    for _ in range(n_sites - n):
        psi = np.multiply.outer(psi, np.array([1, 0]))
    rest = [s for s in range(n_sites) if s not in sites]
    order = list(sites) + rest
    return np.moveaxis(psi, range(n_sites), order).reshape(-1)


def test_single_qubit_placed_at_site_zero():
    assert place_initial(Circuit(1, (R(0),)), triangular_lattice(2, 2)).logical_to_site == (0,)


def test_capacity_error():
    with pytest.raises(CapacityError):
        place_initial(Circuit(5, ()), triangular_lattice(2, 2))


def test_placement_is_injective():
    with pytest.raises(ValueError):
        Placement((0, 0))


def test_clique_needs_no_swaps():
    gates = [R(q) for q in range(4)] + [CZ(a, b) for a in range(4) for b in range(a + 1, 4)]
    c = Circuit(4, tuple(gates))
    g = triangular_lattice(2, 2)
    routed = route(c, g, place_initial(c, g))
    assert routed.metadata["swaps_added"] == 0


def test_placement_deterministic():
    c = generate_circuit(GenConfig(6, 8, 11))
    g = triangular_lattice(3, 3)
    assert place_initial(c, g) == place_initial(c, g)


def test_distance_two_pair_needs_one_swap():
    # a path of four sites on a line: distance 2 between sites 0 and 2
    g = ConnectivityGraph.from_points([(0, 0), (1, 0), (2, 0), (3, 0)], radius=1.0)
    c = Circuit(2, (R(0), R(1), CZ(0, 1)))
    routed = route(c, g, Placement((0, 2)))
    assert routed.metadata["swaps_added"] == 1
    mcz = [x for x in routed.gates if isinstance(x, MCZ)][0]
    assert g.is_mutually_connected(mcz.qubits)


@pytest.mark.parametrize("seed", range(6))
@pytest.mark.parametrize("shape,p_ccz", [((1, 6), 0.0), ((2, 5), 0.5)])
def test_routed_state_matches_original(seed, shape, p_ccz):
    c = generate_circuit(GenConfig(5, 6, seed, p_ccz))
    g = triangular_lattice(*shape)
    routed = route(c, g, place_initial(c, g))
    expected = embed(circuit_state(c), len(g), routed.metadata["final_placement"])
    got = circuit_state(routed)
    assert phase_distance(got.reshape(-1, 1), expected.reshape(-1, 1)) < 1e-9


def test_cnot_lowering():
    out = decompose_nonnative(Circuit(2, (CNOT(0, 1),)))
    assert all(type(g).__name__ in ("SingleQubit", "VirtualZ", "MCZ") for g in out.gates)
    assert phase_distance(circuit_unitary(out), circuit_unitary(Circuit(2, (CNOT(0, 1),)))) < 1e-9


def test_swap_lowering():
    out = decompose_nonnative(Circuit(2, (SWAP(0, 1),)))
    assert sum(isinstance(g, MCZ) for g in out.gates) == 3
    assert phase_distance(circuit_unitary(out), circuit_unitary(Circuit(2, (SWAP(0, 1),)))) < 1e-9


def test_native_gates_untouched():
    c = Circuit(3, (MCZ((0, 1, 2)),))
    assert decompose_nonnative(c) == c
    assert decompose_nonnative(Circuit(3, (CCZ((0, 1, 2)),))).gates == (MCZ((0, 1, 2)),)
    out = decompose_nonnative(Circuit(1, (H(0),)))
    assert phase_distance(circuit_unitary(out), circuit_unitary(Circuit(1, (H(0),)))) < 1e-9


def test_practical_circuit_on_clique_is_unchanged():
    c = Circuit(3, (R(0), R(1), R(2), MCZ((0, 1, 2)), R(0, 1.0, 0.2)))
    out, stats = transpile(c, triangular_lattice(2, 2))
    assert stats.swaps_added == 0
    assert out.gates == c.gates


def test_random_six_qubit_output_is_practical():
    c = generate_circuit(GenConfig(6, 10, 3))
    g = triangular_lattice(3, 3)
    out, stats = transpile(c, g)
    report = validate_practical_form(out, g, out.metadata["qubit_labels"])
    assert report.ok, report.summary()
    assert stats.qubits == out.n_qubits


@pytest.mark.parametrize("seed", range(5))
def test_two_qubit_layers_equal_cz_count(seed):
    c = generate_circuit(GenConfig(2, 7, seed))
    out, stats = transpile(c, triangular_lattice(2, 2))
    assert stats.layers == sum(isinstance(g, MCZ) for g in out.gates)
    assert stats.layers == layerize(out).n_layers


@pytest.mark.parametrize("seed", range(4))
def test_transpile_preserves_populations(seed):
    c = generate_circuit(GenConfig(4, 5, 100 + seed, 0.0))
    out, stats = transpile(c, triangular_lattice(1, 5))
    labels = out.metadata["qubit_labels"]
    final = out.metadata["final_placement"]
    # output qubit i sits on site labels[i]; original qubit q ends on site final[q]
    sites_out = [labels.index(final[q]) for q in range(c.n_qubits)]
    expected = embed(circuit_state(c), out.n_qubits, sites_out)
    got = circuit_state(out).reshape(-1)
    # trailing frame changes are dropped, which only moves phases
    assert np.allclose(np.abs(got), np.abs(expected), atol=1e-9)


def test_routing_swaps_on_a_line():
    c = generate_circuit(GenConfig(5, 6, 0, 0.0))
    routed = route(c, triangular_lattice(1, 6), place_initial(c, triangular_lattice(1, 6)))
    assert routed.metadata["swaps_added"] > 0


def test_ccz_cannot_be_routed_on_a_line():
    c = Circuit(3, (R(0), R(1), R(2), MCZ((0, 1, 2))))
    with pytest.raises(RoutingError):
        transpile(c, triangular_lattice(1, 4))
