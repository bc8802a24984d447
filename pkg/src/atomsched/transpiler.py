"""Placement on the lattice, SWAP routing and lowering to the native gate set."""

from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass

from .circuit import (
    CCZ,
    CNOT,
    MCZ,
    SWAP,
    Circuit,
    H,
    SingleQubit,
    VirtualZ,
    X,
    _relabel,
    layerize,
    optimize,
)
from .device import ConnectivityGraph


class CapacityError(ValueError):
    pass


class RoutingError(RuntimeError):
    pass


@dataclass(frozen=True)
class Placement:
    logical_to_site: tuple[int, ...]

    def __post_init__(self):
        if len(set(self.logical_to_site)) != len(self.logical_to_site):
            raise ValueError("placement must be injective")


@dataclass(frozen=True)
class TranspileStats:
    swaps_added: int
    layers: int
    qubits: int

    def to_dict(self) -> dict:
        return {"swaps_added": self.swaps_added, "layers": self.layers, "qubits": self.qubits}


def _interaction_weights(circuit: Circuit) -> tuple[list[int], dict[tuple[int, int], int]]:
    order: list[int] = []
    weights: dict[tuple[int, int], int] = {}
    for gate in circuit.gates:
        if len(gate.qubits) < 2:
            continue
        for q in gate.qubits:
            if q not in order:
                order.append(q)
        for a, b in itertools.combinations(sorted(gate.qubits), 2):
            weights[a, b] = weights.get((a, b), 0) + 1
    order += [q for q in range(circuit.n_qubits) if q not in order]
    return order, weights


def place_initial(circuit: Circuit, graph: ConnectivityGraph) -> Placement:
    """Greedy placement: qubits in order of first interaction, each on the free
    site closest (summed distance) to its already-placed partners."""
    n = circuit.n_qubits
    if n > len(graph):
        raise CapacityError(f"circuit needs {n} sites, lattice has {len(graph)}")
    order, weights = _interaction_weights(circuit)
    site_of: dict[int, int] = {}
    free = set(range(len(graph)))
    for q in order:
        partners = [
            (site_of[p], w)
            for (a, b), w in weights.items()
            for p in ((b,) if a == q else (a,) if b == q else ())
            if p in site_of
        ]
        has_interactions = any(q in pair for pair in weights)
        if partners:
            key = lambda s: (sum(w * graph.distance(s, t) for t, w in partners), s)
        elif site_of and has_interactions:
            key = lambda s: (sum(graph.distance(s, t) for t in site_of.values()), s)
        elif has_interactions:
            key = lambda s: (-graph.degree(s), s)
        else:
            key = lambda s: s
        site = min(free, key=key)
        site_of[q] = site
        free.remove(site)
    return Placement(tuple(site_of[q] for q in range(n)))


def _pair_cost(graph: ConnectivityGraph, sites) -> float:
    return sum(graph.distance(a, b) for a, b in itertools.combinations(sites, 2))


def _shortest_path(graph: ConnectivityGraph, src: int, dst: int) -> list[int] | None:
    prev = {src: None}
    queue = deque([src])
    while queue:
        s = queue.popleft()
        if s == dst:
            path = []
            while s is not None:
                path.append(s)
                s = prev[s]
            return path[::-1]
        for t in sorted(graph.adjacency[s]):
            if t not in prev:
                prev[t] = s
                queue.append(t)
    return None


def route(circuit: Circuit, graph: ConnectivityGraph, placement: Placement) -> Circuit:
    """Rewrite the circuit onto lattice sites, inserting SWAPs on adjacent sites
    until every multi-qubit gate acts on a mutually connected set.

    The result acts on ``len(graph)`` qubits (one per site); the metadata
    records initial and final placement and the number of inserted SWAPs.
    """
    site_of = list(placement.logical_to_site)
    occupant: dict[int, int] = {s: q for q, s in enumerate(site_of)}
    out = []
    swaps = 0
    limit = 4 * len(graph) ** 2 + 16

    def do_swap(s: int, t: int):
        nonlocal swaps
        a, b = occupant.get(s), occupant.get(t)
        if a is not None:
            site_of[a] = t
        if b is not None:
            site_of[b] = s
        occupant.pop(s, None)
        occupant.pop(t, None)
        if a is not None:
            occupant[t] = a
        if b is not None:
            occupant[s] = b
        out.append(SWAP(min(s, t), max(s, t)))
        swaps += 1

    for gate in circuit.gates:
        qubits = gate.qubits
        if len(qubits) > 1:
            steps = 0
            while not graph.is_mutually_connected([site_of[q] for q in qubits]):
                steps += 1
                if steps > limit:
                    raise RoutingError(f"could not route {gate!r}")
                current = _pair_cost(graph, [site_of[q] for q in qubits])
                best = None
                for q in qubits:
                    s = site_of[q]
                    for t in graph.adjacency[s]:
                        moved = [t if site_of[p] == s else s if site_of[p] == t else site_of[p] for p in qubits]
                        cost = _pair_cost(graph, moved)
                        cand = (cost, min(s, t), max(s, t))
                        if cost < current - 1e-9 and (best is None or cand < best):
                            best = cand
                if best is not None:
                    do_swap(best[1], best[2])
                    continue
                # no single swap lowers the summed distance: walk the farthest pair together
                a, b = max(
                    itertools.combinations(qubits, 2),
                    key=lambda pr: (graph.distance(site_of[pr[0]], site_of[pr[1]]), -pr[0], -pr[1]),
                )
                path = _shortest_path(graph, site_of[a], site_of[b])
                if path is None:
                    raise RoutingError(f"sites of {gate!r} are disconnected in the lattice")
                do_swap(path[0], path[1])
        out.append(_relabel(gate, site_of))

    n_sites = len(graph)
    return Circuit(
        n_sites,
        tuple(out),
        {
            **circuit.metadata,
            "initial_placement": list(placement.logical_to_site),
            "final_placement": list(site_of),
            "swaps_added": swaps,
            "qubit_labels": list(range(n_sites)),
        },
    )


def _hadamard(q: int) -> list:
    # H = R(pi/2, pi/2) . Z(pi) up to global phase (Z applied first)
    return [VirtualZ(q, math.pi), SingleQubit(q, math.pi / 2, math.pi / 2)]


def decompose_nonnative(circuit: Circuit) -> Circuit:
    out: list = []
    for gate in circuit.gates:
        if isinstance(gate, H):
            out += _hadamard(gate.qubit)
        elif isinstance(gate, X):
            out.append(SingleQubit(gate.qubit, math.pi, 0.0))
        elif isinstance(gate, CNOT):
            out += _cnot(gate.control, gate.target)
        elif isinstance(gate, SWAP):
            out += _cnot(gate.a, gate.b) + _cnot(gate.b, gate.a) + _cnot(gate.a, gate.b)
        elif isinstance(gate, CCZ):
            out.append(MCZ(gate.qubits))
        else:
            out.append(gate)
    return circuit.replace(out)


def _cnot(control: int, target: int) -> list:
    return _hadamard(target) + [MCZ((control, target))] + _hadamard(target)


def transpile(circuit: Circuit, graph: ConnectivityGraph) -> tuple[Circuit, TranspileStats]:
    """place -> route -> lower -> optimize; returns the practical-form circuit and stats.

    Output qubit i lives on lattice site ``metadata["qubit_labels"][i]``.
    """
    placement = place_initial(circuit, graph)
    routed = route(circuit, graph, placement)
    native = decompose_nonnative(routed)
    final = optimize(native)
    layered = layerize(final)
    stats = TranspileStats(routed.metadata["swaps_added"], layered.n_layers, final.n_qubits)
    return final, stats
