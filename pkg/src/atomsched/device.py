"""Triangular-lattice device: site geometry, interaction graph and channel timing."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction

NNN_DISTANCE = math.sqrt(3)
_EPS = 1e-9


@dataclass(frozen=True)
class ConnectivityGraph:
    sites: tuple[tuple[float, float], ...]
    adjacency: tuple[frozenset[int], ...]

    def __len__(self) -> int:
        return len(self.sites)

    @property
    def edges(self) -> list[tuple[int, int]]:
        return [(i, j) for i, nbrs in enumerate(self.adjacency) for j in sorted(nbrs) if i < j]

    def degree(self, site: int) -> int:
        return len(self.adjacency[site])

    def distance(self, a: int, b: int) -> float:
        (xa, ya), (xb, yb) = self.sites[a], self.sites[b]
        return math.hypot(xa - xb, ya - yb)

    def is_mutually_connected(self, sites) -> bool:
        sites = list(sites)
        for a, b in itertools.combinations(sites, 2):
            if b not in self.adjacency[a]:
                return False
        return True

    def to_dict(self) -> dict:
        return {"sites": [list(s) for s in self.sites], "edges": [list(e) for e in self.edges]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_points(cls, points, radius: float = NNN_DISTANCE) -> "ConnectivityGraph":
        points = tuple((float(x), float(y)) for x, y in points)
        adj = [set() for _ in points]
        for i, j in itertools.combinations(range(len(points)), 2):
            if math.dist(points[i], points[j]) <= radius + _EPS:
                adj[i].add(j)
                adj[j].add(i)
        return cls(points, tuple(frozenset(a) for a in adj))


def triangular_lattice(rows: int, cols: int) -> ConnectivityGraph:
    """rows x cols triangular lattice; sites within sqrt(3) lattice units interact.

    Row r is shifted by r/2 and sits at height r*sqrt(3)/2, so interior sites
    see their 6 nearest and 6 next-nearest neighbours.
    """
    if rows < 1 or cols < 1:
        raise ValueError(f"lattice dimensions must be positive, got {rows}x{cols}")
    h = math.sqrt(3) / 2
    points = [(c + r / 2, r * h) for r in range(rows) for c in range(cols)]
    return ConnectivityGraph.from_points(points)


def auto_lattice_shape(n_qubits: int) -> tuple[int, int]:
    """Smallest near-square rows x cols with rows*cols >= n_qubits."""
    n = max(n_qubits, 1)
    rows = math.isqrt(n - 1) + 1
    cols = -(-n // rows)
    return rows, cols


def lattice_for(n_qubits: int, shape=None) -> ConnectivityGraph:
    rows, cols = shape if shape not in (None, "auto") else auto_lattice_shape(n_qubits)
    return triangular_lattice(rows, cols)


@dataclass(frozen=True)
class TimingParams:
    """Channel timing in ticks: pi-pulse / Raman pulse length and retarget time."""

    delta_pi: Fraction = Fraction(1)
    delta_t: Fraction = Fraction(1)

    def __post_init__(self):
        object.__setattr__(self, "delta_pi", Fraction(self.delta_pi))
        object.__setattr__(self, "delta_t", Fraction(self.delta_t))
        if self.delta_pi <= 0:
            raise ValueError("delta_pi must be positive")
        if self.delta_t < 0:
            raise ValueError("delta_t must be non-negative")

    @classmethod
    def parse(cls, text: str) -> "TimingParams":
        """Parse 'dpi,dt' with integer, decimal or p/q entries."""
        try:
            dpi, dt = (Fraction(part.strip()) for part in text.split(","))
        except ValueError as exc:
            raise ValueError(f"timing must look like 'delta_pi,delta_t', got {text!r}") from exc
        return cls(dpi, dt)

    def to_dict(self) -> dict:
        return {"delta_pi": fraction_str(self.delta_pi), "delta_t": fraction_str(self.delta_t)}

    @classmethod
    def from_dict(cls, d: dict) -> "TimingParams":
        return cls(Fraction(d["delta_pi"]), Fraction(d["delta_t"]))


def fraction_str(x: Fraction) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"
