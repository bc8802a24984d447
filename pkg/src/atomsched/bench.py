"""Random circuit benchmark: generation, the two-scheduler comparison, aggregation
and CSV / plot-data output.

Random draws use numpy's Philox counter-based generator. Per circuit, in order:

1. for each qubit 0..n-1: theta ~ U[pi/4, pi), phi ~ U[0, 2pi)
2. repeated per MCZ:
   a. kind: one uniform draw u, CCZ if u < p_ccz (skipped when n < 3)
   b. qubits: ``Generator.choice(n, size, replace=False)``
   c. for each chosen qubit, in draw order: theta, phi as in step 1
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .circuit import MCZ, Circuit, SingleQubit, layerize
from .device import TimingParams, auto_lattice_shape, fraction_str, triangular_lattice
from .gate_scheduler import schedule_gate_level
from .pulse_scheduler import schedule_pulse_level
from .sequence import check_gate_level_busy, check_wellformed, duration
from .transpiler import transpile
from .verifier import check_equivalence

THETA_MIN = math.pi / 4
EQUIV_MAX_QUBITS = 6


@dataclass(frozen=True)
class GenConfig:
    n_qubits: int
    min_mcz: int
    seed: int
    p_ccz: float = 0.5

    def __post_init__(self):
        if self.n_qubits < 2:
            raise ValueError(f"n_qubits must be >= 2, got {self.n_qubits}")
        if self.min_mcz < 1:
            raise ValueError(f"min_mcz must be >= 1, got {self.min_mcz}")
        if not 0.0 <= self.p_ccz <= 1.0:
            raise ValueError(f"p_ccz must lie in [0, 1], got {self.p_ccz}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def effective_p_ccz(self) -> float:
        return self.p_ccz if self.n_qubits >= 3 else 0.0


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def _rotation(rng: np.random.Generator, q: int) -> SingleQubit:
    theta = float(rng.uniform(THETA_MIN, math.pi))
    phi = float(rng.uniform(0.0, 2 * math.pi))
    return SingleQubit(q, theta, phi)


def generate_circuit(cfg: GenConfig) -> Circuit:
    rng = _rng(cfg.seed)
    n = cfg.n_qubits
    gates: list = [_rotation(rng, q) for q in range(n)]
    touched: set[int] = set()
    n_mcz = 0
    p = cfg.effective_p_ccz
    while n_mcz < cfg.min_mcz or len(touched) < n:
        size = 3 if n >= 3 and rng.random() < p else 2
        qubits = [int(q) for q in rng.choice(n, size=size, replace=False)]
        gates.append(MCZ(tuple(sorted(qubits))))
        gates += [_rotation(rng, q) for q in qubits]
        touched.update(qubits)
        n_mcz += 1
    return Circuit(n, tuple(gates), {"seed": cfg.seed, "min_mcz": cfg.min_mcz})


def ccz_showcase_circuit() -> Circuit:
    """CCZ on q0..q2 with a rotation before and after on each of its qubits,
    plus one rotation on the spectator q3. Gate order: a, b, c, d, CCZ, e, f, g."""
    r = lambda q, k: SingleQubit(q, math.pi / 2 + 0.1 * k, 0.3 * k)
    gates = [r(0, 1), r(1, 2), r(2, 3), r(3, 4), MCZ((0, 1, 2)), r(0, 5), r(1, 6), r(2, 7)]
    return Circuit(4, tuple(gates), {"name": "ccz_showcase"})


def circuit_seed(base: int, *key: int) -> int:
    """64-bit seed for one circuit, derived from the run seed and its coordinates."""
    ss = np.random.SeedSequence([base, *key])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class BenchmarkRecord:
    qubits: int
    layers: int
    dur_gate: Fraction | None
    dur_pulse: Fraction | None
    gained: Fraction | None
    seed: int
    min_mcz: int
    swaps: int = 0
    equivalent: bool | None = None
    error: str = ""

    @property
    def ok(self) -> bool:
        return not self.error

    def to_row(self) -> dict:
        fmt = lambda x: "" if x is None else fraction_str(x)
        return {
            "qubits": self.qubits,
            "layers": self.layers,
            "dur_gate": fmt(self.dur_gate),
            "dur_pulse": fmt(self.dur_pulse),
            "gained": fmt(self.gained),
            "seed": self.seed,
            "min_mcz": self.min_mcz,
            "swaps": self.swaps,
            "equivalent": "" if self.equivalent is None else str(self.equivalent).lower(),
            "error": self.error,
        }


RECORD_FIELDS = list(BenchmarkRecord.__dataclass_fields__)


@dataclass
class CircuitResult:
    """Everything computed for one benchmark circuit (kept for property checks)."""

    record: BenchmarkRecord
    circuit: Circuit | None = None
    pulse: object = None
    gate: object = None


def graph_for(n_qubits: int, lattice="auto"):
    shape = auto_lattice_shape(n_qubits) if lattice in (None, "auto") else tuple(lattice)
    return triangular_lattice(*shape)


def run_one(cfg: GenConfig, timing: TimingParams, lattice="auto", verify: bool | None = None) -> CircuitResult:
    """generate -> transpile -> both schedulers -> checks; failures land in ``error``."""
    verify = cfg.n_qubits <= EQUIV_MAX_QUBITS if verify is None else verify
    layers = 0
    try:
        raw = generate_circuit(cfg)
        circuit, stats = transpile(raw, graph_for(cfg.n_qubits, lattice))
        layers = layerize(circuit).n_layers
        pulse = schedule_pulse_level(circuit, timing)
        gate = schedule_gate_level(circuit, timing)
        for name, seq in (("pulse", pulse), ("gate", gate)):
            report = check_wellformed(seq, circuit)
            if not report.ok:
                raise RuntimeError(f"{name}-level sequence ill-formed: {report.summary()}")
        busy = check_gate_level_busy(gate, circuit)
        if not busy.ok:
            raise RuntimeError(f"gate-level sequence violates whole-gate occupancy: {busy.summary()}")
        equivalent = None
        if verify:
            equivalent = all(check_equivalence(circuit, seq).equivalent for seq in (pulse, gate))
            if not equivalent:
                raise RuntimeError("sequence not equivalent to circuit")
        dg, dp = duration(gate), duration(pulse)
        rec = BenchmarkRecord(
            cfg.n_qubits, layers, dg, dp, (dg - dp) / timing.delta_pi, cfg.seed, cfg.min_mcz,
            stats.swaps_added, equivalent,
        )
        return CircuitResult(rec, circuit, pulse, gate)
    except Exception as exc:  # recorded per circuit, the run continues
        rec = BenchmarkRecord(cfg.n_qubits, layers, None, None, None, cfg.seed, cfg.min_mcz, error=f"{type(exc).__name__}: {exc}")
        return CircuitResult(rec)


def run_benchmark(configs, timing: TimingParams | None = None, lattice="auto", verify: bool | None = None,
                  keep: bool = False):
    """Run every config; records come back sorted by (qubits, layers, min_mcz, seed).

    With ``keep`` the full CircuitResults are returned instead of bare records.
    """
    timing = timing or TimingParams()
    results = [run_one(cfg, timing, lattice, verify) for cfg in configs]
    results.sort(key=lambda r: (r.record.qubits, r.record.layers, r.record.min_mcz, r.record.seed))
    return results if keep else [r.record for r in results]


def sweep_configs(qubit_counts, min_mcz_counts, per_point: int, seed: int, p_ccz: float = 0.5) -> list[GenConfig]:
    return [
        GenConfig(n, m, circuit_seed(seed, n, m, k), p_ccz)
        for n in qubit_counts
        for m in min_mcz_counts
        for k in range(per_point)
    ]


def collect_by_layers(qubit_counts, layer_counts, per_point: int, seed: int, timing: TimingParams | None = None,
                      lattice="auto", verify: bool | None = None, p_ccz: float = 0.5, max_attempts: int = 200,
                      keep: bool = False):
    """Gather exactly ``per_point`` circuits for every (qubits, layers) point.

    Per point, min_mcz starts at the target layer count and is nudged up or down
    after every miss; attempts are numbered, so the outcome depends only on the
    arguments. Raises RuntimeError when a point cannot be filled within
    ``max_attempts * per_point`` circuits.
    """
    timing = timing or TimingParams()
    results = []
    for n in qubit_counts:
        for target in layer_counts:
            got = []
            m = max(1, target)
            attempt = 0
            while len(got) < per_point:
                if attempt >= max_attempts * per_point:
                    raise RuntimeError(f"could not collect {per_point} circuits with {n} qubits and {target} layers")
                cfg = GenConfig(n, m, circuit_seed(seed, n, target, attempt), p_ccz)
                attempt += 1
                res = run_one(cfg, timing, lattice, verify)
                layers = res.record.layers
                if res.record.ok and layers == target:
                    got.append(res)
                elif layers < target:
                    m += 1
                elif layers > target and m > 1:
                    m -= 1
                if not res.record.ok:
                    got.append(res)  # surfaced, never dropped
            results += got
    results.sort(key=lambda r: (r.record.qubits, r.record.layers, r.record.min_mcz, r.record.seed))
    return results if keep else [r.record for r in results]


@dataclass(frozen=True)
class AggregateRow:
    qubits: int
    layers: int
    mean_gained: float
    count: int


@dataclass(frozen=True)
class QubitRow:
    qubits: int
    gained_per_layer: float
    groups: int


@dataclass
class Aggregate:
    rows: list[AggregateRow] = field(default_factory=list)
    per_qubit: list[QubitRow] = field(default_factory=list)


def aggregate(records) -> Aggregate:
    """Mean gained per (qubits, layers), and per qubit count the mean over
    layer groups of mean_gained / layers. Failed records are skipped."""
    groups: dict[tuple[int, int], list[Fraction]] = {}
    for r in records:
        if r.ok and r.layers > 0:
            groups.setdefault((r.qubits, r.layers), []).append(r.gained)
    rows = [
        AggregateRow(q, l, float(sum(g) / len(g)), len(g)) for (q, l), g in sorted(groups.items())
    ]
    per_qubit = []
    for q in sorted({r.qubits for r in rows}):
        mine = [r for r in rows if r.qubits == q]
        gpl = sum(Fraction(r.mean_gained) / r.layers for r in mine) / len(mine)
        per_qubit.append(QubitRow(q, float(gpl), len(mine)))
    return Aggregate(rows, per_qubit)


def linear_fit(xs, ys) -> tuple[float, float, float]:
    """Least-squares slope, intercept and R^2. A constant series fitted exactly gives R^2 = 1."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_res = float(resid @ resid)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else (1.0 if ss_res == 0 else 0.0)
    return float(slope), float(intercept), r2


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def records_csv(records) -> str:
    return _csv_text(RECORD_FIELDS, ([rec.to_row()[k] for k in RECORD_FIELDS] for rec in records))


def aggregate_csv(agg: Aggregate) -> str:
    return _csv_text(["qubits", "layers", "mean_gained", "count"],
                     ([r.qubits, r.layers, repr(r.mean_gained), r.count] for r in agg.rows))


def per_qubit_csv(agg: Aggregate) -> str:
    return _csv_text(["qubits", "gained_per_layer"], ([r.qubits, repr(r.gained_per_layer)] for r in agg.per_qubit))


def emit_csv(agg: Aggregate, path) -> list[Path]:
    """Write ``<path>`` (per group) and ``<stem>_per_qubit.csv`` next to it."""
    path = Path(path)
    other = path.with_name(path.stem + "_per_qubit" + (path.suffix or ".csv"))
    path.write_text(aggregate_csv(agg))
    other.write_text(per_qubit_csv(agg))
    return [path, other]


def plot_data(agg: Aggregate) -> dict:
    series = {}
    for r in agg.rows:
        series.setdefault(str(r.qubits), []).append([r.layers, r.mean_gained])
    return {
        "gained_vs_layers": series,
        "gained_per_layer": [[r.qubits, r.gained_per_layer] for r in agg.per_qubit],
    }


_PALETTE = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22"]


def _scatter_panel(x0, y0, w, h, title, xlabel, ylabel, series) -> list[str]:
    pts = [p for s in series.values() for p in s]
    out = [f'<g transform="translate({x0},{y0})">',
           f'<rect x="0" y="0" width="{w}" height="{h}" fill="none" stroke="#000"/>',
           f'<text x="{w / 2}" y="-8" text-anchor="middle" font-size="13">{title}</text>',
           f'<text x="{w / 2}" y="{h + 32}" text-anchor="middle" font-size="11">{xlabel}</text>',
           f'<text x="-34" y="{h / 2}" text-anchor="middle" font-size="11" transform="rotate(-90 -34 {h / 2})">{ylabel}</text>']
    if pts:
        xmin, xmax = min(p[0] for p in pts), max(p[0] for p in pts)
        ymax = max(max(p[1] for p in pts), 1e-12)
        xspan = (xmax - xmin) or 1
        sx = lambda v: 10 + (v - xmin) / xspan * (w - 20)
        sy = lambda v: h - 10 - v / ymax * (h - 20)
        for k, (name, s) in enumerate(series.items()):
            colour = _PALETTE[k % len(_PALETTE)]
            out.append(f'<g class="series" data-qubits="{name}" fill="{colour}">')
            out += [f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="3"/>' for x, y in s]
            out.append("</g>")
        out.append(f'<text x="2" y="12" font-size="9">{ymax:.3g}</text>')
    out.append("</g>")
    return out


def plot_svg(agg: Aggregate) -> str:
    data = plot_data(agg)
    left = _scatter_panel(60, 40, 320, 240, "gained per layer", "qubits", "gained / layer [delta_pi]",
                          {"all": data["gained_per_layer"]})
    right = _scatter_panel(460, 40, 320, 240, "mean gained", "layers", "gained [delta_pi]", data["gained_vs_layers"])
    legend = [f'<text x="800" y="{60 + 14 * k}" font-size="10" fill="{_PALETTE[k % len(_PALETTE)]}">{q} qubits</text>'
              for k, q in enumerate(data["gained_vs_layers"])]
    body = "\n".join(left + right + legend)
    return (
        '<svg xmlns="http://www.w3.org/2000/svg" width="880" height="330" font-family="sans-serif">\n'
        f"{body}\n</svg>\n"
    )


def emit_plot_data(agg: Aggregate, path, svg: bool = True) -> list[Path]:
    path = Path(path)
    path.write_text(json.dumps(plot_data(agg), indent=2, sort_keys=True) + "\n")
    written = [path]
    if svg:
        svg_path = path.with_suffix(".svg")
        svg_path.write_text(plot_svg(agg))
        written.append(svg_path)
    return written


@dataclass(frozen=True)
class BenchConfig:
    qubit_counts: tuple[int, ...]
    min_mcz_counts: tuple[int, ...] = ()
    layer_counts: tuple[int, ...] = ()
    circuits_per_point: int = 75
    seed: int = 0
    timing: TimingParams = TimingParams()
    lattice: object = "auto"
    p_ccz: float = 0.5
    verify: bool | None = None

    def __post_init__(self):
        if not self.min_mcz_counts and not self.layer_counts:
            raise ValueError("config needs min_mcz_counts or layer_counts")
        if self.circuits_per_point < 1:
            raise ValueError("circuits_per_point must be >= 1")

    @classmethod
    def from_dict(cls, d: dict) -> "BenchConfig":
        known = {"qubit_counts", "min_mcz_counts", "layer_counts", "circuits_per_point", "seed", "delta_pi",
                 "delta_t", "lattice", "p_ccz", "verify"}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown benchmark config keys: {sorted(extra)}")
        lattice = d.get("lattice", "auto")
        if isinstance(lattice, dict):
            lattice = (int(lattice["rows"]), int(lattice["cols"]))
        elif lattice != "auto":
            raise ValueError(f"lattice must be 'auto' or {{rows, cols}}, got {lattice!r}")
        timing = TimingParams(Fraction(str(d.get("delta_pi", "1"))), Fraction(str(d.get("delta_t", "1"))))
        return cls(
            tuple(d["qubit_counts"]),
            tuple(d.get("min_mcz_counts", ())),
            tuple(d.get("layer_counts", ())),
            int(d.get("circuits_per_point", 75)),
            int(d.get("seed", 0)),
            timing,
            lattice,
            float(d.get("p_ccz", 0.5)),
            d.get("verify"),
        )

    @classmethod
    def load(cls, path) -> "BenchConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("timing")
        d["delta_pi"], d["delta_t"] = fraction_str(self.timing.delta_pi), fraction_str(self.timing.delta_t)
        if self.lattice != "auto":
            d["lattice"] = {"rows": self.lattice[0], "cols": self.lattice[1]}
        return d


def run_config(cfg: BenchConfig, keep: bool = False):
    """Layer-targeted collection when ``layer_counts`` is set, else a min_mcz sweep."""
    if cfg.layer_counts:
        return collect_by_layers(cfg.qubit_counts, cfg.layer_counts, cfg.circuits_per_point, cfg.seed, cfg.timing,
                                 cfg.lattice, cfg.verify, cfg.p_ccz, keep=keep)
    configs = sweep_configs(cfg.qubit_counts, cfg.min_mcz_counts, cfg.circuits_per_point, cfg.seed, cfg.p_ccz)
    return run_benchmark(configs, cfg.timing, cfg.lattice, cfg.verify, keep=keep)
