"""Command-line entry point: ``atomsched <command> [options]``.

Exit status: 0 success, 1 validation or equivalence failure, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import bench
from .circuit import Circuit, CircuitStructureError, NotPracticalFormError, loads, require_schedulable, \
    validate_practical_form, dumps
from .device import TimingParams, fraction_str, lattice_for, triangular_lattice
from .gate_scheduler import schedule_gate_level
from .pulse_scheduler import schedule_pulse_level
from .render import render_timeline
from .sequence import PulseSequence, duration
from .transpiler import CapacityError, RoutingError, transpile
from .verifier import MAX_QUTRITS, IllFormedSequenceError, check_equivalence

SEED_ENV = "ATOMSCHED_SEED"


class UsageError(Exception):
    pass


class CheckFailed(Exception):
    pass


def _read_text(path) -> str:
    if path in (None, "-"):
        return sys.stdin.read()
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc


def _load_circuit(path) -> Circuit:
    text = _read_text(path)
    try:
        return loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: malformed JSON ({exc.msg} at line {exc.lineno})") from exc
    except (KeyError, TypeError, ValueError, CircuitStructureError) as exc:
        raise UsageError(f"{path}: not a valid circuit: {exc}") from exc


def _load_sequence(path) -> PulseSequence:
    text = _read_text(path)
    try:
        return PulseSequence.from_json(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: malformed JSON ({exc.msg} at line {exc.lineno})") from exc
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"{path}: not a valid pulse sequence: {exc}") from exc


def _write(text: str, path) -> None:
    if path in (None, "-"):
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        Path(path).write_text(text if text.endswith("\n") else text + "\n")


def _timing(text) -> TimingParams:
    try:
        return TimingParams.parse(text) if text else TimingParams()
    except ValueError as exc:
        raise UsageError(f"--timing: {exc}") from exc


def _lattice(text):
    if text in (None, "auto"):
        return "auto"
    try:
        rows, cols = (int(x) for x in text.split(","))
    except ValueError as exc:
        raise UsageError(f"--lattice expects 'rows,cols' or 'auto', got {text!r}") from exc
    if rows < 1 or cols < 1:
        raise UsageError("--lattice dimensions must be positive")
    return rows, cols


def _graph(n_qubits: int, lattice):
    return lattice_for(n_qubits) if lattice == "auto" else triangular_lattice(*lattice)


def _seed(args) -> int | None:
    env = os.environ.get(SEED_ENV)
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise UsageError(f"{SEED_ENV} must be an integer, got {env!r}") from exc
    return args.seed


def _human(x) -> str:
    return str(x.numerator) if x.denominator == 1 else fraction_str(x)


def _schedulable(circuit: Circuit) -> None:
    try:
        require_schedulable(circuit)
    except NotPracticalFormError as exc:
        print(exc.report.summary(), file=sys.stderr)
        raise CheckFailed("circuit is not in practical form; run `atomsched transpile` first") from exc


# ---------------------------------------------------------------- commands


def cmd_validate(args) -> int:
    circuit = _load_circuit(args.input)
    graph = sites = None
    if args.lattice is not None:
        lattice = _lattice(args.lattice)
        graph = _graph(circuit.n_qubits, lattice)
        sites = circuit.metadata.get("qubit_labels")
    report = validate_practical_form(circuit, graph, sites)
    _write(json.dumps(report.to_dict(), indent=2), args.output)
    return 0 if report.ok else 1


def cmd_transpile(args) -> int:
    circuit = _load_circuit(args.input)
    graph = _graph(circuit.n_qubits, _lattice(args.lattice))
    try:
        out, stats = transpile(circuit, graph)
    except (CapacityError, RoutingError) as exc:
        raise UsageError(str(exc)) from exc
    _write(dumps(out), args.output)
    print(json.dumps(stats.to_dict()), file=sys.stderr)
    return 0


def cmd_schedule(args) -> int:
    circuit = _load_circuit(args.input)
    timing = _timing(args.timing)
    if args.transpile:
        circuit, _ = transpile(circuit, _graph(circuit.n_qubits, _lattice(args.lattice)))
    _schedulable(circuit)
    seqs = {}
    if args.strategy in ("pulse", "both"):
        seqs["pulse"] = schedule_pulse_level(circuit, timing)
    if args.strategy in ("gate", "both"):
        seqs["gate"] = schedule_gate_level(circuit, timing)
    if args.strategy == "both":
        dp, dg = duration(seqs["pulse"]), duration(seqs["gate"])
        gained = (dg - dp) / timing.delta_pi
        print(f"gate-level {_human(dg)}  pulse-level {_human(dp)}  gained = {_human(gained)} δ_π")
        if args.output:
            data = {name: seq.to_dict() for name, seq in seqs.items()}
            _write(json.dumps(data, indent=2), args.output)
    else:
        _write(next(iter(seqs.values())).to_json(), args.output)
    return 0


def cmd_verify(args) -> int:
    circuit = _load_circuit(args.input)
    if circuit.n_qubits > MAX_QUTRITS:
        raise UsageError(f"verify supports at most {MAX_QUTRITS} qubits, circuit has {circuit.n_qubits}")
    if args.sequence:
        seq = _load_sequence(args.sequence)
    else:
        _schedulable(circuit)
        timing = _timing(args.timing)
        seq = (schedule_gate_level if args.strategy == "gate" else schedule_pulse_level)(circuit, timing)
    try:
        report = check_equivalence(circuit, seq)
    except IllFormedSequenceError as exc:
        print(f"sequence is ill-formed: {exc}", file=sys.stderr)
        return 1
    _write(json.dumps(report.to_dict()), args.output)
    return 0 if report.equivalent else 1


def cmd_bench(args) -> int:
    if args.config:
        try:
            cfg = bench.BenchConfig.load(args.config)
        except json.JSONDecodeError as exc:
            raise UsageError(f"{args.config}: malformed JSON ({exc.msg})") from exc
        except OSError as exc:
            raise UsageError(f"cannot read {args.config}: {exc.strerror}") from exc
        except (KeyError, ValueError, TypeError) as exc:
            raise UsageError(f"{args.config}: {exc}") from exc
    else:
        cfg = bench.BenchConfig(qubit_counts=(2, 3, 4), min_mcz_counts=(2, 4, 6), circuits_per_point=5)
    overrides = {}
    seed = _seed(args)
    if seed is not None:
        overrides["seed"] = seed
    if args.timing:
        overrides["timing"] = _timing(args.timing)
    if args.lattice is not None:
        overrides["lattice"] = _lattice(args.lattice)
    if overrides:
        cfg = bench.BenchConfig(**{**cfg.__dict__, **overrides})
    records = bench.run_config(cfg)
    agg = bench.aggregate(records)
    failed = [r for r in records if not r.ok]
    for r in failed:
        print(f"circuit seed={r.seed} qubits={r.qubits}: {r.error}", file=sys.stderr)
    if args.output:
        out = Path(args.output)
        out.mkdir(parents=True, exist_ok=True)
        (out / "records.csv").write_text(bench.records_csv(records))
        bench.emit_csv(agg, out / "aggregate.csv")
        bench.emit_plot_data(agg, out / "plot.json")
        (out / "config.json").write_text(json.dumps(cfg.to_dict(), indent=2) + "\n")
    if args.format == "json":
        _write(json.dumps(bench.plot_data(agg), indent=2, sort_keys=True), None)
    else:
        _write(bench.aggregate_csv(agg), None)
    return 1 if failed else 0


def cmd_render(args) -> int:
    seq = _load_sequence(args.input)
    svg = render_timeline(seq)
    _write(svg, args.output)
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", "-i", help="input file ('-' or omitted: standard input)")
    common.add_argument("--output", "-o", help="output file (omitted: standard output)")
    common.add_argument("--timing", help="delta_pi,delta_t as fractions, e.g. 1,1 or 3/2,1")
    common.add_argument("--lattice", help="triangular lattice 'rows,cols' or 'auto'")
    common.add_argument("--seed", type=int, help=f"run seed (overridden by ${SEED_ENV})")
    common.add_argument("--format", choices=("json", "csv"), default="json")

    p = argparse.ArgumentParser(prog="atomsched", description="Pulse-level scheduling for neutral-atom devices.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("validate", parents=[common], help="check the practical-form criteria").set_defaults(fn=cmd_validate)
    sub.add_parser("transpile", parents=[common], help="place, route and lower onto the lattice").set_defaults(
        fn=cmd_transpile)
    s = sub.add_parser("schedule", parents=[common], help="build a pulse sequence")
    s.add_argument("--strategy", choices=("pulse", "gate", "both"), default="pulse")
    s.add_argument("--transpile", action="store_true", help="transpile the input first")
    s.set_defaults(fn=cmd_schedule)
    v = sub.add_parser("verify", parents=[common], help="simulate a sequence and compare with the circuit")
    v.add_argument("--sequence", help="sequence JSON (default: schedule the circuit)")
    v.add_argument("--strategy", choices=("pulse", "gate"), default="pulse")
    v.set_defaults(fn=cmd_verify)
    b = sub.add_parser("bench", parents=[common], help="run the random-circuit comparison")
    b.add_argument("--config", help="benchmark config JSON")
    b.set_defaults(fn=cmd_bench, format="csv")
    sub.add_parser("render", parents=[common], help="draw a sequence as an SVG timeline").set_defaults(fn=cmd_render)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except UsageError as exc:
        print(f"atomsched {args.command}: {exc}", file=sys.stderr)
        return 2
    except CheckFailed as exc:
        print(f"atomsched {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
