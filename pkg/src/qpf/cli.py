"""Command line entry point ``qpf``.

Exit codes: 0 success, 2 validation error, 3 solver or analysis failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import plotting
from .calibration import ROUTINES, Routine, TimingLedger, benchmark_report, run_routine, save_run
from .calibration.timing import REPORT_COLUMNS
from .compiler import GATES, Circuit, Gate, compile_circuit
from .emulator import PulseSimulator, state_overlaps, transmon_index
from .errors import (
    AnalysisError,
    InvalidArgumentError,
    NotFoundError,
    NumericalStateError,
    SolverError,
    UnsupportedError,
    ValidationError,
)
from .results import META, TIMING, read_json, save_results
from .runcard import load_platform

EXIT_OK, EXIT_VALIDATION, EXIT_FAILURE = 0, 2, 3
BENCHMARK_CSV = "benchmark.csv"


def parse_value(text: str):
    """``1e-8`` -> float, ``1,5,10`` -> list, JSON literals as JSON, else string."""
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        pass
    if "," in text:
        return [parse_value(part) for part in text.split(",")]
    try:
        return float(text)
    except ValueError:
        return text


def parse_params(pairs: Sequence[str]) -> dict:
    params = {}
    for pair in pairs or ():
        key, sep, value = pair.partition("=")
        if not sep or not key:
            raise ValidationError(f"--param expects key=value, got {pair!r}")
        params[key] = parse_value(value)
    return params


def _first_qubit(platform, qubit: Optional[str]) -> str:
    if qubit is not None:
        return qubit
    if not platform.natives:
        raise ValidationError("platform has no calibrated qubit")
    return next(iter(platform.natives))


def _print_fit(routine: str, fit: dict) -> None:
    print(f"# {routine}")
    print("quantity,value,error")
    for key, value in fit["params"].items():
        print(f"{key},{value:.10g},{fit['errors'].get(key, 0.0):.3g}")
    for key, value in fit["derived"].items():
        print(f"{key},{value:.10g},")
    print(f"goodness,{fit['goodness']:.6g},")


def _run_one(platform, name: str, qubit: str, params: dict, seed, out: Path) -> TimingLedger:
    routine = Routine(name, qubit, params, seed=seed)
    try:
        run = run_routine(platform, routine)
    except AnalysisError as exc:
        raw = exc.data
        if raw is not None and hasattr(raw, "data"):
            save_results(
                out,
                raw.data,
                grids=getattr(exc, "axes", []),
                options=raw.options.to_dict(),
                seed=raw.seed,
                extra={"routine": name, "qubit": qubit, "params": routine.params, "error": str(exc)},
            )
        raise
    save_run(run, out)
    plotting.plot_run(out)
    _print_fit(name, run.fit.to_dict())
    return run.timing


def cmd_run(args) -> int:
    platform = load_platform(args.platform)
    with platform:
        qubit = _first_qubit(platform, args.qubit)
        _run_one(platform, args.routine, qubit, parse_params(args.param), args.seed, Path(args.out))
    return EXIT_OK


def _write_report(rows, out: Path) -> None:
    with open(out / BENCHMARK_CSV, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=REPORT_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)
    if rows:
        plotting.plot_benchmark(rows, out / "benchmark.png")


def _print_report(rows) -> None:
    print(",".join(REPORT_COLUMNS))
    for row in rows:
        print(f"{row['routine']},{row['t_ideal_s']:.6g},{row['t_real_s']:.6g},{row['ratio']:.6g}")


def cmd_bench(args) -> int:
    names = ROUTINES if args.routines == "all" else tuple(args.routines.split(","))
    for name in names:
        if name not in ROUTINES:
            raise ValidationError(f"unknown routine {name!r}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ledgers = {}
    platform = load_platform(args.platform)
    with platform:
        qubit = _first_qubit(platform, args.qubit)
        for name in names:
            ledgers[name] = _run_one(platform, name, qubit, {}, args.seed, out / name)
    rows = benchmark_report(ledgers)
    _write_report(rows, out)
    _print_report(rows)
    return EXIT_OK


def circuit_from_name(name: str, qubit: str) -> Circuit:
    """``x_h`` -> X then H on ``qubit``."""
    gates = []
    for token in name.lower().split("_"):
        if token not in GATES or token in ("rx", "rz", "measure"):
            raise ValidationError(f"circuit tokens must be x or h, got {token!r}")
        gates.append(Gate(token, qubit))
    return Circuit.from_gates(gates)


def cmd_overlaps(args) -> int:
    platform = load_platform(args.platform)
    if not isinstance(platform.controller, PulseSimulator):
        raise UnsupportedError("overlaps need the emulator controller")
    with platform:
        qubit = _first_qubit(platform, args.qubit)
        sequence = compile_circuit(circuit_from_name(args.circuit, qubit), platform)
        simulator = platform.controller
        trajectory = simulator.simulate(platform, sequence)
        model = simulator.model(platform)
        series = state_overlaps(trajectory, transmon_index(platform)[qubit], model.levels)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    series.to_csv(out / "overlaps.csv")
    plotting.plot_overlaps(series, out / "overlaps.png", title=f"{args.circuit} on {qubit}")
    print("level,final_overlap")
    for level in range(series.levels):
        print(f"{level},{series[level][-1]:.6f}")
    return EXIT_OK


def _collect_ledgers(directory: Path) -> dict:
    ledgers = {}
    for timing in sorted(directory.glob(f"*/{TIMING}")):
        meta = read_json(timing.parent / META) if (timing.parent / META).exists() else {}
        ledgers[meta.get("routine", timing.parent.name)] = TimingLedger.from_dict(read_json(timing))
    if not ledgers and (directory / TIMING).exists():
        meta = read_json(directory / META) if (directory / META).exists() else {}
        ledgers[meta.get("routine", directory.name)] = TimingLedger.from_dict(read_json(directory / TIMING))
    order = {name: k for k, name in enumerate(ROUTINES)}
    return dict(sorted(ledgers.items(), key=lambda kv: (order.get(kv[0], len(order)), kv[0])))


def cmd_report(args) -> int:
    directory = Path(args.directory)
    if not directory.is_dir():
        raise NotFoundError(f"no such directory {str(directory)!r}")
    rows = benchmark_report(_collect_ledgers(directory))
    if rows:
        plotting.plot_benchmark(rows, directory / "benchmark.png")
    _print_report(rows)
    return EXIT_OK


def cmd_plot(args) -> int:
    directory = Path(args.directory)
    runs = [directory] if (directory / META).exists() else sorted(p.parent for p in directory.glob(f"*/{META}"))
    if not runs:
        raise NotFoundError(f"no result directories under {str(directory)!r}")
    for run in runs:
        print(plotting.plot_run(run))
    if (directory / BENCHMARK_CSV).exists() or len(runs) > 1:
        rows = benchmark_report(_collect_ledgers(directory))
        if rows:
            print(plotting.plot_benchmark(rows, directory / "benchmark.png"))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qpf", description="Pulse-level control with a transmon emulator.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one calibration routine")
    run.add_argument("routine", choices=ROUTINES)
    run.add_argument("--platform", required=True, help="runcard directory or bundled platform name")
    run.add_argument("--qubit")
    run.add_argument("--param", action="append", default=[], metavar="K=V")
    run.add_argument("--seed", type=int)
    run.add_argument("--out", required=True)
    run.set_defaults(func=cmd_run)

    bench = sub.add_parser("bench", help="run routines and tabulate ideal vs real time")
    bench.add_argument("--platform", required=True)
    bench.add_argument("--routines", default="all", help="'all' or a comma-separated list")
    bench.add_argument("--qubit")
    bench.add_argument("--seed", type=int)
    bench.add_argument("--out", required=True)
    bench.set_defaults(func=cmd_bench)

    overlaps = sub.add_parser("overlaps", help="level populations along a compiled circuit")
    overlaps.add_argument("--platform", required=True)
    overlaps.add_argument("--circuit", default="x_h")
    overlaps.add_argument("--qubit")
    overlaps.add_argument("--out", required=True)
    overlaps.set_defaults(func=cmd_overlaps)

    report = sub.add_parser("report", help="print the benchmark table of a bench directory")
    report.add_argument("directory")
    report.set_defaults(func=cmd_report)

    plot = sub.add_parser("plot", help="render figures for result directories")
    plot.add_argument("directory")
    plot.set_defaults(func=cmd_plot)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, InvalidArgumentError, NotFoundError, UnsupportedError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (SolverError, AnalysisError, NumericalStateError) as exc:
        print(f"failure: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
