"""Command-line surface tying the pipeline together.

Every command is deterministic given its config and seed.  Exit codes:
0 success, 2 configuration/usage error, 3 parse error, 4 backend error,
5 fit error, 6 mitigation error.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import analysis, storage
from .backends import EmulatedBackend, IdealBackend
from .configs import JobConfig, load_job_config, load_scenario
from .errors import (
    BackendError,
    ConfigurationError,
    FitError,
    MitigationError,
    ParseError,
)
from .hamiltonians import fermionic_triangle
from .harness import TimeSeries, run_job
from .mitigation import estimate_calibration_matrix, mitigate_timeseries

EXIT_CONFIG = 2
EXIT_PARSE = 3
EXIT_BACKEND = 4
EXIT_FIT = 5
EXIT_MITIGATION = 6


def _build_backend(kind: str, scenario_path: str | None, seed: int, n_qubits: int = 3):
    if kind == "ideal":
        return IdealBackend(n_qubits=n_qubits, seed=seed), None
    scenario = load_scenario(scenario_path)
    return EmulatedBackend(scenario, n_qubits=n_qubits, seed=seed), scenario


def _series_filename(config: JobConfig, triplet: tuple[int, ...]) -> str:
    return f"{config.job_id}_t{'-'.join(str(q) for q in triplet)}.jsonl"


def cmd_run(args) -> int:
    config = load_job_config(args.config)
    backend, scenario = _build_backend(
        config.backend, config.scenario_path, config.seed
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    echo = {
        "backend": config.backend,
        "scenario": Path(config.scenario_path).name if config.scenario_path else None,
        "seed": config.seed,
        "shots": config.shots,
        "packet_size": config.packet_size,
        "packets_per_triplet": config.packets_per_triplet,
        "rotation": config.rotation,
        "calibration": config.calibration,
        "packet_duration_minutes": config.packet_duration,
    }
    writers = []
    hamiltonian = fermionic_triangle()
    paths = []
    for triplet in config.triplets:
        meta = TimeSeries(
            triplet=triplet,
            packets=(),
            job_id=config.job_id,
            mitigation_mode="none",
            hamiltonian=hamiltonian,
            extras={"config": echo},
        )
        path = out_dir / _series_filename(config, triplet)
        writers.append(storage.SeriesWriter(path, meta, anchor_time=config.anchor_time))
        paths.append(path)
    try:
        run_job(
            backend,
            triplets=config.triplets,
            packets_per_triplet=config.packets_per_triplet,
            shots=config.shots,
            packet_size=config.packet_size,
            rotation=config.rotation,
            packet_duration=config.packet_duration,
            calibration=config.calibration,
            calibration_shots=config.calibration_shots,
            hamiltonian=hamiltonian,
            seed=config.seed,
            scenario=scenario,
            job_id=config.job_id,
            packet_sink=lambda idx, packet: writers[idx].write(packet),
        )
    finally:
        for writer in writers:
            writer.close()
    for path in paths:
        print(path)
    return 0


def cmd_calibrate(args) -> int:
    backend, _ = _build_backend(args.backend, args.scenario, args.seed, args.qubits)
    cal = estimate_calibration_matrix(
        backend,
        args.qubits,
        shots_per_state=args.shots,
        time=args.time,
        stream=np.random.default_rng(args.seed),
    )
    line = storage.dumps_record(storage.calibration_to_obj(cal))
    if args.out:
        Path(args.out).write_text(line + "\n", encoding="utf-8")
        print(args.out)
    else:
        print(line)
    return 0


def cmd_mitigate(args) -> int:
    series = storage.read_series(args.infile)
    calibration = storage.read_calibration(args.calibration) if args.calibration else None
    mitigated = mitigate_timeseries(series, args.mode, calibration=calibration)
    storage.write_series(args.out, mitigated)
    print(args.out)
    return 0


def _load_series(paths) -> list[TimeSeries]:
    return [storage.read_series(p) for p in paths]


def _open_out(args):
    if args.out:
        return open(args.out, "w", encoding="utf-8")
    return sys.stdout


def cmd_analyze(args) -> int:
    series_list = _load_series(args.infile)
    out = _open_out(args)
    try:
        if args.mode == "summary":
            rows = []
            for path, series in zip(args.infile, series_list):
                energies = series.energies()
                hist = analysis.histogram(energies, bin_width=args.bin_width)
                rows.append(
                    (
                        Path(path).name,
                        energies.size,
                        hist.mean,
                        hist.std,
                        float(energies.min()),
                        float(energies.max()),
                        hist.peak_energy,
                    )
                )
            storage.write_table(
                out,
                [
                    "series",
                    "n_realizations",
                    "mean_energy_t",
                    "std_energy_t",
                    "min_energy_t",
                    "max_energy_t",
                    "peak_energy_t",
                ],
                rows,
            )
        elif args.mode == "hist":
            energies = np.concatenate([s.energies() for s in series_list])
            hist = analysis.histogram(energies, bin_width=args.bin_width)
            rows = [
                (float(hist.bin_edges[i]), float(hist.bin_edges[i + 1]), int(c))
                for i, c in enumerate(hist.counts)
            ]
            storage.write_table(
                out, ["bin_left_energy_t", "bin_right_energy_t", "count"], rows
            )
        else:  # correlate
            rows = analysis.error_correlation_table(series_list)
            storage.write_table(
                out, ["total_readout_error", "total_gate_error", "energy_t"], rows
            )
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def cmd_fit(args) -> int:
    series = storage.read_series(args.infile)
    result = analysis.fit_sinusoid(
        series.packet_times(), series.packet_means(), with_slope=args.with_slope
    )
    print(f"offset_t = {result.offset:.6f} +/- {result.offset_err:.6f}")
    print(f"amplitude_t = {result.amplitude:.6f} +/- {result.amplitude_err:.6f}")
    print(f"period_minutes = {result.period_minutes:.4f} +/- {result.period_err:.4f}")
    print(f"phase_radians = {result.phase_radians:.4f} +/- {result.phase_err:.4f}")
    if result.slope is not None:
        print(f"slope_t_per_minute = {result.slope:.8f} +/- {result.slope_err:.8f}")
    print(f"residual_rms_t = {result.residual_rms:.6f}")
    print(f"converged = {str(result.converged).lower()}")
    return 0


def cmd_detect(args) -> int:
    series = storage.read_series(args.infile)
    if args.mode == "outliers":
        report = analysis.detect_outliers(series, k=args.k)
        print(f"threshold_k = {report.threshold}")
        print(f"flagged_packets = {list(report.flagged)}")
        for index, z in enumerate(report.zscores):
            print(f"packet {index}: z = {z:.3f}")
    else:
        report = analysis.detect_constant(series)
        print(f"constant = {str(report.found).lower()}")
        if report.span is not None:
            print(f"span_packets = {report.span[0]}..{report.span[1]}")
    return 0


def format_uncertain(value: float, std: float) -> str:
    """Concise value(uncertainty) formatting, e.g. 0.4132 +/- 0.019 -> 0.41(2)."""
    if std <= 0:
        return f"{value:.4f}"
    exponent = math.floor(math.log10(std))
    std_rounded = round(std, -exponent)
    if std_rounded >= 10.0 ** (exponent + 1):
        exponent += 1
        std_rounded = round(std, -exponent)
    digits = max(0, -exponent)
    bracket = int(round(std_rounded * 10.0**digits))
    return f"{value:.{digits}f}({bracket})"


def cmd_table1(args) -> int:
    series = storage.read_series(args.infile)
    table = analysis.outcome_statistics(series)
    labels = [c.label for c in table.columns]
    widths = [max(10, len(l) + 2) for l in labels]
    header = "bitstring".ljust(11) + "".join(
        l.center(w) for l, w in zip(labels, widths)
    ) + "exact".center(10)
    print(f"# {table.n_realizations} realizations, "
          f"triplet {'-'.join(str(q) for q in series.triplet)}, "
          f"job {series.job_id}")
    print(header)
    for bits in table.bit_strings:
        sign = "+" if bits.count("1") % 2 == 0 else "-"
        cells = []
        exact_values = set()
        for column, width in zip(table.columns, widths):
            entry = column.frequencies.get(bits)
            if entry is None or bits not in column.exact:
                cells.append("".center(width))
            else:
                cells.append(format_uncertain(*entry).center(width))
                exact_values.add(f"{column.exact[bits]:.6f}")
        exact_cell = "/".join(sorted(exact_values)) if exact_values else ""
        print(f"{sign}{bits}".ljust(11) + "".join(cells) + exact_cell.center(10))
    expectation_row = "<...>".ljust(11) + "".join(
        format_uncertain(c.expectation_mean, c.expectation_std).center(w)
        for c, w in zip(table.columns, widths)
    ) + f"{table.columns[0].exact_expectation:.4f}".center(10)
    print(expectation_row)
    print(f"energy_t = {format_uncertain(table.energy_mean, table.energy_std)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wbench",
        description="W-state energy-estimation benchmark harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="execute a job and stream packet records")
    p.add_argument("--config", required=True, help="job config file")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("calibrate", help="measure a detector calibration matrix")
    p.add_argument("--backend", choices=("ideal", "emulated"), required=True)
    p.add_argument("--scenario", help="scenario file (emulated backend)")
    p.add_argument("--qubits", type=int, default=3)
    p.add_argument("--shots", type=int, default=1024)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--time", type=float, default=0.0, help="simulated minutes")
    p.add_argument("--out", help="write to file instead of stdout")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("mitigate", help="offline mitigation from stored histograms")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--mode", choices=("static", "dynamic"), required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--calibration", help="explicit calibration matrix file (static mode)")
    p.set_defaults(func=cmd_mitigate)

    p = sub.add_parser("analyze", help="emit analysis tables")
    p.add_argument("--in", dest="infile", nargs="+", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--hist", dest="mode", action="store_const", const="hist")
    group.add_argument("--summary", dest="mode", action="store_const", const="summary")
    group.add_argument("--correlate", dest="mode", action="store_const", const="correlate")
    p.add_argument("--bin-width", type=float, default=0.01)
    p.add_argument("--out", help="write to file instead of stdout")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("fit", help="sinusoid fit of packet means")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--with-slope", action="store_true")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("detect", help="outlier / constant-output detectors")
    p.add_argument("--in", dest="infile", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--outliers", dest="mode", action="store_const", const="outliers")
    group.add_argument("--constant", dest="mode", action="store_const", const="constant")
    p.add_argument("--k", type=float, default=5.0)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser(
        "table1",
        help="per-outcome frequency table with expectations and energy",
    )
    p.add_argument("--in", dest="infile", required=True)
    p.set_defaults(func=cmd_table1)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except BackendError as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except FitError as exc:
        print(f"fit error: {exc}", file=sys.stderr)
        return EXIT_FIT
    except MitigationError as exc:
        print(f"mitigation error: {exc}", file=sys.stderr)
        return EXIT_MITIGATION
    except FileNotFoundError as exc:
        print(f"configuration error: missing file {exc.filename}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
