"""Command line: ``awgn-bandits {run, sweep, bounds, verify}``.

Exit codes: 0 ok, 1 config error, 2 power-audit failure, 3 verify failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, ExperimentConfig, describe_instance
from .harness import RECORD_FIELDS, McSummary, run_monte_carlo
from .infotheory import lower_bound_report, ucb0_bound, ue_ucb_bound, ue_ucb_pp_bound
from .link import audit_check
from .policies import Schedule
from .verify import SUITES, run_suites

EXIT_OK, EXIT_CONFIG, EXIT_AUDIT, EXIT_VERIFY = 0, 1, 2, 3

TRACE_COLUMNS = ("algorithm", "snr", "b", "k", "t_horizon", "replication", "round", "cumulative_regret")
TRANSCRIPT_COLUMNS = ("replication", "t", "arm", "raw_reward", "side_info", "theta",
                      "encoded", "channel_output", "decoded")


def _num(x) -> str:
    """Shortest round-trip text for a number; the same value always prints the same way."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _clean(obj):
    """JSON-safe copy: numpy scalars become Python numbers, non-finite floats become null."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    return obj


def bound_values(k: int, horizon: float, b: float, snr: float, c1: float, c2: float) -> dict:
    """The three upper bounds and the minimax lower bound as ``BoundReport`` objects."""
    return {
        "ucb0": ucb0_bound(k, horizon, b, snr),
        "ue_ucb": ue_ucb_bound(k, horizon, b, snr),
        "ue_ucb_pp": ue_ucb_pp_bound(k, horizon, b, snr),
        "lower": lower_bound_report(k, horizon, b, snr, c1, c2),
    }


# --- output ------------------------------------------------------------------


def _trace_rows(summary: McSummary, config: ExperimentConfig, snr: float, b: float, k: int):
    head = [summary.algorithm, _num(snr), _num(b), str(k), str(config.horizon)]
    rounds = [str(int(t)) for t in summary.rounds]
    for r, trace in enumerate(summary.traces, start=1):
        rep = str(r)
        for t, value in zip(rounds, trace.tolist()):
            yield head + [rep, t, repr(value)]


def _write_csv(path: Path, columns, rows) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        writer.writerows(rows)


def _transcript_rows(summary: McSummary, schedule: Schedule):
    rec = summary.records
    thetas = [schedule.thetas[sub - 1] if sub else schedule.theta_ucb
              for sub, _, _ in (schedule.locate(t) for t in range(1, schedule.horizon + 1))]
    for r in range(summary.replications):
        cols = [rec[name][r].tolist() for name in RECORD_FIELDS]
        for i, (arm, x, side, enc, y, dec) in enumerate(zip(*cols)):
            yield [str(r + 1), str(i + 1), str(arm), repr(x), repr(side), repr(thetas[i]),
                   repr(enc), repr(y), repr(dec)]


def _summary_dict(config, summary, schedule, channel, instance, audit) -> dict:
    snr = channel.effective_snr()
    bounds = bound_values(instance.k, config.horizon, instance.b, snr, config.c1, config.c2)
    return _clean({
        "config": config.to_dict(),
        "instance": describe_instance(config),
        "schedule": schedule.describe(),
        "replications": summary.replications,
        "mean_final_regret": summary.mean_final,
        "stderr_final_regret": summary.stderr_final,
        "quantiles": summary.quantiles,
        "mean_pulls": summary.mean_pulls,
        "power_audit": {
            "empirical_moment": audit.empirical_moment,
            "budget": audit.budget,
            "tolerance": audit.tolerance,
            "pass": audit.passed,
        },
        "bound_values": {name: rep.value for name, rep in bounds.items()},
        "bound_warnings": [w for rep in bounds.values() for w in rep.warnings],
    })


def _write_json(path: Path, data) -> None:
    path.write_text(json.dumps(data, indent=2, allow_nan=False) + "\n")


# --- commands ----------------------------------------------------------------


def _simulate(config: ExperimentConfig):
    instance = config.build_instance()
    channel = config.build_channel()
    schedule = config.build_schedule()
    record = RECORD_FIELDS if config.retain_full_transcript else ()
    summary = run_monte_carlo(instance, config.algorithm, channel, config.horizon,
                              config.replications, config.seed, workers=config.parallel,
                              record=record)
    audit = audit_check(summary.audit, config.audit_tol)
    return instance, channel, schedule, summary, audit


def _out_dir(config: ExperimentConfig) -> Path:
    out = Path(config.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out}: {exc.strerror or exc}") from None
    return out


def cmd_run(config: ExperimentConfig) -> int:
    """One Monte Carlo experiment: ``trace.csv`` and ``summary.json`` in ``config.out``."""
    try:
        config.validate()
        out = _out_dir(config)
        instance, channel, schedule, summary, audit = _simulate(config)
        _write_csv(out / "trace.csv", TRACE_COLUMNS,
                   _trace_rows(summary, config, channel.snr, instance.b, instance.k))
        if config.retain_full_transcript:
            _write_csv(out / "transcript.csv", TRANSCRIPT_COLUMNS, _transcript_rows(summary, schedule))
        _write_json(out / "summary.json",
                    _summary_dict(config, summary, schedule, channel, instance, audit))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"config error: cannot write results: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"{summary.algorithm}: mean final regret {summary.mean_final:.6g} "
          f"(stderr {summary.stderr_final:.3g}, {summary.replications} replications) -> {out}")
    print(audit)
    return EXIT_OK if audit.passed else EXIT_AUDIT


def cmd_sweep(config: ExperimentConfig) -> int:
    """Cartesian product of the sweep axes: ``sweep.csv`` and ``sweep_summary.json``."""
    try:
        points = config.sweep_points()
        for point in points:
            point.validate()
        out = _out_dir(config)
        rows, groups, failed = [], [], 0
        for point in points:
            instance, channel, schedule, summary, audit = _simulate(point)
            rows.extend(_trace_rows(summary, point, channel.snr, instance.b, instance.k))
            failed += not audit.passed
            groups.append(_clean({
                "snr": channel.snr,
                "b": instance.b,
                "horizon": point.horizon,
                "algorithm": summary.algorithm,
                "n_subphases": schedule.n_subphases,
                "tau": schedule.tau,
                "phase1_length": schedule.phase1_length,
                "mean_final_regret": summary.mean_final,
                "stderr_final_regret": summary.stderr_final,
                "quantiles": summary.quantiles,
                "power_audit": {"empirical_moment": audit.empirical_moment,
                                "budget": audit.budget, "pass": audit.passed},
            }))
            print(f"snr={channel.snr:g} b={instance.b:g} T={point.horizon}: "
                  f"mean final regret {summary.mean_final:.6g}, phase 1 = {schedule.phase1_length} rounds")
        _write_csv(out / "sweep.csv", TRACE_COLUMNS, rows)
        _write_json(out / "sweep_summary.json", {"config": _clean(config.to_dict()), "groups": groups})
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"config error: cannot write results: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if failed:
        print(f"power audit failed in {failed} of {len(points)} groups", file=sys.stderr)
        return EXIT_AUDIT
    return EXIT_OK


def cmd_bounds(k: int, horizon: float, b: float, snr: float, c1: float, c2: float) -> int:
    """Print the three upper bounds and the minimax lower bound with their terms."""
    if horizon < 2 or k < 1 or b < 1 or not snr > 0:
        print("config error: bounds need K >= 1, T >= 2, B >= 1 and SNR > 0", file=sys.stderr)
        return EXIT_CONFIG
    print(f"K={k} T={horizon:g} B={b:g} SNR={snr:g}   (values in regret units, i.e. reward x rounds)")
    for name, rep in bound_values(k, horizon, b, snr, c1, c2).items():
        line = str(rep)
        if name == "lower":
            line += f"   [= c1 * {rep.value / c1:.6g}]"
        print(line)
        for w in rep.warnings:
            print(f"    warning: {w}")
    return EXIT_OK


def cmd_verify(suites=None, inject_fault: str | None = None) -> int:
    """Run the check suites; exit 3 naming every failed check."""
    results = run_suites(suites, inject_fault)
    for res in results:
        print(res)
    failed = [f"{r.suite}/{r.name}" for r in results if not r.passed]
    if failed:
        print(f"verify failed: {', '.join(failed)}", file=sys.stderr)
        return EXIT_VERIFY
    print(f"all {len(results)} checks passed")
    return EXIT_OK


# --- argument parsing --------------------------------------------------------


def _experiment_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="PATH", help="YAML config file (see config_schema.json)")
    p.add_argument("--seed", type=int, help="base seed; replication r uses stream (seed, r)")
    p.add_argument("--reps", type=int, help="number of replications")
    p.add_argument("--out", metavar="DIR", help="output directory")
    p.add_argument("--retain-full-transcript", action="store_true",
                   help="also write every round of every replication to transcript.csv")
    p.add_argument("--audit-tol", type=float, help="power audit tolerance (default 0.1)")
    p.add_argument("--parallel", type=int, help="worker processes")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="awgn-bandits",
        description="Bandits whose rewards reach the learner over an AWGN channel.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    _experiment_flags(sub.add_parser("run", help="Monte Carlo run of one configuration"))
    _experiment_flags(sub.add_parser("sweep", help="run the Cartesian product of the sweep axes"))

    b = sub.add_parser("bounds", help="evaluate the regret bounds")
    b.add_argument("-K", "--arms", dest="k", type=int, required=True)
    b.add_argument("-T", "--horizon", type=float, required=True)
    b.add_argument("-B", dest="b", type=float, default=1.0)
    b.add_argument("--snr", type=float, required=True)
    b.add_argument("--c1", type=float, default=ExperimentConfig.c1)
    b.add_argument("--c2", type=float, default=ExperimentConfig.c2)

    v = sub.add_parser("verify", help="numerical checks of the inequalities and invariants")
    v.add_argument("--suite", action="append", choices=["all", *SUITES],
                   help="suite to run (repeatable; default all)")
    v.add_argument("--inject-fault", choices=["chi2"], help=argparse.SUPPRESS)
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    config = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    config = config.replace(seed=args.seed, replications=args.reps, out=args.out,
                            audit_tol=args.audit_tol, parallel=args.parallel)
    if args.retain_full_transcript:
        config = config.replace(retain_full_transcript=True)
    return config


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "bounds":
        return cmd_bounds(args.k, args.horizon, args.b, args.snr, args.c1, args.c2)
    if args.command == "verify":
        return cmd_verify(args.suite, args.inject_fault)
    try:
        config = config_from_args(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return cmd_run(config) if args.command == "run" else cmd_sweep(config)


if __name__ == "__main__":
    sys.exit(main())
