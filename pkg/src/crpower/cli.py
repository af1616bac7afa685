"""The ``simulate`` command.

Default invocation runs a Monte Carlo sweep from a JSON config; the
``oracle``, ``p-vs-rho`` and ``traces`` subcommands expose the supporting
tools on the same config. Flags override the matching config fields.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .harness import (
    ExperimentConfig,
    emit_qvalue_traces,
    execute_run,
    p_vs_rho_csv,
    phase_trace_jsonl,
    run_experiment,
    scenario_for_run,
    sweep_p_vs_rho,
)
from .oracle import exhaustive_search
from .topology import ConfigurationError

SUBCOMMANDS = ("run", "oracle", "p-vs-rho", "traces")


def _add_common(parser):
    parser.add_argument("--config", required=True, help="JSON experiment config")
    parser.add_argument("--seed", type=int, default=None, help="master seed override")
    parser.add_argument("--out", default=None, help="output directory override")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="simulate",
        description="Monte Carlo driver for the spectrum-sharing learners")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="full sweep: train, score, aggregate")
    _add_common(run)
    run.add_argument("--runs", type=int, default=None, help="n_runs override")
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--no-artifacts", action="store_true",
                     help="skip per-run oracle/trace files")

    oracle = sub.add_parser("oracle", help="scenario + exhaustive search only")
    _add_common(oracle)
    oracle.add_argument("--run", type=int, default=0, help="run index to pin")

    pvr = sub.add_parser("p-vs-rho", help="phase-change probability sweep")
    _add_common(pvr)
    pvr.add_argument("--rhos", default="0.05,0.1,0.2,0.4",
                     help="comma-separated experimentation probabilities")
    pvr.add_argument("--steps", type=int, default=20000)

    traces = sub.add_parser("traces", help="one traced run, Q-value CSVs")
    _add_common(traces)
    traces.add_argument("--run", type=int, default=0, help="run index to trace")

    return parser


def load_config(args) -> ExperimentConfig:
    config = ExperimentConfig.from_json_file(args.config)
    if args.seed is not None:
        config = replace(config, master_seed=args.seed)
    if args.out is not None:
        config = replace(config, out_dir=args.out)
    if getattr(args, "runs", None) is not None:
        config = replace(config, n_runs=args.runs)
    return config


def _outdir(config: ExperimentConfig) -> Path:
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_run(args) -> int:
    config = load_config(args)
    out = _outdir(config)
    report = run_experiment(config, workers=args.workers)
    (out / "summary.csv").write_text(report.summary_csv())
    (out / "report.json").write_text(report.report_json())

    if not args.no_artifacts:
        oracle_dir = out / "oracle"
        trace_dir = out / "traces"
        oracle_dir.mkdir(exist_ok=True)
        trace_dir.mkdir(exist_ok=True)
        for point in range(len(config.agent)):
            for run in range(config.n_runs):
                _, scenario, oracle, trace = execute_run(
                    config, point, run, keep_trace=True)
                stem = f"point{point}_run{run:04d}"
                (oracle_dir / f"{stem}.json").write_text(oracle.to_json())
                (trace_dir / f"{stem}.jsonl").write_text(phase_trace_jsonl(trace))

    for point in report.aggregate():
        print(f"phases={point['phases']}: "
              f"{point['percent_optimal']:.1f}% optimal "
              f"(CI95 {point['ci95_percent_optimal'][0]:.1f}"
              f"-{point['ci95_percent_optimal'][1]:.1f}), "
              f"{point['percent_near_optimal']:.1f}% near-optimal "
              f"over {point['runs']} runs")
    print(f"wrote {out / 'summary.csv'}")
    return 0


def cmd_oracle(args) -> int:
    config = load_config(args)
    out = _outdir(config)
    scenario = scenario_for_run(config, 0, args.run)
    result = exhaustive_search(scenario, config.env.reward_mode, tau=config.tau)
    (out / f"scenario_run{args.run:04d}.json").write_text(scenario.to_json())
    (out / f"oracle_run{args.run:04d}.json").write_text(result.to_json())
    print(f"best joint action {result.best_joint_action} "
          f"reward {result.best_reward:.6g}; "
          f"{len(result.near_optimal)} joint action(s) within "
          f"{100 * result.tau:.1f}%")
    return 0


def cmd_p_vs_rho(args) -> int:
    config = load_config(args)
    out = _outdir(config)
    rhos = [float(r) for r in args.rhos.split(",") if r]
    result = sweep_p_vs_rho(config, rhos, steps=args.steps)
    (out / "p_vs_rho.csv").write_text(p_vs_rho_csv(result))
    (out / "p_vs_rho.json").write_text(json.dumps(result, indent=2))
    for row in result["rows"]:
        print(f"rho={row['rho']:.3f}  p_hat={row['p_hat']:.4f}  "
              f"CI95 [{row['ci95'][0]:.4f}, {row['ci95'][1]:.4f}]")
    print("monotone nondecreasing" if result["nondecreasing"]
          else "NOT monotone (sampling noise or tight scenario)")
    return 0


def cmd_traces(args) -> int:
    config = load_config(args)
    out = _outdir(config)
    point = 0
    hp = config.agent[point]
    from .agent import run_learning, run_with_restarts
    from .harness import child_seed

    scenario = scenario_for_run(config, point, args.run)
    seq = child_seed(config.master_seed, point, args.run).spawn(2)[1]
    if config.restarts:
        trace = run_with_restarts(scenario, hp, seq, config.learner,
                                  n_restarts=config.n_restarts,
                                  probe_phases=config.probe_phases,
                                  record_updates=True)
    else:
        trace = run_learning(scenario, hp, seq, config.learner,
                             record_updates=True)
    (out / f"phases_run{args.run:04d}.jsonl").write_text(phase_trace_jsonl(trace))
    for i, agent in enumerate(trace.agents):
        csv_text = emit_qvalue_traces(agent.update_records,
                                      len(scenario.actions))
        (out / f"qvalues_run{args.run:04d}_agent{i}.csv").write_text(csv_text)
    print(f"wrote Q-value traces for {len(trace.agents)} agents to {out}")
    return 0


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0] not in SUBCOMMANDS and not argv[0] in ("-h", "--help"):
        argv = ["run"] + argv
    args = build_parser().parse_args(argv)
    handlers = {
        "run": cmd_run,
        "oracle": cmd_oracle,
        "p-vs-rho": cmd_p_vs_rho,
        "traces": cmd_traces,
    }
    try:
        return handlers[args.command](args)
    except (ConfigurationError, FileNotFoundError, json.JSONDecodeError,
            ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
