"""Monte Carlo experiment driver.

Every run is a pure function of (config, phase-budget index, run index):
the child seed is derived from the master seed and the indices, the run
samples its own scenario, computes its own oracle, trains, and is scored
against that oracle. Runs therefore execute in any order or in parallel
and still aggregate to byte-identical outputs.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .agent import AgentHyperparams, RunTrace, run_learning, run_with_restarts
from .environment import (
    EnvConfig,
    Scenario,
    build_scenario,
    measure_phase_change_probability,
)
from .link_adaptation import AmcTable
from .oracle import OracleResult, exhaustive_search, score_policy
from .topology import ConfigurationError, GridSpec

__all__ = [
    "ExperimentConfig",
    "RunMetrics",
    "ExperimentReport",
    "run_experiment",
    "sweep_p_vs_rho",
    "emit_qvalue_traces",
    "wilson_interval",
]


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one sweep needs, loadable from a single JSON document."""

    grid: GridSpec = field(default_factory=GridSpec)
    env: EnvConfig = field(default_factory=lambda: EnvConfig(reward_mode="global"))
    agent: tuple[AgentHyperparams, ...] = (AgentHyperparams(),)
    learner: str = "dql"
    n_runs: int = 1
    master_seed: int = 0
    restarts: bool = False
    n_restarts: int = 4
    probe_phases: int = 10
    amc_csv: str | None = None
    amc_xi: float = 4.0
    amc_snr_gap: float = 1.0
    amc_bandwidth_hz: float = 180_000.0
    pn_target_sinr_db: float = 10.0
    tau: float = 0.01
    out_dir: str = "out"

    def __post_init__(self):
        if self.n_runs < 1:
            raise ConfigurationError("n_runs must be >= 1")
        if self.learner not in ("dql", "table"):
            raise ConfigurationError(f"unknown learner {self.learner!r}")
        if isinstance(self.agent, AgentHyperparams):
            object.__setattr__(self, "agent", (self.agent,))
        else:
            object.__setattr__(self, "agent", tuple(self.agent))

    def amc_table(self) -> AmcTable:
        kwargs = dict(xi=self.amc_xi, snr_gap=self.amc_snr_gap,
                      bandwidth_hz=self.amc_bandwidth_hz)
        if self.amc_csv:
            return AmcTable.from_csv(self.amc_csv, **kwargs)
        return AmcTable.default(**kwargs)

    @staticmethod
    def from_dict(doc: dict) -> "ExperimentConfig":
        kwargs: dict = {}
        if "grid" in doc:
            kwargs["grid"] = GridSpec(**doc["grid"])
        if "env" in doc:
            kwargs["env"] = EnvConfig(**doc["env"])
        if "agent" in doc:
            points = doc["agent"]
            if isinstance(points, dict):
                points = [points]
            kwargs["agent"] = tuple(AgentHyperparams(**p) for p in points)
        if "amc" in doc:
            amc = doc["amc"]
            kwargs["amc_csv"] = amc.get("csv")
            for key in ("xi", "snr_gap", "bandwidth_hz"):
                if key in amc:
                    kwargs[f"amc_{key}"] = amc[key]
        for key in ("learner", "n_runs", "master_seed", "restarts",
                    "n_restarts", "probe_phases", "pn_target_sinr_db",
                    "tau", "out_dir"):
            if key in doc:
                kwargs[key] = doc[key]
        try:
            return ExperimentConfig(**kwargs)
        except TypeError as exc:
            raise ConfigurationError(str(exc)) from exc

    @staticmethod
    def from_json_file(path) -> "ExperimentConfig":
        with open(path) as fh:
            return ExperimentConfig.from_dict(json.load(fh))


@dataclass
class RunMetrics:
    """Score card of one Monte Carlo run."""

    run: int
    phases: int
    outcome: str
    reward: float
    joint_policy: tuple[int, ...]
    best_joint_action: tuple[int, ...]
    best_reward: float
    wall_ms: float
    restart_rewards: tuple[float, ...] = ()
    error: str | None = None


def child_seed(master_seed: int, point: int, run: int) -> np.random.SeedSequence:
    """Deterministic per-run stream, independent of execution order."""
    return np.random.SeedSequence([int(master_seed), int(point), int(run)])


def scenario_for_run(config: ExperimentConfig, point: int, run: int) -> Scenario:
    seq = child_seed(config.master_seed, point, run)
    rng = np.random.default_rng(seq.spawn(2)[0])
    return build_scenario(config.grid, config.env, config.amc_table(), rng,
                          pn_target_sinr_db=config.pn_target_sinr_db)


def execute_run(config: ExperimentConfig, point: int, run: int,
                keep_trace: bool = False):
    """One complete run: scenario, oracle, training, scoring."""
    start = time.perf_counter()
    hp = config.agent[point]
    seq = child_seed(config.master_seed, point, run)
    _, train_seq = seq.spawn(2)

    scenario = scenario_for_run(config, point, run)
    oracle = exhaustive_search(scenario, config.env.reward_mode, tau=config.tau)
    if config.restarts:
        trace = run_with_restarts(scenario, hp, train_seq, config.learner,
                                  n_restarts=config.n_restarts,
                                  probe_phases=config.probe_phases,
                                  keep_q=keep_trace)
    else:
        trace = run_learning(scenario, hp, train_seq, config.learner,
                             keep_q=keep_trace)

    joint = trace.joint_policy()
    metrics = RunMetrics(
        run=run,
        phases=hp.n_phases,
        outcome=score_policy(joint, oracle),
        reward=oracle.reward_of(joint),
        joint_policy=joint,
        best_joint_action=oracle.best_joint_action,
        best_reward=oracle.best_reward,
        wall_ms=(time.perf_counter() - start) * 1e3,
        restart_rewards=tuple(trace.restart_rewards),
    )
    if keep_trace:
        return metrics, scenario, oracle, trace
    return metrics


def _run_job(args) -> RunMetrics:
    config, point, run = args
    try:
        return execute_run(config, point, run)
    except Exception as exc:  # record the failure, keep sweeping
        hp = config.agent[point]
        return RunMetrics(run=run, phases=hp.n_phases, outcome="error",
                          reward=float("nan"), joint_policy=(),
                          best_joint_action=(), best_reward=float("nan"),
                          wall_ms=float("nan"), error=repr(exc))


def wilson_interval(successes: int, trials: int, z: float = 1.96):
    """95% score interval for a binomial proportion."""
    if trials == 0:
        return (0.0, 1.0)
    p = successes / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = z * np.sqrt(p * (1.0 - p) / trials + z * z / (4 * trials * trials)) / denom
    return (max(0.0, center - half), min(1.0, center + half))


@dataclass
class ExperimentReport:
    """Aggregated sweep results plus the per-run rows behind them."""

    config: ExperimentConfig
    metrics: list[list[RunMetrics]]       # [point][run]
    wall_ms: dict = field(default_factory=dict)

    def aggregate(self) -> list[dict]:
        points = []
        for point, rows in enumerate(self.metrics):
            n = len(rows)
            counts = {"optimal": 0, "near_optimal": 0, "suboptimal": 0, "error": 0}
            for m in rows:
                counts[m.outcome] += 1
            lo, hi = wilson_interval(counts["optimal"], n)
            points.append({
                "phases": self.config.agent[point].n_phases,
                "runs": n,
                "percent_optimal": 100.0 * counts["optimal"] / n,
                "percent_near_optimal": 100.0 * counts["near_optimal"] / n,
                "ci95_percent_optimal": [100.0 * lo, 100.0 * hi],
                "outcomes": counts,
            })
        return points

    def summary_csv(self) -> str:
        """Deterministic per-run table: run, outcome, reward, phases."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["run", "outcome", "reward", "phases"])
        for rows in self.metrics:
            for m in rows:
                writer.writerow([m.run, m.outcome, repr(float(m.reward)), m.phases])
        return buf.getvalue()

    def report_json(self) -> str:
        doc = {
            "learner": self.config.learner,
            "n_runs": self.config.n_runs,
            "master_seed": self.config.master_seed,
            "restarts": self.config.restarts,
            "points": self.aggregate(),
            "wall_ms": {
                str(point): [m.wall_ms for m in rows]
                for point, rows in enumerate(self.metrics)
            },
        }
        return json.dumps(doc, indent=2)


def run_experiment(config: ExperimentConfig, workers: int = 1) -> ExperimentReport:
    """Run every (phase budget, run index) job and aggregate.

    Jobs are independent; with workers > 1 they execute on a process pool
    and are re-sorted by index, so the report does not depend on the
    schedule.
    """
    jobs = [(config, point, run)
            for point in range(len(config.agent))
            for run in range(config.n_runs)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_job, jobs))
    else:
        results = [_run_job(job) for job in jobs]

    metrics: list[list[RunMetrics]] = [[] for _ in config.agent]
    for (cfg, point, run), m in zip(jobs, results):
        metrics[point].append(m)
    for rows in metrics:
        rows.sort(key=lambda m: m.run)
    return ExperimentReport(config=config, metrics=metrics)


def sweep_p_vs_rho(config: ExperimentConfig, rhos, steps: int = 20_000,
                   run: int = 0) -> dict:
    """Empirical phase-change probability against experimentation rate.

    Uses the oracle's best joint action as the S0-keeping policy on the
    run's scenario and probes each rho with a fresh child stream.
    """
    scenario = scenario_for_run(config, 0, run)
    oracle = exhaustive_search(scenario, config.env.reward_mode, tau=config.tau)
    seq = child_seed(config.master_seed, 0, run)
    streams = seq.spawn(2)[1].spawn(len(rhos))

    rows = []
    for rho, stream in zip(rhos, streams):
        probe = measure_phase_change_probability(
            scenario, oracle.best_joint_action, rho, steps,
            np.random.default_rng(stream))
        lo, hi = wilson_interval(round(probe.p_hat * steps), steps)
        rows.append({"rho": float(rho), "p_hat": probe.p_hat,
                     "ci95": [lo, hi], "steps": steps})
    p_hats = [r["p_hat"] for r in rows]
    return {
        "policy": list(oracle.best_joint_action),
        "rows": rows,
        "nondecreasing": bool(np.all(np.diff(p_hats) >= 0)),
    }


def p_vs_rho_csv(result: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["rho", "p_hat", "ci_lo", "ci_hi", "steps"])
    for row in result["rows"]:
        writer.writerow([repr(row["rho"]), repr(row["p_hat"]),
                         repr(row["ci95"][0]), repr(row["ci95"][1]),
                         row["steps"]])
    return buf.getvalue()


def emit_qvalue_traces(update_records, n_actions: int) -> str:
    """Per-update CSV: step, action, all S0 Q-values, candidate threshold.

    The threshold column is max(Q) - delta at that update, i.e. the
    candidate-set cutoff curve of the Q-evolution plots.
    """
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["step", "action"]
                    + [f"q_{a}" for a in range(n_actions)] + ["threshold"])
    for rec in update_records:
        writer.writerow([rec.step, rec.action]
                        + [repr(float(v)) for v in rec.q_s0]
                        + [repr(rec.threshold)])
    return buf.getvalue()


def phase_trace_jsonl(trace: RunTrace) -> str:
    """One JSON line per (phase, agent) with the boundary bookkeeping."""
    lines = []
    for phase_records in trace.phase_records:
        for agent_idx, rec in enumerate(phase_records):
            doc = {"agent": agent_idx}
            doc.update(rec.to_jsonable())
            lines.append(json.dumps(doc))
    return "\n".join(lines) + "\n"


def step_trace_hook(fh, scenario: Scenario, mode: str | None = None):
    """Step hook writing one JSON line per environment step.

    Records the step index, joint action, per-agent states, rewards and
    |T%| values; pass the result to the run functions' step_hook argument.
    """
    from .environment import reward as reward_fn

    mode = mode or scenario.config.reward_mode
    counter = itertools.count()

    def hook(joint, view):
        fh.write(json.dumps({
            "step": next(counter),
            "joint_action": list(joint),
            "states": view.states.tolist(),
            "rewards": [reward_fn(view, i, mode) for i in range(len(joint))],
            "tpc": view.tpc_magnitudes.tolist(),
        }) + "\n")

    return hook
