"""Controllers, training and evaluation runs, and the comparison table."""

from __future__ import annotations

import csv
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ..actions import SchedulerKind
from ..agent import DDQLAgent
from ..reward import RewardOutcome, write_reward_csv
from ..telemetry import KpmRecord, write_kpm_csv
from .alarm import AlarmEvent, AlarmMonitor, write_alarm_log
from .env import RanSlicingEnv
from .scenarios import Scenario

logger = logging.getLogger(__name__)

CONTROLLERS = ("rslaq", "opt", "rr", "pf", "bcqi")
REPORT_FIELDS = ("controller", "scenario", "slice", "mean_thr_bps", "mean_bfs", "outage_frames", "soft_frames",
                 "reliability")
EVAL_SEED_OFFSET = 1000
DEFAULT_EVAL_FRAMES = 500


class AgentController:
    """Greedy (epsilon = 0) play of a trained agent."""

    def __init__(self, agent: DDQLAgent, name: str = "rslaq"):
        self.agent = agent
        self.name = name

    def step(self, env: RanSlicingEnv, state):
        return env.step(self.agent.act(state))


class StaticController:
    """Fixed slice split equal to the operator weights and a fixed scheduler."""

    def __init__(self, scheduler: SchedulerKind | str):
        self.scheduler = SchedulerKind(scheduler.upper() if isinstance(scheduler, str) else scheduler)
        self.name = self.scheduler.value.lower()

    def step(self, env: RanSlicingEnv, state):
        return env.apply(env.scenario.policy.weights, self.scheduler)


def make_controller(name: str, checkpoint=None):
    name = name.lower()
    if name in ("rr", "pf", "bcqi"):
        return StaticController(name)
    if name in ("rslaq", "opt"):
        if checkpoint is None:
            raise ValueError(f"controller {name!r} needs a checkpoint")
        path = Path(checkpoint)
        if not path.is_file():
            raise FileNotFoundError(f"checkpoint {str(path)!r} not found")
        return AgentController(DDQLAgent.load(path), name)
    raise ValueError(f"unknown controller {name!r}; choose from {', '.join(CONTROLLERS)}")


@dataclass
class TrainingResult:
    agent: DDQLAgent
    rewards: np.ndarray
    alarms: list[AlarmEvent]
    outcomes: list[RewardOutcome]
    sla_aware: bool
    wall_clock: float

    @property
    def last_mean(self) -> float:
        tail = self.rewards[-50:]
        return float(tail.mean()) if tail.size else float("nan")


def agent_params(scenario: Scenario, seed: int, **overrides) -> dict:
    params = dict(scenario.agent)
    params.update({k: v for k, v in overrides.items() if v is not None})
    params.setdefault("random_state", seed)
    return params


def run_training(scenario: Scenario, seed: int | None = None, sla_aware: bool = True, out_dir=None,
                 prefix: str | None = None, **overrides) -> TrainingResult:
    """Train an agent on ``scenario``; ``sla_aware=False`` trains the Opt baseline.

    When ``out_dir`` is given, writes ``<prefix>.npz``, ``<prefix>_train_log.csv``,
    ``<prefix>_reward.csv`` and ``<prefix>_alarms.ndjson``.
    """
    seed = scenario.seed if seed is None else seed
    agent = DDQLAgent(**agent_params(scenario, seed, **overrides))
    env = RanSlicingEnv(scenario, seed=seed, sla_aware=sla_aware, episodic=agent.reset_on_terminal)
    start = time.perf_counter()
    agent.fit(env)
    wall = time.perf_counter() - start
    monitor = AlarmMonitor(env.spec, scenario.policy.names, scenario.alarm_window)
    episode = None
    for rec in env.history:
        if rec.episode != episode:
            # a reset restores empty buffers, so violation streaks do not carry over
            monitor.clear_streaks()
            episode = rec.episode
        monitor.update(rec.frame, rec.p_final, rec.max_final, rec.outcome)
    result = TrainingResult(agent, agent.rewards_, monitor.events, [r.outcome for r in env.history], sla_aware,
                            wall)
    logger.info("trained %s on %s in %.1fs, last-50 mean reward %.3f", "rslaq" if sla_aware else "opt",
                scenario.name, wall, result.last_mean)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        prefix = prefix or ("rslaq" if sla_aware else "opt")
        agent.save(out / f"{prefix}.npz")
        agent.write_log(out / f"{prefix}_train_log.csv")
        write_reward_csv(out / f"{prefix}_reward.csv", result.outcomes)
        write_alarm_log(out / f"{prefix}_alarms.ndjson", result.alarms)
    return result


@dataclass
class RunReport:
    controller: str
    scenario: str
    slice_names: tuple[str, ...]
    frames: int
    outage_frames: np.ndarray
    soft_frames: np.ndarray
    mean_thr: np.ndarray
    mean_bfs: np.ndarray
    mean_h: np.ndarray
    rewards: np.ndarray
    alarms: list[AlarmEvent] = field(default_factory=list)
    records: list[KpmRecord] = field(default_factory=list)
    outcomes: list[RewardOutcome] = field(default_factory=list)
    wall_clock: float = 0.0

    @property
    def reliability(self) -> np.ndarray:
        """1 - outage_frames / frames per slice; NaN (undefined) for an empty run."""
        if self.frames == 0:
            return np.full(len(self.slice_names), np.nan)
        return 1.0 - self.outage_frames / self.frames

    @property
    def reliability_defined(self) -> bool:
        return self.frames > 0

    def rows(self):
        rel = self.reliability
        for j, name in enumerate(self.slice_names):
            yield (self.controller, self.scenario, name, repr(float(self.mean_thr[j])), repr(float(self.mean_bfs[j])),
                   int(self.outage_frames[j]), int(self.soft_frames[j]),
                   "" if np.isnan(rel[j]) else repr(float(rel[j])))


def run_eval(controller, scenario: Scenario, frames: int = DEFAULT_EVAL_FRAMES, seed: int | None = None,
             keep_records: bool = True) -> RunReport:
    """Run ``frames`` frames without resets and score every frame with the SLA reward."""
    if frames < 0:
        raise ValueError("frames must be >= 0")
    seed = scenario.seed + EVAL_SEED_OFFSET if seed is None else seed
    env = RanSlicingEnv(scenario, seed=seed, sla_aware=True, episodic=False, keep_history=False)
    J = scenario.n_slices
    monitor = AlarmMonitor(env.spec, scenario.policy.names, scenario.alarm_window)
    outage = np.zeros(J, dtype=int)
    soft = np.zeros(J, dtype=int)
    thr = np.zeros(J)
    bfs = np.zeros(J)
    h = np.zeros(J)
    rewards, records, outcomes = [], [], []
    state = env.reset()
    start = time.perf_counter()
    for frame in range(frames):
        state, outcome = controller.step(env, state)
        record = env.last_record
        p_final, _ = env.control
        monitor.update(frame, p_final, env.p_sta + 0.5, outcome)
        outage += outcome.phi
        soft += outcome.rho
        thr += record.slice_thr
        bfs += record.slice_bfs
        h += outcome.h
        rewards.append(outcome.value)
        outcomes.append(outcome)
        if keep_records:
            records.append(record)
    n = max(frames, 1)
    return RunReport(controller.name, scenario.name, scenario.policy.names, frames, outage, soft, thr / n, bfs / n,
                     h / n, np.array(rewards), monitor.events, records, outcomes, time.perf_counter() - start)


def write_report_csv(path, reports: Sequence[RunReport]):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(REPORT_FIELDS)
        for report in reports:
            writer.writerows(report.rows())


def write_run_outputs(out_dir, report: RunReport):
    """Report, per-frame KPMs, reward trace and alarm log of one evaluation run."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = f"{report.controller}_{report.scenario}"
    write_report_csv(out / f"{stem}_report.csv", [report])
    write_kpm_csv(out / f"{stem}_kpm.csv", report.records)
    write_reward_csv(out / f"{stem}_reward.csv", report.outcomes)
    write_alarm_log(out / f"{stem}_alarms.ndjson", report.alarms)


@dataclass
class Comparison:
    scenario: Scenario
    reports: list[RunReport]
    training: dict[str, TrainingResult]

    def report(self, name: str) -> RunReport:
        return next(r for r in self.reports if r.controller == name)


def compare(scenario: Scenario, frames: int = DEFAULT_EVAL_FRAMES, seed: int | None = None, out_dir=None,
            checkpoints: dict | None = None, **overrides) -> Comparison:
    """Train (or load) RSLAQ and Opt, then evaluate all five controllers on the same fresh seed."""
    seed = scenario.seed if seed is None else seed
    checkpoints = checkpoints or {}
    training: dict[str, TrainingResult] = {}
    controllers = []
    for name, aware in (("rslaq", True), ("opt", False)):
        if checkpoints.get(name):
            controllers.append(make_controller(name, checkpoints[name]))
            continue
        result = run_training(scenario, seed=seed, sla_aware=aware, out_dir=out_dir, prefix=name, **overrides)
        training[name] = result
        controllers.append(AgentController(result.agent, name))
    controllers += [StaticController(s) for s in ("rr", "pf", "bcqi")]
    eval_seed = seed + EVAL_SEED_OFFSET
    reports = [run_eval(c, scenario, frames, eval_seed) for c in controllers]
    if out_dir is not None:
        out = Path(out_dir)
        write_report_csv(out / "report.csv", reports)
        write_alarm_log(out / "alarms.ndjson", [e for r in reports if r.controller == "rslaq" for e in r.alarms])
        for report in reports:
            write_run_outputs(out / "runs", report)
    return Comparison(scenario, reports, training)
