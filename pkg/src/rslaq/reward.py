"""SLA-aware reward: optimisation term, violation rates and terminal logic."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .actions import SchedulerKind
from .policy import A1Policy, Comparator, KpiPredicate, Metric, OptimizationKpi, Scope
from .telemetry import KpmRecord

DEFAULT_DEMAND_SLACK = 0.75
DEFAULT_COST = {SchedulerKind.RR: 1.0, SchedulerKind.PF: 2.0, SchedulerKind.BCQI: 2.0}
REWARD_FIELDS = ("step", "value", "kind", "phi", "rho", "h", "cost")


class OutcomeKind(str, Enum):
    NORMAL = "normal"
    SOFT_TERMINAL = "soft_terminal"
    OUTAGE_TERMINAL = "outage_terminal"


@dataclass(frozen=True)
class SliceReward:
    weight: float
    optimization: OptimizationKpi = OptimizationKpi.MAXIMIZE_MEAN_THROUGHPUT
    outage: tuple[KpiPredicate, ...] = ()
    soft: tuple[KpiPredicate, ...] = ()
    reliability: float | None = None

    @property
    def tolerance(self) -> float:
        """Largest violation rate that is still compliant."""
        return 0.0 if self.reliability is None else 1.0 - self.reliability


@dataclass(frozen=True)
class RewardSpec:
    """Everything the reward needs besides the KPMs.

    ``demand_slack``: a minimum-throughput target is capped at this fraction
    of the traffic actually offered, so a lightly loaded slice is not in
    outage merely because it has nothing to send. Bytes that arrive during
    uplink slots wait for the next frame, so a frame can deliver only about
    80 % of what arrived in it; hence the default of 0.75. ``None`` disables
    the cap.
    """

    slices: tuple[SliceReward, ...]
    max_rate: float
    cost: dict = field(default_factory=lambda: dict(DEFAULT_COST))
    demand_slack: float | None = DEFAULT_DEMAND_SLACK

    def __post_init__(self):
        total = sum(s.weight for s in self.slices)
        if abs(total - 1.0) > 1e-6:
            raise ValueError(f"slice weights must sum to 1, got {total:.6f}")
        if self.max_rate <= 0:
            raise ValueError("max_rate must be > 0")

    @classmethod
    def from_policy(cls, policy: A1Policy, max_rate: float, **kwargs) -> "RewardSpec":
        slices = []
        for s in policy.slices:
            sla = s.sla
            slices.append(SliceReward(
                weight=s.weight,
                optimization=s.optimization_kpi,
                outage=sla.outage_kpis if sla else (),
                soft=sla.soft_kpis if sla else (),
                reliability=sla.reliability if sla else None,
            ))
        return cls(tuple(slices), max_rate, **kwargs)

    @property
    def weights(self) -> np.ndarray:
        return np.array([s.weight for s in self.slices])

    @property
    def n_slices(self) -> int:
        return len(self.slices)


@dataclass(frozen=True)
class RewardOutcome:
    value: float
    kind: OutcomeKind
    phi: np.ndarray
    rho: np.ndarray
    vrsla_out: tuple[tuple[float, ...], ...]
    vrsla_soft: tuple[tuple[float, ...], ...]
    h: np.ndarray
    cost: float

    @property
    def terminal(self) -> bool:
        return self.kind is not OutcomeKind.NORMAL


def _values(metric: Metric, record: KpmRecord, scope: Scope, j: int):
    if scope is Scope.PER_UE:
        idx = record.members(j)
        if metric is Metric.THROUGHPUT:
            return record.thr[idx], record.offered[idx]
        if metric is Metric.BUFFER_OCCUPANCY:
            return record.bfs[idx], None
        return record.tdp[idx], None
    if metric is Metric.THROUGHPUT:
        return record.slice_thr[j], record.slice_offered[j]
    if metric is Metric.BUFFER_OCCUPANCY:
        return record.slice_bfs[j], None
    return record.slice_tdp[j], None


def vrsla(j: int, predicate: KpiPredicate, record: KpmRecord, demand_slack: float | None = DEFAULT_DEMAND_SLACK) -> float:
    """Fraction of slice ``j``'s UEs violating a per-UE predicate, or 0/1 for a per-slice one."""
    values, offered = _values(predicate.metric, record, predicate.scope, j)
    values = np.asarray(values, dtype=float)
    if predicate.scope is Scope.PER_UE and values.size == 0:
        return 0.0
    violated = predicate.violated(values)
    if (demand_slack is not None and offered is not None
            and predicate.comparator is Comparator.BELOW_IS_VIOLATION):
        violated = violated & (values < demand_slack * np.asarray(offered, dtype=float))
    return float(np.mean(violated))


def _indicator(j: int, predicates, tolerance: float, record: KpmRecord, demand_slack):
    rates = tuple(vrsla(j, p, record, demand_slack) for p in predicates)
    return int(any(r > tolerance for r in rates)), rates


def outage_indicator(j: int, spec: RewardSpec, record: KpmRecord) -> int:
    s = spec.slices[j]
    if s.reliability is None:
        return 0
    return _indicator(j, s.outage, s.tolerance, record, spec.demand_slack)[0]


def soft_indicator(j: int, spec: RewardSpec, record: KpmRecord) -> int:
    s = spec.slices[j]
    return _indicator(j, s.soft, s.tolerance, record, spec.demand_slack)[0]


def optimization_terms(record: KpmRecord, spec: RewardSpec) -> np.ndarray:
    """Per-slice KPI to optimise, each in [0, 1]."""
    h = np.zeros(spec.n_slices)
    for j, s in enumerate(spec.slices):
        idx = record.members(j)
        if s.optimization is OptimizationKpi.MINIMIZE_MAX_BUFFER:
            worst = float(record.bfs[idx].max()) if idx.size else 0.0
            h[j] = math.exp(-worst)
        elif idx.size:
            h[j] = float(np.clip(record.thr[idx] / spec.max_rate, 0, 1).mean())
    return h


def scheduler_cost(spec: RewardSpec, sch: SchedulerKind) -> float:
    return float(spec.cost[SchedulerKind(sch)])


def r_opt(record: KpmRecord, spec: RewardSpec, sch: SchedulerKind) -> float:
    h = optimization_terms(record, spec)
    return float(spec.weights @ h + 1.0 / scheduler_cost(spec, sch))


def compute_reward(record: KpmRecord, spec: RewardSpec, sch: SchedulerKind, sla_aware: bool = True) -> RewardOutcome:
    """Outage dominates: it is checked before soft violations.

    With ``sla_aware=False`` the outcome is always ``normal`` with value
    ``r_opt`` (the SLA-unaware optimiser baseline).
    """
    if record.n_slices != spec.n_slices:
        raise ValueError(f"record has {record.n_slices} slices, spec has {spec.n_slices}")
    J = spec.n_slices
    phi = np.zeros(J, dtype=int)
    rho = np.zeros(J, dtype=int)
    v_out, v_soft = [], []
    for j, s in enumerate(spec.slices):
        if s.reliability is not None:
            phi[j], rates = _indicator(j, s.outage, s.tolerance, record, spec.demand_slack)
        else:
            rates = tuple(vrsla(j, p, record, spec.demand_slack) for p in s.outage)
        v_out.append(rates)
        rho[j], rates = _indicator(j, s.soft, s.tolerance, record, spec.demand_slack)
        v_soft.append(rates)
    h = optimization_terms(record, spec)
    cost = scheduler_cost(spec, sch)
    if sla_aware and phi.any():
        value, kind = -float(phi @ spec.weights), OutcomeKind.OUTAGE_TERMINAL
    elif sla_aware and rho.any():
        value, kind = 0.0, OutcomeKind.SOFT_TERMINAL
    else:
        value, kind = float(spec.weights @ h + 1.0 / cost), OutcomeKind.NORMAL
    return RewardOutcome(value, kind, phi, rho, tuple(v_out), tuple(v_soft), h, cost)


def _vec(values) -> str:
    return " ".join(repr(float(v)) if isinstance(v, (float, np.floating)) else str(int(v)) for v in values)


def write_reward_csv(path, outcomes: Sequence[RewardOutcome]):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(REWARD_FIELDS)
        for step, o in enumerate(outcomes):
            writer.writerow((step, repr(o.value), o.kind.value, _vec(o.phi), _vec(o.rho), _vec(o.h), repr(o.cost)))
