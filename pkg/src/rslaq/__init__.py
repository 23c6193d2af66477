"""SLA-aware RAN slicing: a seeded slice simulator and a double deep Q-learning xApp."""

from .actions import ActionSpace, AllocationPlan, Composition, SchedulerKind, compose_allocation, static_share
from .policy import A1Policy, KpiPredicate, PolicyError, parse_a1_policy
from .reward import RewardOutcome, RewardSpec, compute_reward
from .telemetry import KpmRecord, StateBuilder

__version__ = "0.1.0"

__all__ = [
    "A1Policy", "ActionSpace", "AllocationPlan", "Composition", "KpiPredicate", "KpmRecord", "PolicyError",
    "RewardOutcome", "RewardSpec", "SchedulerKind", "StateBuilder", "compose_allocation", "compute_reward",
    "parse_a1_policy", "static_share",
]
