"""Closed-loop environment: one step is one 10 ms frame under one control decision."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from ..actions import ActionSpace, AllocationPlan, Composition, SchedulerKind, compose_allocation, static_share
from ..ransim.simulator import RanSimulator
from ..reward import RewardOutcome, RewardSpec, compute_reward
from ..telemetry import KpmRecord, build_state, collect, max_cell_rate, smooth
from .scenarios import Scenario


@dataclass(frozen=True)
class StepRecord:
    frame: int
    episode: int
    action: int | None
    scheduler: SchedulerKind
    p_final: np.ndarray
    max_final: np.ndarray
    record: KpmRecord
    outcome: RewardOutcome


def default_composition(n_slices: int) -> Composition:
    """Dynamic pool split as evenly as the tenths grid allows."""
    base, extra = divmod(10, n_slices)
    return Composition(tuple(base + (1 if j < extra else 0) for j in range(n_slices)))


class RanSlicingEnv:
    """Reset/step wrapper around the simulator, telemetry and reward.

    ``step(action_id)`` returns ``(state, outcome)``. In episodic mode
    (the default, used for training) a terminal outcome must be followed by
    ``reset()``; evaluation runs use ``episodic=False`` and keep stepping.
    ``sla_aware=False`` scores every frame with the optimisation reward only.
    """

    def __init__(self, scenario: Scenario, seed: int | None = None, sla_aware: bool = True, episodic: bool = True,
                 keep_history: bool = True):
        self.scenario = scenario
        seed = scenario.seed if seed is None else seed
        self.config = scenario.sim.with_overrides(seed=seed)
        self.sim = RanSimulator(self.config, scenario.roster())
        self.max_rate = max_cell_rate(self.config)
        self.spec = RewardSpec.from_policy(scenario.policy, self.max_rate, demand_slack=scenario.demand_slack)
        self.action_space = ActionSpace(scenario.n_slices)
        self.p_sta = static_share(scenario.policy.weights)
        self.sla_aware = sla_aware
        self.episodic = episodic
        self.keep_history = keep_history
        self.history: list[StepRecord] = []
        self.episode = 0
        self._window: deque[KpmRecord] = deque(maxlen=scenario.smoothing_frames)
        self._needs_reset = False
        self.last_record: KpmRecord | None = None
        self.reset()
        self.episode = 0

    @property
    def n_actions(self) -> int:
        return self.action_space.n

    @property
    def n_slices(self) -> int:
        return self.scenario.n_slices

    @property
    def state_shape(self) -> tuple[int, int]:
        return (4, self.n_slices + 1)

    @property
    def default_action(self) -> int:
        return self.action_space.id_from_action((default_composition(self.n_slices), SchedulerKind.RR))

    def reset(self) -> np.ndarray:
        """Restore initial buffers, CQIs and counters; control returns to the default action."""
        self.sim.reset()
        self._window.clear()
        self._needs_reset = False
        self.episode += 1
        self.control = (self.plan_for(self.default_action), SchedulerKind.RR)
        return np.zeros(self.state_shape)

    def plan_for(self, action_id: int) -> AllocationPlan:
        action = self.action_space.action_from_id(action_id)
        return compose_allocation(action.composition, self.p_sta)

    def step(self, action_id: int):
        action = self.action_space.action_from_id(action_id)
        plan = compose_allocation(action.composition, self.p_sta)
        return self._advance(plan.p_final, action.scheduler, int(action_id))

    def apply(self, p_final, scheduler: SchedulerKind | str):
        """Run one frame with an arbitrary slice split (used by static baselines)."""
        return self._advance(np.asarray(p_final, dtype=float), SchedulerKind(scheduler), None)

    def _advance(self, p_final: np.ndarray, sch: SchedulerKind, action_id: int | None):
        if self._needs_reset:
            raise RuntimeError("episode ended with a terminal outcome; call reset() before step()")
        stats = self.sim.step_frame(p_final, sch)
        record = collect(stats)
        self._window.append(record)
        outcome = compute_reward(smooth(list(self._window)), self.spec, sch, sla_aware=self.sla_aware)
        state = build_state(record, self.max_rate)
        if self.keep_history:
            self.history.append(StepRecord(len(self.history), self.episode, action_id, sch, p_final,
                                           self.p_sta + 0.5, record, outcome))
        self.last_record = record
        self.control = (p_final, sch)
        if self.episodic and outcome.terminal:
            self._needs_reset = True
        return state, outcome
