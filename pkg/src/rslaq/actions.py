"""Discrete action set: dynamic-pool compositions crossed with a scheduler.

Half of the PRBs are split statically by operator weight; the other half
(the dynamic pool) is split in tenths according to the chosen composition.
Action ids follow a canonical order: compositions ascending
lexicographically on their integer tenths, then scheduler ``RR < PF < BCQI``.
Id 0 is therefore ``(0, ..., 0, 10)`` with round robin.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from enum import Enum
from math import comb
from typing import Iterable, Sequence

import numpy as np

GRID = 10
STATIC_FRACTION = 0.5
DYNAMIC_FRACTION = 0.5


class SchedulerKind(str, Enum):
    RR = "RR"
    PF = "PF"
    BCQI = "BCQI"

    @property
    def order(self) -> int:
        return _SCHEDULER_ORDER[self]


_SCHEDULER_ORDER = {SchedulerKind.RR: 0, SchedulerKind.PF: 1, SchedulerKind.BCQI: 2}
ALL_SCHEDULERS = (SchedulerKind.RR, SchedulerKind.PF, SchedulerKind.BCQI)


@dataclass(frozen=True)
class Composition:
    """Split of the dynamic pool, stored as integer tenths summing to 10."""

    tenths: tuple[int, ...]

    def __post_init__(self):
        if any(t < 0 or t > GRID for t in self.tenths) or sum(self.tenths) != GRID:
            raise ValueError(f"composition tenths must be in [0, {GRID}] and sum to {GRID}, got {self.tenths}")

    @classmethod
    def from_fractions(cls, q: Sequence[float]) -> "Composition":
        tenths = tuple(int(round(x * GRID)) for x in q)
        if not np.allclose(np.asarray(tenths) / GRID, q, atol=1e-9):
            raise ValueError(f"{list(q)} is not on the 0.1 grid")
        return cls(tenths)

    @property
    def q(self) -> np.ndarray:
        return np.asarray(self.tenths, dtype=float) / GRID

    def __len__(self):
        return len(self.tenths)


@dataclass(frozen=True)
class Action:
    id: int
    composition: Composition
    scheduler: SchedulerKind

    @property
    def q(self) -> np.ndarray:
        return self.composition.q


@dataclass(frozen=True)
class AllocationPlan:
    p_sta: np.ndarray
    p_opt: np.ndarray
    p_final: np.ndarray

    @property
    def max_final(self) -> np.ndarray:
        """Largest share each slice could get: its static share plus the whole pool."""
        return self.p_sta + DYNAMIC_FRACTION


def compositions(n_slices: int) -> list[tuple[int, ...]]:
    """All ways to write 10 as an ordered sum of ``n_slices`` non-negative parts, ascending."""
    if n_slices < 1:
        raise ValueError("need at least one slice")
    out: list[tuple[int, ...]] = []

    def rec(prefix: list[int], remaining: int, slots: int):
        if slots == 1:
            out.append(tuple(prefix + [remaining]))
            return
        for t in range(remaining + 1):
            rec(prefix + [t], remaining - t, slots - 1)

    rec([], GRID, n_slices)
    return out


def n_actions(n_slices: int, n_schedulers: int = 3) -> int:
    return comb(n_slices + GRID - 1, n_slices - 1) * n_schedulers


class ActionSpace:
    """Immutable, enumerated action set for ``n_slices`` slices."""

    def __init__(self, n_slices: int, schedulers: Iterable[SchedulerKind] = ALL_SCHEDULERS):
        if n_slices < 1:
            raise ValueError("n_slices must be >= 1")
        scheds = sorted({SchedulerKind(s) for s in schedulers}, key=lambda s: s.order)
        if not scheds:
            raise ValueError("at least one scheduler is required")
        self.n_slices = n_slices
        self.schedulers = tuple(scheds)
        self._compositions = [Composition(t) for t in compositions(n_slices)]
        self._comp_index = {c.tenths: i for i, c in enumerate(self._compositions)}
        self._sched_index = {s: i for i, s in enumerate(self.schedulers)}
        self._actions = tuple(
            Action(i * len(self.schedulers) + k, c, s)
            for i, c in enumerate(self._compositions)
            for k, s in enumerate(self.schedulers)
        )

    def __len__(self):
        return len(self._actions)

    def __iter__(self):
        return iter(self._actions)

    def __getitem__(self, action_id: int) -> Action:
        return self.action_from_id(action_id)

    @property
    def n(self) -> int:
        return len(self._actions)

    def action_from_id(self, action_id: int) -> Action:
        if isinstance(action_id, (bool, np.bool_)) or not isinstance(action_id, (int, np.integer)):
            raise TypeError(f"action id must be an integer, got {action_id!r}")
        if not 0 <= action_id < len(self._actions):
            raise IndexError(f"action id {action_id} out of range [0, {len(self._actions)})")
        return self._actions[int(action_id)]

    def id_from_action(self, action: Action | tuple) -> int:
        if isinstance(action, Action):
            comp, sched = action.composition, action.scheduler
        else:
            comp, sched = action
        if not isinstance(comp, Composition):
            comp = Composition(tuple(comp))
        try:
            return self._comp_index[comp.tenths] * len(self.schedulers) + self._sched_index[SchedulerKind(sched)]
        except KeyError:
            raise ValueError(f"{comp.tenths}/{sched} is not in this action space") from None

    def find(self, tenths: Sequence[int], scheduler: SchedulerKind | str) -> int:
        return self.id_from_action((Composition(tuple(tenths)), SchedulerKind(scheduler)))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["id"] + [f"q{j + 1}_tenths" for j in range(self.n_slices)] + ["scheduler"])
        for a in self._actions:
            writer.writerow([a.id, *a.composition.tenths, a.scheduler.value])
        return buf.getvalue()


def enumerate_actions(n_slices: int, schedulers: Iterable[SchedulerKind] = ALL_SCHEDULERS) -> ActionSpace:
    return ActionSpace(n_slices, schedulers)


def static_share(weights: Sequence[float]) -> np.ndarray:
    """Static half of the PRBs split by operator weight."""
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise ValueError("weights must be a non-empty vector")
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-6:
        raise ValueError(f"weights must be non-negative and sum to 1, got {w.sum():.6f}")
    return w * STATIC_FRACTION


def compose_allocation(q: Composition | Sequence[float], p_sta: Sequence[float]) -> AllocationPlan:
    if not isinstance(q, Composition):
        q = Composition.from_fractions(q)
    p_sta = np.asarray(p_sta, dtype=float)
    if p_sta.shape != (len(q),):
        raise ValueError(f"composition has {len(q)} slices but p_sta has shape {p_sta.shape}")
    if abs(p_sta.sum() - STATIC_FRACTION) > 1e-6:
        raise ValueError(f"static shares must sum to {STATIC_FRACTION}, got {p_sta.sum():.6f}")
    p_opt = q.q * DYNAMIC_FRACTION
    return AllocationPlan(p_sta.copy(), p_opt, p_sta + p_opt)

