"""Insufficient-resources alarm raised towards the non-real-time controller."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

from ..reward import RewardSpec

FULL_ALLOCATION_TOL = 1e-9


@dataclass(frozen=True)
class AlarmEvent:
    frame: int
    slice_index: int
    slice_name: str
    predicate: str
    vrsla: float
    p_final: float
    max_final: float
    window: int

    def to_json(self) -> str:
        return json.dumps({"event": "insufficient_resources", **asdict(self)}, sort_keys=True)


class AlarmMonitor:
    """Streaming detector.

    An alarm fires when an outage predicate of a slice has been violated
    for ``window`` consecutive frames while that slice already held its
    largest achievable share. Each (slice, predicate) pair fires at most once.
    """

    def __init__(self, spec: RewardSpec, names: Sequence[str], window: int = 50):
        if window < 1:
            raise ValueError("window must be >= 1")
        self.spec = spec
        self.names = tuple(names)
        self.window = window
        self._run: dict[tuple[int, int], int] = {}
        self._fired: set[tuple[int, int]] = set()
        self.events: list[AlarmEvent] = []

    def clear_streaks(self):
        self._run.clear()

    def update(self, frame: int, p_final, max_final, outcome) -> list[AlarmEvent]:
        new = []
        for j, s in enumerate(self.spec.slices):
            if s.reliability is None:
                continue
            at_max = p_final[j] >= max_final[j] - FULL_ALLOCATION_TOL
            for i, predicate in enumerate(s.outage):
                key = (j, i)
                rate = outcome.vrsla_out[j][i]
                if at_max and rate > s.tolerance:
                    self._run[key] = self._run.get(key, 0) + 1
                else:
                    self._run[key] = 0
                if self._run[key] >= self.window and key not in self._fired:
                    self._fired.add(key)
                    event = AlarmEvent(frame, j, self.names[j], predicate.to_text(), float(rate),
                                       float(p_final[j]), float(max_final[j]), self.window)
                    self.events.append(event)
                    new.append(event)
        return new


def detect_insufficient_resources(history: Iterable, spec: RewardSpec, names: Sequence[str],
                                  window: int = 50) -> list[AlarmEvent]:
    """Replay a list of step records (``frame``, ``p_final``, ``max_final``, ``outcome``)."""
    monitor = AlarmMonitor(spec, names, window)
    for rec in history:
        monitor.update(rec.frame, rec.p_final, rec.max_final, rec.outcome)
    return monitor.events


def write_alarm_log(path, events: Iterable[AlarmEvent]):
    with open(path, "w", encoding="utf-8") as fh:
        for event in events:
            fh.write(event.to_json() + "\n")


def read_alarm_log(path) -> list[AlarmEvent]:
    events = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                doc = json.loads(line)
                doc.pop("event", None)
                events.append(AlarmEvent(**doc))
    return events
