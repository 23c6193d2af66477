from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from enum import Enum

from .link import CQI_MAX, CQI_MIN


class ArrivalModel(str, Enum):
    CBR = "cbr"
    POISSON = "poisson"


@dataclass(frozen=True)
class SimConfig:
    """Radio, frame and link-model settings for one TDD cell.

    ``tdd_pattern`` is one TDD period, one character per slot: ``D``
    downlink, ``S`` special (``special_dl_symbols`` of ``symbols_per_slot``
    carry downlink data) and ``U`` uplink. The default ``DDSUU`` repeated
    twice per 10 ms frame gives 2 * (2 + 8/14) effective downlink slots.
    """

    num_prbs: int = 50
    prb_bandwidth: float = 180e3
    subcarrier_spacing: float = 15e3
    slot_duration: float = 1e-3
    slots_per_frame: int = 10
    tdd_pattern: str = "DDSUU"
    special_dl_symbols: int = 8
    symbols_per_slot: int = 14
    carrier_frequency: float = 2.59e9
    rb_allocation_limit: int = 50
    buffer_capacity: int = 200_000
    initial_bler: float = 0.1
    retx_bler: float = 0.01
    harq_processes: int = 16
    max_retransmissions: int = 1
    cqi_walk_step_prob: float = 0.01
    cqi_walk_span: int = 1
    pf_time_constant: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.num_prbs <= 0:
            raise ValueError("num_prbs must be > 0")
        if not self.tdd_pattern or set(self.tdd_pattern) - set("DSU"):
            raise ValueError(f"tdd_pattern must be a non-empty string over 'D', 'S', 'U', got {self.tdd_pattern!r}")
        if not any(self.slot_is_dl(i) for i in range(self.slots_per_frame)):
            raise ValueError("the frame must contain at least one downlink slot")
        if not 0 <= self.special_dl_symbols <= self.symbols_per_slot:
            raise ValueError("special_dl_symbols must lie in [0, symbols_per_slot]")
        for name in ("initial_bler", "retx_bler", "cqi_walk_step_prob"):
            if not 0 <= getattr(self, name) <= 1:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.rb_allocation_limit < 1 or self.harq_processes < 1 or self.max_retransmissions < 0:
            raise ValueError("rb_allocation_limit and harq_processes must be >= 1, max_retransmissions >= 0")
        if self.buffer_capacity <= 0:
            raise ValueError("buffer_capacity must be > 0")
        if self.cqi_walk_span < 0:
            raise ValueError("cqi_walk_span must be >= 0")

    @property
    def tdd_period(self) -> float:
        return len(self.tdd_pattern) * self.slot_duration

    @property
    def frame_duration(self) -> float:
        return self.slots_per_frame * self.slot_duration

    def slot_kind(self, slot: int) -> str:
        return self.tdd_pattern[slot % len(self.tdd_pattern)]

    def dl_fraction(self, slot: int) -> float:
        kind = self.slot_kind(slot)
        if kind == "D":
            return 1.0
        if kind == "S":
            return self.special_dl_symbols / self.symbols_per_slot
        return 0.0

    def slot_is_dl(self, slot: int) -> bool:
        return self.dl_fraction(slot) > 0

    @property
    def effective_dl_slots(self) -> float:
        """Downlink capacity per frame expressed in full-slot equivalents."""
        return sum(self.dl_fraction(i) for i in range(self.slots_per_frame))

    @property
    def dl_duty(self) -> float:
        return self.effective_dl_slots / self.slots_per_frame

    def with_overrides(self, **overrides) -> "SimConfig":
        known = {f.name for f in fields(self)}
        unknown = set(overrides) - known
        if unknown:
            raise ValueError(f"unknown SimConfig fields: {sorted(unknown)}")
        return replace(self, **overrides)


@dataclass(frozen=True)
class UeSpec:
    """One user: its slice, starting CQI and offered downlink load."""

    slice_index: int
    cqi: int
    rate: float = 0.0
    arrival: ArrivalModel = ArrivalModel.CBR
    buffer_capacity: int | None = None
    cqi_span: int | None = None

    def __post_init__(self):
        if not CQI_MIN <= self.cqi <= CQI_MAX:
            raise ValueError(f"cqi must be in [{CQI_MIN}, {CQI_MAX}]")
        if self.rate < 0:
            raise ValueError("offered rate must be >= 0")
        if self.slice_index < 0:
            raise ValueError("slice_index must be >= 0")
        object.__setattr__(self, "arrival", ArrivalModel(self.arrival))


@dataclass(frozen=True)
class Roster:
    ues: tuple[UeSpec, ...]
    n_slices: int = field(default=0)

    def __post_init__(self):
        if not self.ues:
            raise ValueError("roster must contain at least one UE")
        n = max(u.slice_index for u in self.ues) + 1
        if self.n_slices == 0:
            object.__setattr__(self, "n_slices", n)
        elif self.n_slices < n:
            raise ValueError("n_slices smaller than the highest slice index in the roster")

    def __len__(self):
        return len(self.ues)

    def members(self, j: int) -> list[int]:
        return [i for i, u in enumerate(self.ues) if u.slice_index == j]

    @property
    def slice_of(self) -> list[int]:
        return [u.slice_index for u in self.ues]
