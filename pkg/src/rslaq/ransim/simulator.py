"""Slot-level downlink simulator of one TDD cell with a slice-aware MAC."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..actions import AllocationPlan, SchedulerKind
from .config import ArrivalModel, Roster, SimConfig, UeSpec
from .link import CQI_EFFICIENCY, CQI_MAX, CQI_MIN

TRACE_FIELDS = ("frame", "ue", "slice", "btx", "tdp", "delivered", "bfs", "prbs")
PF_THROUGHPUT_FLOOR = 1.0  # bit/s, avoids division by zero before the first grant


@dataclass
class HarqBlock:
    nbytes: int
    n_prbs: int
    retx: int = 0


@dataclass
class FrameStats:
    """Per-UE counters for one frame (all byte counts are integers).

    ``prbs`` weights special-slot PRBs by their downlink fraction;
    ``prbs_available`` is the matching weighted budget of the frame.
    """

    frame: int
    slice_of: np.ndarray
    n_slices: int
    arrivals: np.ndarray
    btx: np.ndarray
    tdp: np.ndarray
    delivered: np.ndarray
    buffer_start: np.ndarray
    buffer_end: np.ndarray
    buffer_capacity: np.ndarray
    prbs: np.ndarray
    prbs_raw: np.ndarray
    prbs_available: float
    slot_grants: np.ndarray  # (scheduled slots, n_slices) raw PRB grants per slice
    cqi: np.ndarray
    frame_duration: float
    p_final: np.ndarray = field(default_factory=lambda: np.zeros(0))
    scheduler: SchedulerKind | None = None

    @property
    def n_ues(self) -> int:
        return len(self.slice_of)

    @property
    def bfs(self) -> np.ndarray:
        return self.buffer_end / self.buffer_capacity

    def slice_sum(self, values: np.ndarray) -> np.ndarray:
        return np.bincount(self.slice_of, weights=values, minlength=self.n_slices)

    def trace_rows(self):
        for i in range(self.n_ues):
            yield (self.frame, i, int(self.slice_of[i]), int(self.btx[i]), int(self.tdp[i]),
                   int(self.delivered[i]), float(self.bfs[i]), float(self.prbs[i]))


class RanSimulator:
    """Deterministic, seeded simulator of one cell.

    Each call to :meth:`step_frame` advances ``slots_per_frame`` slots. In
    every slot traffic arrives, CQIs random-walk, and downlink (or special)
    slots are scheduled: pending HARQ retransmissions first, then each
    remaining PRB is drawn for a slice from ``Categorical(p_final)`` and
    handed to an eligible UE of that slice by the intra-slice scheduler.
    """

    def __init__(self, config: SimConfig, roster: Roster | Sequence[UeSpec]):
        if not isinstance(roster, Roster):
            roster = Roster(tuple(roster))
        self.config = config
        self.roster = roster
        self.n_ues = len(roster)
        self.n_slices = roster.n_slices
        self.slice_of = np.array(roster.slice_of, dtype=np.int64)
        self.members = [roster.members(j) for j in range(self.n_slices)]

        cap = [u.buffer_capacity or config.buffer_capacity for u in roster.ues]
        self.capacity = np.array(cap, dtype=np.int64)
        span = [config.cqi_walk_span if u.cqi_span is None else u.cqi_span for u in roster.ues]
        self.cqi_lo = np.array([max(CQI_MIN, u.cqi - s) for u, s in zip(roster.ues, span)], dtype=np.int64)
        self.cqi_hi = np.array([min(CQI_MAX, u.cqi + s) for u, s in zip(roster.ues, span)], dtype=np.int64)
        self.bytes_per_slot = np.array([u.rate * config.slot_duration / 8 for u in roster.ues])
        self.poisson = np.array([u.arrival is ArrivalModel.POISSON for u in roster.ues])
        self._prb_bytes_scale = config.prb_bandwidth * config.slot_duration / 8
        self._pf_alpha = min(1.0, config.slot_duration / config.pf_time_constant)

        seeds = np.random.SeedSequence(config.seed).spawn(4)
        self.rng_traffic, self.rng_channel, self.rng_sched, self.rng_harq = (np.random.default_rng(s) for s in seeds)
        self.reset()

    # ------------------------------------------------------------------ state
    def reset(self):
        """Restore buffers, CQIs, HARQ state and counters (RNG streams continue)."""
        self.slot = 0
        self.frame = 0
        self.buffer = [0] * self.n_ues
        self.credit = [0.0] * self.n_ues
        self.cqi = [u.cqi for u in self.roster.ues]
        self.harq: list[list[HarqBlock]] = [[] for _ in range(self.n_ues)]
        self.pending = [0] * self.n_ues
        self.thr_ewma = [0.0] * self.n_ues
        self.rr_next = [0] * self.n_slices
        return self

    @property
    def buffer_bytes(self) -> np.ndarray:
        return np.array(self.buffer, dtype=np.int64)

    # ---------------------------------------------------------------- traffic
    def generate_traffic(self, counters):
        arrivals, tdp = counters["arrivals"], counters["tdp"]
        if self.poisson.any():
            draws = self.rng_traffic.poisson(self.bytes_per_slot)
        for i in range(self.n_ues):
            if self.poisson[i]:
                n = int(draws[i])
            else:
                c = self.credit[i] + self.bytes_per_slot[i]
                n = int(c)
                self.credit[i] = c - n
            if n == 0:
                continue
            arrivals[i] += n
            room = int(self.capacity[i]) - self.buffer[i]
            accepted = n if n <= room else room
            self.buffer[i] += accepted
            tdp[i] += n - accepted

    def update_channel(self):
        p = self.config.cqi_walk_step_prob
        if p == 0:
            return
        u = self.rng_channel.random(self.n_ues)
        for i in range(self.n_ues):
            if u[i] < p:
                step = -1 if u[i] < p / 2 else 1
                self.cqi[i] = int(min(self.cqi_hi[i], max(self.cqi_lo[i], self.cqi[i] + step)))

    # ------------------------------------------------------------------- link
    def transmit(self, ue: int, nbytes: int, n_prbs: int, counters, block: HarqBlock | None = None) -> bool:
        """Send one transport block; returns ``True`` on success.

        A failed first transmission occupies a HARQ process until it is
        retransmitted; a block that fails ``max_retransmissions`` times is
        discarded and counted as dropped.
        """
        cfg = self.config
        counters["btx"][ue] += nbytes
        bler = cfg.initial_bler if block is None else cfg.retx_bler
        if self.rng_harq.random() >= bler:
            self.buffer[ue] -= nbytes
            counters["delivered"][ue] += nbytes
            if block is not None:
                self.harq[ue].remove(block)
                self.pending[ue] -= nbytes
            return True
        if block is None:
            if cfg.max_retransmissions > 0:
                self.harq[ue].append(HarqBlock(nbytes, n_prbs))
                self.pending[ue] += nbytes
                return False
        else:
            block.retx += 1
            if block.retx < cfg.max_retransmissions:
                return False
            self.harq[ue].remove(block)
            self.pending[ue] -= nbytes
        self.buffer[ue] -= nbytes
        counters["tdp"][ue] += nbytes
        return False

    # -------------------------------------------------------------- scheduler
    def schedule_slot(self, p_final: Sequence[float], sch: SchedulerKind, counters=None) -> list[int]:
        """Schedule the current slot and transmit; returns raw PRB grants per UE."""
        if counters is None:
            counters = self._new_counters()
        cfg = self.config
        grants = [0] * self.n_ues
        frac = cfg.dl_fraction(self.slot)
        if frac == 0:
            return grants
        remaining = cfg.num_prbs
        limit = cfg.rb_allocation_limit

        # stage 1: HARQ retransmissions, at most one per UE per TTI
        retransmitting = [False] * self.n_ues
        for ue in range(self.n_ues):
            if not self.harq[ue]:
                continue
            block = self.harq[ue][0]
            need = block.n_prbs
            if need > remaining or need > limit:
                continue
            remaining -= need
            grants[ue] += need
            retransmitting[ue] = True
            self.transmit(ue, block.nbytes, need, counters, block=block)

        # stage 2: probabilistic slice draw per PRB, then intra-slice pick
        new_prbs = [0] * self.n_ues
        unsent = [self.buffer[i] - self.pending[i] for i in range(self.n_ues)]
        eff = [CQI_EFFICIENCY[c] for c in self.cqi]
        scale = self._prb_bytes_scale * frac

        def eligible(ue):
            if retransmitting[ue] or len(self.harq[ue]) >= cfg.harq_processes:
                return False
            n = new_prbs[ue]
            if grants[ue] >= limit:
                return False
            return unsent[ue] > math.floor(eff[ue] * n * scale)

        candidates = []
        for j in range(self.n_slices):
            members = self.members[j]
            if sch is SchedulerKind.RR:
                start = self.rr_next[j] % len(members) if members else 0
                order = members[start:] + members[:start]
            elif sch is SchedulerKind.BCQI:
                order = sorted(members, key=lambda i: (-self.cqi[i], i))
            else:
                order = sorted(members, key=lambda i: (-eff[i] / max(self.thr_ewma[i], PF_THROUGHPUT_FLOOR), i))
            candidates.append([i for i in order if eligible(i)])

        p = [max(float(x), 0.0) for x in p_final]
        if remaining > 0 and any(candidates):
            draws = self.rng_sched.random(remaining)
            for k in range(remaining):
                active = [j for j in range(self.n_slices) if candidates[j]]
                if not active:
                    break
                weighted = [j for j in active if p[j] > 0]
                if weighted:
                    u = draws[k] * sum(p[j] for j in weighted)
                    chosen = weighted[-1]
                    acc = 0.0
                    for j in weighted:
                        acc += p[j]
                        if u < acc:
                            chosen = j
                            break
                else:
                    chosen = active[min(int(draws[k] * len(active)), len(active) - 1)]
                queue = candidates[chosen]
                ue = queue[0]
                grants[ue] += 1
                new_prbs[ue] += 1
                if sch is SchedulerKind.RR:
                    queue.pop(0)
                    members = self.members[chosen]
                    self.rr_next[chosen] = (members.index(ue) + 1) % len(members)
                    if eligible(ue):
                        queue.append(ue)
                elif not eligible(ue):
                    queue.pop(0)

        for ue in range(self.n_ues):
            n = new_prbs[ue]
            if n:
                tb = min(unsent[ue], math.floor(eff[ue] * n * scale))
                if tb > 0:
                    self.transmit(ue, tb, n, counters)
        return grants

    # ------------------------------------------------------------------ frame
    def _new_counters(self):
        n = self.n_ues
        return {k: [0] * n for k in ("arrivals", "btx", "tdp", "delivered")}

    def step_frame(self, plan: AllocationPlan | Sequence[float], sch: SchedulerKind | str) -> FrameStats:
        cfg = self.config
        p_final = np.asarray(plan.p_final if isinstance(plan, AllocationPlan) else plan, dtype=float)
        if p_final.shape != (self.n_slices,):
            raise ValueError(f"plan has shape {p_final.shape}, expected ({self.n_slices},)")
        if np.any(p_final < -1e-12) or abs(p_final.sum() - 1.0) > 1e-6:
            raise ValueError(f"slice proportions must be non-negative and sum to 1, got {p_final.sum():.6f}")
        sch = SchedulerKind(sch)

        counters = self._new_counters()
        buffer_start = self.buffer_bytes
        prbs = np.zeros(self.n_ues)
        prbs_raw = np.zeros(self.n_ues, dtype=np.int64)
        available = 0.0
        slot_grants = []
        for _ in range(cfg.slots_per_frame):
            self.generate_traffic(counters)
            self.update_channel()
            frac = cfg.dl_fraction(self.slot)
            delivered_before = list(counters["delivered"])
            if frac > 0:
                g = np.array(self.schedule_slot(p_final, sch, counters), dtype=np.int64)
                prbs_raw += g
                prbs += g * frac
                available += cfg.num_prbs * frac
                slot_grants.append(np.bincount(self.slice_of, weights=g, minlength=self.n_slices).astype(np.int64))
            a = self._pf_alpha
            for i in range(self.n_ues):
                rate = (counters["delivered"][i] - delivered_before[i]) * 8 / cfg.slot_duration
                self.thr_ewma[i] = (1 - a) * self.thr_ewma[i] + a * rate
            self.slot += 1

        stats = FrameStats(
            frame=self.frame,
            slice_of=self.slice_of,
            n_slices=self.n_slices,
            arrivals=np.array(counters["arrivals"], dtype=np.int64),
            btx=np.array(counters["btx"], dtype=np.int64),
            tdp=np.array(counters["tdp"], dtype=np.int64),
            delivered=np.array(counters["delivered"], dtype=np.int64),
            buffer_start=buffer_start,
            buffer_end=self.buffer_bytes,
            buffer_capacity=self.capacity,
            prbs=prbs,
            prbs_raw=prbs_raw,
            prbs_available=available,
            slot_grants=np.array(slot_grants, dtype=np.int64).reshape(-1, self.n_slices),
            cqi=np.array(self.cqi, dtype=np.int64),
            frame_duration=cfg.frame_duration,
            p_final=p_final.copy(),
            scheduler=sch,
        )
        self.frame += 1
        return stats


def write_trace(path, frames: Sequence[FrameStats]):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_FIELDS)
        for stats in frames:
            writer.writerows(stats.trace_rows())
