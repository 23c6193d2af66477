"""KPM aggregation and the normalised observation matrix.

Rows of the observation are (btx, bfs, rsh, tdp); columns are the slices
followed by the whole cell. Byte rows are normalised by the most the cell
could carry in a frame at the best CQI and clipped to [0, 1].
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .ransim.config import SimConfig
from .ransim.link import CQI_EFFICIENCY, CQI_MAX
from .ransim.simulator import FrameStats

STATE_ROWS = ("btx", "bfs", "rsh", "tdp")
KPM_FIELDS = ("frame", "ue", "slice", "btx", "tdp", "delivered", "bfs", "prbs", "rsh", "thr")


@dataclass(frozen=True)
class KpmRecord:
    """Per-UE KPMs of one frame (or of a smoothing window).

    ``thr`` and ``offered`` are rates in bit/s; ``btx``, ``tdp`` and
    ``delivered`` are bytes per frame; ``bfs`` and ``rsh`` are fractions.
    """

    frame: int
    slice_of: np.ndarray
    n_slices: int
    btx: np.ndarray
    bfs: np.ndarray
    rsh: np.ndarray
    tdp: np.ndarray
    thr: np.ndarray
    offered: np.ndarray
    delivered: np.ndarray
    prbs: np.ndarray
    frame_duration: float = 0.01

    @property
    def n_ues(self) -> int:
        return len(self.slice_of)

    def members(self, j: int) -> np.ndarray:
        return np.flatnonzero(self.slice_of == j)

    def _sum(self, values) -> np.ndarray:
        return np.bincount(self.slice_of, weights=values, minlength=self.n_slices)

    def _mean(self, values) -> np.ndarray:
        counts = np.bincount(self.slice_of, minlength=self.n_slices)
        sums = self._sum(values)
        return np.divide(sums, counts, out=np.zeros(self.n_slices), where=counts > 0)

    @property
    def slice_btx(self) -> np.ndarray:
        return self._sum(self.btx)

    @property
    def slice_tdp(self) -> np.ndarray:
        return self._sum(self.tdp)

    @property
    def slice_bfs(self) -> np.ndarray:
        return self._mean(self.bfs)

    @property
    def slice_rsh(self) -> np.ndarray:
        return self._sum(self.rsh)

    @property
    def slice_thr(self) -> np.ndarray:
        return self._sum(self.thr)

    @property
    def slice_offered(self) -> np.ndarray:
        return self._sum(self.offered)

    @property
    def cell_rsh(self) -> float:
        return float(self.rsh.sum())


def collect(stats: FrameStats) -> KpmRecord:
    duration = stats.frame_duration
    available = stats.prbs_available
    rsh = stats.prbs / available if available > 0 else np.zeros(stats.n_ues)
    return KpmRecord(
        frame=stats.frame,
        slice_of=np.asarray(stats.slice_of),
        n_slices=stats.n_slices,
        btx=stats.btx.astype(float),
        bfs=stats.bfs.astype(float),
        rsh=rsh,
        tdp=stats.tdp.astype(float),
        thr=stats.delivered * 8 / duration,
        offered=stats.arrivals * 8 / duration,
        delivered=stats.delivered.astype(float),
        prbs=stats.prbs.astype(float),
        frame_duration=duration,
    )


def smooth(records: Sequence[KpmRecord]) -> KpmRecord:
    """Average rates over a window of frames; instantaneous fields come from the last frame."""
    if not records:
        raise ValueError("need at least one record")
    last = records[-1]
    if len(records) == 1:
        return last
    thr = np.mean([r.thr for r in records], axis=0)
    offered = np.mean([r.offered for r in records], axis=0)
    return replace(last, thr=thr, offered=offered)


def max_cell_rate(config: SimConfig) -> float:
    """Peak downlink rate of the cell (best CQI, every PRB, TDD duty applied)."""
    return CQI_EFFICIENCY[CQI_MAX] * config.num_prbs * config.prb_bandwidth * config.dl_duty


def build_state(record: KpmRecord, max_rate: float) -> np.ndarray:
    """4 x (J+1) observation with entries in [0, 1]."""
    J = record.n_slices
    state = np.zeros((4, J + 1))
    max_bytes = max_rate * record.frame_duration / 8
    if max_bytes > 0:
        state[0, :J] = np.clip(record.slice_btx / max_bytes, 0, 1)
        state[3, :J] = np.clip(record.slice_tdp / max_bytes, 0, 1)
    state[1, :J] = np.clip(record.slice_bfs, 0, 1)
    state[2, :J] = np.clip(record.slice_rsh, 0, 1)
    state[0, J] = min(1.0, state[0, :J].sum())
    state[1, J] = float(np.clip(record.bfs.mean(), 0, 1)) if record.n_ues else 0.0
    state[2, J] = min(1.0, state[2, :J].sum())
    state[3, J] = min(1.0, state[3, :J].sum())
    return state


class StateBuilder(TransformerMixin, BaseEstimator):
    """Transform KPM records into stacked observation matrices.

    Parameters
    ----------
    max_rate : float or None
        Normalisation rate in bit/s. When None, ``fit`` derives it from
        ``config`` (or the default :class:`SimConfig`).
    config : SimConfig or None
    """

    def __init__(self, max_rate=None, config=None):
        self.max_rate = max_rate
        self.config = config

    def fit(self, records=None, y=None):
        if self.max_rate is not None:
            if self.max_rate < 0:
                raise ValueError("max_rate must be >= 0")
            self.max_rate_ = float(self.max_rate)
        else:
            self.max_rate_ = max_cell_rate(self.config or SimConfig())
        if records is not None:
            records = list(records)
            if records:
                self.n_slices_ = records[0].n_slices
        return self

    def transform(self, records: Iterable[KpmRecord]) -> np.ndarray:
        if not hasattr(self, "max_rate_"):
            from sklearn.exceptions import NotFittedError

            raise NotFittedError("StateBuilder is not fitted yet; call fit first")
        records = list(records)
        if not records:
            return np.zeros((0, 4, 0))
        n = records[0].n_slices
        if any(r.n_slices != n for r in records):
            raise ValueError("all records must have the same number of slices")
        return np.stack([build_state(r, self.max_rate_) for r in records])


def kpm_rows(record: KpmRecord):
    """CSV rows: one per UE, then one per slice, then the cell."""
    for i in range(record.n_ues):
        yield (record.frame, i, int(record.slice_of[i]), record.btx[i], record.tdp[i], record.delivered[i],
               record.bfs[i], record.prbs[i], record.rsh[i], record.thr[i])
    dl = record._sum(record.delivered)
    prbs = record._sum(record.prbs)
    for j in range(record.n_slices):
        yield (record.frame, "all", j, record.slice_btx[j], record.slice_tdp[j], dl[j],
               record.slice_bfs[j], prbs[j], record.slice_rsh[j], record.slice_thr[j])
    yield (record.frame, "all", "cell", record.btx.sum(), record.tdp.sum(), record.delivered.sum(),
           record.bfs.mean(), record.prbs.sum(), record.rsh.sum(), record.thr.sum())


def write_kpm_csv(path, records: Iterable[KpmRecord]):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(KPM_FIELDS)
        for record in records:
            writer.writerows(kpm_rows(record))
