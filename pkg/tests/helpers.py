from __future__ import annotations

import numpy as np

from rslaq.harness.scenarios import load_scenario
from rslaq.reward import RewardSpec
from rslaq.telemetry import KpmRecord

# default roster of the presets: 5 eMBB, 5 URLLC, 10 MTC
SLICE_OF = np.array([0] * 5 + [1] * 5 + [2] * 10)
MAX_RATE = 25e6


def make_record(slice_of=SLICE_OF, n_slices=None, thr=None, bfs=None, offered=None, btx=None, tdp=None, rsh=None,
                frame=0) -> KpmRecord:
    slice_of = np.asarray(slice_of)
    n = len(slice_of)
    n_slices = int(slice_of.max()) + 1 if n_slices is None else n_slices

    def arr(x, fill=0.0):
        return np.full(n, fill, dtype=float) if x is None else np.asarray(x, dtype=float)

    thr = arr(thr)
    delivered = thr * 0.01 / 8
    return KpmRecord(frame, slice_of, n_slices, arr(btx, 0.0) if btx is not None else delivered.copy(), arr(bfs),
                     arr(rsh), arr(tdp), thr, arr(offered, 1e9), delivered, arr(rsh))


def preset_spec(name="normal", max_rate=MAX_RATE, **kwargs) -> RewardSpec:
    scenario = load_scenario(name)
    kwargs.setdefault("demand_slack", scenario.demand_slack)
    return RewardSpec.from_policy(scenario.policy, max_rate, **kwargs)
