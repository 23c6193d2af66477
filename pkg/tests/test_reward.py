from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from helpers import MAX_RATE, SLICE_OF, make_record, preset_spec
from oracles import hand_reward
from rslaq.actions import SchedulerKind
from rslaq.policy import Comparator, KpiPredicate, Metric, Scope
from rslaq.reward import (OutcomeKind, RewardSpec, SliceReward, compute_reward, optimization_terms,
                          outage_indicator, r_opt, scheduler_cost, soft_indicator, vrsla, write_reward_csv)

BFS_3PCT = KpiPredicate(Metric.BUFFER_OCCUPANCY, Scope.PER_UE, Comparator.ABOVE_IS_VIOLATION, 0.03)
MIN_10M = KpiPredicate(Metric.THROUGHPUT, Scope.PER_SLICE, Comparator.BELOW_IS_VIOLATION, 10e6)
EMBB, URLLC, MTC = 0, 1, 2


def embb_thr(total):
    thr = np.zeros(20)
    thr[:5] = total / 5
    return thr


def urllc_bfs(*values):
    bfs = np.zeros(20)
    bfs[5:5 + len(values)] = values
    return bfs


class TestVrsla:
    def test_two_of_five(self):
        assert vrsla(URLLC, BFS_3PCT, make_record(bfs=urllc_bfs(0.05, 0.2, 0.01))) == 0.4

    def test_slice_below_minimum(self):
        assert vrsla(EMBB, MIN_10M, make_record(thr=embb_thr(8e6))) == 1.0

    def test_no_violation(self):
        assert vrsla(URLLC, BFS_3PCT, make_record()) == 0.0

    def test_empty_slice(self):
        rec = make_record(slice_of=[0, 0], n_slices=2)
        assert vrsla(1, BFS_3PCT, rec) == 0.0

    def test_light_demand_is_not_an_outage(self):
        # 40 kbit/s delivered is well over 75 % of a 50 kbit/s offer
        offered = np.full(20, 1e9)
        offered[:5] = 1e4
        rec = make_record(thr=embb_thr(4e4), offered=offered)
        assert vrsla(EMBB, MIN_10M, rec) == 0.0
        assert vrsla(EMBB, MIN_10M, rec, demand_slack=None) == 1.0


class TestIndicators:
    def _spec(self, reliability):
        s = SliceReward(1.0, outage=(BFS_3PCT,), reliability=reliability)
        return RewardSpec((s,), MAX_RATE)

    def test_rate_above_tolerance(self):
        rec = make_record(slice_of=[0] * 5, bfs=[0.05, 0.2, 0, 0, 0])
        assert outage_indicator(0, self._spec(0.99), rec) == 1

    def test_zero_rate(self):
        rec = make_record(slice_of=[0] * 5)
        assert outage_indicator(0, self._spec(0.5), rec) == 0

    def test_rate_within_tolerance(self):
        bfs = np.zeros(200)
        bfs[0] = 0.5
        rec = make_record(slice_of=[0] * 200, bfs=bfs)
        assert vrsla(0, BFS_3PCT, rec) == 0.005
        assert outage_indicator(0, self._spec(0.99), rec) == 0

    def test_no_policy_slice(self):
        spec = preset_spec()
        assert outage_indicator(MTC, spec, make_record()) == 0

    def test_soft_max_exceeded(self):
        assert soft_indicator(EMBB, preset_spec(), make_record(thr=embb_thr(16e6))) == 1

    def test_soft_max_respected(self):
        assert soft_indicator(EMBB, preset_spec(), make_record(thr=embb_thr(12e6))) == 0

    def test_empty_soft_set(self):
        assert soft_indicator(URLLC, preset_spec(), make_record(bfs=urllc_bfs(0.9))) == 0


class TestOptimisation:
    def test_empty_urllc_buffers(self):
        assert optimization_terms(make_record(), preset_spec())[URLLC] == 1.0

    @pytest.mark.parametrize("sch, term", [(SchedulerKind.RR, 1.0), (SchedulerKind.PF, 0.5),
                                           (SchedulerKind.BCQI, 0.5)])
    def test_cost_term(self, sch, term):
        spec = preset_spec()
        assert 1.0 / scheduler_cost(spec, sch) == term

    def test_worked_example(self):
        spec = preset_spec()
        thr = np.zeros(20)
        thr[:5] = 0.5 * MAX_RATE
        thr[10:] = 0.25 * MAX_RATE
        rec = make_record(thr=thr, bfs=urllc_bfs(0.01, 0.03, 0.0))
        value = r_opt(rec, spec, SchedulerKind.PF)
        assert value == pytest.approx(hand_reward(spec.weights, [0.5, None, 0.25], 0.03, 2.0), abs=1e-12)
        assert value == pytest.approx(1.121512, abs=1e-6)
        # four-decimal reference value for this example (rounded up in the last digit)
        assert value == pytest.approx(1.1216, abs=1e-4)

    def test_throughput_term_is_clipped(self):
        thr = np.zeros(20)
        thr[:5] = 10 * MAX_RATE
        assert optimization_terms(make_record(thr=thr), preset_spec())[EMBB] == 1.0


class TestComputeReward:
    def test_urllc_outage_only(self):
        out = compute_reward(make_record(thr=embb_thr(12e6), bfs=urllc_bfs(0.5)), preset_spec(), SchedulerKind.RR)
        assert out.kind is OutcomeKind.OUTAGE_TERMINAL and out.terminal
        assert out.value == pytest.approx(-0.4)
        assert out.phi.tolist() == [0, 1, 0]

    def test_soft_only(self):
        out = compute_reward(make_record(thr=embb_thr(16e6)), preset_spec(), SchedulerKind.PF)
        assert out.kind is OutcomeKind.SOFT_TERMINAL and out.terminal and out.value == 0.0

    def test_outage_masks_soft(self):
        out = compute_reward(make_record(thr=embb_thr(16e6), bfs=urllc_bfs(0.5)), preset_spec(), SchedulerKind.PF)
        assert out.kind is OutcomeKind.OUTAGE_TERMINAL and out.rho[EMBB] == 1

    def test_no_violation(self):
        rec = make_record(thr=embb_thr(12e6))
        out = compute_reward(rec, preset_spec(), SchedulerKind.RR)
        assert out.kind is OutcomeKind.NORMAL and not out.terminal
        assert out.value == pytest.approx(r_opt(rec, preset_spec(), SchedulerKind.RR)) and out.value > 0

    def test_sla_unaware(self):
        rec = make_record(thr=embb_thr(2e6), bfs=urllc_bfs(0.5))
        out = compute_reward(rec, preset_spec(), SchedulerKind.RR, sla_aware=False)
        assert out.kind is OutcomeKind.NORMAL and out.value > 0 and out.phi.sum() == 2

    def test_slice_count_mismatch(self):
        with pytest.raises(ValueError):
            compute_reward(make_record(slice_of=[0, 1]), preset_spec(), SchedulerKind.RR)

    def test_weights_must_sum_to_one(self):
        with pytest.raises(ValueError):
            RewardSpec((SliceReward(0.5), SliceReward(0.6)), MAX_RATE)


# ------------------------------------------------------------- properties
rates = arrays(float, 20, elements=st.floats(0, 4e7, allow_nan=False))
fractions = arrays(float, 20, elements=st.floats(0, 1, allow_nan=False))
schedulers = st.sampled_from(list(SchedulerKind))
scenario_names = st.sampled_from(["low_traffic", "normal", "stressed"])


@given(rates, fractions, rates, schedulers, scenario_names)
def test_sign_trichotomy(thr, bfs, offered, sch, scenario):
    spec = preset_spec(scenario)
    out = compute_reward(make_record(thr=thr, bfs=bfs, offered=offered), spec, sch)
    if out.kind is OutcomeKind.OUTAGE_TERMINAL:
        assert out.value < 0 and out.value == pytest.approx(-float(out.phi @ spec.weights))
        assert out.value >= -1
    elif out.kind is OutcomeKind.SOFT_TERMINAL:
        assert out.value == 0
    else:
        assert 0 < out.value <= 1 + spec.weights.sum()
    assert (out.value < 0) == (out.kind is OutcomeKind.OUTAGE_TERMINAL)
    assert (out.value == 0) == (out.kind is OutcomeKind.SOFT_TERMINAL)
    assert set(out.phi.tolist()) <= {0, 1} and set(out.rho.tolist()) <= {0, 1}
    for rates_j in out.vrsla_out + out.vrsla_soft:
        assert all(0 <= r <= 1 for r in rates_j)
    assert np.all((out.h >= 0) & (out.h <= 1))


@given(rates, fractions, st.integers(0, 19), st.floats(0, 1e7), schedulers)
def test_throughput_monotone(thr, bfs, ue, bump, sch):
    spec = preset_spec()
    if SLICE_OF[ue] == URLLC:
        return
    base = r_opt(make_record(thr=thr, bfs=bfs), spec, sch)
    thr2 = thr.copy()
    thr2[ue] += bump
    assert r_opt(make_record(thr=thr2, bfs=bfs), spec, sch) >= base - 1e-12


@given(rates, fractions, st.integers(5, 9), st.floats(0, 1), schedulers)
def test_urllc_buffer_monotone(thr, bfs, ue, bump, sch):
    spec = preset_spec()
    base = r_opt(make_record(thr=thr, bfs=bfs), spec, sch)
    bfs2 = bfs.copy()
    bfs2[ue] = min(1.0, bfs2[ue] + bump)
    assert r_opt(make_record(thr=thr, bfs=bfs2), spec, sch) <= base + 1e-12


@given(rates, fractions, rates, schedulers, st.permutations([0, 1, 2]))
def test_slice_relabelling_invariance(thr, bfs, offered, sch, perm):
    spec = preset_spec()
    # slice j of the original becomes slice perm[j]
    inverse = np.argsort(perm)
    relabelled = RewardSpec(tuple(spec.slices[inverse[k]] for k in range(3)), spec.max_rate,
                            demand_slack=spec.demand_slack)
    slice_of = np.array([perm[j] for j in SLICE_OF])
    a = compute_reward(make_record(thr=thr, bfs=bfs, offered=offered), spec, sch)
    b = compute_reward(make_record(slice_of=slice_of, thr=thr, bfs=bfs, offered=offered), relabelled, sch)
    assert a.kind is b.kind
    assert a.value == pytest.approx(b.value, abs=1e-12)
    assert np.allclose(b.h[list(perm)], a.h)


def test_reward_csv(tmp_path):
    spec = preset_spec()
    outs = [compute_reward(make_record(thr=embb_thr(t)), spec, SchedulerKind.RR) for t in (5e6, 12e6, 16e6)]
    path = tmp_path / "reward.csv"
    write_reward_csv(path, outs)
    lines = path.read_text().splitlines()
    assert lines[0] == "step,value,kind,phi,rho,h,cost"
    assert [ln.split(",")[2] for ln in lines[1:]] == ["outage_terminal", "normal", "soft_terminal"]
    assert math.isclose(float(lines[1].split(",")[1]), outs[0].value)
