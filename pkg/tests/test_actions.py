from __future__ import annotations

from math import comb

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import brute_force_action_count, brute_force_compositions
from rslaq.actions import (ActionSpace, Composition, SchedulerKind, compose_allocation, compositions,
                           enumerate_actions, n_actions, static_share)

P_STA = np.array([0.3333, 0.4000, 0.2667]) * 0.5


@pytest.mark.parametrize("J, expected", [(1, 3), (2, 33), (3, 198)])
def test_counts(J, expected):
    assert len(ActionSpace(J)) == expected


@pytest.mark.parametrize("J", [1, 2, 3, 4, 5])
def test_closed_form_matches_brute_force(J):
    assert n_actions(J) == comb(J + 9, J - 1) * 3 == brute_force_action_count(J) == len(ActionSpace(J))


@pytest.mark.parametrize("J", [1, 2, 3, 4])
def test_composition_order_is_lexicographic(J):
    assert compositions(J) == brute_force_compositions(J)


def test_single_scheduler_space():
    space = enumerate_actions(3, [SchedulerKind.PF])
    assert len(space) == 66
    assert {a.scheduler for a in space} == {SchedulerKind.PF}


def test_j1_actions_take_the_whole_pool():
    assert [a.q.tolist() for a in ActionSpace(1)] == [[1.0]] * 3


def test_invalid_slice_count():
    with pytest.raises(ValueError):
        ActionSpace(0)
    with pytest.raises(ValueError):
        compositions(0)


def test_id_zero_and_order():
    space = ActionSpace(3)
    a0 = space.action_from_id(0)
    assert a0.composition.tenths == (0, 0, 10) and a0.scheduler is SchedulerKind.RR
    assert [space[i].scheduler for i in range(3)] == [SchedulerKind.RR, SchedulerKind.PF, SchedulerKind.BCQI]
    assert space.action_from_id(197).composition.tenths == (10, 0, 0)


def test_round_trip_all_ids():
    space = ActionSpace(3)
    assert [space.id_from_action(space.action_from_id(i)) for i in range(198)] == list(range(198))


@pytest.mark.parametrize("bad", [198, -1])
def test_out_of_range(bad):
    with pytest.raises(IndexError):
        ActionSpace(3).action_from_id(bad)


def test_non_integer_id():
    with pytest.raises(TypeError):
        ActionSpace(3).action_from_id(1.0)


def test_unknown_action():
    with pytest.raises(ValueError):
        ActionSpace(2).id_from_action(((5, 5), "XYZ"))


def test_csv_table():
    lines = ActionSpace(3).to_csv().splitlines()
    assert lines[0] == "id,q1_tenths,q2_tenths,q3_tenths,scheduler"
    assert len(lines) == 199
    assert lines[1] == "0,0,0,10,RR"


class TestStaticShare:
    def test_example_weights(self):
        assert static_share([0.3333, 0.4000, 0.2667]) == pytest.approx([0.1667, 0.2, 0.1333], abs=1e-4)

    def test_single(self):
        assert static_share([1.0]).tolist() == [0.5]

    def test_zero_weight(self):
        assert static_share([0.0, 1.0])[0] == 0.0

    def test_bad_sum(self):
        with pytest.raises(ValueError):
            static_share([0.5, 0.6])


class TestComposeAllocation:
    def test_embb_max(self):
        plan = compose_allocation([1, 0, 0], [0.1667, 0.2, 0.1333])
        assert plan.p_final == pytest.approx([0.6667, 0.2, 0.1333])

    def test_urllc_max(self):
        plan = compose_allocation([0, 1, 0], [0.1667, 0.2, 0.1333])
        assert plan.p_final[1] == pytest.approx(0.7)

    def test_uneven_tenths(self):
        # 0.1667 + 0.4 * 0.5, 0.2 + 0.3 * 0.5, 0.1333 + 0.3 * 0.5
        plan = compose_allocation(Composition((4, 3, 3)), [0.1667, 0.2, 0.1333])
        assert plan.p_final == pytest.approx([0.3667, 0.35, 0.2833])
        assert plan.p_final.sum() == pytest.approx(1.0)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            compose_allocation([1, 0], [0.1667, 0.2, 0.1333])

    def test_off_grid(self):
        with pytest.raises(ValueError):
            Composition.from_fractions([0.55, 0.45])

    def test_bad_tenths(self):
        with pytest.raises(ValueError):
            Composition((5, 6))


@given(st.integers(1, 5).flatmap(lambda J: st.tuples(
    st.just(J), st.lists(st.integers(1, 50), min_size=J, max_size=J), st.data())))
def test_allocation_bounds(args):
    J, raw, data = args
    weights = np.array(raw, dtype=float) / sum(raw)
    p_sta = static_share(weights)
    space = ActionSpace(J)
    action = space[data.draw(st.integers(0, len(space) - 1))]
    assert sum(action.composition.tenths) == 10
    plan = compose_allocation(action.composition, p_sta)
    assert abs(plan.p_final.sum() - 1.0) <= 1e-9
    assert np.all(plan.p_final >= plan.p_sta - 1e-12)
    assert np.all(plan.p_final <= plan.p_sta + 0.5 + 1e-12)
    assert np.all((plan.p_opt >= 0) & (plan.p_opt <= 0.5))
    assert plan.max_final == pytest.approx(p_sta + 0.5)
