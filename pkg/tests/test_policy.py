from __future__ import annotations

import json
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rslaq.policy import (A1Policy, Comparator, KpiPredicate, Metric, OptimizationKpi, PolicyError,
                          PolicyValidationError, Scope, SliceClass, UnsupportedKpiError, UnsupportedKpiWarning,
                          evaluate_predicate, parse_a1_policy, parse_percent, parse_predicate, parse_rate,
                          policy_from_dict, serialize_a1_policy, weights_from_priorities)


def _doc(slices):
    return json.dumps({"network_slices": slices})


class TestParse:
    def test_example_document(self, example_policy_path):
        with pytest.warns(UnsupportedKpiWarning):
            policy = parse_a1_policy(example_policy_path.read_text())
        assert policy.names == ["URLLC", "eMBB", "MTC"]
        assert policy.weights == pytest.approx([0.40, 0.37, 0.23])
        embb = policy.slices[1]
        assert len(embb.sla.soft_kpis) == 1
        soft = embb.sla.soft_kpis[0]
        assert (soft.metric, soft.scope, soft.comparator) == (Metric.THROUGHPUT, Scope.PER_SLICE,
                                                               Comparator.ABOVE_IS_VIOLATION)
        assert soft.threshold == 1500e6
        assert policy.slices[0].sla.reliability == pytest.approx(0.99999)
        assert not policy.slices[2].has_policy
        assert len(policy.unsupported) == 3

    def test_example_strict_rejects_latency(self, example_policy_path):
        with pytest.raises(UnsupportedKpiError) as err:
            parse_a1_policy(example_policy_path.read_text(), strict=True)
        assert err.value.slice_name == "URLLC"
        assert "latency" in err.value.text

    def test_single_no_policy_slice(self):
        policy = parse_a1_policy(_doc([{"slice_name": "only", "weight": 1.0}]))
        assert policy.n_slices == 1
        assert policy.slices[0].sla is None

    def test_weight_sum_violation(self):
        with pytest.raises(PolicyValidationError, match="sum to 1"):
            parse_a1_policy(_doc([{"slice_name": "a", "weight": 0.5}, {"slice_name": "b", "weight": 0.6}]))

    def test_malformed_json_reports_line(self):
        with pytest.raises(PolicyError) as err:
            parse_a1_policy('{\n "network_slices": [\n  {"slice_name": }\n ]\n}')
        assert err.value.line == 3

    def test_missing_top_level_key(self):
        with pytest.raises(PolicyError) as err:
            parse_a1_policy("{}")
        assert err.value.field == "network_slices"

    def test_duplicate_names(self):
        with pytest.raises(PolicyValidationError, match="unique"):
            parse_a1_policy(_doc([{"slice_name": "a", "weight": 0.5}, {"slice_name": "a", "weight": 0.5}]))

    def test_priorities_without_weights(self):
        doc = [{"slice_name": n, "priority": p} for n, p in (("eMBB", 2), ("URLLC", 1), ("MTC", 3))]
        policy = parse_a1_policy(_doc(doc))
        assert policy.weights == pytest.approx([5 / 15, 6 / 15, 4 / 15])

    def test_mixed_weights_rejected(self):
        with pytest.raises(PolicyValidationError):
            parse_a1_policy(_doc([{"slice_name": "a", "weight": 1.0}, {"slice_name": "b", "priority": 1}]))

    def test_percent_requires_sign(self):
        assert parse_percent("99.999%") == pytest.approx(0.99999)
        with pytest.raises(PolicyError):
            parse_percent("99.999")

    def test_outage_without_reliability_rejected(self):
        doc = [{"slice_name": "a", "weight": 1.0,
                "target_kpis": {"outage_kpis": {"k": "throughput per slice < 1mbps"}}}]
        with pytest.raises(PolicyValidationError, match="reliability"):
            parse_a1_policy(_doc(doc))

    def test_urllc_defaults_to_buffer_objective(self):
        policy = parse_a1_policy(_doc([{"slice_name": "URLLC", "weight": 1.0}]))
        assert policy.slices[0].slice_class is SliceClass.URLLC
        assert policy.slices[0].optimization_kpi is OptimizationKpi.MINIMIZE_MAX_BUFFER

    def test_unsupported_kpi_warns_but_parses(self):
        doc = [{"slice_name": "a", "weight": 1.0,
                "target_kpis": {"outage_kpis": {"k": "jitter per UE > 2ms", "reliability_percent": "99%"}}}]
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            policy = parse_a1_policy(_doc(doc))
        assert any(issubclass(w.category, UnsupportedKpiWarning) for w in caught)
        assert policy.unsupported[0].text == "jitter per UE > 2ms"


class TestPredicates:
    @pytest.mark.parametrize("text, metric, scope, comparator, threshold", [
        ("bandwidth_mbps per slice < 10mbps", Metric.THROUGHPUT, Scope.PER_SLICE, Comparator.BELOW_IS_VIOLATION, 1e7),
        ("bfs per UE > 3%", Metric.BUFFER_OCCUPANCY, Scope.PER_UE, Comparator.ABOVE_IS_VIOLATION, 0.03),
        ("throughput per UE < 250kbps", Metric.THROUGHPUT, Scope.PER_UE, Comparator.BELOW_IS_VIOLATION, 2.5e5),
        ("dropped_bytes per slice > 2kb", Metric.DROPPED_BYTES, Scope.PER_SLICE, Comparator.ABOVE_IS_VIOLATION, 2000),
    ])
    def test_parse(self, text, metric, scope, comparator, threshold):
        p = parse_predicate(text)
        assert (p.metric, p.scope, p.comparator) == (metric, scope, comparator)
        assert p.threshold == pytest.approx(threshold)

    @pytest.mark.parametrize("text", ["throughput per slice < 10", "bfs per UE > 3mbps", "throughput slice < 1mbps",
                                      "bfs per UE > 0%"])
    def test_bad_units_or_syntax(self, text):
        with pytest.raises(PolicyError):
            parse_predicate(text)

    def test_parse_rate(self):
        assert parse_rate("70mbps") == 70e6
        assert parse_rate("50kbps") == 5e4
        assert parse_rate("1.5 Gbit/s") == 1.5e9

    def test_evaluate_per_ue(self):
        p = KpiPredicate(Metric.BUFFER_OCCUPANCY, Scope.PER_UE, Comparator.ABOVE_IS_VIOLATION, 0.03)
        assert evaluate_predicate(p, {0: 0.01, 1: 0.05}) == {1}

    def test_evaluate_per_slice_min(self):
        p = KpiPredicate(Metric.THROUGHPUT, Scope.PER_SLICE, Comparator.BELOW_IS_VIOLATION, 10e6)
        assert evaluate_predicate(p, 12e6) is False

    def test_evaluate_per_slice_soft_max(self):
        p = KpiPredicate(Metric.THROUGHPUT, Scope.PER_SLICE, Comparator.ABOVE_IS_VIOLATION, 15e6)
        assert evaluate_predicate(p, 16e6) is True

    def test_scope_mismatch(self):
        p = KpiPredicate(Metric.THROUGHPUT, Scope.PER_SLICE, Comparator.BELOW_IS_VIOLATION, 10e6)
        with pytest.raises(ValueError, match="scope"):
            evaluate_predicate(p, {0: 1.0})

    def test_threshold_must_be_positive(self):
        with pytest.raises(PolicyValidationError):
            KpiPredicate(Metric.THROUGHPUT, Scope.PER_SLICE, Comparator.BELOW_IS_VIOLATION, 0.0)


class TestWeightsFromPriorities:
    def test_three_slices(self):
        assert weights_from_priorities([2, 1, 3]) == pytest.approx([0.3333, 0.4000, 0.2667], abs=1e-4)

    def test_one_slice(self):
        assert weights_from_priorities([1]) == [1.0]

    def test_two_slices_by_hand(self):
        # 2J+1 = 5: scores 4 and 3
        assert weights_from_priorities([1, 2]) == pytest.approx([4 / 7, 3 / 7])

    @pytest.mark.parametrize("bad", [[], [1, 1], [0, 1], [2, 3]])
    def test_non_permutation(self, bad):
        with pytest.raises(PolicyValidationError):
            weights_from_priorities(bad)

    @given(st.integers(1, 12).flatmap(lambda n: st.permutations(list(range(1, n + 1)))))
    def test_sum_and_order(self, priorities):
        w = weights_from_priorities(priorities)
        assert abs(sum(w) - 1.0) < 1e-9
        by_priority = [w[priorities.index(p)] for p in sorted(priorities)]
        assert all(a > b for a, b in zip(by_priority, by_priority[1:]))


# ---------------------------------------------------------------- round trip
_UNIT_TEXT = {Metric.THROUGHPUT: ["bps", "kbps", "mbps"], Metric.BUFFER_OCCUPANCY: ["%", ""],
              Metric.DROPPED_BYTES: ["", "kb"]}


@st.composite
def predicate_texts(draw):
    metric = draw(st.sampled_from([("throughput", Metric.THROUGHPUT), ("bfs", Metric.BUFFER_OCCUPANCY),
                                   ("tdp", Metric.DROPPED_BYTES)]))
    unit = draw(st.sampled_from(_UNIT_TEXT[metric[1]]))
    if metric[1] is Metric.BUFFER_OCCUPANCY:
        value = draw(st.integers(1, 100)) if unit == "%" else draw(st.integers(1, 99)) / 100
    else:
        value = draw(st.integers(1, 5000))
    scope = draw(st.sampled_from(["UE", "slice"]))
    op = draw(st.sampled_from(["<", ">"]))
    return f"{metric[0]} per {scope} {op} {value}{unit}"


@st.composite
def policy_documents(draw):
    n = draw(st.integers(1, 5))
    raw = draw(st.lists(st.integers(1, 100), min_size=n, max_size=n))
    weights = [r / sum(raw) for r in raw]
    slices = []
    for j, w in enumerate(weights):
        entry = {"slice_name": f"s{j}", "weight": w}
        if draw(st.booleans()):
            outage = {f"k_out_{i}": t for i, t in enumerate(draw(st.lists(predicate_texts(), max_size=3)))}
            soft = {f"k_soft_{i}": t for i, t in enumerate(draw(st.lists(predicate_texts(), max_size=2)))}
            if outage:
                outage["reliability_percent"] = f"{draw(st.integers(50, 99999)) / 1000}%"
            entry["target_kpis"] = {"outage_kpis": outage, "soft_kpis": soft}
        slices.append(entry)
    return {"network_slices": slices}


@given(policy_documents())
def test_round_trip(doc):
    policy = policy_from_dict(doc)
    again = parse_a1_policy(serialize_a1_policy(policy))
    assert again == policy


@given(policy_documents())
def test_units_consistent_with_metric(doc):
    policy = policy_from_dict(doc)
    for s in policy.slices:
        if s.sla is None:
            continue
        for p in s.sla.outage_kpis + s.sla.soft_kpis:
            assert p.threshold > 0
            assert p.unit == {Metric.THROUGHPUT: "bit/s", Metric.BUFFER_OCCUPANCY: "fraction",
                              Metric.DROPPED_BYTES: "bytes/frame"}[p.metric]
            if p.metric is Metric.BUFFER_OCCUPANCY:
                assert p.threshold <= 1


def test_a1policy_requires_a_slice():
    with pytest.raises(PolicyValidationError):
        A1Policy(())


def test_violated_is_vectorised():
    p = KpiPredicate(Metric.THROUGHPUT, Scope.PER_UE, Comparator.BELOW_IS_VIOLATION, 5.0)
    assert np.array_equal(p.violated([1, 5, 9]), [True, False, False])
