import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fairnoise.classifiers import (
    NOTIONS,
    BaseClassifier,
    HypothesisClass,
    PQClassifier,
    as_pq,
    error,
    fairness_gap,
    group_stats,
    sample_predictions,
)
from fairnoise.distributions import Atom, make_distribution
from fairnoise.errors import InputError

from conftest import assert_close, distributions


def perfect_instance():
    dist = make_distribution(
        [
            Atom("a1", 1, "A", 0.25),
            Atom("a2", 0, "A", 0.25),
            Atom("b1", 1, "B", 0.25),
            Atom("b2", 0, "B", 0.25),
        ]
    )
    h = BaseClassifier.from_table({"a1": 1, "a2": 0, "b1": 1, "b2": 0})
    return dist, h


class TestBaseClassifier:
    def test_table_predict_and_missing_point(self):
        h = BaseClassifier.from_table({"x": 1})
        assert h.predict("x", "A") == 1
        with pytest.raises(InputError):
            h.predict("y", "A")

    def test_threshold_directions(self):
        above = BaseClassifier.from_threshold(0.5)
        below = BaseClassifier.from_threshold(0.5, direction="below")
        assert above.predict("x", "A", feature=0.7) == 1
        assert below.predict("x", "A", feature=0.7) == 0

    def test_per_group_threshold(self):
        h = BaseClassifier.from_threshold({"A": 0.2, "B": 0.8})
        assert h.predict("x", "A", feature=0.5) == 1
        assert h.predict("x", "B", feature=0.5) == 0
        with pytest.raises(InputError):
            h.predict("x", "C", feature=0.5)

    def test_threshold_requires_feature(self):
        with pytest.raises(InputError):
            BaseClassifier.from_threshold(0.5).predict("x", "A")

    def test_constant(self):
        assert BaseClassifier.from_constant(1).predict("anything", "Z") == 1

    def test_invalid_kinds(self):
        with pytest.raises(InputError):
            BaseClassifier(kind="mystery")
        with pytest.raises(InputError):
            BaseClassifier.from_constant(7)

    @pytest.mark.parametrize(
        "h",
        [
            BaseClassifier.from_table({"x": 1, "y": 0}),
            BaseClassifier.from_threshold(0.3, direction="below"),
            BaseClassifier.from_threshold({"A": 0.1}),
            BaseClassifier.from_constant(0),
        ],
    )
    def test_json_round_trip(self, h):
        assert BaseClassifier.from_json_dict(h.to_json_dict()) == h


class TestPQClassifier:
    def test_accept_prob_formula(self):
        h = PQClassifier(BaseClassifier.from_constant(1), {"A": (0.4, 0.25)})
        assert_close(h.accept_prob("x", "A"), 0.6 + 0.4 * 0.25)
        assert_close(h.accept_prob("x", "B"), 1.0)  # group without params = base

    def test_rejects_out_of_range(self):
        with pytest.raises(InputError):
            PQClassifier(BaseClassifier.from_constant(1), {"A": (1.2, 0.5)})

    def test_json_round_trip(self):
        h = PQClassifier(BaseClassifier.from_constant(0), {"A": (0.5, 0.5), "B": (0.1, 1.0)})
        assert PQClassifier.from_json(h.to_json()) == h

    def test_as_pq_idempotent(self):
        base = BaseClassifier.from_constant(1)
        assert as_pq(base).base == base
        pq = as_pq(base)
        assert as_pq(pq) is pq


class TestHypothesisClass:
    def test_rejects_empty(self):
        with pytest.raises(InputError):
            HypothesisClass(members=())

    def test_optimum(self):
        h = BaseClassifier.from_constant(1)
        assert HypothesisClass((h,), designated_optimum=0).optimum == h
        assert HypothesisClass((h,)).optimum is None


class TestGroupStats:
    def test_perfect_classifier(self):
        dist, h = perfect_instance()
        s = group_stats(h, dist)
        assert error(h, dist) == 0.0
        for g in "AB":
            assert_close(s.rate[g], 0.5)
            assert_close(s.tpr[g], 1.0)
            assert_close(s.fpr[g], 0.0)
            assert_close(s.ppv[g], 1.0)
            assert s.group_error[g] == 0.0

    def test_randomized_rates(self):
        dist, h = perfect_instance()
        pq = PQClassifier(h, {"A": (0.5, 0.0)})  # halve A's acceptances
        s = group_stats(pq, dist)
        assert_close(s.rate["A"], 0.25)
        assert_close(s.tpr["A"], 0.5)
        assert_close(s.rate["B"], 0.5)
        assert_close(error(pq, dist), 0.125)

    def test_undefined_conditionals_are_none(self):
        dist = make_distribution([Atom("x", 0, "A", 0.5), Atom("y", 1, "B", 0.5)])
        s = group_stats(BaseClassifier.from_constant(0), dist)
        assert s.tpr["A"] is None  # no positives in A
        assert s.fpr["B"] is None  # no negatives in B
        assert s.ppv["A"] is None  # never predicts positive


class TestFairnessGap:
    def test_all_notions_zero_on_perfect(self):
        dist, h = perfect_instance()
        s = group_stats(h, dist)
        for notion in NOTIONS:
            assert fairness_gap(s, notion) == 0.0

    def test_dp_gap_value(self):
        dist, h = perfect_instance()
        s = group_stats(PQClassifier(h, {"A": (0.5, 0.0)}), dist)
        assert_close(fairness_gap(s, "dp"), 0.25)

    def test_undefined_conditional_raises_with_names(self):
        dist = make_distribution([Atom("x", 0, "A", 0.5), Atom("y", 1, "B", 0.5)])
        s = group_stats(BaseClassifier.from_constant(0), dist)
        with pytest.raises(InputError, match="eopp.*'A'"):
            fairness_gap(s, "eopp")

    def test_unknown_notion(self):
        dist, h = perfect_instance()
        with pytest.raises(InputError):
            fairness_gap(group_stats(h, dist), "karma")

    @settings(max_examples=40, deadline=None)
    @given(
        distributions(),
        st.floats(0.0, 1.0),
        st.floats(0.0, 1.0),
    )
    def test_error_decomposes_over_groups(self, dist, p, q):
        pq = PQClassifier(BaseClassifier.from_constant(1), {"A": (p, q), "B": (p, q)})
        s = group_stats(pq, dist)
        recomposed = math.fsum(s.group_error[g] * dist.group_mass(g) for g in dist.groups)
        assert_close(recomposed, error(pq, dist), 1e-12)
        assert_close(s.overall_error, error(pq, dist), 1e-12)


class TestSampling:
    def test_monte_carlo_matches_accept_prob(self, rng):
        # smoke test: sampled frequency ~ closed-form acceptance probability
        h = PQClassifier(BaseClassifier.from_constant(1), {"A": (0.3, 0.4)})
        atom = Atom("x", 1, "A", 1.0)
        n = 200_000
        freq = sample_predictions(h, atom, n, rng) / n
        assert abs(freq - h.accept_prob("x", "A")) < 0.01
