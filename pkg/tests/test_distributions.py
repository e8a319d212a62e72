import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fairnoise.distributions import (
    Atom,
    Distribution,
    conditional,
    group_profile,
    make_distribution,
    mix,
    tv_distance,
)
from fairnoise.errors import InputError

from conftest import alphas, assert_close, distributions


def simple_dist():
    return make_distribution(
        [
            Atom("a1", 1, "A", 0.25),
            Atom("a2", 0, "A", 0.25),
            Atom("b1", 1, "B", 0.25),
            Atom("b2", 0, "B", 0.25),
        ]
    )


class TestAtom:
    def test_rejects_bad_label(self):
        with pytest.raises(InputError):
            Atom("x", 2, "A", 0.5)

    def test_rejects_negative_or_nonfinite_mass(self):
        with pytest.raises(InputError):
            Atom("x", 1, "A", -0.1)
        with pytest.raises(InputError):
            Atom("x", 1, "A", math.nan)

    def test_key_order_is_group_point_label(self):
        assert Atom("p", 1, "G", 0.1).key == ("G", "p", 1)


class TestMakeDistribution:
    def test_merges_duplicate_atoms(self):
        d = make_distribution([Atom("x", 1, "A", 0.5), Atom("x", 1, "A", 0.5)])
        assert len(d.atoms) == 1
        assert_close(d.mass("x", 1, "A"), 1.0)

    def test_rejects_mass_far_from_one(self):
        with pytest.raises(InputError):
            make_distribution([Atom("x", 1, "A", 0.5)])

    def test_renormalizes_small_drift(self):
        d = make_distribution([Atom("x", 1, "A", 0.5 + 1e-7), Atom("y", 0, "A", 0.5)])
        assert_close(d.total_mass(), 1.0)

    def test_canonical_order(self):
        d = make_distribution(
            [Atom("z", 1, "B", 0.5), Atom("a", 0, "A", 0.25), Atom("a", 1, "A", 0.25)]
        )
        assert [a.key for a in d.atoms] == [("A", "a", 0), ("A", "a", 1), ("B", "z", 1)]

    def test_rejects_empty(self):
        with pytest.raises(InputError):
            make_distribution([])

    def test_rejects_undeclared_group(self):
        with pytest.raises(InputError):
            make_distribution([Atom("x", 1, "C", 1.0)], groups=("A", "B"))

    def test_explicit_groups_may_be_unpopulated(self):
        # contaminations legitimately target a subset of the universe
        d = make_distribution([Atom("x", 1, "B", 1.0)], groups=("A", "B"))
        assert d.group_mass("A") == 0.0


class TestAccessors:
    def test_masses(self):
        d = simple_dist()
        assert_close(d.group_mass("A"), 0.5)
        assert_close(d.positive_mass("B"), 0.25)
        assert d.mass("missing", 1, "A") == 0.0

    def test_support_points(self):
        d = simple_dist()
        assert d.support_points() == [
            ("A", "a1", None),
            ("A", "a2", None),
            ("B", "b1", None),
            ("B", "b2", None),
        ]

    def test_json_round_trip(self):
        d = simple_dist()
        assert Distribution.from_json(d.to_json()) == d

    def test_json_bytes_deterministic(self):
        assert simple_dist().to_json() == simple_dist().to_json()


class TestGroupProfile:
    def test_profile_values(self):
        p = group_profile(simple_dist())
        assert_close(p.r["A"], 0.5)
        assert_close(p.r_plus["A"], 0.25)
        assert p.c_bound == 2

    def test_no_positives_reports_inf_not_error(self):
        d = make_distribution([Atom("x", 0, "A", 0.5), Atom("y", 1, "B", 0.5)])
        assert group_profile(d).c_bound == math.inf


class TestConditional:
    def test_conditional_renormalizes(self):
        c = conditional(simple_dist(), "A")
        assert_close(c.total_mass(), 1.0)
        assert c.groups == ("A",)
        assert_close(c.mass("a1", 1, "A"), 0.5)

    def test_unknown_group(self):
        with pytest.raises(InputError):
            conditional(simple_dist(), "Z")


class TestMixAndTV:
    def test_mix_masses(self):
        d = simple_dist()
        q = make_distribution([Atom("b1", 1, "B", 1.0)], groups=d.groups)
        m = mix(d, q, 0.1)
        assert_close(m.mass("b1", 1, "B"), 0.9 * 0.25 + 0.1)
        assert_close(m.total_mass(), 1.0)

    def test_mix_rejects_bad_alpha(self):
        d = simple_dist()
        with pytest.raises(InputError):
            mix(d, d, 1.5)

    def test_tv_identical_is_zero(self):
        assert tv_distance(simple_dist(), simple_dist()) == 0.0

    def test_tv_disjoint_is_one(self):
        a = make_distribution([Atom("x", 1, "A", 1.0)])
        b = make_distribution([Atom("y", 0, "A", 1.0)])
        assert_close(tv_distance(a, b), 1.0)

    @settings(max_examples=60, deadline=None)
    @given(distributions(), distributions(), alphas())
    def test_mixture_stays_within_alpha_tv(self, d, q, alpha):
        # the corruption model's defining property: TV(D, D-tilde) <= alpha
        assert tv_distance(d, mix(d, q, alpha)) <= alpha + 1e-9

    @settings(max_examples=60, deadline=None)
    @given(distributions(), distributions())
    def test_tv_symmetric_and_bounded(self, d, e):
        t = tv_distance(d, e)
        assert_close(tv_distance(e, d), t, 1e-12)
        assert -1e-12 <= t <= 1.0 + 1e-12
