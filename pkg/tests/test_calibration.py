import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fairnoise import families
from fairnoise.calibration import (
    BinnedPredictor,
    calibration_report,
    duplication_instance,
    l1_error,
    parity_calibration_attack_certify,
    parity_calibration_check,
    predictive_parity_attack_certify,
    recalibrate_per_group,
    threshold_error,
    value_shift,
)
from fairnoise.distributions import Atom, make_distribution, mix
from fairnoise.errors import InputError

from conftest import assert_close


def two_bin_instance():
    dist = make_distribution(
        [
            Atom("a_hi", 1, "A", 0.30),
            Atom("a_hi", 0, "A", 0.10),
            Atom("a_lo", 0, "A", 0.10),
            Atom("b_hi", 1, "B", 0.20),
            Atom("b_hi", 0, "B", 0.05),
            Atom("b_lo", 0, "B", 0.25),
        ]
    )
    predictor = BinnedPredictor(
        assignment={"a_hi": 1, "a_lo": 0, "b_hi": 1, "b_lo": 0},
        values={0: 0.0, 1: 0.75},
    )
    return dist, predictor


class TestBinnedPredictor:
    def test_lookup_precedence(self):
        h = BinnedPredictor(
            assignment={"x": 0}, values={0: 0.5}, group_values={"A": {0: 0.9}}
        )
        assert h.value("x", "A") == 0.9  # group-specific wins
        assert h.value("x", "B") == 0.5  # shared fallback

    def test_missing_assignment_and_value(self):
        h = BinnedPredictor(assignment={"x": 0}, values={})
        with pytest.raises(InputError):
            h.value("y", "A")
        with pytest.raises(InputError):
            h.value("x", "A")

    def test_rejects_out_of_range_values(self):
        with pytest.raises(InputError):
            BinnedPredictor(assignment={"x": 0}, values={0: 1.5})

    def test_json_round_trip(self):
        h = BinnedPredictor(
            assignment={"x": 0, "y": 1},
            values={0: 0.25},
            group_values={"A": {1: 0.5}, "B": {1: 0.75}},
        )
        assert BinnedPredictor.from_json(h.to_json()) == h


class TestCalibrationReport:
    def test_exact_cell_statistics(self):
        dist, predictor = two_bin_instance()
        report = calibration_report(predictor, dist)
        assert_close(report.occupancy[("A", 1)], 0.8)
        assert_close(report.conditional_mean[("A", 1)], 0.75)
        assert_close(report.conditional_mean[("B", 1)], 0.8)
        # A is perfectly calibrated; B's hi bin is off by 0.05
        assert_close(report.max_gap_by_group["A"], 0.0)
        assert_close(report.max_gap_by_group["B"], 0.05)
        assert_close(report.max_gap, 0.05)
        assert_close(report.weighted_l1, 0.25 * 0.05)

    def test_unassigned_point_raises(self):
        dist, _ = two_bin_instance()
        bad = BinnedPredictor(assignment={"a_hi": 0}, values={0: 0.5})
        with pytest.raises(InputError):
            calibration_report(bad, dist)


class TestRecalibration:
    def test_recalibrated_gap_is_zero(self):
        dist, predictor = two_bin_instance()
        q = make_distribution([Atom("b_hi", 0, "B", 1.0)], groups=dist.groups)
        corrupted = mix(dist, q, 0.1)
        repaired = recalibrate_per_group(predictor, corrupted)
        assert calibration_report(repaired, corrupted).max_gap <= 1e-9
        assert repaired.assignment == dict(predictor.assignment)

    def test_empty_cells_keep_prior_value(self):
        dist = make_distribution([Atom("x", 1, "A", 0.5), Atom("y", 0, "B", 0.5)])
        predictor = BinnedPredictor(assignment={"x": 0, "y": 1}, values={0: 1.0, 1: 0.25})
        repaired = recalibrate_per_group(predictor, dist)
        # group A never occupies bin 1; its value there stays at the prior
        assert repaired.bin_value(1, "A") == 0.25

    def test_shift_bounded_by_alpha(self):
        dist, predictor = two_bin_instance()
        # make the base calibrated first so the O(alpha) bound applies
        calibrated = recalibrate_per_group(predictor, dist)
        q = make_distribution([Atom("a_hi", 0, "A", 0.6), Atom("b_lo", 1, "B", 0.4)], groups=dist.groups)
        for alpha in (0.01, 0.05, 0.2):
            corrupted = mix(dist, q, alpha)
            repaired = recalibrate_per_group(calibrated, corrupted)
            assert value_shift(calibrated, repaired, corrupted) <= alpha + 1e-9


class TestErrorsAndShift:
    def test_l1_and_threshold_error(self):
        dist = make_distribution([Atom("x", 1, "A", 0.6), Atom("y", 0, "A", 0.4)])
        h = BinnedPredictor(assignment={"x": 0, "y": 1}, values={0: 0.9, 1: 0.2})
        assert_close(l1_error(h, dist), 0.6 * 0.1 + 0.4 * 0.2)
        assert threshold_error(h, dist) == 0.0  # 0.9 -> 1, 0.2 -> 0

    def test_value_shift_requires_same_assignment(self):
        dist, predictor = two_bin_instance()
        other = BinnedPredictor(assignment={"a_hi": 0}, values={0: 0.5})
        with pytest.raises(InputError):
            value_shift(predictor, other, dist)


class TestParityCalibrationCheck:
    def test_detects_calibration_and_occupancy(self):
        dist, predictor = two_bin_instance()
        calibrated = recalibrate_per_group(predictor, dist)
        ok, occ_gap = parity_calibration_check(calibrated, dist)
        assert ok
        # occupancy differs: A 0.8/0.2 vs B 0.5/0.5 in the hi bin
        assert_close(occ_gap, 0.3)

    def test_single_group_gap_zero(self):
        dist = make_distribution([Atom("x", 1, "A", 1.0)])
        h = BinnedPredictor(assignment={"x": 0}, values={0: 1.0})
        assert parity_calibration_check(h, dist) == (True, 0.0)


class TestCertifiers:
    def test_duplication_instance_washes_small_group(self):
        dist, corrupted, table = duplication_instance(0.1, 0.09)
        assert_close(corrupted.mass("bP", 1, "B"), corrupted.mass("bP", 0, "B"), 1e-12)
        assert set(table) == {"aP", "aN", "bP", "bN"}

    def test_predictive_parity_floor(self):
        floor = predictive_parity_attack_certify(0.1, grid_n=41)
        assert floor >= 0.2

    def test_predictive_parity_control_without_budget(self):
        # r_b too large for the budget: attack degrades to identity and the
        # perfect classifier (equal precision 1) survives at zero error
        floor = predictive_parity_attack_certify(0.1, r_b=0.5, grid_n=41)
        assert floor <= 0.05

    def test_parity_calibration_floor(self):
        floor = parity_calibration_attack_certify(0.1)
        assert floor >= 0.2

    def test_certify_validates_alpha(self):
        with pytest.raises(InputError):
            predictive_parity_attack_certify(0.0)
