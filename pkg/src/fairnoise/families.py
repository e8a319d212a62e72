"""Canonical instance families and seeded random instance generators.

The canonical families are the fixed constructions behind the regime
sweeps: one per accuracy-loss regime (linear, square-root, constant) plus
the calibration-drift family. The random generators build instances whose
fairness statistics are equal across groups by construction (realizability
is exact, not sampled), so the repair preconditions always hold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .attacks import NeedleInstance, duplicate_flip_attack, needle_eopp_attack
from .calibration import BinnedPredictor, duplication_instance
from .classifiers import BaseClassifier
from .distributions import Atom, Distribution, make_distribution, mix
from .errors import InputError


@dataclass(frozen=True)
class Instance:
    """A clean distribution, its contamination, the mixture, and the fair
    base classifier the instance was built around."""

    dist: Distribution
    contamination: Distribution
    corrupted: Distribution
    h_star: BaseClassifier
    alpha: float


def dp_worked(alpha: float) -> Instance:
    """Four equal atoms, two groups, a perfect base classifier, and a
    point-mass contamination that inflates group B's acceptance rate."""
    if not 0.0 < alpha < 1.0:
        raise InputError("alpha must lie in (0, 1)")
    dist = make_distribution(
        [
            Atom("a1", 1, "A", 0.25),
            Atom("a2", 0, "A", 0.25),
            Atom("b1", 1, "B", 0.25),
            Atom("b2", 0, "B", 0.25),
        ]
    )
    h_star = BaseClassifier.from_table({"a1": 1, "a2": 0, "b1": 1, "b2": 0})
    contamination = make_distribution([Atom("b1", 1, "B", 1.0)], groups=dist.groups)
    return Instance(dist, contamination, mix(dist, contamination, alpha), h_star, alpha)


def eopp_needle(alpha: float) -> tuple[Instance, NeedleInstance]:
    """The four-point square-root-group construction with its perfect base."""
    needle = needle_eopp_attack(alpha)
    h_star = BaseClassifier.from_table({"x1": 1, "x2": 0, "x3": 1, "x4": 0})
    inst = Instance(needle.dist, needle.contamination, needle.corrupted, h_star, alpha)
    return inst, needle


def eodds_duplicate(alpha: float, r_b: float | None = None) -> Instance:
    """Balanced two-group instance with group B's labels washed out.

    The sweep family fixes r_b = 0.045 (valid for every alpha >= 0.05) so
    the forced error floor is genuinely flat across the sweep; callers
    certifying a single alpha can pass r_b explicitly (e.g. 0.9 * alpha).
    """
    if r_b is None:
        r_b = 0.045
    dist, corrupted, table = duplication_instance(alpha, r_b)
    contamination, _ = duplicate_flip_attack(dist, "B", alpha)
    return Instance(dist, contamination, corrupted, BaseClassifier.from_table(table), alpha)


def calibration_drift(alpha: float) -> tuple[Distribution, Distribution, BinnedPredictor]:
    """Family whose recalibration value shift equals alpha exactly.

    Group A is a single all-positive point valued 1; the contamination
    injects the same point with label 0, so the recalibrated value moves by
    exactly alpha in corrupted mass. Group B is untouched padding.
    """
    if not 0.0 < alpha < 1.0:
        raise InputError("alpha must lie in (0, 1)")
    dist = make_distribution(
        [
            Atom("a1", 1, "A", 0.5),
            Atom("b1", 1, "B", 0.25),
            Atom("b2", 0, "B", 0.25),
        ]
    )
    contamination = make_distribution([Atom("a1", 0, "A", 1.0)], groups=dist.groups)
    corrupted = mix(dist, contamination, alpha)
    predictor = BinnedPredictor(
        assignment={"a1": 0, "b1": 1, "b2": 2}, values={0: 1.0, 1: 1.0, 2: 0.0}
    )
    return dist, corrupted, predictor


# ---------------------------------------------------------------------------
# Random instance generators (all exact-realizability by construction)
# ---------------------------------------------------------------------------


def _split(rng: np.random.Generator, total: float, n: int) -> list[float]:
    """Split ``total`` into n random positive parts."""
    w = rng.dirichlet(np.ones(n))
    return [float(total * x) for x in w]


def random_dp_instance(rng: np.random.Generator, max_atoms: int = 32) -> tuple[Distribution, BaseClassifier]:
    """Random two-group distribution plus a base classifier whose
    positive-prediction rate is identical across groups by construction."""
    r_a = float(rng.uniform(0.2, 0.8))
    masses = {"A": r_a, "B": 1.0 - r_a}
    target_rate = float(rng.uniform(0.1, 0.9))
    per_group = max(2, max_atoms // 2)

    atoms: list[Atom] = []
    table: dict[str, int] = {}
    for g, r in masses.items():
        n_acc = int(rng.integers(1, per_group // 2 + 1))
        n_rej = int(rng.integers(1, per_group - n_acc + 1))
        for i, m in enumerate(_split(rng, target_rate * r, n_acc)):
            point = f"{g.lower()}_acc{i}"
            atoms.append(Atom(point, int(rng.integers(0, 2)), g, m))
            table[point] = 1
        for i, m in enumerate(_split(rng, (1.0 - target_rate) * r, n_rej)):
            point = f"{g.lower()}_rej{i}"
            atoms.append(Atom(point, int(rng.integers(0, 2)), g, m))
            table[point] = 0
    return make_distribution(atoms), BaseClassifier.from_table(table)


def random_eopp_instance(rng: np.random.Generator, max_atoms: int = 32) -> tuple[Distribution, BaseClassifier]:
    """Random two-group distribution plus a base classifier whose true
    positive rate is identical across groups by construction.

    Every group keeps strictly positive positive-mass so the corrupted
    mixture also has positives in each group for any alpha < 1.
    """
    r_a = float(rng.uniform(0.2, 0.8))
    masses = {"A": r_a, "B": 1.0 - r_a}
    target_tpr = float(rng.uniform(0.1, 0.9))
    per_group = max(4, max_atoms // 2)

    atoms: list[Atom] = []
    table: dict[str, int] = {}
    for g, r in masses.items():
        pos_share = float(rng.uniform(0.3, 0.7))
        pos, neg = pos_share * r, (1.0 - pos_share) * r
        n_pa = int(rng.integers(1, 3))  # accepted positives
        n_pr = int(rng.integers(1, 3))  # rejected positives
        n_neg = int(rng.integers(1, per_group - n_pa - n_pr + 1))
        for i, m in enumerate(_split(rng, target_tpr * pos, n_pa)):
            point = f"{g.lower()}_pacc{i}"
            atoms.append(Atom(point, 1, g, m))
            table[point] = 1
        for i, m in enumerate(_split(rng, (1.0 - target_tpr) * pos, n_pr)):
            point = f"{g.lower()}_prej{i}"
            atoms.append(Atom(point, 1, g, m))
            table[point] = 0
        for i, m in enumerate(_split(rng, neg, n_neg)):
            point = f"{g.lower()}_neg{i}"
            atoms.append(Atom(point, 0, g, m))
            table[point] = int(rng.integers(0, 2))
    return make_distribution(atoms), BaseClassifier.from_table(table)


def random_contamination(rng: np.random.Generator, dist: Distribution, max_atoms: int = 4) -> Distribution:
    """Random contamination supported on the instance's own points with
    adversary-chosen labels."""
    support = dist.support_points()
    n = int(rng.integers(1, max_atoms + 1))
    picks = rng.choice(len(support), size=min(n, len(support)), replace=False)
    atoms = []
    for w, idx in zip(_split(rng, 1.0, len(picks)), picks):
        g, p, f = support[int(idx)]
        atoms.append(Atom(p, int(rng.integers(0, 2)), g, w, f))
    return make_distribution(atoms, groups=dist.groups)


def random_calibrated_instance(
    rng: np.random.Generator, max_bins: int = 4
) -> tuple[Distribution, BinnedPredictor]:
    """Random two-group binned instance, calibrated per group exactly: each
    (group, bin) cell is one point carrying value * cell mass positives."""
    r_a = float(rng.uniform(0.2, 0.8))
    masses = {"A": r_a, "B": 1.0 - r_a}
    n_bins = int(rng.integers(2, max_bins + 1))

    atoms: list[Atom] = []
    assignment: dict[str, int] = {}
    group_values: dict[str, dict[int, float]] = {"A": {}, "B": {}}
    for g, r in masses.items():
        occupancy = _split(rng, r, n_bins)
        for b, cell in enumerate(occupancy):
            v = float(rng.uniform(0.0, 1.0))
            point = f"{g.lower()}_b{b}"
            assignment[point] = b
            group_values[g][b] = v
            pos = v * cell
            if pos > 0.0:
                atoms.append(Atom(point, 1, g, pos))
            if cell - pos > 0.0:
                atoms.append(Atom(point, 0, g, cell - pos))
    predictor = BinnedPredictor(assignment=assignment, group_values=group_values)
    return make_distribution(atoms), predictor


FAMILY_BUILDERS = {
    "dp_worked": dp_worked,
    "eopp_needle": lambda alpha: eopp_needle(alpha)[0],
    "eodds_duplicate": eodds_duplicate,
}
