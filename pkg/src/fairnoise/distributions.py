"""Exact finite-support joint distributions over (point, label, group).

Everything downstream (classifier statistics, attacks, repairs) is an exact
sum over atoms, so this module is the numerical foundation: masses are
doubles, every reduction uses ``math.fsum`` (compensated summation), and the
atom order is canonical so that equal distributions serialize identically.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping

from .errors import InputError

#: absolute tolerance for "sums to one" invariants
EQ_TOL = 1e-9
#: how far a caller-supplied total mass may be from 1 before we refuse
MASS_TOL = 1e-6


@dataclass(frozen=True)
class Atom:
    """One support point: a (point, label, group) cell carrying mass.

    Two atoms with the same point id but opposite labels may coexist; this
    is exactly how a duplication attack represents examples that are
    indistinguishable to any classifier.
    """

    point: str
    label: int
    group: str
    mass: float
    feature: float | None = None

    def __post_init__(self) -> None:
        if self.label not in (0, 1):
            raise InputError(f"label must be 0 or 1, got {self.label!r}")
        if not math.isfinite(self.mass) or self.mass < 0.0:
            raise InputError(f"atom mass must be finite and >= 0, got {self.mass!r}")

    @property
    def key(self) -> tuple[str, str, int]:
        return (self.group, self.point, self.label)


@dataclass(frozen=True)
class Distribution:
    """Immutable, normalized, canonically ordered finite distribution."""

    atoms: tuple[Atom, ...]
    groups: tuple[str, ...]

    @cached_property
    def mass_by_key(self) -> dict[tuple[str, str, int], float]:
        return {a.key: a.mass for a in self.atoms}

    def mass(self, point: str, label: int, group: str) -> float:
        return self.mass_by_key.get((group, point, label), 0.0)

    def group_mass(self, group: str) -> float:
        return math.fsum(a.mass for a in self.atoms if a.group == group)

    def positive_mass(self, group: str) -> float:
        return math.fsum(a.mass for a in self.atoms if a.group == group and a.label == 1)

    def total_mass(self) -> float:
        return math.fsum(a.mass for a in self.atoms)

    def support_points(self) -> list[tuple[str, str, float | None]]:
        """Distinct (group, point, feature) triples in canonical order."""
        seen: dict[tuple[str, str], float | None] = {}
        for a in self.atoms:
            seen.setdefault((a.group, a.point), a.feature)
        return [(g, p, f) for (g, p), f in sorted(seen.items())]

    def to_json_dict(self) -> dict:
        atoms = []
        for a in self.atoms:
            rec: dict = {"point": a.point, "label": a.label, "group": a.group, "mass": a.mass}
            if a.feature is not None:
                rec["feature"] = a.feature
            atoms.append(rec)
        return {"atoms": atoms, "groups": list(self.groups)}

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, indent=2)

    @staticmethod
    def from_json_dict(doc: Mapping) -> "Distribution":
        atoms = [
            Atom(
                point=str(rec["point"]),
                label=int(rec["label"]),
                group=str(rec["group"]),
                mass=float(rec["mass"]),
                feature=float(rec["feature"]) if rec.get("feature") is not None else None,
            )
            for rec in doc["atoms"]
        ]
        groups = [str(g) for g in doc["groups"]] if "groups" in doc else None
        return make_distribution(atoms, groups=groups)

    @staticmethod
    def from_json(text: str) -> "Distribution":
        return Distribution.from_json_dict(json.loads(text))


@dataclass(frozen=True)
class GroupMassProfile:
    """Per-group mass bookkeeping: r_z, positive mass within z, and the
    smallest integer c with positives >= r_z / c for every group."""

    r: dict[str, float]
    r_plus: dict[str, float]
    c_bound: float  # math.inf when some group has no positives

    def positives_fraction(self, group: str) -> float:
        return self.r_plus[group] / self.r[group]


def make_distribution(atoms: Iterable[Atom], groups: Iterable[str] | None = None) -> Distribution:
    """Merge, validate, normalize, and canonically order a list of atoms.

    Duplicate (point, label, group) masses are summed. The total mass must
    be within ``MASS_TOL`` of 1; residual drift is renormalized away so the
    result sums to 1 exactly (in fsum arithmetic).
    """
    atoms = list(atoms)
    if not atoms:
        raise InputError("cannot build a distribution from an empty atom list")

    merged: dict[tuple[str, str, int], float] = {}
    features: dict[tuple[str, str, int], float | None] = {}
    for a in atoms:
        merged[a.key] = merged.get(a.key, 0.0) + a.mass
        if features.get(a.key) is None:
            features[a.key] = a.feature

    total = math.fsum(merged.values())
    if abs(total - 1.0) > MASS_TOL:
        raise InputError(f"total mass {total!r} differs from 1 by more than {MASS_TOL}")

    canonical = tuple(
        Atom(point=p, label=y, group=g, mass=m / total, feature=features[(g, p, y)])
        for (g, p, y), m in sorted(merged.items())
    )

    present = sorted({a.group for a in canonical})
    if groups is None:
        group_tuple = tuple(present)
    else:
        group_tuple = tuple(groups)
        if len(set(group_tuple)) != len(group_tuple):
            raise InputError("group list contains duplicates")
        missing = set(present) - set(group_tuple)
        if missing:
            raise InputError(f"atoms reference groups not in group list: {sorted(missing)}")

    # An explicit group list may legitimately include groups the support
    # misses (e.g. a contamination targeting one group of a larger universe).
    return Distribution(atoms=canonical, groups=group_tuple)


def group_profile(dist: Distribution) -> GroupMassProfile:
    """Exact r_z and r_z+ per group, plus the positives-fraction bound c.

    A group with no positives is reported with r_plus = 0 and an infinite
    c_bound; it is not rejected here (the check is advisory).
    """
    r = {g: dist.group_mass(g) for g in dist.groups}
    r_plus = {g: dist.positive_mass(g) for g in dist.groups}
    c = 0.0
    for g in dist.groups:
        if r_plus[g] <= 0.0:
            c = math.inf
            break
        c = max(c, math.ceil(r[g] / r_plus[g]))
    return GroupMassProfile(r=r, r_plus=r_plus, c_bound=c)


def conditional(dist: Distribution, group: str) -> Distribution:
    """The conditional distribution given membership in ``group``."""
    if group not in dist.groups:
        raise InputError(f"group {group!r} not in {dist.groups}")
    r = dist.group_mass(group)
    if r <= 0.0:
        raise InputError(f"group {group!r} has zero mass; conditional undefined")
    atoms = [
        Atom(point=a.point, label=a.label, group=a.group, mass=a.mass / r, feature=a.feature)
        for a in dist.atoms
        if a.group == group
    ]
    return make_distribution(atoms, groups=(group,))


def mix(dist: Distribution, contamination: Distribution, alpha: float) -> Distribution:
    """The corrupted distribution (1 - alpha) * dist + alpha * contamination."""
    if not 0.0 <= alpha <= 1.0:
        raise InputError(f"alpha must be in [0, 1], got {alpha!r}")
    unknown = set(contamination.groups) - set(dist.groups)
    if unknown:
        raise InputError(f"contamination uses groups outside the base distribution: {sorted(unknown)}")
    atoms = [
        Atom(a.point, a.label, a.group, (1.0 - alpha) * a.mass, a.feature) for a in dist.atoms
    ] + [
        Atom(a.point, a.label, a.group, alpha * a.mass, a.feature) for a in contamination.atoms
    ]
    return make_distribution(atoms, groups=dist.groups)


def tv_distance(d: Distribution, e: Distribution) -> float:
    """Total variation distance: half the L1 gap over the union of supports."""
    keys = set(d.mass_by_key) | set(e.mass_by_key)
    return 0.5 * math.fsum(abs(d.mass_by_key.get(k, 0.0) - e.mass_by_key.get(k, 0.0)) for k in keys)
