"""Randomized-classifier repairs and the brute-force best-response learner.

Two kinds of object live here. The witness constructors (``dp_repair``,
``eopp_repair``) are omniscient: they see both the clean and the corrupted
distribution and build an explicit randomized classifier whose fairness gap
on the corrupted distribution is zero by construction. ``best_response`` is
the learner-side procedure: it sees only the corrupted distribution and
exhaustively searches per-group acceptance-probability grids. The harness
uses the witnesses to certify upper bounds and the learner to certify lower
bounds (its grid minimum is what any repair strategy could achieve).
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .classifiers import (
    GAP_TOL,
    BaseClassifier,
    PQClassifier,
    as_pq,
    error,
    fairness_gap,
    group_stats,
)
from .distributions import Distribution
from .errors import ContractError, InfeasibleError, InputError


@dataclass(frozen=True)
class RepairWitness:
    """A repaired classifier plus its certification record."""

    classifier: PQClassifier
    notion: str
    gap_on_corrupted: float
    error_on_original: float
    excess_error_on_original: float
    candidate_label: str
    alpha: float | None = None

    def to_json_dict(self) -> dict:
        return {
            "classifier": self.classifier.to_json_dict(),
            "certification": {
                "notion": self.notion,
                "gap": self.gap_on_corrupted,
                "excess": self.excess_error_on_original,
                "error": self.error_on_original,
                "candidate": self.candidate_label,
                "alpha": self.alpha,
            },
        }


def _match_params(current: float, target: float) -> tuple[float, float]:
    """(p, q) moving a group's corrupted statistic from ``current`` to ``target``.

    The two branches are the raise (q=1) and lower (q=0) overrides; the 0/0
    corner (statistic already pinned at the target) collapses to p=0.
    """
    if target >= current:
        denom = 1.0 - current
        p = (target - current) / denom if denom > 0.0 else 0.0
        return (min(max(p, 0.0), 1.0), 1.0)
    p = (current - target) / current if current > 0.0 else 0.0
    return (min(max(p, 0.0), 1.0), 0.0)


def dp_repair(
    h_star: BaseClassifier | PQClassifier,
    dist: Distribution,
    corrupted: Distribution,
    alpha: float | None = None,
) -> RepairWitness:
    """Repair demographic parity after corruption.

    Per group, the randomization moves the corrupted positive-prediction
    rate back to the clean rate of ``h_star``; since the clean rates agree
    across groups (realizability), so do the repaired corrupted rates. The
    excess error on the clean distribution is at most 2 alpha / (1 - alpha).
    """
    base_gap = fairness_gap(group_stats(h_star, dist), "dp")
    if base_gap > GAP_TOL:
        raise InputError(
            f"realizability violated: base classifier has DP gap {base_gap:.3e} on the clean distribution"
        )
    clean = group_stats(h_star, dist)
    dirty = group_stats(h_star, corrupted)
    params = {g: _match_params(dirty.rate[g], clean.rate[g]) for g in dist.groups}
    repaired = PQClassifier(base=as_pq(h_star).base, params=_compose(h_star, params))
    gap = fairness_gap(group_stats(repaired, corrupted), "dp")
    if gap > GAP_TOL:
        raise ContractError(f"dp repair failed its gap contract: {gap:.3e}")
    err = error(repaired, dist)
    excess = err - error(h_star, dist)
    return RepairWitness(
        classifier=repaired,
        notion="dp",
        gap_on_corrupted=gap,
        error_on_original=err,
        excess_error_on_original=excess,
        candidate_label="direct",
        alpha=alpha,
    )


def eopp_repair(
    h_star: BaseClassifier | PQClassifier,
    dist: Distribution,
    corrupted: Distribution,
    alpha: float | None = None,
) -> RepairWitness:
    """Repair equal opportunity after corruption.

    Builds one candidate per group: candidate i drags every group's
    corrupted TPR to group i's corrupted TPR (randomization is label-blind,
    which leaves the TPR algebra intact), then keeps whichever candidate is
    cheaper on the clean distribution. Ties go to the first group in
    canonical order.
    """
    base_gap = fairness_gap(group_stats(h_star, dist), "eopp")
    if base_gap > GAP_TOL:
        raise InputError(
            f"realizability violated: base classifier has EOpp gap {base_gap:.3e} on the clean distribution"
        )
    for g in corrupted.groups:
        if corrupted.positive_mass(g) <= 0.0:
            raise InputError(f"group {g!r} has no positives in the corrupted distribution")
    dirty = group_stats(h_star, corrupted)
    best: RepairWitness | None = None
    for i in dist.groups:
        target = dirty.tpr[i]
        assert target is not None
        params = {g: _match_params(dirty.tpr[g], target) for g in dist.groups}  # type: ignore[arg-type]
        candidate = PQClassifier(base=as_pq(h_star).base, params=_compose(h_star, params))
        gap = fairness_gap(group_stats(candidate, corrupted), "eopp")
        if gap > GAP_TOL:
            raise ContractError(f"eopp candidate match_{i} failed its gap contract: {gap:.3e}")
        err = error(candidate, dist)
        witness = RepairWitness(
            classifier=candidate,
            notion="eopp",
            gap_on_corrupted=gap,
            error_on_original=err,
            excess_error_on_original=err - error(h_star, dist),
            candidate_label=f"match_{i}",
            alpha=alpha,
        )
        if best is None or witness.error_on_original < best.error_on_original:
            best = witness
    assert best is not None
    return best


def _compose(h: BaseClassifier | PQClassifier, params: dict[str, tuple[float, float]]) -> dict:
    """Layer new per-group overrides on top of any the base already carries."""
    pq = as_pq(h)
    if not pq.params:
        return params
    composed = {}
    for g, (p, q) in params.items():
        p0, q0 = pq.params.get(g, (0.0, 0.0))
        # acceptance after both coins: (1-p)*[(1-p0) b + p0 q0] + p q
        pc = p + p0 - p * p0
        qc = (p * q + (1.0 - p) * p0 * q0) / pc if pc > 0.0 else 0.0
        composed[g] = (min(max(pc, 0.0), 1.0), min(max(qc, 0.0), 1.0))
    return composed


# ---------------------------------------------------------------------------
# Grid search over the randomized family
# ---------------------------------------------------------------------------


def option_grid(grid_n: int) -> tuple[np.ndarray, np.ndarray]:
    """All (u, v) acceptance pairs with 0 <= v <= u <= 1 on a grid_n grid.

    u is the acceptance probability on base-positive points, v on
    base-negative points; the randomized family (p, q) maps onto exactly
    this triangle via u = 1 - p + p q, v = p q.
    """
    if grid_n < 2:
        raise InputError("grid_n must be at least 2")
    g = np.linspace(0.0, 1.0, grid_n)
    rows, cols = np.triu_indices(grid_n)
    return g[cols], g[rows]  # u, v with v <= u


def params_from_uv(u: float, v: float) -> tuple[float, float]:
    p = 1.0 - (u - v)
    q = v / p if p > 1e-15 else 0.0
    return (min(max(p, 0.0), 1.0), min(max(q, 0.0), 1.0))


def pair_min_1d(
    stat_a: np.ndarray,
    err_a: np.ndarray,
    stat_b: np.ndarray,
    err_b: np.ndarray,
    tol: float,
) -> tuple[float, int, int] | None:
    """Min of err_a[i] + err_b[j] over |stat_a[i] - stat_b[j]| <= tol.

    Sliding-window minimum over both sides sorted by statistic; exact and
    O(n log n). Returns (total, i, j) in the original indexing, or None.
    """
    order_a = np.argsort(stat_a, kind="stable")
    sa = stat_a[order_a]
    ea = err_a[order_a]
    order_b = np.argsort(stat_b, kind="stable")

    best: tuple[float, int, int] | None = None
    lo = hi = 0
    window: deque[int] = deque()  # indices into sorted a, err increasing
    for jb in order_b:
        s = stat_b[jb]
        while hi < len(sa) and sa[hi] <= s + tol:
            while window and ea[window[-1]] >= ea[hi]:
                window.pop()
            window.append(hi)
            hi += 1
        while lo < hi and sa[lo] < s - tol:
            if window and window[0] == lo:
                window.popleft()
            lo += 1
        if window:
            ia = window[0]
            total = float(ea[ia] + err_b[jb])
            if best is None or total < best[0]:
                best = (total, int(order_a[ia]), int(jb))
    return best


def pair_min_2d(
    stats_a: tuple[np.ndarray, np.ndarray],
    err_a: np.ndarray,
    stats_b: tuple[np.ndarray, np.ndarray],
    err_b: np.ndarray,
    tol: float,
    chunk: int = 512,
) -> tuple[float, int, int] | None:
    """Two-constraint variant of :func:`pair_min_1d`, chunked brute force."""
    ta, fa = stats_a
    tb, fb = stats_b
    best: tuple[float, int, int] | None = None
    for start in range(0, len(tb), chunk):
        sl = slice(start, min(start + chunk, len(tb)))
        mask = (np.abs(ta[None, :] - tb[sl, None]) <= tol) & (
            np.abs(fa[None, :] - fb[sl, None]) <= tol
        )
        if not mask.any():
            continue
        totals = np.where(mask, err_a[None, :] + err_b[sl, None], np.inf)
        flat = int(np.argmin(totals))
        ib, ia = divmod(flat, totals.shape[1])
        val = float(totals[ib, ia])
        if math.isfinite(val) and (best is None or val < best[0]):
            best = (val, ia, start + ib)
    return best


@dataclass(frozen=True)
class _GroupGrid:
    """Per-group arrays for one base classifier over the (u, v) options."""

    stats: tuple[np.ndarray, ...]
    err_on_clean: np.ndarray
    uu: np.ndarray
    vv: np.ndarray


def _group_grid(
    base: BaseClassifier | PQClassifier,
    group: str,
    corrupted: Distribution,
    clean: Distribution,
    notion: str,
    uu: np.ndarray,
    vv: np.ndarray,
) -> _GroupGrid:
    pq = as_pq(base)

    def masses(dist: Distribution) -> tuple[float, float, float, float]:
        m1p = m1n = m0p = m0n = 0.0
        for a in dist.atoms:
            if a.group != group:
                continue
            pred = pq.base.predict(a.point, a.group, a.feature)
            if pred == 1:
                if a.label == 1:
                    m1p += a.mass
                else:
                    m1n += a.mass
            else:
                if a.label == 1:
                    m0p += a.mass
                else:
                    m0n += a.mass
        return m1p, m1n, m0p, m0n

    c1p, c1n, c0p, c0n = masses(corrupted)
    d1p, d1n, d0p, d0n = masses(clean)

    r_tilde = c1p + c1n + c0p + c0n
    stats: list[np.ndarray] = []
    if notion == "dp":
        stats.append((uu * (c1p + c1n) + vv * (c0p + c0n)) / r_tilde)
    elif notion in ("eopp", "eodds"):
        pos = c1p + c0p
        if pos <= 0.0:
            raise InputError(f"group {group!r} has no positives on the corrupted distribution")
        stats.append((uu * c1p + vv * c0p) / pos)
        if notion == "eodds":
            neg = c1n + c0n
            if neg <= 0.0:
                raise InputError(f"group {group!r} has no negatives on the corrupted distribution")
            stats.append((uu * c1n + vv * c0n) / neg)
    else:
        raise InputError(f"best_response does not support notion {notion!r}")

    err = (1.0 - uu) * d1p + uu * d1n + (1.0 - vv) * d0p + vv * d0n
    return _GroupGrid(stats=tuple(stats), err_on_clean=err, uu=uu, vv=vv)


def best_response(
    corrupted: Distribution,
    clean: Distribution,
    hypotheses: Sequence[BaseClassifier | PQClassifier],
    notion: str,
    grid_n: int = 41,
    reference_error: float = 0.0,
    alpha: float | None = None,
) -> RepairWitness:
    """Minimum-error grid point satisfying the fairness notion on the
    corrupted distribution, with error reported on the clean one.

    The fairness tolerance is 2 / grid_n. Raises ``InfeasibleError`` when no
    grid point meets it; the tolerance is never silently relaxed.
    """
    if notion not in ("dp", "eopp", "eodds"):
        raise InputError(f"best_response supports dp/eopp/eodds, got {notion!r}")
    if grid_n < 11:
        raise InputError("grid_n must be at least 11")
    if len(clean.groups) != 2:
        raise InputError("best_response searches exactly two groups")
    if not hypotheses:
        raise InputError("hypothesis list is empty")

    ga, gb = clean.groups
    tol = 2.0 / grid_n
    uu, vv = option_grid(grid_n)

    best: tuple[float, int, int, int] | None = None  # (total err, base idx, ia, ib)
    for k, h in enumerate(hypotheses):
        grid_a = _group_grid(h, ga, corrupted, clean, notion, uu, vv)
        grid_b = _group_grid(h, gb, corrupted, clean, notion, uu, vv)
        if len(grid_a.stats) == 1:
            found = pair_min_1d(
                grid_a.stats[0], grid_a.err_on_clean, grid_b.stats[0], grid_b.err_on_clean, tol
            )
        else:
            found = pair_min_2d(
                (grid_a.stats[0], grid_a.stats[1]),
                grid_a.err_on_clean,
                (grid_b.stats[0], grid_b.stats[1]),
                grid_b.err_on_clean,
                tol,
            )
        if found is None:
            continue
        total, ia, ib = found
        if best is None or (total, k, ia, ib) < best:
            best = (total, k, ia, ib)

    if best is None:
        raise InfeasibleError(
            f"no grid point satisfies {notion} within tolerance {tol:.4g} at grid_n={grid_n}"
        )

    _, k, ia, ib = best
    base = as_pq(hypotheses[k]).base
    repaired = PQClassifier(
        base=base,
        params={
            ga: params_from_uv(float(uu[ia]), float(vv[ia])),
            gb: params_from_uv(float(uu[ib]), float(vv[ib])),
        },
    )
    gap = fairness_gap(group_stats(repaired, corrupted), notion)
    err = error(repaired, clean)
    return RepairWitness(
        classifier=repaired,
        notion=notion,
        gap_on_corrupted=gap,
        error_on_original=err,
        excess_error_on_original=err - reference_error,
        candidate_label="direct",
        alpha=alpha,
    )
