"""Experiment orchestration: alpha sweeps over the canonical families,
log-log scaling fits with regime verdicts, numeric lower-bound certification,
the minimax-fairness demonstration, and deterministic report emission."""

from __future__ import annotations

import hashlib
import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import families
from .calibration import (
    calibration_report,
    parity_calibration_attack_certify,
    predictive_parity_attack_certify,
    recalibrate_per_group,
    value_shift,
)
from .classifiers import GAP_TOL, error
from .distributions import Distribution
from .errors import ContractError, InputError
from .repair import RepairWitness, best_response, dp_repair, eopp_repair, option_grid
from .attacks import AttackSpec

SWEEP_FAMILIES = ("dp_worked", "eopp_needle", "eodds_duplicate", "calibration_drift")
VERDICTS = ("linear", "sqrt", "constant", "unclassified")

#: smallest beta still considered "bounded away from zero" for a constant verdict
CONSTANT_FLOOR = 1e-3


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce a sweep byte-for-byte."""

    family: str
    notion: str
    alphas: tuple[float, ...]
    grid_n: int = 41
    seed: int = 0
    jobs: int = 1
    family_params: Mapping[str, float] = field(default_factory=dict)
    out_dir: str | None = None

    def __post_init__(self) -> None:
        if self.family not in SWEEP_FAMILIES:
            raise InputError(f"unknown family {self.family!r}; expected one of {SWEEP_FAMILIES}")
        if not self.alphas:
            raise InputError("alpha grid is empty")
        if list(self.alphas) != sorted(self.alphas):
            raise InputError("alpha grid must be sorted ascending")
        for a in self.alphas:
            if not 0.0 < a < 1.0:
                raise InputError(f"alpha {a!r} outside (0, 1)")
        if self.jobs < 1:
            raise InputError("jobs must be >= 1")

    def to_json_dict(self) -> dict:
        return {
            "family": self.family,
            "notion": self.notion,
            "alphas": list(self.alphas),
            "grid_n": self.grid_n,
            "seed": self.seed,
            "jobs": self.jobs,
            "family_params": dict(self.family_params),
            "out_dir": self.out_dir,
        }

    @staticmethod
    def from_json_dict(doc: Mapping) -> "ExperimentConfig":
        return ExperimentConfig(
            family=str(doc["family"]),
            notion=str(doc["notion"]),
            alphas=tuple(float(a) for a in doc["alphas"]),
            grid_n=int(doc.get("grid_n", 41)),
            seed=int(doc.get("seed", 0)),
            jobs=int(doc.get("jobs", 1)),
            family_params={str(k): float(v) for k, v in doc.get("family_params", {}).items()},
            out_dir=doc.get("out_dir"),
        )

    def sha256(self) -> str:
        blob = json.dumps(self.to_json_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


@dataclass(frozen=True)
class SweepPoint:
    alpha: float
    notion: str
    gap_corrupted: float
    beta: float  # witness excess error on the clean distribution
    excess_oracle: float  # best grid response excess on the clean distribution
    attack: dict
    witness: dict
    dist: dict
    contamination: dict

    def to_json_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "notion": self.notion,
            "gap_corrupted": self.gap_corrupted,
            "beta": self.beta,
            "excess_oracle": self.excess_oracle,
            "attack": self.attack,
            "witness": self.witness,
            "dist": self.dist,
            "contamination": self.contamination,
        }


@dataclass(frozen=True)
class RobustnessReport:
    config: ExperimentConfig
    points: tuple[SweepPoint, ...]
    slope: float
    intercept: float
    r_squared: float
    verdict: str
    beta_over_sqrt_alpha_max: float

    def to_json_dict(self) -> dict:
        return {
            "config": self.config.to_json_dict(),
            "config_sha256": self.config.sha256(),
            "seed": self.config.seed,
            "points": [p.to_json_dict() for p in self.points],
            "fit": {
                "slope": self.slope,
                "intercept": self.intercept,
                "r_squared": self.r_squared,
            },
            "verdict": self.verdict,
            "beta_over_sqrt_alpha_max": self.beta_over_sqrt_alpha_max,
        }


@dataclass(frozen=True)
class MinimaxReport:
    alpha: float
    epsilon: dict[str, float]  # per-group error on the corrupted distribution
    max_group_error: float
    opt_clean: float
    gamma: float | None
    gamma_feasible: bool | None

    def to_json_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "epsilon": dict(sorted(self.epsilon.items())),
            "max_group_error": self.max_group_error,
            "opt_clean": self.opt_clean,
            "gamma": self.gamma,
            "gamma_feasible": self.gamma_feasible,
        }


# ---------------------------------------------------------------------------
# Fits and verdicts
# ---------------------------------------------------------------------------


def fit_loglog(points: Sequence[tuple[float, float]]) -> tuple[float, float, float]:
    """OLS fit of ln(beta) on ln(alpha); returns (slope, intercept, R^2).

    Points with beta <= 0 are excluded with a warning; fewer than three
    usable points is an error rather than a garbage fit.
    """
    usable = [(a, b) for a, b in points if b > 0.0]
    if len(usable) < len(points):
        warnings.warn(f"excluded {len(points) - len(usable)} non-positive beta point(s) from fit")
    if len(usable) < 3:
        raise InputError(f"need >= 3 positive points for a log-log fit, have {len(usable)}")
    x = np.log([a for a, _ in usable])
    y = np.log([b for _, b in usable])
    slope, intercept = np.polyfit(x, y, 1)
    residuals = y - (slope * x + intercept)
    ss_res = float(np.dot(residuals, residuals))
    centered = y - y.mean()
    ss_tot = float(np.dot(centered, centered))
    r_squared = 1.0 if ss_tot <= 1e-20 else 1.0 - ss_res / ss_tot
    return float(slope), float(intercept), r_squared


def regime_verdict(slope: float, betas: Sequence[float]) -> str:
    """Classify the fitted exponent into the paperized regime bands."""
    if 0.85 <= slope <= 1.15:
        return "linear"
    if 0.4 <= slope <= 0.6:
        return "sqrt"
    if abs(slope) <= 0.1 and min(betas) >= CONSTANT_FLOOR:
        return "constant"
    return "unclassified"


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------


def _sweep_point(config: ExperimentConfig, alpha: float) -> SweepPoint:
    grid_n = config.grid_n
    slack = 2.0 / grid_n + 1e-9

    if config.family == "dp_worked":
        inst = families.dp_worked(alpha)
        witness = dp_repair(inst.h_star, inst.dist, inst.corrupted, alpha=alpha)
        opt = error(inst.h_star, inst.dist)
        oracle = best_response(
            inst.corrupted, inst.dist, [inst.h_star], "dp",
            grid_n=grid_n, reference_error=opt, alpha=alpha,
        )
        attack = AttackSpec(kind="tpr_shift", alpha=alpha, target_group="B")
    elif config.family == "eopp_needle":
        inst, _ = families.eopp_needle(alpha)
        witness = eopp_repair(inst.h_star, inst.dist, inst.corrupted, alpha=alpha)
        opt = error(inst.h_star, inst.dist)
        oracle = best_response(
            inst.corrupted, inst.dist, [inst.h_star], "eopp",
            grid_n=grid_n, reference_error=opt, alpha=alpha,
        )
        attack = AttackSpec(kind="needle_eopp", alpha=alpha, target_group="B")
    elif config.family == "eodds_duplicate":
        r_b = config.family_params.get("r_b", 0.045)
        inst = families.eodds_duplicate(alpha, r_b=r_b)
        opt = error(inst.h_star, inst.dist)
        oracle = best_response(
            inst.corrupted, inst.dist, [inst.h_star], "eodds",
            grid_n=grid_n, reference_error=opt, alpha=alpha,
        )
        witness = oracle  # no analytic repair exists in the constant regime
        attack = AttackSpec(
            kind="duplicate_flip", alpha=alpha, target_group="B", parameters={"r_b": r_b}
        )
    elif config.family == "calibration_drift":
        return _calibration_sweep_point(alpha)
    else:  # pragma: no cover - config validation rules this out
        raise InputError(f"unknown family {config.family!r}")

    # Analytic witnesses are exact; the grid best response (used as the
    # "witness" in the constant regime) only promises the grid tolerance.
    gap_tol = slack if witness is oracle else GAP_TOL
    if witness.gap_on_corrupted > gap_tol:
        raise ContractError(
            f"witness gap {witness.gap_on_corrupted:.3e} exceeds {gap_tol} at alpha={alpha}"
        )
    if oracle.error_on_original > witness.error_on_original + slack:
        raise ContractError(
            f"grid best response ({oracle.error_on_original:.6f}) worse than the analytic "
            f"witness ({witness.error_on_original:.6f}) beyond grid slack at alpha={alpha}"
        )
    return SweepPoint(
        alpha=alpha,
        notion=witness.notion,
        gap_corrupted=witness.gap_on_corrupted,
        beta=witness.excess_error_on_original,
        excess_oracle=oracle.excess_error_on_original,
        attack=attack.to_json_dict(),
        witness=witness.to_json_dict(),
        dist=inst.dist.to_json_dict(),
        contamination=inst.contamination.to_json_dict(),
    )


def _calibration_sweep_point(alpha: float) -> SweepPoint:
    dist, corrupted, predictor = families.calibration_drift(alpha)
    repaired = recalibrate_per_group(predictor, corrupted)
    gap = calibration_report(repaired, corrupted).max_gap
    if gap > GAP_TOL:
        raise ContractError(f"recalibration gap {gap:.3e} exceeds {GAP_TOL} at alpha={alpha}")
    shift = value_shift(predictor, repaired, corrupted)
    attack = AttackSpec(kind="identity", alpha=alpha, target_group="A")
    return SweepPoint(
        alpha=alpha,
        notion="calibration",
        gap_corrupted=gap,
        beta=shift,
        excess_oracle=shift,
        attack=attack.to_json_dict(),
        witness=repaired.to_json_dict(),
        dist=dist.to_json_dict(),
        contamination={},
    )


def run_sweep(config: ExperimentConfig) -> RobustnessReport:
    """Run every alpha in the config, fit the scaling exponent, and classify
    the regime. A witness violating its gap contract aborts the sweep."""
    if config.jobs == 1:
        points = [_sweep_point(config, a) for a in config.alphas]
    else:
        with ThreadPoolExecutor(max_workers=config.jobs) as pool:
            points = list(pool.map(lambda a: _sweep_point(config, a), config.alphas))

    betas = [p.beta for p in points]
    slope, intercept, r_squared = fit_loglog([(p.alpha, p.beta) for p in points])
    verdict = regime_verdict(slope, betas)
    k_max = max(p.beta / math.sqrt(p.alpha) for p in points)
    return RobustnessReport(
        config=config,
        points=tuple(points),
        slope=slope,
        intercept=intercept,
        r_squared=r_squared,
        verdict=verdict,
        beta_over_sqrt_alpha_max=k_max,
    )


# ---------------------------------------------------------------------------
# Lower-bound certification
# ---------------------------------------------------------------------------

CERT_NOTIONS = ("eopp", "eodds", "predictive_parity", "parity_calibration")


def certify_lower_bound(
    notion: str, alpha: float, grid_n: int = 201
) -> tuple[float, float, bool]:
    """(floor, claimed, pass) for the canonical hard instance of a notion.

    The floor is the exhaustive grid minimum of the learner's clean error;
    pass means floor >= claimed - grid slack (2 / grid_n). Claims: EOpp ->
    sqrt(alpha)/2; EOdds -> (1 - alpha) * r_A / 2; Predictive Parity and
    Parity Calibration -> the fixed 0.2 floor.
    """
    notion = notion.lower()
    if notion not in CERT_NOTIONS:
        raise InputError(f"certify_lower_bound supports {CERT_NOTIONS}, got {notion!r}")
    if not 0.0 < alpha < 1.0:
        raise InputError("alpha must lie in (0, 1)")
    slack = 2.0 / grid_n

    if notion == "eopp":
        inst, _ = families.eopp_needle(alpha)
        floor = best_response(
            inst.corrupted, inst.dist, [inst.h_star], "eopp", grid_n=grid_n
        ).error_on_original
        claimed = math.sqrt(alpha) / 2.0
    elif notion == "eodds":
        r_b = 0.9 * alpha
        inst = families.eodds_duplicate(alpha, r_b=r_b)
        floor = best_response(
            inst.corrupted, inst.dist, [inst.h_star], "eodds", grid_n=grid_n
        ).error_on_original
        claimed = (1.0 - alpha) * (1.0 - r_b) / 2.0
    elif notion == "predictive_parity":
        floor = predictive_parity_attack_certify(alpha, grid_n=grid_n)
        claimed = 0.2
    else:
        floor = parity_calibration_attack_certify(alpha)
        claimed = 0.2
    return floor, claimed, floor >= claimed - slack


# ---------------------------------------------------------------------------
# Minimax demonstration
# ---------------------------------------------------------------------------


def minimax_demo(
    alpha: float, gamma: float | None = None, grid_n: int = 101, r_b: float | None = None
) -> MinimaxReport:
    """Minimize the worst per-group error on the corrupted distribution.

    On the duplication instance the washed-out group is stuck at one-half
    error no matter the classifier, while the clean optimum is zero: the
    adversary drives minimax fairness infeasible for any gamma below 1/2.
    The per-group randomization makes the game separable, so the minimax
    value is the max over groups of each group's own grid minimum.
    """
    if not 0.0 <= alpha < 1.0:
        raise InputError("alpha must lie in [0, 1)")
    if r_b is None:
        r_b = 0.9 * alpha if alpha > 0.0 else 0.1
    if alpha > 0.0:
        inst = families.eodds_duplicate(alpha, r_b=r_b)
        dist, corrupted, h = inst.dist, inst.corrupted, inst.h_star
    else:
        from .calibration import duplication_instance
        from .classifiers import BaseClassifier

        dist, _, table = duplication_instance(0.5, r_b)  # alpha here only shapes Q, unused
        corrupted = dist
        h = BaseClassifier.from_table(table)

    uu, vv = option_grid(grid_n)
    epsilon: dict[str, float] = {}
    opt_terms = []
    for g in dist.groups:
        def masses(d: Distribution) -> tuple[float, float, float, float]:
            m1p = m1n = m0p = m0n = 0.0
            for a in d.atoms:
                if a.group != g:
                    continue
                if h.predict(a.point, a.group, a.feature) == 1:
                    m1p, m1n = (m1p + a.mass, m1n) if a.label == 1 else (m1p, m1n + a.mass)
                else:
                    m0p, m0n = (m0p + a.mass, m0n) if a.label == 1 else (m0p, m0n + a.mass)
            return m1p, m1n, m0p, m0n

        c1p, c1n, c0p, c0n = masses(corrupted)
        r_tilde = c1p + c1n + c0p + c0n
        err_corrupted = ((1.0 - uu) * c1p + uu * c1n + (1.0 - vv) * c0p + vv * c0n) / r_tilde
        epsilon[g] = float(err_corrupted.min())

        d1p, d1n, d0p, d0n = masses(dist)
        err_clean = (1.0 - uu) * d1p + uu * d1n + (1.0 - vv) * d0p + vv * d0n
        opt_terms.append(float(err_clean.min()))

    max_err = max(epsilon.values())
    feasible = None if gamma is None else bool(max_err <= gamma + GAP_TOL)
    return MinimaxReport(
        alpha=alpha,
        epsilon=epsilon,
        max_group_error=max_err,
        opt_clean=math.fsum(opt_terms),
        gamma=gamma,
        gamma_feasible=feasible,
    )


# ---------------------------------------------------------------------------
# Report emission
# ---------------------------------------------------------------------------

CSV_HEADER = "alpha,notion,gap_corrupted,beta,excess_oracle,verdict"


def report_csv(report: RobustnessReport) -> str:
    lines = [CSV_HEADER]
    for p in report.points:
        lines.append(
            f"{p.alpha!r},{p.notion},{p.gap_corrupted!r},{p.beta!r},"
            f"{p.excess_oracle!r},{report.verdict}"
        )
    return "\n".join(lines) + "\n"


def report_json(report: RobustnessReport) -> str:
    return json.dumps(report.to_json_dict(), sort_keys=True, indent=2) + "\n"


def report_svg(report: RobustnessReport, width: int = 480, height: int = 360) -> str:
    """Log-log polyline of (alpha, beta); hand-rolled so output bytes depend
    only on the report contents."""
    pts = [(p.alpha, p.beta) for p in report.points if p.beta > 0.0]
    margin = 40.0
    body: list[str] = []
    if pts:
        xs = [math.log10(a) for a, _ in pts]
        ys = [math.log10(b) for _, b in pts]
        x0, x1 = min(xs), max(xs)
        y0, y1 = min(ys), max(ys)
        xs_span = (x1 - x0) or 1.0
        ys_span = (y1 - y0) or 1.0

        def sx(x: float) -> float:
            return margin + (x - x0) / xs_span * (width - 2 * margin)

        def sy(y: float) -> float:
            return height - margin - (y - y0) / ys_span * (height - 2 * margin)

        coords = " ".join(f"{sx(x):.3f},{sy(y):.3f}" for x, y in zip(xs, ys))
        body.append(
            f'<polyline points="{coords}" fill="none" stroke="black" stroke-width="1.5"/>'
        )
        for x, y in zip(xs, ys):
            body.append(f'<circle cx="{sx(x):.3f}" cy="{sy(y):.3f}" r="3" fill="black"/>')
    body.append(
        f'<text x="{margin}" y="20" font-size="12">'
        f"{report.config.family} / {report.config.notion} "
        f"slope={report.slope:.4f} verdict={report.verdict}</text>"
    )
    inner = "\n".join(body)
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">\n{inner}\n</svg>\n'
    )


def report_from_json_dict(doc: Mapping) -> RobustnessReport:
    """Rebuild a report from its serialized form (for re-rendering)."""
    config = ExperimentConfig.from_json_dict(doc["config"])
    points = tuple(
        SweepPoint(
            alpha=float(p["alpha"]),
            notion=str(p["notion"]),
            gap_corrupted=float(p["gap_corrupted"]),
            beta=float(p["beta"]),
            excess_oracle=float(p["excess_oracle"]),
            attack=dict(p["attack"]),
            witness=dict(p["witness"]),
            dist=dict(p["dist"]),
            contamination=dict(p["contamination"]),
        )
        for p in doc["points"]
    )
    return RobustnessReport(
        config=config,
        points=points,
        slope=float(doc["fit"]["slope"]),
        intercept=float(doc["fit"]["intercept"]),
        r_squared=float(doc["fit"]["r_squared"]),
        verdict=str(doc["verdict"]),
        beta_over_sqrt_alpha_max=float(doc["beta_over_sqrt_alpha_max"]),
    )


def write_report(
    report: RobustnessReport, out_dir: str | Path, formats: Sequence[str] = ("json", "csv")
) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    renderers = {"json": report_json, "csv": report_csv, "svg": report_svg}
    suffixes = {"json": "report.json", "csv": "report.csv", "svg": "sweep.svg"}
    for fmt in formats:
        if fmt not in renderers:
            raise InputError(f"unknown report format {fmt!r}; expected json/csv/svg")
        path = out / suffixes[fmt]
        path.write_text(renderers[fmt](report))
        written.append(path)
    return written
