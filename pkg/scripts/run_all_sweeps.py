#!/usr/bin/env python3
"""Run the four canonical regime sweeps and write reports per family.

Usage: python scripts/run_all_sweeps.py [OUT_DIR] [--seed N]
"""

import argparse
from pathlib import Path

from fairnoise import harness

SWEEPS = [
    ("dp_worked", "dp", (0.01, 0.02, 0.04, 0.08)),
    ("eopp_needle", "eopp", (0.0025, 0.01, 0.04, 0.09)),
    ("eodds_duplicate", "eodds", (0.05, 0.1, 0.2)),
    ("calibration_drift", "calibration", (0.01, 0.02, 0.04, 0.08)),
]


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("out", nargs="?", default="out/sweeps", type=Path)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--grid", type=int, default=41)
    args = parser.parse_args()

    for family, notion, alphas in SWEEPS:
        config = harness.ExperimentConfig(
            family=family, notion=notion, alphas=alphas, grid_n=args.grid, seed=args.seed
        )
        report = harness.run_sweep(config)
        out_dir = args.out / family
        harness.write_report(report, out_dir, ("json", "csv", "svg"))
        print(
            f"{family:18s} notion={notion:11s} slope={report.slope:7.4f} "
            f"r2={report.r_squared:.4f} verdict={report.verdict:8s} -> {out_dir}"
        )


if __name__ == "__main__":
    main()
