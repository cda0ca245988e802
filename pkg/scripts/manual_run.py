"""
Manual runner for the three reference ODE cases of the classic TYC model.

Usage (from project root, after `pip install -e .`):

    python scripts/manual_run.py --r 17.8125 --output results.csv

Each case starts from f0 = m0 and a supermale level s0; the script prints the
region, the negativity intervals of m and the blow-up estimate.
"""

import argparse
import logging
from typing import Any, Dict, List

import pandas as pd

from tyclab.analysis.region_classifier import classify
from tyclab.engine.integrator_config import IntegratorConfig
from tyclab.models.params import (
    DimensionlessParams,
    ModelFamily,
    ModelKind,
    ModelSpec,
    StateVector,
)

REFERENCE_CASES = (
    ("positive", StateVector(0.3, 0.3, 0.1)),
    ("negative", StateVector(0.3, 0.3, 2.5)),
    ("blowup", StateVector(0.4, 0.4, 2.5)),
)


def parse_args() -> argparse.Namespace:
    parser = argparse.ArgumentParser(
        description="Classify the reference initial conditions of the classic model."
    )
    parser.add_argument(
        "--r",
        type=float,
        default=17.8125,
        help="Scaled growth rate r (default: 17.8125)",
    )
    parser.add_argument(
        "--gamma",
        type=float,
        default=0.0,
        help="Scaled supermale introduction rate (default: 0)",
    )
    parser.add_argument(
        "--output",
        help="Optional output CSV file. If not provided, prints to stdout only.",
    )
    return parser.parse_args()


def run_manual(r: float = 17.8125, gamma: float = 0.0) -> List[Dict[str, Any]]:
    """
    Classify every reference case.

    Returns:
        one row per case: name, initial values, region, m-intervals, blow-up time.
    """
    model = ModelSpec(ModelKind(ModelFamily.CLASSIC3), DimensionlessParams(r, gamma))
    cfg = IntegratorConfig()
    rows = []
    for name, x0 in REFERENCE_CASES:
        outcome = classify(model, x0, cfg)
        blowup = outcome.events.blowup
        rows.append(
            {
                "case": name,
                "f0": x0.f,
                "m0": x0.m,
                "s0": x0.s,
                "region": outcome.region.value,
                "m_intervals": outcome.events.intervals("m"),
                "blowup_t": None if blowup is None else blowup.t_estimate,
            }
        )
    return rows


def main() -> None:
    logging.basicConfig(
        level=logging.INFO, format="%(asctime)s - %(levelname)s - %(message)s"
    )
    args = parse_args()

    rows = run_manual(r=args.r, gamma=args.gamma)
    for row in rows:
        print(
            f"{row['case']:>8}: ({row['f0']}, {row['m0']}, {row['s0']}) -> "
            f"{row['region']}, m<0 on {row['m_intervals']}, blow-up t={row['blowup_t']}"
        )

    if args.output:
        pd.DataFrame(rows).to_csv(args.output, index=False)
        print(f"Result written to {args.output}")


if __name__ == "__main__":
    main()
