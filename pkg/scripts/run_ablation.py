"""Leave-one-module-out ablation over several seeds.

    python scripts/run_ablation.py --config src/citepurpose/data/fixtures/config.json --seeds 0 1 2

Prints the per-seed macro-F1 of each variant and the mean delta against the
full model. Pass --flag-dependent to run on the synthetic dataset whose labels
depend only on the contrast-vocabulary flag instead of a config.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

import numpy as np

from citepurpose.evaluation import run_ablation
from citepurpose.pipeline import RunConfig, prepare
from citepurpose.training import VARIANTS, TrainConfig


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=None)
    ap.add_argument("--flag-dependent", action="store_true")
    ap.add_argument("--seeds", type=int, nargs="+", default=[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)

    scores = {v: [] for v in VARIANTS}
    for seed in args.seeds:
        if args.flag_dependent:
            sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))
            from synthetic import flag_dependent_data

            data = flag_dependent_data(seed=seed)
            cfg = TrainConfig(max_epochs=30, patience=10, batch_size=16, h_lstm=16, hidden=32, d_trainable=16, w_worthiness=0, w_section=0, seed=seed)
        else:
            if args.config is None:
                ap.error("--config is required unless --flag-dependent is given")
            config = RunConfig.load(args.config, seed=seed)
            data = prepare(config).data
            cfg = dataclasses.replace(config.train, seed=seed)
        report = run_ablation(cfg, data)
        for row in report.rows:
            scores[row.variant].append(row.macro_f1)
        print(f"seed {seed}: " + "  ".join(f"{r.variant} {r.macro_f1:.4f}" for r in report.rows))

    full = np.array(scores["full"])
    print("\nvariant    mean_f1  mean_delta")
    for v in VARIANTS:
        s = np.array(scores[v])
        print(f"{v:<10} {s.mean():.4f}  {(s - full).mean():+.4f}")


if __name__ == "__main__":
    main()
