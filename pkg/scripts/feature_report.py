"""One-vs-all AUC strength table for the hand features and the TF-IDF probe.

    python scripts/feature_report.py --config src/citepurpose/data/fixtures/config.json

Writes nothing; prints the table with AUC values and the strong/neutral flags.
"""

from __future__ import annotations

import argparse
import warnings

import numpy as np

from citepurpose.corpus import LABELS, load_citation_records
from citepurpose.evaluation import feature_analysis, tfidf_probe
from citepurpose.pipeline import RunConfig, featurize_records, load_sectioned
from citepurpose.tfidf import fit_tfidf, l2_normalize, transform

SHORT = {"STRONG_POSITIVE": "+", "STRONG_NEGATIVE": "-", "NEUTRAL": "."}


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", required=True)
    ap.add_argument("--seed", type=int, default=None)
    args = ap.parse_args()
    config = RunConfig.load(args.config, seed=args.seed)

    records = [r for r in load_citation_records(config.citations) if r.label is not None]
    feats = featurize_records(records, load_sectioned(config))
    labels = [r.label for r in records]
    X = np.array([f.hand.as_array() for f in feats])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rows = feature_analysis(X, labels)
        model = fit_tfidf([f.window for f in feats], config.tfidf_max_features)
        V = np.zeros((len(feats), model.dim))
        for i, f in enumerate(feats):
            v = transform(model, f.window)
            v = l2_normalize(v) if config.tfidf_l2 else v
            V[i, v.indices] = v.values
        rows.append(tfidf_probe(V, labels, [r.citing_paper_id for r in records], seed=config.seed, val_fraction=config.val_fraction))

    width = max(len(r.feature) for r in rows)
    print(" " * width + "".join(f"{lab.value[:10]:>12}" for lab in LABELS))
    for row in rows:
        cells = []
        for auc, flag in zip(row.aucs, row.flags):
            cells.append(f"{'n/a':>12}" if auc is None else f"{auc:>10.3f} {SHORT[flag.upper()]}")
        print(f"{row.feature:<{width}}" + "".join(cells))
    print("\n+ strong positive (AUC > 0.57), - strong negative (AUC < 0.43), . neutral")


if __name__ == "__main__":
    main()
