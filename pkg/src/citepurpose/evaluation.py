"""Macro-F1, one-vs-all ROC-AUC feature analysis, the TF-IDF probe and module ablation."""

from __future__ import annotations

import csv
import io
import logging
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import rankdata

from .corpus import LABELS, PurposeLabel, n_val_groups, shuffled_groups
from .features import FEATURE_NAMES
from .model import _head_backward, _head_forward, AdamState, cross_entropy, optimizer_step, softmax

log = logging.getLogger(__name__)

STRONG_POSITIVE = "strong_positive"
STRONG_NEGATIVE = "strong_negative"
NEUTRAL = "neutral"
UPPER, LOWER = 0.57, 0.43


def _as_index(label) -> int:
    if isinstance(label, PurposeLabel):
        return label.index
    if isinstance(label, str):
        return PurposeLabel.parse(label).index
    return int(label)


def per_class_prf(predictions: Sequence, golds: Sequence, n_classes: int = 6) -> np.ndarray:
    """(n_classes, 3) array of precision, recall, F1. Undefined ratios count as 0."""
    if len(predictions) != len(golds):
        raise ValueError(f"length mismatch: {len(predictions)} predictions vs {len(golds)} golds")
    if len(golds) == 0:
        raise ValueError("need at least one prediction")
    p = np.array([_as_index(x) for x in predictions])
    g = np.array([_as_index(x) for x in golds])
    out = np.zeros((n_classes, 3))
    for c in range(n_classes):
        tp = np.sum((p == c) & (g == c))
        n_pred, n_gold = np.sum(p == c), np.sum(g == c)
        prec = tp / n_pred if n_pred else 0.0
        rec = tp / n_gold if n_gold else 0.0
        f1 = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
        out[c] = prec, rec, f1
    return out


def macro_f1(predictions: Sequence, golds: Sequence, n_classes: int = 6) -> float:
    """Unweighted mean F1 over all classes; classes never predicted nor present score 0."""
    return float(per_class_prf(predictions, golds, n_classes)[:, 2].mean())


def roc_auc(scores: Sequence[float], positives: Sequence[bool]) -> float:
    """Mann-Whitney AUC with average ranks for ties."""
    s = np.asarray(scores, dtype=float)
    y = np.asarray(positives, dtype=bool)
    if s.shape != y.shape:
        raise ValueError("scores and positives differ in length")
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("roc_auc needs at least one positive and one negative")
    ranks = rankdata(s)
    return float((ranks[y].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


def strength(auc: float | None) -> str:
    if auc is None:
        return NEUTRAL
    if auc > UPPER:
        return STRONG_POSITIVE
    if auc < LOWER:
        return STRONG_NEGATIVE
    return NEUTRAL


@dataclass(frozen=True)
class FeatureStrengthRow:
    feature: str
    aucs: tuple[float | None, ...]  # one per label in LABELS order; None when skipped

    @property
    def flags(self) -> tuple[str, ...]:
        return tuple(strength(a) for a in self.aucs)

    def to_dict(self) -> dict:
        return {
            "feature": self.feature,
            "auc": {lab.value: a for lab, a in zip(LABELS, self.aucs)},
            "flag": {lab.value: f for lab, f in zip(LABELS, self.flags)},
        }


def _one_vs_all_row(name: str, score_for_class, labels: np.ndarray) -> FeatureStrengthRow:
    aucs = []
    for c, lab in enumerate(LABELS):
        pos = labels == c
        if pos.all() or not pos.any():
            warnings.warn(f"{name}: class {lab.value} has no positives or no negatives; skipped")
            aucs.append(None)
            continue
        aucs.append(roc_auc(score_for_class(c), pos))
    return FeatureStrengthRow(name, tuple(aucs))


def feature_analysis(features: np.ndarray, labels: Sequence, names: Sequence[str] = FEATURE_NAMES) -> list[FeatureStrengthRow]:
    """One-vs-all AUC of each raw feature column against each class."""
    X = np.asarray(features, dtype=float)
    y = np.array([_as_index(l) for l in labels])
    if X.shape != (len(y), len(names)):
        raise ValueError(f"feature matrix shape {X.shape} does not match {len(y)} labels x {len(names)} features")
    return [_one_vs_all_row(name, lambda c, j=j: X[:, j], y) for j, name in enumerate(names)]


def tfidf_probe(
    vectors: np.ndarray,
    labels: Sequence,
    groups: Sequence[str],
    seed: int = 0,
    val_fraction: float = 0.3,
    hidden: int = 64,
    epochs: int = 50,
    lr: float = 1e-3,
    batch_size: int = 32,
) -> FeatureStrengthRow:
    """Train a one-hidden-layer ReLU MLP on TF-IDF vectors and score its validation class probabilities.

    The split keeps each group (citing paper) on one side. Classes with fewer
    than 2 validation positives are skipped.
    """
    X = np.asarray(vectors, dtype=float)
    y = np.array([_as_index(l) for l in labels])
    groups = list(groups)
    order = shuffled_groups(groups, seed)
    if len(order) < 2:
        raise ValueError("tfidf_probe needs at least 2 groups")
    val_groups = set(order[: n_val_groups(len(order), val_fraction)])
    is_val = np.array([g in val_groups for g in groups])
    Xtr, ytr, Xva, yva = X[~is_val], y[~is_val], X[is_val], y[is_val]

    rng = np.random.default_rng(seed)
    a1, a2 = 1.0 / np.sqrt(X.shape[1]), 1.0 / np.sqrt(hidden)
    params = {
        "W1": rng.uniform(-a1, a1, (hidden, X.shape[1])),
        "b1": np.zeros(hidden),
        "W2": rng.uniform(-a2, a2, (len(LABELS), hidden)),
        "b2": np.zeros(len(LABELS)),
    }
    state = AdamState.zeros_like(params)
    eye = np.eye(len(LABELS))
    for _ in range(epochs):
        perm = rng.permutation(len(ytr))
        for start in range(0, len(perm), batch_size):
            idx = perm[start : start + batch_size]
            out, cache = _head_forward(Xtr[idx], params["W1"], params["b1"], params["W2"], params["b2"], None)
            dlogits = (softmax(out) - eye[ytr[idx]]) / len(idx)
            _, dW1, db1, dW2, db2 = _head_backward(dlogits, params["W1"], params["W2"], cache)
            optimizer_step(params, {"W1": dW1, "b1": db1, "W2": dW2, "b2": db2}, state, lr)
    out, _ = _head_forward(Xva, params["W1"], params["b1"], params["W2"], params["b2"], None)
    probs = softmax(out)
    log.debug("probe val loss %.4f", float(cross_entropy(out, yva).mean()) if len(yva) else float("nan"))

    aucs = []
    for c, lab in enumerate(LABELS):
        pos = yva == c
        if pos.sum() < 2 or pos.all():
            warnings.warn(f"tfidf probe: class {lab.value} has fewer than 2 validation positives; skipped")
            aucs.append(None)
            continue
        aucs.append(roc_auc(probs[:, c], pos))
    return FeatureStrengthRow("tfidf_mlp", tuple(aucs))


def feature_report_csv(rows: Sequence[FeatureStrengthRow], header_comment: str = "") -> str:
    buf = io.StringIO()
    if header_comment:
        buf.write(f"# {header_comment}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["feature", *(f"auc_{l.value}" for l in LABELS), *(f"flag_{l.value}" for l in LABELS)])
    for row in rows:
        w.writerow([row.feature, *("" if a is None else f"{a:.6f}" for a in row.aucs), *row.flags])
    return buf.getvalue()


@dataclass(frozen=True)
class AblationRow:
    variant: str
    macro_f1: float
    delta: float


@dataclass(frozen=True)
class AblationReport:
    rows: tuple[AblationRow, ...]

    def __getitem__(self, variant: str) -> AblationRow:
        for r in self.rows:
            if r.variant == variant:
                return r
        raise KeyError(variant)

    def to_csv(self, header_comment: str = "") -> str:
        buf = io.StringIO()
        if header_comment:
            buf.write(f"# {header_comment}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["variant", "macro_f1", "delta"])
        for r in self.rows:
            w.writerow([r.variant, f"{r.macro_f1:.6f}", f"{r.delta:+.6f}"])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {"rows": [r.__dict__ for r in self.rows]}


def run_ablation(config, data) -> AblationReport:
    """Train the full model and the three leave-one-module-out variants with one seed.

    ``data.val`` is scored when present, otherwise the training set.
    """
    from .training import VARIANTS, fit_model, purpose_macro_f1

    scores = {}
    for variant in VARIANTS:
        try:
            result = fit_model(config, data, variant)
        except Exception as exc:
            raise RuntimeError(f"ablation variant {variant!r} failed: {exc}") from exc
        target = data.val if data.val is not None and len(data.val) else data.train
        scores[variant] = purpose_macro_f1(result.model, target)
        log.info("ablation %s macro-F1 %.4f", variant, scores[variant])
    full = scores["full"]
    return AblationReport(tuple(AblationRow(v, scores[v], scores[v] - full) for v in VARIANTS))
