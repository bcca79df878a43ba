
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from citepurpose.corpus import LABELS, PurposeLabel
from citepurpose.evaluation import (
    AblationReport,
    feature_analysis,
    feature_report_csv,
    macro_f1,
    per_class_prf,
    roc_auc,
    strength,
    tfidf_probe,
)
from oracles import pairwise_auc

B, U = PurposeLabel.BACKGROUND, PurposeLabel.USES


def test_macro_f1_perfect():
    assert macro_f1(list(LABELS), list(LABELS)) == 1.0


def test_macro_f1_single_predicted_class():
    # class A: P = 1/2, R = 1, F1 = 2/3; every other class 0
    assert abs(macro_f1([B] * 4, [B, B, U, U]) - (2 / 3) / 6) <= 1e-12


def test_macro_f1_disjoint():
    assert macro_f1([B, B], [U, U]) == 0.0


def test_per_class_prf_values():
    prf = per_class_prf(["USES", "USES", "BACKGROUND"], ["USES", "BACKGROUND", "BACKGROUND"])
    assert prf[B.index].tolist() == pytest.approx([1.0, 0.5, 2 / 3], abs=1e-12)
    assert prf[U.index].tolist() == pytest.approx([0.5, 1.0, 2 / 3], abs=1e-12)


def test_macro_f1_errors():
    with pytest.raises(ValueError):
        macro_f1([B], [B, U])
    with pytest.raises(ValueError):
        macro_f1([], [])


label_lists = st.lists(st.tuples(st.integers(0, 5), st.integers(0, 5)), min_size=1, max_size=30)


@given(label_lists, st.randoms())
def test_macro_f1_permutation_invariant(pairs, rnd):
    shuffled = list(pairs)
    rnd.shuffle(shuffled)
    a = macro_f1([p for p, _ in pairs], [g for _, g in pairs])
    b = macro_f1([p for p, _ in shuffled], [g for _, g in shuffled])
    assert abs(a - b) <= 1e-15


def test_roc_auc_examples():
    assert roc_auc([0.1, 0.4, 0.35, 0.8], [False, False, True, True]) == 0.75
    assert roc_auc([0, 1, 2, 3], [0, 0, 1, 1]) == 1.0
    assert roc_auc([5, 5, 5], [0, 1, 1]) == 0.5
    with pytest.raises(ValueError):
        roc_auc([1, 2], [1, 1])


def both_classes(draw_lists):
    return draw_lists.filter(lambda p: 0 < sum(y for _, y in p) < len(p))


scored = both_classes(st.lists(st.tuples(st.integers(0, 4).map(float), st.booleans()), min_size=2, max_size=12))


@given(scored)
def test_roc_auc_matches_pairwise(pairs):
    s, y = zip(*pairs)
    assert roc_auc(s, y) == pairwise_auc(s, y)


@given(scored)
def test_roc_auc_complement(pairs):
    s, y = zip(*pairs)
    assert abs(roc_auc(s, y) + roc_auc(s, [not v for v in y]) - 1) <= 1e-12


@given(scored, st.floats(0.1, 5), st.floats(-3, 3))
def test_roc_auc_monotone_invariant(pairs, scale, shift):
    s, y = zip(*pairs)
    mapped = [np.exp(scale * v) + shift for v in s]
    assert roc_auc(mapped, y) == roc_auc(s, y)


def test_strength_thresholds():
    assert strength(0.57) == "neutral" and strength(0.5700001) == "strong_positive"
    assert strength(0.43) == "neutral" and strength(0.4299999) == "strong_negative"
    assert strength(0.40) == "strong_negative"
    assert strength(None) == "neutral"


def test_feature_analysis_separating_and_constant():
    y = [LABELS[i % 6] for i in range(60)]
    X = np.zeros((60, 9))
    X[:, 0] = [1.0 if l is U else 0.0 for l in y]
    X[:, 1] = 3.0
    rows = feature_analysis(X, y)
    assert len(rows) == 9
    assert rows[0].aucs[U.index] == 1.0 and rows[0].flags[U.index] == "strong_positive"
    assert rows[0].aucs[B.index] < 0.43
    assert all(a == 0.5 for a in rows[1].aucs) and set(rows[1].flags) == {"neutral"}


def test_feature_analysis_missing_class_skipped():
    y = [B, U] * 5
    with pytest.warns(UserWarning):
        rows = feature_analysis(np.random.default_rng(0).random((10, 9)), y)
    assert rows[0].aucs[2] is None and rows[0].flags[2] == "neutral"


def test_feature_analysis_shape_error():
    with pytest.raises(ValueError):
        feature_analysis(np.zeros((3, 4)), [B, B, U])


def synthetic_vectors(n, seed, shuffle=False):
    rng = np.random.default_rng(seed)
    y = np.array([i % 6 for i in range(n)])
    X = rng.random((n, 30)) * 0.1
    X[np.arange(n), y] += 1.0  # one indicator word per class
    if shuffle:
        y = rng.permutation(y)
    groups = [f"g{i % 20}" for i in range(n)]
    return X, [LABELS[i] for i in y], groups


def test_tfidf_probe_separable():
    X, y, g = synthetic_vectors(120, 0)
    row = tfidf_probe(X, y, g, seed=0, epochs=100, lr=1e-2)
    assert row.feature == "tfidf_mlp"
    assert all(a is not None and a >= 0.95 for a in row.aucs)


def test_tfidf_probe_deterministic():
    X, y, g = synthetic_vectors(60, 1)
    assert tfidf_probe(X, y, g, seed=3, epochs=5) == tfidf_probe(X, y, g, seed=3, epochs=5)


def test_tfidf_probe_needs_two_groups():
    X, y, _ = synthetic_vectors(12, 0)
    with pytest.raises(ValueError):
        tfidf_probe(X, y, ["a"] * 12)


def test_feature_report_csv_columns():
    rows = feature_analysis(np.eye(6).repeat(2, axis=0)[:, [0] * 9], [LABELS[i // 2] for i in range(12)])
    text = feature_report_csv(rows, "prov")
    lines = text.splitlines()
    assert lines[0] == "# prov"
    header = lines[1].split(",")
    assert len(header) == 13 and header[1] == "auc_BACKGROUND" and header[-1] == "flag_FUTURE"


def test_ablation_report_lookup():
    from citepurpose.evaluation import AblationRow

    rep = AblationReport((AblationRow("full", 0.5, 0.0), AblationRow("no_hand", 0.25, -0.25)))
    assert rep["no_hand"].delta == -0.25
    with pytest.raises(KeyError):
        rep["no_lstm"]
    assert rep.to_csv().splitlines()[2] == "no_hand,0.250000,-0.250000"


def test_tfidf_probe_shuffled_labels_near_chance():
    X, y, g = synthetic_vectors(200, 0, shuffle=True)
    row = tfidf_probe(X, y, g, seed=0, val_fraction=0.5)
    assert all(a is not None and abs(a - 0.5) <= 0.15 for a in row.aucs), row.aucs


@pytest.mark.slow
def test_tfidf_probe_shuffled_labels_average():
    aucs = []
    for seed in range(10):
        X, y, g = synthetic_vectors(200, seed, shuffle=True)
        aucs += [a for a in tfidf_probe(X, y, g, seed=seed, val_fraction=0.5).aucs if a is not None]
    assert abs(np.mean(aucs) - 0.5) <= 0.03
