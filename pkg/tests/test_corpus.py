import json
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from citepurpose.corpus import (
    LABELS,
    CitationRecord,
    DataError,
    PurposeLabel,
    grouped_split,
    load_citation_records,
    load_fulltexts,
    load_scaffold_examples,
    save_citation_records,
)


def row(i, label="BACKGROUND", paper="A", **kw):
    d = {
        "record_id": f"r{i}",
        "citing_paper_id": paper,
        "citing_title": "Citing",
        "citing_author": "A. Author",
        "cited_title": "Cited",
        "cited_author": "B. Smith",
        "citation_context": f"Smith et al. show thing {i}.",
    }
    if label is not None:
        d["label"] = label
    d.update(kw)
    return d


def write_jsonl(path, rows):
    path.write_text("".join(json.dumps(r) + "\n" for r in rows), encoding="utf-8")
    return path


def test_load_jsonl_in_order(tmp_path):
    recs = load_citation_records(write_jsonl(tmp_path / "c.jsonl", [row(1), row(2, "USES")]))
    assert [r.record_id for r in recs] == ["r1", "r2"]
    assert recs[0].label is PurposeLabel.BACKGROUND
    assert recs[1].label is PurposeLabel.USES


def test_unknown_label_names_line(tmp_path):
    path = write_jsonl(tmp_path / "c.jsonl", [row(1), row(2, "BACKROUND")])
    with pytest.raises(DataError, match="line 2.*label"):
        load_citation_records(path)


def test_missing_field_names_line_and_field(tmp_path):
    bad = row(2)
    del bad["cited_title"]
    with pytest.raises(DataError, match="line 2.*cited_title"):
        load_citation_records(write_jsonl(tmp_path / "c.jsonl", [row(1), bad]))


def test_duplicate_record_id(tmp_path):
    with pytest.raises(DataError, match="duplicate"):
        load_citation_records(write_jsonl(tmp_path / "c.jsonl", [row(1), row(1)]))


def test_empty_context_rejected(tmp_path):
    with pytest.raises(DataError, match="citation_context"):
        load_citation_records(write_jsonl(tmp_path / "c.jsonl", [row(1, citation_context="  ")]))


def test_unlabeled_rows_allowed(tmp_path):
    recs = load_citation_records(write_jsonl(tmp_path / "c.jsonl", [row(1, label=None)]))
    assert recs[0].label is None


def test_csv_roundtrip(tmp_path):
    recs = [CitationRecord(**{k: v for k, v in row(i).items() if k != "label"}, label=LABELS[i % 6]) for i in range(6)]
    recs.append(CitationRecord(**{k: v for k, v in row(9).items() if k != "label"}))
    save_citation_records(recs, tmp_path / "c.csv")
    assert load_citation_records(tmp_path / "c.csv") == recs


_text = st.text(st.characters(blacklist_categories=("Cs",)), max_size=20)


@given(st.lists(st.tuples(_text, _text, _text.filter(str.strip), st.sampled_from([None, *LABELS])), min_size=1, max_size=8))
def test_jsonl_roundtrip(tmp_path_factory, rows):
    recs = [
        CitationRecord(f"id{i}", paper, title, "auth", "cited", "C. D", ctx, label)
        for i, (paper, title, ctx, label) in enumerate(rows)
    ]
    path = tmp_path_factory.mktemp("rt") / "c.jsonl"
    save_citation_records(recs, path)
    once = load_citation_records(path)
    save_citation_records(once, path)
    assert load_citation_records(path) == once == recs


def test_all_six_labels_parse_and_roundtrip():
    names = ["BACKGROUND", "USES", "COMPARES_CONTRASTS", "MOTIVATION", "EXTENSION", "FUTURE"]
    assert [l.value for l in LABELS] == names
    for n in names:
        assert str(PurposeLabel.parse(n)) == n


@given(st.text(max_size=25))
def test_other_label_strings_fail(s):
    if s in {l.value for l in LABELS}:
        return
    with pytest.raises(DataError):
        PurposeLabel.parse(s)


def test_load_fulltexts(tmp_path):
    (tmp_path / "p1.txt").write_text("one", encoding="utf-8")
    (tmp_path / "p2.txt").write_text("two", encoding="utf-8")
    docs = load_fulltexts(tmp_path)
    assert set(docs) == {"p1", "p2"}
    assert docs["p2"].raw_text == "two"


def test_load_fulltexts_empty(tmp_path):
    assert load_fulltexts(tmp_path) == {}


def test_load_fulltexts_bad_utf8(tmp_path):
    (tmp_path / "p3.txt").write_bytes(b"\xff\xfe bad")
    with pytest.raises(DataError, match="p3.txt"):
        load_fulltexts(tmp_path)


def test_scaffold_loading(tmp_path):
    w = load_scaffold_examples(write_jsonl(tmp_path / "w.jsonl", [{"sentence": "See [3].", "has_citation": True}]), "worthiness")
    assert len(w) == 1 and w[0].has_citation is True
    s = load_scaffold_examples(write_jsonl(tmp_path / "s.jsonl", [{"sentence": "We ran it.", "section_label": "methods"}]), "section")
    assert s[0].section_label == "methods"


def test_scaffold_errors(tmp_path):
    with pytest.raises(DataError, match="section_label"):
        load_scaffold_examples(write_jsonl(tmp_path / "s.jsonl", [{"sentence": "x", "section_label": "epilogue"}]), "section")
    with pytest.raises(DataError, match="has_citation"):
        load_scaffold_examples(write_jsonl(tmp_path / "w.jsonl", [{"sentence": "x", "has_citation": "yes"}]), "worthiness")


def records_for(papers):
    return [CitationRecord(f"r{i}", p, "t", "a", "c", "S. Smith", "ctx", PurposeLabel.USES) for i, p in enumerate(papers)]


def test_split_group_atomic():
    split = grouped_split(records_for("AABB"), 0.5, seed=0)
    assert {frozenset({"r0", "r1"}), frozenset({"r2", "r3"})} == {split.train_ids, split.val_ids}


def test_split_deterministic():
    recs = records_for("AABBCCDD")
    assert grouped_split(recs, 0.5, 3) == grouped_split(recs, 0.5, 3)


def _oracle_split(paper_ids, frac, seed):
    # independent restatement: sort, Fisher-Yates from the top with random.Random(seed), take the first k
    ids = sorted(set(paper_ids))
    r = random.Random(seed)
    i = len(ids) - 1
    while i > 0:
        j = r.randrange(i + 1)
        ids[i], ids[j] = ids[j], ids[i]
        i -= 1
    k = round(frac * len(ids))
    return set(ids[:k])


def test_split_matches_documented_shuffle():
    papers = [f"P{i}" for i in range(10)]
    split = grouped_split(records_for(papers), 0.3, seed=7)
    val_papers = {papers[int(rid[1:])] for rid in split.val_ids}
    assert len(val_papers) == 3
    assert val_papers == _oracle_split(papers, 0.3, 7)


def test_split_needs_two_groups():
    with pytest.raises(DataError):
        grouped_split(records_for("AAA"), 0.5, 0)


def test_split_rejects_unlabeled():
    recs = [CitationRecord("r0", "A", "t", "a", "c", "S", "ctx"), *records_for("B")]
    with pytest.raises(DataError, match="no label"):
        grouped_split(recs, 0.5, 0)


@given(st.lists(st.sampled_from("ABCDEFGHIJ"), min_size=2, max_size=40), st.floats(0.05, 0.95), st.integers(0, 10**6))
def test_split_properties(papers, frac, seed):
    if len(set(papers)) < 2:
        return
    recs = records_for(papers)
    split = grouped_split(recs, frac, seed)
    assert not split.train_ids & split.val_ids
    assert split.train_ids | split.val_ids == {r.record_id for r in recs}
    train_p = {r.citing_paper_id for r in recs if r.record_id in split.train_ids}
    val_p = {r.citing_paper_id for r in recs if r.record_id in split.val_ids}
    assert not train_p & val_p
    assert abs(len(val_p) - frac * len(set(papers))) <= 1 + 1e-9
