import pytest
from hypothesis import given
from hypothesis import strategies as st

from citepurpose.corpus import FullTextDocument
from citepurpose.textproc import (
    header_section,
    is_stop_word,
    locate_citation_occurrences,
    partition_sections,
    split_sentences,
    stop_words,
    tokenize,
)


@pytest.mark.parametrize(
    "text, tokens",
    [
        ("Deep Learning, for text!", ["deep", "learning", "for", "text"]),
        ("", []),
        ("Smith et al. (2019)", ["smith", "et", "al", "2019"]),
        ("under_score x", ["under", "score", "x"]),
    ],
)
def test_tokenize(text, tokens):
    assert tokenize(text) == tokens


@given(st.text())
def test_tokenize_case_idempotent(text):
    assert tokenize(text.lower()) == tokenize(text)


def sentences(text):
    return [text[a:b] for a, b in split_sentences(text)]


def test_split_sentences_examples():
    assert sentences("A first. A second.") == ["A first.", "A second."]
    assert sentences("Smith et al. (2019) agree. Next.") == ["Smith et al. (2019) agree.", "Next."]
    assert sentences("No terminator") == ["No terminator"]
    assert sentences("See Fig. 3 for details. Then stop!") == ["See Fig. 3 for details.", "Then stop!"]
    assert sentences("We use e.g. Adam here. Done?") == ["We use e.g. Adam here.", "Done?"]
    assert sentences("Was it? Yes. 42 ways.") == ["Was it?", "Yes.", "42 ways."]


@given(st.text(alphabet=st.sampled_from(list("ab A.!? \n1e")), max_size=60))
def test_split_spans_cover_non_whitespace(text):
    spans = split_sentences(text)
    prev_end = 0
    covered = set()
    for a, b in spans:
        assert prev_end <= a < b <= len(text)
        assert text[a:b] == text[a:b].strip()
        covered.update(range(a, b))
        prev_end = b
    assert all(i in covered for i, ch in enumerate(text) if not ch.isspace())


def test_stop_words():
    assert len(stop_words()) == 179
    assert is_stop_word("the") and is_stop_word("of") and is_stop_word("a")
    assert not is_stop_word("citation")


@pytest.mark.parametrize(
    "line, section",
    [
        ("1 Introduction", "introduction"),
        ("2. Materials and Methods", "methods"),
        ("III Experiments", "results"),
        ("Evaluation:", "results"),
        ("5 Conclusions", "discussion"),
        ("4.1 Discussion", "discussion"),
        ("Related Work", "other"),
        ("We introduce a method.", None),
        ("Introduction to the problem of parsing is hard", None),
    ],
)
def test_header_section(line, section):
    assert header_section(line) == section


def test_partition_four_sections():
    text = "1 Introduction\nIntro one. Intro two.\n2 Methods\nWe do it.\n3 Results\nIt works.\n4 Discussion\nFine.\n"
    doc = partition_sections(FullTextDocument("p", text))
    assert [s for s, _, _ in doc.section_spans] == ["introduction", "methods", "results", "discussion"]
    assert [doc.section_of(i) for i in range(len(doc))] == ["introduction"] * 2 + ["methods", "results", "discussion"]


def test_partition_materials_and_methods():
    doc = partition_sections(FullTextDocument("p", "Preface text.\nMaterials and Methods\nWe measured it.\n"))
    assert [doc.section_of(i) for i in range(len(doc))] == ["other", "methods"]


def test_partition_headerless():
    doc = partition_sections(FullTextDocument("p", "One thing. Another thing. A third."))
    assert len(doc) == 3
    assert doc.section_spans == (("other", 0, 3),)


@given(st.lists(st.sampled_from(["Introduction", "2 Methods", "Results", "Some text here.", "More. Words!", "", "References"]), max_size=15))
def test_partition_every_sentence_one_section(lines):
    doc = partition_sections(FullTextDocument("p", "\n".join(lines)))
    pos = 0
    for _, start, stop in doc.section_spans:
        assert start == pos and stop > start
        pos = stop
    assert pos == len(doc)


DOC = partition_sections(
    FullTextDocument(
        "p",
        "1 Introduction\nFirst line here. Then Smith found it. Nothing else. More text.\n"
        "2 Methods\nWe follow Smith et al. closely. Plain sentence. Another plain one. Smithson is different. "
        "The end of methods. We compare results in detail.",
    )
)


def test_locate_surname():
    occ = locate_citation_occurrences(DOC, "John Smith", "Then Smith found it.")
    assert [o.sentence_index for o in occ] == [1, 4]
    assert [o.section for o in occ] == ["introduction", "methods"]


def test_locate_context_fallback():
    occ = locate_citation_occurrences(DOC, "A. Nobody", "We compare results in detail.")
    assert [o.sentence_index for o in occ] == [9]


def test_locate_needs_something():
    with pytest.raises(ValueError):
        locate_citation_occurrences(DOC, "", "")


@given(st.text(alphabet=st.sampled_from(list("abc Smith.")), min_size=1, max_size=30), st.sampled_from(["J. Smith", "", "Lee"]))
def test_locate_sorted_nonempty(context, author):
    if not context.strip():
        return
    occ = locate_citation_occurrences(DOC, author, context)
    idx = [o.sentence_index for o in occ]
    assert idx and idx == sorted(set(idx))
    assert all(o.section == DOC.section_of(o.sentence_index) for o in occ)
