"""Tokenization, sentence splitting, section partitioning and citation lookup."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

from .corpus import FullTextDocument

CANONICAL_SECTIONS = ("introduction", "methods", "results", "discussion", "other")

_TOKEN_RE = re.compile(r"[^\W_]+")
_TERMINATOR_RE = re.compile(r"[.!?]+(?=\s+[A-Z0-9])")
_NUMBERING_RE = re.compile(r"^(?:\d+(?:\.\d+)*|[ivxlc]+)\.?\s+", re.IGNORECASE)

# Lowercased text that, when it immediately precedes the terminator, blocks a split.
ABBREVIATIONS = (
    "et al.",
    "fig.",
    "figs.",
    "e.g.",
    "i.e.",
    "cf.",
    "vs.",
    "eq.",
    "eqs.",
    "sec.",
    "no.",
    "ref.",
    "refs.",
    "approx.",
    "resp.",
    "dr.",
)


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.casefold())


@lru_cache(maxsize=None)
def stop_words() -> frozenset[str]:
    text = resources.files("citepurpose.data").joinpath("stopwords.txt").read_text(encoding="utf-8")
    return frozenset(line.strip() for line in text.splitlines() if line.strip())


def is_stop_word(token: str) -> bool:
    return token in stop_words()


@lru_cache(maxsize=None)
def section_synonyms() -> dict[str, str]:
    """Header pattern -> canonical section."""
    raw = json.loads(resources.files("citepurpose.data").joinpath("section_synonyms.json").read_text(encoding="utf-8"))
    table = {}
    for section, patterns in raw.items():
        if section not in CANONICAL_SECTIONS:
            raise ValueError(f"section_synonyms.json: unknown section {section!r}")
        for pattern in patterns:
            table[" ".join(pattern.lower().split())] = section
    return table


@dataclass(frozen=True)
class Sentence:
    start: int
    end: int
    text: str
    tokens: tuple[str, ...]


def _guarded(text: str, pos: int) -> bool:
    """True if the terminator at ``pos`` closes a known abbreviation."""
    head = text[: pos + 1].lower()
    for abbr in ABBREVIATIONS:
        if head.endswith(abbr):
            before = len(head) - len(abbr) - 1
            if before < 0 or not head[before].isalnum():
                return True
    return False


def split_sentences(text: str) -> list[tuple[int, int]]:
    """Return (start, end) character spans of sentences, stripped of outer whitespace."""
    cuts = [0]
    for m in _TERMINATOR_RE.finditer(text):
        if m.end() - m.start() == 1 and text[m.start()] == "." and _guarded(text, m.start()):
            continue
        cuts.append(m.end())
    cuts.append(len(text))
    spans = []
    for a, b in zip(cuts, cuts[1:]):
        chunk = text[a:b]
        stripped = chunk.strip()
        if not stripped:
            continue
        start = a + (len(chunk) - len(chunk.lstrip()))
        spans.append((start, start + len(stripped)))
    return spans


def header_section(line: str) -> str | None:
    """Canonical section for a header line, or None if the line is not a header."""
    s = line.strip()
    if not s or len(s) > 60:
        return None
    s = _NUMBERING_RE.sub("", s).rstrip(" :.").lower()
    return section_synonyms().get(" ".join(s.split()))


@dataclass(frozen=True)
class SectionedDocument:
    citing_paper_id: str
    sentences: tuple[Sentence, ...]
    # ordered, disjoint (section, start, stop) sentence-index ranges covering all sentences
    section_spans: tuple[tuple[str, int, int], ...]

    def __len__(self) -> int:
        return len(self.sentences)

    def section_of(self, index: int) -> str:
        for name, start, stop in self.section_spans:
            if start <= index < stop:
                return name
        raise IndexError(index)


def partition_sections(doc: FullTextDocument) -> SectionedDocument:
    text = doc.raw_text
    blocks: list[tuple[str, int, int]] = []  # (section, char_start, char_end)
    current, block_start, offset = "other", 0, 0
    for line in text.splitlines(keepends=True):
        section = header_section(line)
        if section is not None:
            blocks.append((current, block_start, offset))
            current, block_start = section, offset + len(line)
        offset += len(line)
    blocks.append((current, block_start, len(text)))

    sentences: list[Sentence] = []
    spans: list[tuple[str, int, int]] = []
    for section, a, b in blocks:
        first = len(sentences)
        for s, e in split_sentences(text[a:b]):
            chunk = text[a + s : a + e]
            sentences.append(Sentence(a + s, a + e, chunk, tuple(tokenize(chunk))))
        if len(sentences) > first:
            if spans and spans[-1][0] == section:
                spans[-1] = (section, spans[-1][1], len(sentences))
            else:
                spans.append((section, first, len(sentences)))
    return SectionedDocument(doc.citing_paper_id, tuple(sentences), tuple(spans))


@dataclass(frozen=True)
class CitationOccurrence:
    sentence_index: int
    section: str
    match_text: str


def _contains_run(tokens: tuple[str, ...] | list[str], run: list[str]) -> bool:
    n = len(run)
    return any(list(tokens[i : i + n]) == run for i in range(len(tokens) - n + 1))


def best_overlap_sentence(doc: SectionedDocument, context: str) -> int:
    """Index of the sentence sharing the most distinct tokens with ``context`` (earliest on ties)."""
    wanted = set(tokenize(context))
    best, best_score = 0, -1
    for i, sent in enumerate(doc.sentences):
        score = len(wanted.intersection(sent.tokens))
        if score > best_score:
            best, best_score = i, score
    return best


def locate_citation_occurrences(doc: SectionedDocument, cited_author: str, context: str) -> list[CitationOccurrence]:
    """Sentences that mention the cited author's surname, plus the best match for ``context``."""
    if not cited_author.strip() and not context.strip():
        raise ValueError("need a cited author or a citation context to locate occurrences")
    if not doc.sentences:
        return []
    found: dict[int, str] = {}
    words = cited_author.split()
    surname = tokenize(words[-1]) if words else []
    if surname:
        for i, sent in enumerate(doc.sentences):
            if _contains_run(sent.tokens, surname):
                found[i] = words[-1]
    if context.strip():
        i = best_overlap_sentence(doc, context)
        found.setdefault(i, doc.sentences[i].text)
    return [CitationOccurrence(i, doc.section_of(i), found[i]) for i in sorted(found)]
