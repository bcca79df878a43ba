"""The nine hand-generated citation features and their standardization."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Sequence

import numpy as np

from .corpus import CitationRecord
from .textproc import (
    CitationOccurrence,
    SectionedDocument,
    best_overlap_sentence,
    is_stop_word,
    locate_citation_occurrences,
    tokenize,
)

log = logging.getLogger(__name__)

FEATURE_NAMES = (
    "n_cit_full",
    "n_cit_intro",
    "n_cit_methods",
    "n_cit_results",
    "n_cit_discussion",
    "rel_pos_context",
    "rel_pos_first",
    "contrast_vocab_flag",
    "title_overlap",
)
N_FEATURES = len(FEATURE_NAMES)


@dataclass(frozen=True)
class HandFeatureVector:
    n_cit_full: int
    n_cit_intro: int
    n_cit_methods: int
    n_cit_results: int
    n_cit_discussion: int
    rel_pos_context: float
    rel_pos_first: float
    contrast_vocab_flag: int
    title_overlap: int
    missing_fulltext: bool = False

    def as_tuple(self) -> tuple:
        return tuple(getattr(self, name) for name in FEATURE_NAMES)

    def as_array(self) -> np.ndarray:
        return np.array(self.as_tuple(), dtype=float)


@lru_cache(maxsize=None)
def contrast_vocabulary() -> tuple[tuple[str, ...], ...]:
    text = resources.files("citepurpose.data").joinpath("contrast_vocab.txt").read_text(encoding="utf-8")
    return tuple(tuple(line.split()) for line in text.splitlines() if line.strip())


def section_citation_counts(occurrences: Sequence[CitationOccurrence]) -> tuple[int, int, int, int, int]:
    by_section = [o.section for o in occurrences]
    return (
        len(by_section),
        by_section.count("introduction"),
        by_section.count("methods"),
        by_section.count("results"),
        by_section.count("discussion"),
    )


def relative_positions(
    occurrences: Sequence[CitationOccurrence], context_sentence: int, sentence_count: int
) -> tuple[float, float]:
    """Positions as (index + 1) / sentence_count for the context sentence and the first occurrence."""
    if not occurrences:
        raise ValueError("relative_positions needs at least one occurrence")
    if sentence_count < 1:
        raise ValueError("sentence_count must be >= 1")
    first = min(o.sentence_index for o in occurrences)
    return (context_sentence + 1) / sentence_count, (first + 1) / sentence_count


def contrast_vocab_flag(context: str) -> int:
    tokens = tokenize(context)
    for entry in contrast_vocabulary():
        n = len(entry)
        if any(tuple(tokens[i : i + n]) == entry for i in range(len(tokens) - n + 1)):
            return 1
    return 0


def _content_words(title: str) -> set[str]:
    return {t for t in tokenize(title) if not is_stop_word(t)}


def title_overlap(citing_title: str, cited_title: str) -> int:
    return len(_content_words(citing_title) & _content_words(cited_title))


def extract_hand_features(record: CitationRecord, doc: SectionedDocument | None) -> HandFeatureVector:
    flag = contrast_vocab_flag(record.citation_context)
    overlap = title_overlap(record.citing_title, record.cited_title)
    if doc is None or len(doc) == 0:
        log.debug("no full text for %s; full-text features set to 0", record.record_id)
        return HandFeatureVector(0, 0, 0, 0, 0, 0.0, 0.0, flag, overlap, missing_fulltext=True)
    occurrences = locate_citation_occurrences(doc, record.cited_author, record.citation_context)
    counts = section_citation_counts(occurrences)
    ctx = best_overlap_sentence(doc, record.citation_context)
    rel_ctx, rel_first = relative_positions(occurrences, ctx, len(doc))
    return HandFeatureVector(*counts, rel_ctx, rel_first, flag, overlap)


@dataclass(frozen=True)
class StandardizerStats:
    mean: np.ndarray
    std: np.ndarray
    constant: np.ndarray  # bool mask of zero-variance features

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "StandardizerStats":
        std = np.asarray(d["std"], dtype=float)
        return cls(np.asarray(d["mean"], dtype=float), std, std == 0)


def fit_standardizer(vectors: Sequence[HandFeatureVector | np.ndarray]) -> StandardizerStats:
    if len(vectors) == 0:
        raise ValueError("cannot fit a standardizer on no vectors")
    X = np.array([v.as_array() if isinstance(v, HandFeatureVector) else np.asarray(v, float) for v in vectors])
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    return StandardizerStats(mean, std, std == 0)


def standardize(v: HandFeatureVector | np.ndarray, stats: StandardizerStats) -> np.ndarray:
    x = v.as_array() if isinstance(v, HandFeatureVector) else np.asarray(v, dtype=float)
    safe = np.where(stats.constant, 1.0, stats.std)
    return np.where(stats.constant, 0.0, (x - stats.mean) / safe)
