"""Smoothed TF-IDF over citation context windows.

    tfidf(t, d) = tf(t, d) * idf(t),   idf(t) = ln((1 + n) / (1 + df(t))) + 1

with ``tf`` the raw count of ``t`` in ``d``, ``df`` the number of fitted texts
containing ``t`` and ``n`` the number of fitted texts.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .textproc import CitationOccurrence, SectionedDocument, tokenize


@dataclass(frozen=True)
class SparseVector:
    indices: np.ndarray  # strictly increasing int64
    values: np.ndarray
    dim: int

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.dim)
        out[self.indices] = self.values
        return out

    def pairs(self) -> list[tuple[int, float]]:
        return [(int(i), float(v)) for i, v in zip(self.indices, self.values)]


@dataclass(frozen=True)
class TfidfModel:
    vocabulary: dict[str, int]
    df: dict[str, int]
    n: int
    max_features: int

    @property
    def dim(self) -> int:
        return len(self.vocabulary)

    def idf(self, token: str) -> float:
        return math.log((1 + self.n) / (1 + self.df[token])) + 1.0

    def to_json(self) -> dict:
        entries = [{"token": t, "df": self.df[t], "index": i} for t, i in sorted(self.vocabulary.items(), key=lambda kv: kv[1])]
        return {"n": self.n, "max_features": self.max_features, "entries": entries}

    @classmethod
    def from_json(cls, obj: dict) -> "TfidfModel":
        entries = obj["entries"]
        vocab = {e["token"]: int(e["index"]) for e in entries}
        if sorted(vocab.values()) != list(range(len(vocab))):
            raise ValueError("tfidf entries must use indices 0..V-1 without gaps")
        return cls(vocab, {e["token"]: int(e["df"]) for e in entries}, int(obj["n"]), int(obj["max_features"]))

    def save(self, path: str | Path, **meta) -> None:
        Path(path).write_text(json.dumps({**meta, **self.to_json()}, indent=1) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "TfidfModel":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def context_window(doc: SectionedDocument, occurrence: CitationOccurrence | int) -> str:
    """The occurrence's sentence joined with its neighbours, clamped at the document edges."""
    i = occurrence if isinstance(occurrence, int) else occurrence.sentence_index
    lo, hi = max(i - 1, 0), min(i + 2, len(doc.sentences))
    return " ".join(s.text for s in doc.sentences[lo:hi])


def fit_tfidf(texts: Sequence[str], max_features: int = 5000) -> TfidfModel:
    if not texts:
        raise ValueError("cannot fit TF-IDF on an empty corpus")
    if max_features < 1:
        raise ValueError("max_features must be >= 1")
    df: Counter[str] = Counter()
    for text in texts:
        df.update(set(tokenize(text)))
    kept = sorted(df.items(), key=lambda kv: (-kv[1], kv[0]))[:max_features]
    vocab = {tok: i for i, (tok, _) in enumerate(kept)}
    return TfidfModel(vocab, {tok: c for tok, c in kept}, len(texts), max_features)


def transform(model: TfidfModel, text: str) -> SparseVector:
    counts = Counter(t for t in tokenize(text) if t in model.vocabulary)
    items = sorted((model.vocabulary[t], c * model.idf(t)) for t, c in counts.items())
    idx = np.array([i for i, _ in items], dtype=np.int64)
    val = np.array([v for _, v in items], dtype=float)
    return SparseVector(idx, val, model.dim)


def l2_normalize(v: SparseVector) -> SparseVector:
    norm = float(np.sqrt(np.sum(v.values**2)))
    if norm == 0.0:
        return v
    return SparseVector(v.indices, v.values / norm, v.dim)
