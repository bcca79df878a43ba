"""Static word-vector tables and the trainable second embedding channel."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .corpus import DataError

UNK = "<unk>"


@dataclass(frozen=True)
class WordVectorTable:
    """Frozen pretrained vectors. Row 0 of ``matrix`` is the UNK vector (mean of all rows)."""

    index: dict[str, int]
    matrix: np.ndarray
    sha256: str = ""

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def __len__(self) -> int:
        return len(self.index)

    def ids(self, tokens: Iterable[str]) -> list[int]:
        return [self.index.get(t, 0) for t in tokens]

    def __getitem__(self, token: str) -> np.ndarray:
        return self.matrix[self.index.get(token, 0)]

    @classmethod
    def empty(cls) -> "WordVectorTable":
        return cls({}, np.zeros((1, 0)))


def load_word_vectors(path: str | Path, expected_dim: int | None = None) -> WordVectorTable:
    """Read the ``token v1 v2 ... vd`` text format.

    Rows are stored in sorted token order so lookups and the UNK mean do not
    depend on line order. Duplicate tokens are rejected for the same reason.
    """
    path = Path(path)
    raw = path.read_bytes()
    entries: dict[str, list[float]] = {}
    dim = expected_dim
    for lineno, line in enumerate(raw.decode("utf-8").splitlines(), start=1):
        parts = line.split()
        if not parts:
            continue
        token, nums = parts[0], parts[1:]
        if dim is None:
            dim = len(nums)
        if len(nums) != dim:
            raise DataError(f"{path}: line {lineno}: expected {dim} numbers, got {len(nums)}")
        if token in entries:
            raise DataError(f"{path}: line {lineno}: duplicate token {token!r}")
        try:
            entries[token] = [float(x) for x in nums]
        except ValueError:
            raise DataError(f"{path}: line {lineno}: non-numeric vector component") from None
    if not entries:
        raise DataError(f"{path}: no vectors found")
    tokens = sorted(entries)
    body = np.array([entries[t] for t in tokens], dtype=float)
    matrix = np.vstack([body.mean(axis=0), body])
    index = {t: i + 1 for i, t in enumerate(tokens)}
    return WordVectorTable(index, matrix, hashlib.sha256(raw).hexdigest())


@dataclass
class TrainableEmbedding:
    """Trainable channel; row 0 is the UNK row."""

    vocabulary: dict[str, int]
    matrix: np.ndarray
    trainable: bool = field(default=True)

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def ids(self, tokens: Iterable[str]) -> list[int]:
        return [self.vocabulary.get(t, 0) for t in tokens]

    def __getitem__(self, token: str) -> np.ndarray:
        return self.matrix[self.vocabulary.get(token, 0)]


def build_vocabulary(token_lists: Iterable[Sequence[str]], min_count: int = 1) -> dict[str, int]:
    counts: dict[str, int] = {}
    for tokens in token_lists:
        for t in tokens:
            counts[t] = counts.get(t, 0) + 1
    kept = sorted(t for t, c in counts.items() if c >= min_count)
    return {t: i + 1 for i, t in enumerate(kept)}


def init_trainable(vocabulary: dict[str, int], dim: int, rng: np.random.Generator, scale: float = 0.05) -> TrainableEmbedding:
    matrix = rng.uniform(-scale, scale, size=(len(vocabulary) + 1, dim))
    return TrainableEmbedding(vocabulary, matrix)


def encode_tokens(tokens: Sequence[str], static: WordVectorTable, trainable: TrainableEmbedding) -> np.ndarray:
    """(len(tokens), d_static + d_trainable) matrix of concatenated channel vectors."""
    if len(tokens) == 0:
        raise ValueError("cannot encode an empty token sequence")
    return np.hstack([static.matrix[static.ids(tokens)], trainable.matrix[trainable.ids(tokens)]])
