"""Glue between raw inputs and model-ready arrays, driven by a JSON run config."""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .corpus import (
    SECTION_LABELS,
    CitationRecord,
    DataError,
    SectionExample,
    SplitAssignment,
    WorthinessExample,
    grouped_split,
    load_citation_records,
    load_fulltexts,
    load_scaffold_examples,
    require_labels,
)
from .embeddings import UNK, WordVectorTable, build_vocabulary, load_word_vectors
from .features import HandFeatureVector, StandardizerStats, extract_hand_features, fit_standardizer, standardize
from .textproc import SectionedDocument, best_overlap_sentence, partition_sections, tokenize
from .tfidf import TfidfModel, context_window, fit_tfidf, l2_normalize, transform
from .training import EncodedSet, ExperimentData, TrainConfig

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    pass


_PATH_KEYS = ("citations", "fulltext_dir", "worthiness", "sections", "word_vectors")


@dataclass
class RunConfig:
    citations: Path
    fulltext_dir: Path | None = None
    worthiness: Path | None = None
    sections: Path | None = None
    word_vectors: Path | None = None
    extra_citations: list[Path] = field(default_factory=list)
    output_dir: Path = Path("runs")
    seed: int = 0
    val_fraction: float = 0.2
    tfidf_max_features: int = 5000
    tfidf_l2: bool = True
    train: TrainConfig = field(default_factory=TrainConfig)
    raw: dict = field(default_factory=dict)

    @property
    def inputs(self) -> dict:
        # output location is not an input, so it stays out of the hash and embedded configs
        return {k: v for k, v in self.raw.items() if k != "output_dir"}

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(json.dumps(self.inputs, sort_keys=True).encode()).hexdigest()[:16]

    def provenance(self) -> dict:
        return {"tool_version": __version__, "seed": self.seed, "config_hash": self.config_hash}

    def provenance_line(self) -> str:
        p = self.provenance()
        return f"citepurpose {p['tool_version']} seed={p['seed']} config_hash={p['config_hash']}"

    @classmethod
    def from_dict(cls, raw: dict, base_dir: Path = Path(".")) -> "RunConfig":
        raw = json.loads(json.dumps(raw))  # detached copy
        known = set(_PATH_KEYS) | {"extra_citations", "output_dir", "seed", "val_fraction", "tfidf_max_features", "tfidf_l2", "train"}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "citations" not in raw:
            raise ConfigError("config needs a 'citations' path")

        def resolve(p):
            return None if p is None else (base_dir / p).resolve()

        paths = {k: resolve(raw.get(k)) for k in _PATH_KEYS}
        for key, path in paths.items():
            if path is not None and not path.exists():
                raise ConfigError(f"config path {key}={path} does not exist")
        extra = [resolve(p) for p in raw.get("extra_citations", [])]
        for p in extra:
            if not p.exists():
                raise ConfigError(f"extra citations file {p} does not exist")
        seed = int(raw.get("seed", 0))
        try:
            train = TrainConfig.from_dict({**raw.get("train", {}), "seed": seed})
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid train config: {exc}") from None
        val_fraction = float(raw.get("val_fraction", 0.2))
        if not 0 < val_fraction < 1:
            raise ConfigError("val_fraction must be in (0, 1)")
        max_features = int(raw.get("tfidf_max_features", 5000))
        if max_features < 1:
            raise ConfigError("tfidf_max_features must be >= 1")
        return cls(
            **paths,
            extra_citations=extra,
            output_dir=Path(raw.get("output_dir", "runs")),
            seed=seed,
            val_fraction=val_fraction,
            tfidf_max_features=max_features,
            tfidf_l2=bool(raw.get("tfidf_l2", True)),
            train=train,
            raw=raw,
        )

    @classmethod
    def load(cls, path: str | Path, seed: int | None = None, out: str | Path | None = None) -> "RunConfig":
        path = Path(path)
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if seed is not None:
            raw["seed"] = seed
        if out is not None:
            raw["output_dir"] = str(out)
        return cls.from_dict(raw, path.parent)


@dataclass
class RecordFeatures:
    record: CitationRecord
    tokens: list[str]
    hand: HandFeatureVector
    window: str


def featurize_records(records: Sequence[CitationRecord], docs: dict[str, SectionedDocument]) -> list[RecordFeatures]:
    out = []
    for rec in records:
        doc = docs.get(rec.citing_paper_id)
        hand = extract_hand_features(rec, doc)
        if doc is not None and len(doc):
            window = context_window(doc, best_overlap_sentence(doc, rec.citation_context))
        else:
            window = rec.citation_context
        out.append(RecordFeatures(rec, tokenize(rec.citation_context), hand, window))
    return out


@dataclass
class Featurizer:
    """Everything fitted on the training split that turns records into model inputs."""

    standardizer: StandardizerStats
    tfidf: TfidfModel
    vocabulary: dict[str, int]
    static: WordVectorTable
    max_len: int = 80
    l2: bool = True

    @classmethod
    def fit(
        cls,
        train_feats: Sequence[RecordFeatures],
        scaffold_sentences: Sequence[str],
        static: WordVectorTable,
        max_features: int,
        l2: bool = True,
        max_len: int = 80,
    ) -> "Featurizer":
        stats = fit_standardizer([f.hand for f in train_feats])
        tfidf = fit_tfidf([f.window for f in train_feats], max_features)
        vocab = build_vocabulary([f.tokens for f in train_feats] + [tokenize(s) for s in scaffold_sentences])
        return cls(stats, tfidf, vocab, static, max_len, l2)

    def _ids(self, token_lists: Sequence[list[str]]):
        s_ids, t_ids = [], []
        for tokens in token_lists:
            tokens = tokens[: self.max_len] or [UNK]
            s_ids.append(np.array(self.static.ids(tokens), dtype=np.int64))
            t_ids.append(np.array([self.vocabulary.get(t, 0) for t in tokens], dtype=np.int64))
        return s_ids, t_ids

    def tfidf_matrix(self, feats: Sequence[RecordFeatures]) -> np.ndarray:
        rows = np.zeros((len(feats), self.tfidf.dim))
        for i, f in enumerate(feats):
            v = transform(self.tfidf, f.window)
            if self.l2:
                v = l2_normalize(v)
            rows[i, v.indices] = v.values
        return rows

    def encode_purpose(self, feats: Sequence[RecordFeatures]) -> EncodedSet:
        s_ids, t_ids = self._ids([f.tokens for f in feats])
        labels = np.array([f.record.label.index if f.record.label is not None else 0 for f in feats], dtype=np.int64)
        hand = np.array([standardize(f.hand, self.standardizer) for f in feats]).reshape(len(feats), 9)
        return EncodedSet("purpose", s_ids, t_ids, labels, hand, self.tfidf_matrix(feats), [f.record.record_id for f in feats])

    def encode_scaffold(self, examples: Sequence[WorthinessExample | SectionExample], task: str) -> EncodedSet:
        s_ids, t_ids = self._ids([tokenize(e.sentence) for e in examples])
        if task == "worthiness":
            labels = [int(e.has_citation) for e in examples]
        else:
            labels = [SECTION_LABELS.index(e.section_label) for e in examples]
        return EncodedSet(task, s_ids, t_ids, np.array(labels, dtype=np.int64))

    def to_meta(self) -> dict:
        vocab = sorted(self.vocabulary, key=self.vocabulary.get)
        return {
            "standardizer": self.standardizer.to_dict(),
            "tfidf": self.tfidf.to_json(),
            "vocabulary": vocab,
            "max_len": self.max_len,
            "tfidf_l2": self.l2,
            "static": {"sha256": self.static.sha256, "dim": self.static.dim, "size": len(self.static)},
        }

    @classmethod
    def from_meta(cls, meta: dict, static: WordVectorTable) -> "Featurizer":
        ref = meta["static"]
        if ref["dim"] != static.dim or ref["sha256"] != static.sha256:
            raise ConfigError("word-vector file differs from the one the checkpoint was trained with")
        vocab = {t: i + 1 for i, t in enumerate(meta["vocabulary"])}
        return cls(
            StandardizerStats.from_dict(meta["standardizer"]),
            TfidfModel.from_json(meta["tfidf"]),
            vocab,
            static,
            int(meta["max_len"]),
            bool(meta["tfidf_l2"]),
        )


def load_static(config: RunConfig) -> WordVectorTable:
    return load_word_vectors(config.word_vectors) if config.word_vectors else WordVectorTable.empty()


def load_sectioned(config: RunConfig) -> dict[str, SectionedDocument]:
    if config.fulltext_dir is None:
        return {}
    return {pid: partition_sections(doc) for pid, doc in load_fulltexts(config.fulltext_dir).items()}


def split_scaffold(examples: list, val_fraction: float, seed: int) -> tuple[list, list]:
    if len(examples) < 2:
        return examples, []
    order = np.random.default_rng(seed).permutation(len(examples))
    k = max(1, int(round(val_fraction * len(examples))))
    val = set(order[:k].tolist())
    return [e for i, e in enumerate(examples) if i not in val], [e for i, e in enumerate(examples) if i in val]


@dataclass
class Prepared:
    config: RunConfig
    records: list[CitationRecord]
    docs: dict[str, SectionedDocument]
    split: SplitAssignment
    train_feats: list[RecordFeatures]
    val_feats: list[RecordFeatures]
    featurizer: Featurizer
    data: ExperimentData


def prepare(config: RunConfig) -> Prepared:
    records = load_citation_records(config.citations)
    require_labels(records)
    docs = load_sectioned(config)
    split = grouped_split(records, config.val_fraction, config.seed)
    extra: list[CitationRecord] = []
    for path in config.extra_citations:
        more = load_citation_records(path)
        require_labels(more)
        extra.extend(more)
    clash = {r.record_id for r in extra} & {r.record_id for r in records}
    if clash:
        raise DataError(f"extra citation files reuse record ids: {sorted(clash)[:5]}")

    train_recs = [r for r in records if r.record_id in split.train_ids] + extra
    val_recs = [r for r in records if r.record_id in split.val_ids]
    train_feats = featurize_records(train_recs, docs)
    val_feats = featurize_records(val_recs, docs)

    scaffolds_raw = {}
    if config.worthiness:
        scaffolds_raw["worthiness"] = load_scaffold_examples(config.worthiness, "worthiness")
    if config.sections:
        scaffolds_raw["section"] = load_scaffold_examples(config.sections, "section")
    scaffold_splits = {t: split_scaffold(ex, config.val_fraction, config.seed) for t, ex in scaffolds_raw.items()}

    static = load_static(config)
    sentences = [e.sentence for tr, _ in scaffold_splits.values() for e in tr]
    featurizer = Featurizer.fit(train_feats, sentences, static, config.tfidf_max_features, config.tfidf_l2, config.train.max_len)
    missing = sum(f.hand.missing_fulltext for f in train_feats + val_feats)
    if missing:
        log.warning("%d records have no full text; their full-text features are 0", missing)

    data = ExperimentData(
        train=featurizer.encode_purpose(train_feats),
        val=featurizer.encode_purpose(val_feats),
        static=static.matrix,
        vocab_size=len(featurizer.vocabulary),
        scaffolds={t: featurizer.encode_scaffold(tr, t) for t, (tr, _) in scaffold_splits.items()},
        scaffold_val={t: featurizer.encode_scaffold(va, t) for t, (_, va) in scaffold_splits.items() if va},
    )
    return Prepared(config, records, docs, split, train_feats, val_feats, featurizer, data)
