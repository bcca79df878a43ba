"""Data model and loaders for citation records, full texts and scaffold examples."""

from __future__ import annotations

import csv
import json
import math
import random
from dataclasses import asdict, dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator


class DataError(ValueError):
    """Raised for malformed or inconsistent input data."""


class PurposeLabel(str, Enum):
    BACKGROUND = "BACKGROUND"
    USES = "USES"
    COMPARES_CONTRASTS = "COMPARES_CONTRASTS"
    MOTIVATION = "MOTIVATION"
    EXTENSION = "EXTENSION"
    FUTURE = "FUTURE"

    @classmethod
    def parse(cls, text: str) -> "PurposeLabel":
        try:
            return cls(text)
        except ValueError:
            raise DataError(f"unknown purpose label {text!r}") from None

    @property
    def index(self) -> int:
        return LABELS.index(self)

    def __str__(self) -> str:
        return self.value


# Fixed label order; argmax ties resolve to the lowest index.
LABELS: tuple[PurposeLabel, ...] = tuple(PurposeLabel)

SECTION_LABELS = (
    "introduction",
    "methods",
    "results",
    "discussion",
    "related_work",
    "conclusion",
    "other",
)

RECORD_FIELDS = (
    "record_id",
    "citing_paper_id",
    "citing_title",
    "citing_author",
    "cited_title",
    "cited_author",
    "citation_context",
)


@dataclass(frozen=True)
class CitationRecord:
    record_id: str
    citing_paper_id: str
    citing_title: str
    citing_author: str
    cited_title: str
    cited_author: str
    citation_context: str
    label: PurposeLabel | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        if self.label is None:
            del d["label"]
        else:
            d["label"] = self.label.value
        return d


@dataclass(frozen=True)
class FullTextDocument:
    citing_paper_id: str
    raw_text: str


@dataclass(frozen=True)
class WorthinessExample:
    sentence: str
    has_citation: bool


@dataclass(frozen=True)
class SectionExample:
    sentence: str
    section_label: str


@dataclass(frozen=True)
class SplitAssignment:
    train_ids: frozenset[str]
    val_ids: frozenset[str]
    seed: int


def _record_from_row(row: dict, line: int) -> CitationRecord:
    values = {}
    for name in RECORD_FIELDS:
        value = row.get(name)
        if not isinstance(value, str):
            raise DataError(f"line {line}: field {name!r} missing or not a string")
        values[name] = value
    if not values["citation_context"].strip():
        raise DataError(f"line {line}: field 'citation_context' is empty")
    if not values["record_id"]:
        raise DataError(f"line {line}: field 'record_id' is empty")
    label = row.get("label")
    if label is None or label == "":
        parsed = None
    elif isinstance(label, str):
        try:
            parsed = PurposeLabel.parse(label)
        except DataError as exc:
            raise DataError(f"line {line}: field 'label': {exc}") from None
    else:
        raise DataError(f"line {line}: field 'label' is not a string")
    return CitationRecord(**values, label=parsed)


def _iter_jsonl(path: Path) -> Iterator[tuple[int, dict]]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}: line {lineno}: invalid JSON ({exc.msg})") from None
            if not isinstance(obj, dict):
                raise DataError(f"{path}: line {lineno}: expected a JSON object")
            yield lineno, obj


def load_citation_records(path: str | Path, format: str | None = None) -> list[CitationRecord]:
    """Load citation records from JSONL or CSV (header row with the same field names).

    The format is inferred from the file suffix when not given.
    """
    path = Path(path)
    if format is None:
        format = "csv" if path.suffix.lower() == ".csv" else "jsonl"
    if format == "jsonl":
        rows: Iterable[tuple[int, dict]] = _iter_jsonl(path)
    elif format == "csv":
        rows = _iter_csv(path)
    else:
        raise DataError(f"unsupported record format {format!r}")

    records: list[CitationRecord] = []
    seen: set[str] = set()
    for lineno, row in rows:
        try:
            rec = _record_from_row(row, lineno)
        except DataError as exc:
            raise DataError(f"{path}: {exc}") from None
        if rec.record_id in seen:
            raise DataError(f"{path}: line {lineno}: duplicate record_id {rec.record_id!r}")
        seen.add(rec.record_id)
        records.append(rec)
    return records


def _iter_csv(path: Path) -> Iterator[tuple[int, dict]]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            yield reader.line_num, row


def save_citation_records(records: Iterable[CitationRecord], path: str | Path) -> None:
    path = Path(path)
    records = list(records)
    if path.suffix.lower() == ".csv":
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=[*RECORD_FIELDS, "label"])
            writer.writeheader()
            for rec in records:
                writer.writerow({**rec.to_dict(), "label": rec.label.value if rec.label else ""})
        return
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_dict(), ensure_ascii=False) + "\n")


def require_labels(records: Iterable[CitationRecord]) -> None:
    for rec in records:
        if rec.label is None:
            raise DataError(f"record {rec.record_id!r} has no label; training data must be labeled")


def load_fulltexts(directory: str | Path) -> dict[str, FullTextDocument]:
    directory = Path(directory)
    docs: dict[str, FullTextDocument] = {}
    for path in sorted(directory.glob("*.txt")):
        try:
            text = path.read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            raise DataError(f"cannot read full text {path.name}: {exc}") from None
        docs[path.stem] = FullTextDocument(path.stem, text)
    return docs


def load_scaffold_examples(path: str | Path, task: str) -> list[WorthinessExample] | list[SectionExample]:
    if task not in ("worthiness", "section"):
        raise DataError(f"unknown scaffold task {task!r}")
    out: list = []
    for lineno, row in _iter_jsonl(Path(path)):
        sentence = row.get("sentence")
        if not isinstance(sentence, str) or not sentence.strip():
            raise DataError(f"{path}: line {lineno}: field 'sentence' missing or empty")
        if task == "worthiness":
            flag = row.get("has_citation")
            if not isinstance(flag, bool):
                raise DataError(f"{path}: line {lineno}: field 'has_citation' must be a boolean")
            out.append(WorthinessExample(sentence, flag))
        else:
            label = row.get("section_label")
            if label not in SECTION_LABELS:
                raise DataError(f"{path}: line {lineno}: section_label {label!r} not in {SECTION_LABELS}")
            out.append(SectionExample(sentence, label))
    return out


def shuffled_groups(group_ids: Iterable[str], seed: int) -> list[str]:
    """Sort ids, then Fisher-Yates shuffle them with ``random.Random(seed)``."""
    ids = sorted(set(group_ids))
    rng = random.Random(seed)
    for i in range(len(ids) - 1, 0, -1):
        j = rng.randrange(i + 1)
        ids[i], ids[j] = ids[j], ids[i]
    return ids


def n_val_groups(n_groups: int, val_fraction: float) -> int:
    # small slack so that e.g. 0.3 * 10 does not round up to 4
    k = math.ceil(val_fraction * n_groups - 1e-9)
    return min(max(k, 1), n_groups - 1)


def grouped_split(records: list[CitationRecord], val_fraction: float, seed: int) -> SplitAssignment:
    """Split records into train/val keeping each citing paper on one side.

    The first ``ceil(val_fraction * n_groups)`` shuffled groups go to validation
    (clamped so both sides get at least one group).
    """
    if not 0 < val_fraction < 1:
        raise DataError(f"val_fraction must be in (0, 1), got {val_fraction}")
    require_labels(records)
    order = shuffled_groups((r.citing_paper_id for r in records), seed)
    if len(order) < 2:
        raise DataError("grouped_split needs at least 2 distinct citing papers")
    val_groups = set(order[: n_val_groups(len(order), val_fraction)])
    train, val = set(), set()
    for rec in records:
        (val if rec.citing_paper_id in val_groups else train).add(rec.record_id)
    return SplitAssignment(frozenset(train), frozenset(val), seed)
