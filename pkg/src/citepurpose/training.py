"""Training loop, batching, prediction and checkpoints."""

from __future__ import annotations

import base64
import copy
import json
import logging
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import __version__
from .corpus import LABELS, PurposeLabel
from .model import TASKS, AdamState, Batch, CitationModel, ModelShape, optimizer_step

log = logging.getLogger(__name__)

CHECKPOINT_FORMAT = 1
VARIANTS = ("full", "no_hand", "no_lstm", "no_tfidf")


class TrainingDiverged(FloatingPointError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    w_purpose: float = 1.0
    w_worthiness: float = 0.1
    w_section: float = 0.1
    lr: float = 1e-3
    dropout: float = 0.5
    batch_size: int = 32
    max_epochs: int = 50
    patience: int = 5
    seed: int = 0
    h_lstm: int = 64
    hidden: int = 128
    d_trainable: int = 50
    scaffold_every: int = 4  # one batch of each scaffold task per this many purpose batches
    max_len: int = 80

    def __post_init__(self):
        if self.w_purpose <= 0 or self.w_worthiness < 0 or self.w_section < 0:
            raise ValueError("loss weights must be non-negative and w_purpose > 0")
        if self.w_purpose <= max(self.w_worthiness, self.w_section):
            raise ValueError("w_purpose must exceed both scaffold weights")
        if not 0 <= self.dropout < 1:
            raise ValueError("dropout must be in [0, 1)")
        if self.patience < 1 or self.batch_size < 1 or self.max_epochs < 1 or self.scaffold_every < 1:
            raise ValueError("patience, batch_size, max_epochs and scaffold_every must be >= 1")

    @property
    def weights(self) -> dict[str, float]:
        return {"purpose": self.w_purpose, "worthiness": self.w_worthiness, "section": self.w_section}

    @classmethod
    def from_dict(cls, d: Mapping) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown train config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass
class EncodedSet:
    """Pre-tokenized examples of one task, ready to be cut into batches."""

    task: str
    static_ids: list[np.ndarray]
    token_ids: list[np.ndarray]
    labels: np.ndarray
    hand: np.ndarray | None = None
    tfidf: np.ndarray | None = None
    ids: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.labels)

    def batch(self, idx: Sequence[int]) -> Batch:
        idx = np.asarray(idx, dtype=int)
        T = max(len(self.token_ids[i]) for i in idx)
        s_ids = np.zeros((len(idx), T), dtype=np.int64)
        t_ids = np.zeros((len(idx), T), dtype=np.int64)
        mask = np.zeros((len(idx), T), dtype=bool)
        for row, i in enumerate(idx):
            n = len(self.token_ids[i])
            s_ids[row, :n] = self.static_ids[i]
            t_ids[row, :n] = self.token_ids[i]
            mask[row, :n] = True
        return Batch(
            self.task,
            s_ids,
            t_ids,
            mask,
            self.labels[idx],
            None if self.hand is None else self.hand[idx],
            None if self.tfidf is None else self.tfidf[idx],
        )

    def batches(self, size: int):
        for start in range(0, len(self), size):
            yield self.batch(range(start, min(start + size, len(self))))


@dataclass
class ExperimentData:
    train: EncodedSet
    val: EncodedSet | None
    static: np.ndarray
    vocab_size: int
    scaffolds: dict[str, EncodedSet] = field(default_factory=dict)
    scaffold_val: dict[str, EncodedSet] = field(default_factory=dict)

    @property
    def n_tfidf(self) -> int:
        return 0 if self.train.tfidf is None else self.train.tfidf.shape[1]


class EarlyStopping:
    """Tracks the best score; signals a stop after ``patience`` epochs without strict improvement."""

    def __init__(self, patience: int):
        self.patience = patience
        self.best: float | None = None
        self.best_epoch = 0
        self.bad_epochs = 0

    def update(self, epoch: int, score: float) -> bool:
        """Record a score; return True if this epoch is the new best."""
        if self.best is None or score > self.best:
            self.best, self.best_epoch, self.bad_epochs = score, epoch, 0
            return True
        self.bad_epochs += 1
        return False

    @property
    def should_stop(self) -> bool:
        return self.bad_epochs >= self.patience


class _Cycler:
    def __init__(self, n: int, rng: np.random.Generator):
        self.n, self.rng = n, rng
        self.order = rng.permutation(n)
        self.pos = 0

    def take(self, k: int) -> np.ndarray:
        out = []
        while len(out) < min(k, self.n):
            if self.pos == self.n:
                self.order, self.pos = self.rng.permutation(self.n), 0
            out.append(self.order[self.pos])
            self.pos += 1
        return np.array(out)


def build_model(config: TrainConfig, data: ExperimentData, variant: str = "full") -> CitationModel:
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    shape = ModelShape(
        vocab_size=data.vocab_size,
        d_static=data.static.shape[1],
        d_trainable=config.d_trainable,
        h_lstm=config.h_lstm,
        hidden=config.hidden,
        n_tfidf=data.n_tfidf,
        use_lstm=variant != "no_lstm",
        use_hand=variant != "no_hand",
        use_tfidf=variant != "no_tfidf",
    )
    init_rng = np.random.default_rng(np.random.SeedSequence(config.seed).spawn(4)[0])
    return CitationModel.initialize(shape, data.static, init_rng)


def predict_proba(model: CitationModel, data: EncodedSet, batch_size: int = 64) -> np.ndarray:
    if len(data) == 0:
        return np.zeros((0, 6))
    return np.vstack([model.predict_proba(b) for b in data.batches(batch_size)])


def predict(model: CitationModel, data: EncodedSet) -> tuple[list[PurposeLabel], np.ndarray]:
    probs = predict_proba(model, data)
    return [LABELS[i] for i in probs.argmax(axis=1)], probs


def accuracy(model: CitationModel, data: EncodedSet) -> float:
    probs = predict_proba(model, data)
    return float(np.mean(probs.argmax(axis=1) == data.labels))


def purpose_macro_f1(model: CitationModel, data: EncodedSet) -> float:
    from .evaluation import macro_f1

    probs = predict_proba(model, data)
    return macro_f1(list(probs.argmax(axis=1)), list(data.labels))


@dataclass
class TrainResult:
    model: CitationModel
    history: list[dict]
    best_epoch: int


def train(
    config: TrainConfig,
    model: CitationModel,
    train_set: EncodedSet,
    val_set: EncodedSet | None = None,
    scaffolds: Mapping[str, EncodedSet] | None = None,
    scaffold_val: Mapping[str, EncodedSet] | None = None,
) -> TrainResult:
    """Multi-task training with early stopping on purpose macro-F1.

    Each optimizer step uses one purpose batch; every ``scaffold_every``-th step
    (counting from the first) also adds one batch of each scaffold task with a
    positive weight. The monitored score is validation macro-F1, or training
    macro-F1 when no validation set is given. The returned model holds the
    parameters of the best epoch.

    Purpose shuffling/dropout and each scaffold task draw from separate seeded
    streams, so zero-weight scaffolds leave the purpose trajectory untouched.
    """
    if len(train_set) == 0:
        raise ValueError("no purpose training data")
    scaffolds = {t: s for t, s in (scaffolds or {}).items() if len(s) and config.weights[t] > 0}
    scaffold_val = scaffold_val or {}
    _, purpose_seq, *task_seqs = np.random.SeedSequence(config.seed).spawn(4)
    rng = np.random.default_rng(purpose_seq)
    task_rngs = {t: np.random.default_rng(s) for t, s in zip(TASKS[1:], task_seqs)}
    cyclers = {t: _Cycler(len(s), task_rngs[t]) for t, s in scaffolds.items()}

    state = AdamState.zeros_like(model.params)
    stopper = EarlyStopping(config.patience)
    best_params = copy.deepcopy(model.params)
    history: list[dict] = []
    step = 0
    for epoch in range(1, config.max_epochs + 1):
        sums = {t: 0.0 for t in TASKS}
        counts = {t: 0 for t in TASKS}
        total_sum = 0.0
        order = rng.permutation(len(train_set))
        for start in range(0, len(order), config.batch_size):
            idx = order[start : start + config.batch_size]
            batches = {"purpose": train_set.batch(idx)}
            keep = {"purpose": model.draw_keep_mask(len(idx), config.dropout, rng)}
            if step % config.scaffold_every == 0:
                for task in TASKS[1:]:
                    if task in scaffolds:
                        sidx = cyclers[task].take(config.batch_size)
                        batches[task] = scaffolds[task].batch(sidx)
                        keep[task] = model.draw_keep_mask(len(sidx), config.dropout, task_rngs[task])
            loss, losses, grads = model.loss_and_grads(batches, config.weights, keep)
            if not np.isfinite(loss):
                raise TrainingDiverged(f"non-finite loss at epoch {epoch}, step {step}")
            optimizer_step(model.params, grads, state, config.lr)
            total_sum += loss
            for t, v in losses.items():
                sums[t] += v
                counts[t] += 1
            step += 1

        n_steps = -(-len(order) // config.batch_size)
        record = {
            "epoch": epoch,
            "loss": total_sum / n_steps,
            **{f"loss_{t}": (sums[t] / counts[t] if counts[t] else None) for t in TASKS},
            "train_macro_f1": purpose_macro_f1(model, train_set),
            "val_macro_f1": purpose_macro_f1(model, val_set) if val_set is not None and len(val_set) else None,
        }
        for task, s in scaffold_val.items():
            record[f"val_{task}_acc"] = accuracy(model, s) if len(s) else None
        score = record["val_macro_f1"] if record["val_macro_f1"] is not None else record["train_macro_f1"]
        if stopper.update(epoch, score):
            best_params = copy.deepcopy(model.params)
        record["best_epoch"] = stopper.best_epoch
        history.append(record)
        log.info("epoch %d loss %.4f monitored F1 %.4f", epoch, record["loss"], score)
        if stopper.should_stop:
            break
    model.params = best_params
    return TrainResult(model, history, stopper.best_epoch)


def fit_model(config: TrainConfig, data: ExperimentData, variant: str = "full") -> TrainResult:
    model = build_model(config, data, variant)
    return train(config, model, data.train, data.val, data.scaffolds, data.scaffold_val)


# checkpoints


def _encode_array(a: np.ndarray) -> str:
    return base64.b64encode(np.ascontiguousarray(a, dtype="<f8").tobytes()).decode("ascii")


def _decode_array(s: str, shape) -> np.ndarray:
    return np.frombuffer(base64.b64decode(s), dtype="<f8").reshape(shape).copy()


def save_checkpoint(path: str | Path, model: CitationModel, meta: Mapping) -> None:
    """JSON container: shape table, float64 little-endian base64 tensors and arbitrary metadata."""
    table = model.shape.shape_table()
    doc = {
        "format": CHECKPOINT_FORMAT,
        "tool_version": __version__,
        "model_shape": model.shape.to_dict(),
        "shape_table": {k: list(v) for k, v in table.items()},
        "params": {k: _encode_array(model.params[k]) for k in sorted(table)},
        **meta,
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n", encoding="utf-8")


def load_checkpoint(path: str | Path, static: np.ndarray) -> tuple[CitationModel, dict]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"unsupported checkpoint format {doc.get('format')!r}")
    shape = ModelShape(**doc["model_shape"])
    expected = {k: list(v) for k, v in shape.shape_table().items()}
    if doc["shape_table"] != expected:
        raise ValueError("checkpoint shape table does not match its model shape")
    params = {k: _decode_array(doc["params"][k], tuple(v)) for k, v in expected.items()}
    return CitationModel(shape, params, static), doc


def history_json(history: list[dict], **meta) -> str:
    return json.dumps({**meta, "history": history}, sort_keys=True, indent=1) + "\n"


def config_dict(config: TrainConfig) -> dict:
    return asdict(config)
