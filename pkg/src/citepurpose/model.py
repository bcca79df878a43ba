"""Bi-LSTM + attention encoder with a feature-augmented purpose head and two scaffold heads.

Everything is float64 numpy with hand-written backward passes. Parameter
shapes (h = h_lstm, D = d_static + d_trainable, A = 2h, H = hidden,
F = 2h + n_hand + n_tfidf):

    emb_train           (V + 1, d_trainable)   row 0 = UNK
    lstm_{fwd,bwd}_W    (4h, D)                gate blocks in order i, f, o, g
    lstm_{fwd,bwd}_U    (4h, h)
    lstm_{fwd,bwd}_b    (4h,)
    att_W (A, 2h), att_b (A,), att_u (A,)
    purpose_W1 (H, F), purpose_b1 (H,), purpose_W2 (6, H), purpose_b2 (6,)
    worthiness_W1 (H, 2h) ... worthiness_W2 (2, H)
    section_W1 (H, 2h)    ... section_W2 (7, H)
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Mapping

import numpy as np

TASKS = ("purpose", "worthiness", "section")
N_CLASSES = {"purpose": 6, "worthiness": 2, "section": 7}


def sigmoid(x: np.ndarray) -> np.ndarray:
    # split by sign so exp never overflows
    out = np.empty_like(x, dtype=float)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softmax(logits: np.ndarray, axis: int = -1) -> np.ndarray:
    z = logits - logits.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def cross_entropy(logits: np.ndarray, label) -> float | np.ndarray:
    """-log softmax(logits)[label]; vectorized over leading axes."""
    logits = np.asarray(logits, dtype=float)
    label = np.asarray(label)
    lp = log_softmax(logits)
    return -np.take_along_axis(lp, label[..., None], axis=-1)[..., 0]


def multitask_loss(losses: Mapping[str, float], weights: Mapping[str, float]) -> float:
    return float(sum(weights[t] * losses[t] for t in TASKS if t in losses and losses[t] is not None))


def _cell(z: np.ndarray, c_prev: np.ndarray):
    n = z.shape[-1] // 4
    i = sigmoid(z[..., :n])
    f = sigmoid(z[..., n : 2 * n])
    o = sigmoid(z[..., 2 * n : 3 * n])
    g = np.tanh(z[..., 3 * n :])
    c = f * c_prev + i * g
    tc = np.tanh(c)
    return o * tc, c, (i, f, o, g, tc)


def lstm_step(x, h_prev, c_prev, W, U, b):
    """One LSTM step; returns (h, c)."""
    x, h_prev, c_prev = (np.asarray(a, dtype=float) for a in (x, h_prev, c_prev))
    n = U.shape[1]
    if W.shape != (4 * n, x.shape[-1]) or U.shape != (4 * n, n) or b.shape != (4 * n,):
        raise ValueError(f"inconsistent LSTM shapes W{W.shape} U{U.shape} b{b.shape} x{x.shape}")
    if h_prev.shape[-1] != n or c_prev.shape[-1] != n:
        raise ValueError("state size does not match U")
    h, c, _ = _cell(x @ W.T + h_prev @ U.T + b, c_prev)
    return h, c


def _lstm_forward(X, mask, W, U, b, reverse):
    B, T, _ = X.shape
    n = U.shape[1]
    h = np.zeros((B, n))
    c = np.zeros((B, n))
    xz = X @ W.T + b
    out = np.zeros((B, T, n))
    steps = range(T - 1, -1, -1) if reverse else range(T)
    cache = []
    for t in steps:
        h_new, c_new, gates = _cell(xz[:, t] + h @ U.T, c)
        m = mask[:, t, None]
        cache.append((t, h, c, gates, m))
        h = np.where(m, h_new, h)
        c = np.where(m, c_new, c)
        out[:, t] = h
    return out, cache


def _lstm_backward(dOut, X, W, U, cache):
    dX = np.zeros_like(X)
    dW = np.zeros_like(W)
    dU = np.zeros_like(U)
    db = np.zeros(W.shape[0])
    n = U.shape[1]
    dh = np.zeros((X.shape[0], n))
    dc = np.zeros_like(dh)
    for t, h_prev, c_prev, (i, f, o, g, tc), m in reversed(cache):
        dh_tot = dOut[:, t] + dh
        dh_new = np.where(m, dh_tot, 0.0)
        dc_new = np.where(m, dc, 0.0) + dh_new * o * (1.0 - tc * tc)
        dz = np.concatenate(
            [
                dc_new * g * i * (1.0 - i),
                dc_new * c_prev * f * (1.0 - f),
                dh_new * tc * o * (1.0 - o),
                dc_new * i * (1.0 - g * g),
            ],
            axis=1,
        )
        dW += dz.T @ X[:, t]
        dU += dz.T @ h_prev
        db += dz.sum(axis=0)
        dX[:, t] = dz @ W
        dh = dz @ U + np.where(m, 0.0, dh_tot)
        dc = dc_new * f + np.where(m, 0.0, dc)
    return dX, dW, dU, db


def bilstm(inputs, params: Mapping[str, np.ndarray], mask=None) -> np.ndarray:
    """Bidirectional LSTM over (T, D) or (B, T, D) inputs; outputs [h_fwd ; h_bwd] per step."""
    X = np.asarray(inputs, dtype=float)
    single = X.ndim == 2
    if single:
        X = X[None]
    if X.shape[1] == 0:
        raise ValueError("bilstm needs a sequence of length >= 1")
    if mask is None:
        mask = np.ones(X.shape[:2], dtype=bool)
    f, _ = _lstm_forward(X, mask, params["lstm_fwd_W"], params["lstm_fwd_U"], params["lstm_fwd_b"], False)
    b, _ = _lstm_forward(X, mask, params["lstm_bwd_W"], params["lstm_bwd_U"], params["lstm_bwd_b"], True)
    H = np.concatenate([f, b], axis=-1)
    return H[0] if single else H


def _attention_forward(H, mask, W, b, u):
    pre = np.tanh(H @ W.T + b)
    e = pre @ u
    e = np.where(mask, e, -np.inf)
    alpha = softmax(e, axis=1)
    s = np.einsum("bt,btd->bd", alpha, H)
    return s, (H, pre, alpha)


def _attention_backward(ds, W, u, cache):
    H, pre, alpha = cache
    dH = alpha[..., None] * ds[:, None, :]
    dalpha = np.einsum("btd,bd->bt", H, ds)
    de = alpha * (dalpha - (alpha * dalpha).sum(axis=1, keepdims=True))
    du = np.einsum("bt,bta->a", de, pre)
    dpre = de[..., None] * u * (1.0 - pre * pre)
    dW = np.einsum("bta,btd->ad", dpre, H)
    db = dpre.sum(axis=(0, 1))
    dH += dpre @ W
    return dH, dW, db, du


def attention(hidden, W_a, b_a, u_w, return_weights: bool = False):
    """Additive attention pooling: e_t = tanh(W_a h_t + b_a) . u_w, alpha = softmax(e), s = sum alpha_t h_t."""
    H = np.asarray(hidden, dtype=float)
    if H.ndim != 2 or H.shape[0] == 0:
        raise ValueError("attention expects a non-empty (T, d) array of hidden states")
    s, (_, _, alpha) = _attention_forward(H[None], np.ones((1, H.shape[0]), bool), W_a, b_a, u_w)
    return (s[0], alpha[0]) if return_weights else s[0]


def _head_forward(X, W1, b1, W2, b2, keep):
    a = X @ W1.T + b1
    r = np.maximum(a, 0.0)
    d = r if keep is None else r * keep
    return d @ W2.T + b2, (X, a, d, keep)


def _head_backward(dlogits, W1, W2, cache):
    X, a, d, keep = cache
    dW2 = dlogits.T @ d
    db2 = dlogits.sum(axis=0)
    dd = dlogits @ W2
    dr = dd if keep is None else dd * keep
    da = dr * (a > 0)
    return da @ W1, da.T @ X, da.sum(axis=0), dW2, db2


@dataclass(frozen=True)
class ModelShape:
    vocab_size: int  # trainable vocabulary, excluding the UNK row
    d_static: int
    d_trainable: int = 50
    h_lstm: int = 64
    hidden: int = 128
    n_hand: int = 9
    n_tfidf: int = 0
    use_lstm: bool = True
    use_hand: bool = True
    use_tfidf: bool = True

    @property
    def input_dim(self) -> int:
        return self.d_static + self.d_trainable

    @property
    def purpose_width(self) -> int:
        return 2 * self.h_lstm + (self.n_hand if self.use_hand else 0) + (self.n_tfidf if self.use_tfidf else 0)

    def shape_table(self) -> dict[str, tuple[int, ...]]:
        h, D, H = self.h_lstm, self.input_dim, self.hidden
        table: dict[str, tuple[int, ...]] = {"emb_train": (self.vocab_size + 1, self.d_trainable)}
        for side in ("fwd", "bwd"):
            table[f"lstm_{side}_W"] = (4 * h, D)
            table[f"lstm_{side}_U"] = (4 * h, h)
            table[f"lstm_{side}_b"] = (4 * h,)
        table.update(att_W=(2 * h, 2 * h), att_b=(2 * h,), att_u=(2 * h,))
        for task in TASKS:
            width = self.purpose_width if task == "purpose" else 2 * h
            table[f"{task}_W1"] = (H, width)
            table[f"{task}_b1"] = (H,)
            table[f"{task}_W2"] = (N_CLASSES[task], H)
            table[f"{task}_b2"] = (N_CLASSES[task],)
        return table

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class Batch:
    """One task's minibatch. Token id arrays are right-padded; ``mask`` marks real tokens."""

    task: str
    static_ids: np.ndarray
    token_ids: np.ndarray
    mask: np.ndarray
    labels: np.ndarray
    hand: np.ndarray | None = None
    tfidf: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.labels)


def init_params(shape: ModelShape, rng: np.random.Generator, emb_scale: float = 0.05) -> dict[str, np.ndarray]:
    params = {}
    for name, shp in shape.shape_table().items():
        if name == "emb_train":
            params[name] = rng.uniform(-emb_scale, emb_scale, size=shp)
        elif len(shp) == 2:
            a = 1.0 / np.sqrt(shp[1])
            params[name] = rng.uniform(-a, a, size=shp)
        elif name == "att_u":
            a = 1.0 / np.sqrt(shp[0])
            params[name] = rng.uniform(-a, a, size=shp)
        else:
            params[name] = np.zeros(shp)
    h = shape.h_lstm
    for side in ("fwd", "bwd"):
        params[f"lstm_{side}_b"][h : 2 * h] = 1.0  # forget-gate bias
    return params


class CitationModel:
    """Parameters plus the frozen static embedding matrix (never in ``params``)."""

    def __init__(self, shape: ModelShape, params: dict[str, np.ndarray], static: np.ndarray):
        table = shape.shape_table()
        if set(params) != set(table):
            raise ValueError(f"parameter names do not match the shape table: {sorted(set(params) ^ set(table))}")
        for name, shp in table.items():
            if params[name].shape != tuple(shp):
                raise ValueError(f"parameter {name} has shape {params[name].shape}, expected {tuple(shp)}")
        if static.shape[1] != shape.d_static:
            raise ValueError(f"static matrix width {static.shape[1]} != d_static {shape.d_static}")
        self.shape = shape
        self.params = params
        self.static = static

    @classmethod
    def initialize(cls, shape: ModelShape, static: np.ndarray, rng: np.random.Generator) -> "CitationModel":
        return cls(shape, init_params(shape, rng), static)

    # encoder

    def _embed(self, batch: Batch) -> np.ndarray:
        return np.concatenate([self.static[batch.static_ids], self.params["emb_train"][batch.token_ids]], axis=-1)

    def encode(self, batch: Batch):
        p = self.params
        X = self._embed(batch)
        mask = batch.mask.astype(bool)
        hf, cf = _lstm_forward(X, mask, p["lstm_fwd_W"], p["lstm_fwd_U"], p["lstm_fwd_b"], False)
        hb, cb = _lstm_forward(X, mask, p["lstm_bwd_W"], p["lstm_bwd_U"], p["lstm_bwd_b"], True)
        H = np.concatenate([hf, hb], axis=-1)
        s, ac = _attention_forward(H, mask, p["att_W"], p["att_b"], p["att_u"])
        return s, (X, cf, cb, ac)

    def _encode_backward(self, ds, cache, grads):
        p = self.params
        X, cf, cb, ac = cache
        dH, dW, db, du = _attention_backward(ds, p["att_W"], p["att_u"], ac)
        grads["att_W"] += dW
        grads["att_b"] += db
        grads["att_u"] += du
        h = self.shape.h_lstm
        dX = np.zeros_like(X)
        for side, c, dOut in (("fwd", cf, dH[..., :h]), ("bwd", cb, dH[..., h:])):
            dx, dW, dU, db = _lstm_backward(dOut, X, p[f"lstm_{side}_W"], p[f"lstm_{side}_U"], c)
            grads[f"lstm_{side}_W"] += dW
            grads[f"lstm_{side}_U"] += dU
            grads[f"lstm_{side}_b"] += db
            dX += dx
        return dX

    # heads

    def head_input(self, batch: Batch, sentence: np.ndarray) -> np.ndarray:
        if batch.task != "purpose":
            return sentence
        sh = self.shape
        parts = [sentence if sh.use_lstm else np.zeros_like(sentence)]
        if sh.use_hand:
            if batch.hand is None:
                raise ValueError("purpose batch is missing hand features")
            parts.append(batch.hand)
        if sh.use_tfidf:
            if batch.tfidf is None:
                raise ValueError("purpose batch is missing TF-IDF vectors")
            parts.append(batch.tfidf)
        return np.concatenate(parts, axis=1)

    def logits(self, batch: Batch, keep: np.ndarray | None = None):
        s, enc_cache = self.encode(batch)
        X = self.head_input(batch, s)
        t = batch.task
        p = self.params
        out, head_cache = _head_forward(X, p[f"{t}_W1"], p[f"{t}_b1"], p[f"{t}_W2"], p[f"{t}_b2"], keep)
        return out, (enc_cache, head_cache)

    def predict_proba(self, batch: Batch) -> np.ndarray:
        out, _ = self.logits(batch, None)
        return softmax(out)

    def draw_keep_mask(self, n: int, dropout: float, rng: np.random.Generator) -> np.ndarray | None:
        if dropout <= 0.0:
            return None
        return (rng.random((n, self.shape.hidden)) >= dropout) / (1.0 - dropout)

    def zero_grads(self) -> dict[str, np.ndarray]:
        return {k: np.zeros_like(v) for k, v in self.params.items()}

    def loss_and_grads(
        self,
        batches: Mapping[str, Batch],
        weights: Mapping[str, float],
        keep_masks: Mapping[str, np.ndarray | None] | None = None,
    ):
        """Weighted multi-task loss over the batches present and its exact gradient.

        Tasks are processed in the fixed order purpose, worthiness, section.
        A task with weight 0 is skipped; its gradients stay exactly zero.
        Returns (total_loss, per_task_mean_losses, grads).
        """
        keep_masks = keep_masks or {}
        grads = self.zero_grads()
        losses: dict[str, float] = {}
        total = 0.0
        p = self.params
        for task in TASKS:
            batch = batches.get(task)
            w = weights.get(task, 0.0)
            if batch is None or w == 0.0:
                continue
            if batch.task != task:
                raise ValueError(f"batch tagged {batch.task!r} passed as {task!r}")
            out, (enc_cache, head_cache) = self.logits(batch, keep_masks.get(task))
            ce = cross_entropy(out, batch.labels)
            loss = float(ce.mean())
            losses[task] = loss
            total += w * loss
            dlogits = (softmax(out) - np.eye(N_CLASSES[task])[batch.labels]) * (w / len(batch))
            dX, dW1, db1, dW2, db2 = _head_backward(dlogits, p[f"{task}_W1"], p[f"{task}_W2"], head_cache)
            grads[f"{task}_W1"] += dW1
            grads[f"{task}_b1"] += db1
            grads[f"{task}_W2"] += dW2
            grads[f"{task}_b2"] += db2
            if task == "purpose" and not self.shape.use_lstm:
                continue
            dX_emb = self._encode_backward(dX[:, : 2 * self.shape.h_lstm], enc_cache, grads)
            # static channel is frozen; only the trainable slice flows back
            np.add.at(grads["emb_train"], batch.token_ids, dX_emb[..., self.shape.d_static :])
        return total, losses, grads


def compute_gradients(model: CitationModel, batches, weights, keep_masks=None) -> dict[str, np.ndarray]:
    return model.loss_and_grads(batches, weights, keep_masks)[2]


@dataclass
class AdamState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    t: int = 0

    @classmethod
    def zeros_like(cls, params: Mapping[str, np.ndarray]) -> "AdamState":
        return cls({k: np.zeros_like(p) for k, p in params.items()}, {k: np.zeros_like(p) for k, p in params.items()})


def optimizer_step(params, grads, state: AdamState, lr: float, beta1=0.9, beta2=0.999, eps=1e-8) -> None:
    """In-place Adam update with bias correction."""
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise FloatingPointError(f"non-finite gradient for parameter {name}")
    state.t += 1
    c1 = 1.0 - beta1**state.t
    c2 = 1.0 - beta2**state.t
    for name in sorted(grads):
        g = grads[name]
        m = state.m[name]
        v = state.v[name]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        params[name] -= lr * (m / c1) / (np.sqrt(v / c2) + eps)
