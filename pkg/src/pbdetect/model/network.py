"""Stacked and dual-stream LSTM classifiers with frame-level or per-timestep
softmax heads, cross-entropy loss and exact backpropagation through time.

Parameters live in a flat ``dict[str, ndarray]`` keyed ``"<stream>.l<k>.Wx"``,
``"<stream>.l<k>.Wh"``, ``"<stream>.l<k>.b"``, ``"<stream>.head.W"`` and
``"<stream>.head.b"``.  A stacked model has the single stream ``main``; a
dual-stream model has ``mocap`` (features 0-25) and ``semg`` (26-29).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .. import MOCAP_DIM, N_FEATURES
from .lstm import LstmLayer, NumericalError, layer_backward, layer_forward

Params = dict[str, np.ndarray]

STACKED = "stacked"
DUAL = "dual-stream"
FRAME = "frame"
TIMESTEP = "timestep"


@dataclass(frozen=True)
class ModelConfig:
    architecture: str = STACKED
    layers: int = 3
    hidden: int = 32
    stream_hidden: tuple[int, int] = (24, 8)
    dropout: float | None = None  # None: 0.5 for dual-stream, 0 for stacked
    input_dim: int = N_FEATURES
    mocap_dim: int = MOCAP_DIM
    n_classes: int = 2
    head: str = FRAME
    fusion: str = "prob-mean"  # or "logit-mean"

    def __post_init__(self) -> None:
        if self.architecture not in (STACKED, DUAL):
            raise ValueError(f"unknown architecture {self.architecture!r}")
        if self.head not in (FRAME, TIMESTEP):
            raise ValueError(f"unknown head {self.head!r}")
        if self.fusion not in ("prob-mean", "logit-mean"):
            raise ValueError(f"unknown fusion {self.fusion!r}")
        if self.n_classes < 2:
            raise ValueError("need at least two classes")
        if self.layers < 1:
            raise ValueError("need at least one LSTM layer")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout must lie in [0, 1)")
        if self.architecture == DUAL and not 0 < self.mocap_dim < self.input_dim:
            raise ValueError("mocap_dim must split the input")
        object.__setattr__(self, "stream_hidden", tuple(self.stream_hidden))

    @property
    def dropout_rate(self) -> float:
        if self.dropout is not None:
            return float(self.dropout)
        return 0.5 if self.architecture == DUAL else 0.0

    def streams(self) -> list[tuple[str, slice, int]]:
        """``(name, input columns, hidden units)`` per stream."""
        if self.architecture == STACKED:
            return [("main", slice(0, self.input_dim), self.hidden)]
        return [
            ("mocap", slice(0, self.mocap_dim), self.stream_hidden[0]),
            ("semg", slice(self.mocap_dim, self.input_dim), self.stream_hidden[1]),
        ]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["stream_hidden"] = list(self.stream_hidden)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        d = dict(d)
        if "stream_hidden" in d:
            d["stream_hidden"] = tuple(d["stream_hidden"])
        return cls(**d)


def init_params(cfg: ModelConfig, rng: np.random.Generator) -> Params:
    """Glorot-uniform gate matrices, zero biases except forget-gate bias 1."""
    params: Params = {}
    for name, cols, H in cfg.streams():
        n_in = cols.stop - cols.start
        for k in range(cfg.layers):
            fan_in = n_in if k == 0 else H
            lim_x = math.sqrt(6.0 / (fan_in + H))
            lim_h = math.sqrt(6.0 / (H + H))
            params[f"{name}.l{k}.Wx"] = rng.uniform(-lim_x, lim_x, (fan_in, 4 * H))
            params[f"{name}.l{k}.Wh"] = rng.uniform(-lim_h, lim_h, (H, 4 * H))
            b = np.zeros(4 * H)
            b[H : 2 * H] = 1.0
            params[f"{name}.l{k}.b"] = b
        lim = math.sqrt(6.0 / (H + cfg.n_classes))
        params[f"{name}.head.W"] = rng.uniform(-lim, lim, (H, cfg.n_classes))
        params[f"{name}.head.b"] = np.zeros(cfg.n_classes)
    return params


def layer_weights(params: Params, stream: str, k: int) -> LstmLayer:
    return LstmLayer(params[f"{stream}.l{k}.Wx"], params[f"{stream}.l{k}.Wh"], params[f"{stream}.l{k}.b"])


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def cross_entropy(P: np.ndarray, y: int) -> float:
    """``-ln P[y]`` with probabilities clamped to [1e-12, 1]."""
    P = np.asarray(P, dtype=np.float64)
    if not 0 <= int(y) < P.shape[-1] or int(y) != y:
        raise ValueError(f"class index {y} outside [0, {P.shape[-1]})")
    if abs(P.sum() - 1.0) > 1e-9:
        raise ValueError("P is not a probability distribution")
    return float(-np.log(np.clip(P[int(y)], 1e-12, 1.0)))


def argmax(P: np.ndarray) -> np.ndarray:
    """Class with the highest probability; ties go to the lowest index."""
    return np.argmax(P, axis=-1)


# ---------------------------------------------------------------------------
# Forward / backward


@dataclass
class StreamPass:
    caches: list = field(default_factory=list)
    masks: list = field(default_factory=list)
    top: np.ndarray | None = None  # last layer output after dropout, (T, B, H)
    logits: np.ndarray | None = None


def _check_finite(arr: np.ndarray, stream: str, layer: int | str) -> None:
    if not np.isfinite(arr).all():
        t = int(np.argwhere(~np.isfinite(arr))[0, 0])
        raise NumericalError(f"non-finite activation in stream {stream!r}, layer {layer}, timestep {t}")


def make_dropout_masks(cfg: ModelConfig, shape_tb: tuple[int, int], rng: np.random.Generator, dtype=np.float64) -> dict:
    """Inverted-dropout masks, one (T, B, H) array per layer and stream."""
    p = cfg.dropout_rate
    T, B = shape_tb
    masks = {}
    for name, _, H in cfg.streams():
        masks[name] = [
            ((rng.random((T, B, H)) >= p) / (1.0 - p)).astype(dtype) for _ in range(cfg.layers)
        ]
    return masks


def _stream_forward(params: Params, cfg: ModelConfig, name: str, X: np.ndarray, masks) -> StreamPass:
    sp = StreamPass()
    h = X
    for k in range(cfg.layers):
        out, cache = layer_forward(h, params[f"{name}.l{k}.Wx"], params[f"{name}.l{k}.Wh"], params[f"{name}.l{k}.b"])
        _check_finite(out, name, k)
        sp.caches.append(cache)
        if masks is not None:
            out = out * masks[k]
        sp.masks.append(None if masks is None else masks[k])
        h = out
    sp.top = h
    W = params[f"{name}.head.W"].astype(X.dtype)
    b = params[f"{name}.head.b"].astype(X.dtype)
    if cfg.head == FRAME:
        sp.logits = (h[-1] @ W + b).astype(np.float64)
    else:
        sp.logits = (h @ W + b).astype(np.float64)
    _check_finite(sp.logits, name, "head")
    return sp


def forward(params: Params, cfg: ModelConfig, X: np.ndarray, masks: dict | None = None) -> tuple[np.ndarray, list[StreamPass]]:
    """Class probabilities for a time-major batch ``X`` (T, B, F).

    Returns ``(P, passes)``: ``P`` is (B, K) for the frame head and (T, B, K)
    for the per-timestep head.  Dual-stream models fuse the two streams'
    distributions (mean of probabilities, or softmax of mean logits).
    """
    if X.ndim != 3 or X.shape[2] != cfg.input_dim:
        raise ValueError(f"expected (T, B, {cfg.input_dim}) input, got {X.shape}")
    passes = []
    for name, cols, _ in cfg.streams():
        passes.append(_stream_forward(params, cfg, name, X[:, :, cols], None if masks is None else masks[name]))
    if len(passes) == 1:
        return softmax(passes[0].logits), passes
    if cfg.fusion == "logit-mean":
        return softmax(np.mean([p.logits for p in passes], axis=0)), passes
    return np.mean([softmax(p.logits) for p in passes], axis=0), passes


def stacked_forward(params: Params, cfg: ModelConfig, X: np.ndarray) -> np.ndarray:
    if cfg.architecture != STACKED:
        raise ValueError("not a stacked model")
    return forward(params, cfg, X)[0]


def dual_stream_forward(params: Params, cfg: ModelConfig, X: np.ndarray) -> np.ndarray:
    if cfg.architecture != DUAL:
        raise ValueError("not a dual-stream model")
    return forward(params, cfg, X)[0]


def _loss_weights(cfg: ModelConfig, y: np.ndarray, valid: np.ndarray | None, class_weight) -> np.ndarray:
    """Per-item loss weights summing to 1 over the batch (mean batch loss)."""
    w = np.ones(y.shape) if class_weight is None else np.asarray(class_weight, dtype=np.float64)[y]
    if cfg.head == FRAME:
        return w / y.shape[0]
    valid = np.ones(y.shape, bool) if valid is None else valid
    counts = valid.sum(axis=0)
    if (counts == 0).any():
        raise ValueError("every sequence in a batch needs at least one scored timestep")
    return w * valid / (counts[None, :] * y.shape[1])


def loss_and_grads(
    params: Params,
    cfg: ModelConfig,
    X: np.ndarray,
    y: np.ndarray,
    valid: np.ndarray | None = None,
    masks: dict | None = None,
    class_weight=None,
    need_grads: bool = True,
) -> tuple[float, Params | None]:
    """Mean cross-entropy over the batch and its exact gradient.

    ``y`` is (B,) for the frame head or (T, B) for the per-timestep head, with
    ``valid`` (T, B) marking scored timesteps.  The per-timestep loss averages
    over each sequence's scored steps, then over the batch.  Dual-stream loss
    is the sum of the two streams' losses.
    """
    y = np.asarray(y, dtype=np.int64)
    _, passes = forward(params, cfg, X, masks)
    wts = _loss_weights(cfg, y, valid, class_weight)
    onehot_idx = y[..., None]
    loss = 0.0
    grads: Params = {} if need_grads else None
    for (name, cols, H), sp in zip(cfg.streams(), passes):
        logp = log_softmax(sp.logits)
        nll = -np.take_along_axis(logp, onehot_idx, axis=-1)[..., 0]
        loss += float((wts * nll).sum())
        if not need_grads:
            continue
        dlogits = np.exp(logp)
        np.put_along_axis(dlogits, onehot_idx, np.take_along_axis(dlogits, onehot_idx, axis=-1) - 1.0, axis=-1)
        dlogits *= wts[..., None]
        top = sp.top.astype(np.float64)
        Wh = params[f"{name}.head.W"]
        dtype = X.dtype
        dtop = np.zeros(sp.top.shape, dtype)
        if cfg.head == FRAME:
            grads[f"{name}.head.W"] = top[-1].T @ dlogits
            grads[f"{name}.head.b"] = dlogits.sum(axis=0)
            dtop[-1] = dlogits @ Wh.T
        else:
            T, B, K = dlogits.shape
            grads[f"{name}.head.W"] = top.reshape(T * B, -1).T @ dlogits.reshape(T * B, K)
            grads[f"{name}.head.b"] = dlogits.sum(axis=(0, 1))
            dtop[:] = dlogits @ Wh.T
        d = dtop
        for k in range(cfg.layers - 1, -1, -1):
            if sp.masks[k] is not None:
                d = d * sp.masks[k]
            dWx, dWh, db, dX = layer_backward(
                d, sp.caches[k], params[f"{name}.l{k}.Wx"], params[f"{name}.l{k}.Wh"], need_dx=k > 0
            )
            grads[f"{name}.l{k}.Wx"] = dWx
            grads[f"{name}.l{k}.Wh"] = dWh
            grads[f"{name}.l{k}.b"] = db
            d = dX
    if not math.isfinite(loss):
        raise NumericalError(f"non-finite loss {loss}")
    return loss, grads


def make_loss_fn(cfg: ModelConfig, X, y, valid=None, masks=None, class_weight=None) -> Callable[[Params], tuple[float, Params]]:
    def fn(p: Params, need_grads: bool = True):
        return loss_and_grads(p, cfg, X, y, valid, masks, class_weight, need_grads)

    return fn
