"""Mini-batch training, inference and feature normalisation."""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence as Seq

import numpy as np

from ..labelfuse import sample_labels
from ..rng import stream
from ..windowing import Frame, Padding
from .lstm import NumericalError
from .network import FRAME, ModelConfig, Params, forward, init_params, loss_and_grads, make_dropout_masks
from .optim import AdamState, adam_update

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.001
    batch_size: int = 20
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    epochs: int = 100
    patience: int = 10
    seed: int = 0
    dtype: str = "float32"
    class_weight: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.learning_rate <= 0 or self.batch_size < 1:
            raise ValueError("learning rate must be > 0 and batch size >= 1")
        if self.epochs < 0 or self.patience < 1:
            raise ValueError("epochs must be >= 0 and patience >= 1")
        if self.dtype not in ("float32", "float64"):
            raise ValueError("dtype must be float32 or float64")
        if self.class_weight is not None:
            object.__setattr__(self, "class_weight", tuple(float(w) for w in self.class_weight))

    def to_dict(self) -> dict:
        d = asdict(self)
        if d["class_weight"] is not None:
            d["class_weight"] = list(d["class_weight"])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        return cls(**d)


@dataclass(frozen=True, eq=False)
class Normalizer:
    """Per-feature z-scoring.  Zero-padded rows stay exactly zero."""

    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, frames: Seq[Frame]) -> "Normalizer":
        total = None
        sq = None
        n = 0
        for f in frames:
            rows = f.data[: f.valid_len]
            s, q = rows.sum(axis=0), (rows * rows).sum(axis=0)
            total = s if total is None else total + s
            sq = q if sq is None else sq + q
            n += rows.shape[0]
        if not n:
            raise ValueError("no samples to fit normalisation")
        if not (np.isfinite(total).all() and np.isfinite(sq).all()):
            bad = int(np.argwhere(~np.isfinite(total + sq))[0, 0])
            raise NumericalError(f"non-finite values in training feature {bad}")
        mean = total / n
        var = np.maximum(sq / n - mean * mean, 0.0)
        std = np.sqrt(var)
        std[std < 1e-8] = 1.0
        return cls(mean, std)

    def apply(self, data: np.ndarray, frame: Frame | None = None) -> np.ndarray:
        out = (data - self.mean) / self.std
        if frame is not None and frame.padded_len and frame.padding == Padding.ZERO:
            out[frame.valid_len :] = 0.0
        return out


@dataclass(eq=False)
class TrainedModel:
    config: ModelConfig
    params: Params
    normalizer: Normalizer
    seed: int = 0
    history: list[float] = field(default_factory=list)
    train_config: TrainConfig | None = None


def _stack(frames: Seq[Frame], norm: Normalizer, dtype) -> np.ndarray:
    X = np.stack([norm.apply(f.data, f) for f in frames])  # (B, T, F)
    return np.ascontiguousarray(X.transpose(1, 0, 2), dtype=dtype)


def _batches(frames: Seq[Frame], batch_size: int, rng: np.random.Generator) -> list[list[int]]:
    """Shuffled index batches; each batch holds frames of one window length."""
    order = rng.permutation(len(frames))
    by_len: dict[int, list[int]] = {}
    for i in order:
        by_len.setdefault(frames[i].window_len, []).append(int(i))
    batches = [idx[k : k + batch_size] for _, idx in sorted(by_len.items()) for k in range(0, len(idx), batch_size)]
    return [batches[j] for j in rng.permutation(len(batches))]


def _timestep_targets(frames: Seq[Frame], labels) -> tuple[np.ndarray, np.ndarray]:
    y = np.stack([np.asarray(labels[i]) for i in range(len(frames))]).T
    valid = np.zeros(y.shape, bool)
    for b, f in enumerate(frames):
        valid[: f.valid_len, b] = True
    return y, valid


def default_labels(frames: Seq[Frame]) -> list[np.ndarray]:
    """Per-timestep targets from majority-fused sample marks."""
    return [sample_labels(f) for f in frames]


def train(
    frames: Seq[Frame],
    labels: Seq,
    mcfg: ModelConfig = ModelConfig(),
    tcfg: TrainConfig = TrainConfig(),
    callback=None,
) -> TrainedModel:
    """Fit a model on labelled frames.

    ``labels[i]`` is a class index (frame head) or a length-W array of
    per-timestep classes (per-timestep head; padded positions are ignored).
    Frames may differ in window length.  Stops early once the epoch training
    loss has not improved for ``tcfg.patience`` epochs.
    """
    if len(frames) != len(labels):
        raise ValueError("frames and labels differ in length")
    if not frames:
        raise ValueError("empty training set")
    if mcfg.head == FRAME:
        present = set(int(v) for v in labels)
    else:
        present = set()
        for f, v in zip(frames, labels):
            present.update(np.unique(np.asarray(v)[: f.valid_len]).tolist())
    if len(present) < 2:
        raise ValueError(f"training set holds a single class {sorted(present)}")
    if max(present) >= mcfg.n_classes or min(present) < 0:
        raise ValueError(f"labels {sorted(present)} outside [0, {mcfg.n_classes})")
    if len(present) < mcfg.n_classes:
        log.warning("classes %s absent from training set", sorted(set(range(mcfg.n_classes)) - present))

    dtype = np.dtype(tcfg.dtype)
    params = init_params(mcfg, stream(tcfg.seed, "init"))
    norm = Normalizer.fit(frames)
    model = TrainedModel(mcfg, params, norm, tcfg.seed, [], tcfg)
    if tcfg.epochs == 0:
        return model

    shuffle_rng = stream(tcfg.seed, "shuffle")
    dropout_rng = stream(tcfg.seed, "dropout")
    state = AdamState()
    best, stale = math.inf, 0
    for epoch in range(tcfg.epochs):
        total, count = 0.0, 0
        for idx in _batches(frames, tcfg.batch_size, shuffle_rng):
            batch = [frames[i] for i in idx]
            X = _stack(batch, norm, dtype)
            if mcfg.head == FRAME:
                y, valid = np.array([labels[i] for i in idx], dtype=np.int64), None
            else:
                y, valid = _timestep_targets(batch, [labels[i] for i in idx])
            masks = None
            if mcfg.dropout_rate > 0:
                masks = make_dropout_masks(mcfg, X.shape[:2], dropout_rng, dtype)
            loss, grads = loss_and_grads(params, mcfg, X, y, valid, masks, tcfg.class_weight)
            if not math.isfinite(loss):
                raise NumericalError(f"non-finite loss at epoch {epoch}, batch of frames {idx[:5]}...")
            adam_update(params, grads, state, tcfg)
            total += loss * len(idx)
            count += len(idx)
        epoch_loss = total / count
        model.history.append(epoch_loss)
        log.info("epoch %d loss %.5f", epoch + 1, epoch_loss)
        if callback is not None:
            callback(epoch, epoch_loss)
        if epoch_loss < best:
            best, stale = epoch_loss, 0
        else:
            stale += 1
            if stale >= tcfg.patience:
                log.info("early stop after %d epochs", epoch + 1)
                break
    return model


def predict_proba(model: TrainedModel, frames: Seq[Frame], batch_size: int = 128) -> list[np.ndarray]:
    """Class probabilities per frame: (K,) for the frame head, (W, K) per timestep."""
    dtype = np.dtype(model.train_config.dtype if model.train_config else "float64")
    out: list[np.ndarray | None] = [None] * len(frames)
    by_len: dict[int, list[int]] = {}
    for i, f in enumerate(frames):
        if f.base.shape[1] != model.config.input_dim:
            raise ValueError(f"frame has {f.base.shape[1]} features, model expects {model.config.input_dim}")
        by_len.setdefault(f.window_len, []).append(i)
    for _, idx in sorted(by_len.items()):
        for k in range(0, len(idx), batch_size):
            chunk = idx[k : k + batch_size]
            P, _ = forward(model.params, model.config, _stack([frames[i] for i in chunk], model.normalizer, dtype))
            for j, i in enumerate(chunk):
                out[i] = P[j] if model.config.head == FRAME else P[:, j]
    return out


def predict(model: TrainedModel, frames: Seq[Frame]) -> np.ndarray | list[np.ndarray]:
    """Argmax labels (ties to the lowest class) per frame, or per timestep."""
    probs = predict_proba(model, frames)
    if model.config.head == FRAME:
        return np.array([int(np.argmax(p)) for p in probs], dtype=np.int64)
    return [np.argmax(p, axis=-1) for p in probs]


def _timestep_model(model: TrainedModel) -> TrainedModel:
    if model.config.head == FRAME:
        from dataclasses import replace

        return TrainedModel(replace(model.config, head="timestep"), model.params, model.normalizer, model.seed, model.history, model.train_config)
    return model


def predict_instances(model: TrainedModel, instances: Seq[np.ndarray], batch_size: int = 32) -> list[np.ndarray]:
    """One label per sample for whole activity instances.

    The network runs over each instance with its state carried from sample to
    sample and classifies every timestep.  A frame-head model applies its
    softmax layer at every step.
    """
    model = _timestep_model(model)
    dtype = np.dtype(model.train_config.dtype if model.train_config else "float64")
    out: list[np.ndarray] = []
    for k in range(0, len(instances), batch_size):
        chunk = [np.asarray(x, dtype=np.float64) for x in instances[k : k + batch_size]]
        for x in chunk:
            if x.ndim != 2 or x.shape[1] != model.config.input_dim:
                raise ValueError(f"instance shape {x.shape} does not match {model.config.input_dim} features")
        T = max(x.shape[0] for x in chunk)
        X = np.zeros((T, len(chunk), model.config.input_dim), dtype)
        # trailing filler cannot affect earlier outputs of a forward-only network
        for j, x in enumerate(chunk):
            X[: x.shape[0], j] = model.normalizer.apply(x)
        P, _ = forward(model.params, model.config, X)
        out.extend(np.argmax(P[: x.shape[0], j], axis=-1) for j, x in enumerate(chunk))
    return out
