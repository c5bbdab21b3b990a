"""Training-set augmentation: time reversal, Gaussian jitter, random zeroing.

Augmented frames are lazy: each one keeps the source window plus a
transform carrying its own seed, and ``Frame.data`` computes the augmented
values on access.  Results are identical on every access, and a training set
grown sevenfold costs no extra feature memory.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence as Seq

import numpy as np

from .rng import derive_seed
from .windowing import Frame

METHODS = ("reverse", "jitter", "crop")


def _generator(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class _Reverse:
    def __call__(self, frame: Frame, data: np.ndarray) -> np.ndarray:
        n = frame.valid_len
        out = data.copy()
        out[:n] = data[:n][::-1]
        return out


@dataclass(frozen=True)
class _Jitter:
    sd: float
    seed: int

    def __call__(self, frame: Frame, data: np.ndarray) -> np.ndarray:
        if self.sd == 0:
            return data
        n = frame.valid_len
        out = data.copy()
        out[:n] += _generator(self.seed).normal(0.0, self.sd, size=(n, data.shape[1]))
        return out


@dataclass(frozen=True)
class _Crop:
    p: float
    seed: int

    def __call__(self, frame: Frame, data: np.ndarray) -> np.ndarray:
        if self.p == 0:
            return data
        n = frame.valid_len
        out = data.copy()
        drop = _generator(self.seed).random((n, data.shape[1])) < self.p
        out[:n][drop] = 0.0
        return out


def reverse(frame: Frame) -> Frame:
    """Reverse the unpadded rows in time; padding stays at the end."""
    return frame.with_transform(_Reverse())


def jitter(frame: Frame, sd: float, seed: int) -> Frame:
    """Add i.i.d. N(0, sd^2) noise to every feature of the unpadded rows."""
    if sd < 0:
        raise ValueError("jitter sd must be >= 0")
    return frame.with_transform(_Jitter(float(sd), int(seed)))


def crop(frame: Frame, p: float, seed: int) -> Frame:
    """Zero each feature entry of the unpadded rows with probability ``p``."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("crop probability must lie in [0, 1]")
    return frame.with_transform(_Crop(float(p), int(seed)))


@dataclass(frozen=True)
class AugmentSpec:
    methods: frozenset[str] = field(default_factory=lambda: frozenset({"jitter", "crop"}))
    jitter_sds: tuple[float, ...] = (0.05, 0.10, 0.15)
    crop_probs: tuple[float, ...] = (0.05, 0.10, 0.15)
    seed: int = 0

    def __post_init__(self) -> None:
        methods = frozenset(m.strip().lower() for m in self.methods)
        unknown = methods - set(METHODS)
        if unknown:
            raise ValueError(f"unknown augmentation methods {sorted(unknown)}")
        if any(sd < 0 for sd in self.jitter_sds):
            raise ValueError("jitter sds must be >= 0")
        if any(not 0 <= p <= 1 for p in self.crop_probs):
            raise ValueError("crop probabilities must lie in [0, 1]")
        object.__setattr__(self, "methods", methods)
        object.__setattr__(self, "jitter_sds", tuple(float(x) for x in self.jitter_sds))
        object.__setattr__(self, "crop_probs", tuple(float(x) for x in self.crop_probs))

    def multiplier(self) -> int:
        k = 1
        if "jitter" in self.methods:
            k += len(self.jitter_sds)
        if "crop" in self.methods:
            k += len(self.crop_probs)
        if "reverse" in self.methods:
            k += 1
        return k

    def to_dict(self) -> dict:
        return {
            "methods": sorted(self.methods),
            "jitter_sds": list(self.jitter_sds),
            "crop_probs": list(self.crop_probs),
            "seed": self.seed,
        }


def align_sample_labels(frame: Frame, labels: np.ndarray) -> np.ndarray:
    """Reorder per-position labels of the source window to match ``frame.data``."""
    out = np.asarray(labels)
    for fn in frame.transforms:
        if isinstance(fn, _Reverse):
            out = out.copy()
            out[: frame.valid_len] = out[: frame.valid_len][::-1]
    return out


def augment_training_set(frames: Seq[Frame], spec: AugmentSpec) -> list[Frame]:
    """Originals, then one jittered copy per sd, one cropped copy per
    probability and (if enabled) one reversed copy, each block in input order.
    """
    out = list(frames)
    if "jitter" in spec.methods:
        for j, sd in enumerate(spec.jitter_sds):
            base = derive_seed(spec.seed, f"jitter/{j}")
            out.extend(jitter(f, sd, base + i) for i, f in enumerate(frames))
    if "crop" in spec.methods:
        for j, p in enumerate(spec.crop_probs):
            base = derive_seed(spec.seed, f"crop/{j}")
            out.extend(crop(f, p, base + i) for i, f in enumerate(frames))
    if "reverse" in spec.methods:
        out.extend(reverse(f) for f in frames)
    return out
