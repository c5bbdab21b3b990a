"""Fusing multi-rater protective marks into frame and sample labels.

Binary frames use an inclusive "at least 50%" rule, the tri-/quad-class
definitions a strict "more than 50%" rule; both thresholds are parameters.
"""

from __future__ import annotations

import csv
import enum
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence as Seq

import numpy as np

from .windowing import Frame


class BinaryLabel(enum.IntEnum):
    NON_PROTECTIVE = 0
    PROTECTIVE = 1


class TriLabel(enum.IntEnum):
    NON_PROTECTIVE = 0
    UNCERTAIN = 1
    PROTECTIVE = 2


class QuadLabel(enum.IntEnum):
    NON_PROTECTIVE = 0
    UNCERTAIN1 = 1
    UNCERTAIN2 = 2
    PROTECTIVE = 3


@dataclass(frozen=True)
class RatioSummary:
    per_rater: np.ndarray

    @property
    def ratio_sum(self) -> float:
        return float(self.per_rater.sum())

    @property
    def rater_count(self) -> int:
        return self.per_rater.shape[0]


def ratios_from_marks(marks: np.ndarray) -> RatioSummary:
    """``marks`` is an (R, n) 0/1 matrix of unpadded samples."""
    marks = np.asarray(marks)
    if marks.shape[1] < 1:
        raise ValueError("ratio of an empty window is undefined")
    return RatioSummary(marks.mean(axis=1))


def frame_ratios(frame: Frame) -> RatioSummary:
    """Per-rater fraction of the frame's unpadded samples marked protective."""
    if frame.valid_len < 1:
        raise ValueError("fully padded frame has no rated samples")
    return ratios_from_marks(frame.rater_window[:, : frame.valid_len])


def _votes(ratios: RatioSummary, threshold: float, inclusive: bool) -> int:
    r = ratios.per_rater
    return int(np.count_nonzero(r >= threshold if inclusive else r > threshold))


def fuse_binary(
    ratios: RatioSummary, threshold: float = 0.5, min_raters: int = 2, inclusive: bool = True
) -> BinaryLabel:
    if _votes(ratios, threshold, inclusive) >= min_raters:
        return BinaryLabel.PROTECTIVE
    return BinaryLabel.NON_PROTECTIVE


def _check_n(ratios: RatioSummary, n: int) -> None:
    if not 2 <= n <= ratios.rater_count:
        raise ValueError(f"N must satisfy 2 <= N <= R={ratios.rater_count}, got {n}")


def fuse_tri(ratios: RatioSummary, n: int, threshold: float = 0.5, inclusive: bool = False) -> TriLabel:
    _check_n(ratios, n)
    if _votes(ratios, threshold, inclusive) >= n:
        return TriLabel.PROTECTIVE
    if not ratios.per_rater.any():
        return TriLabel.NON_PROTECTIVE
    return TriLabel.UNCERTAIN


def fuse_quad(
    ratios: RatioSummary, n: int = 3, split: float = 1.5, threshold: float = 0.5, inclusive: bool = False
) -> QuadLabel:
    tri = fuse_tri(ratios, n, threshold, inclusive)
    if tri == TriLabel.PROTECTIVE:
        return QuadLabel.PROTECTIVE
    if tri == TriLabel.NON_PROTECTIVE:
        return QuadLabel.NON_PROTECTIVE
    return QuadLabel.UNCERTAIN1 if ratios.ratio_sum < split else QuadLabel.UNCERTAIN2


def fuse_sample(marks_at_t: np.ndarray, min_raters: int = 2) -> BinaryLabel:
    return BinaryLabel(int(np.sum(marks_at_t) >= min_raters))


def fuse_samples(marks: np.ndarray, min_raters: int = 2) -> np.ndarray:
    """Vectorised ``fuse_sample`` over an (R, n) mark matrix."""
    return (np.asarray(marks).sum(axis=0) >= min_raters).astype(np.int64)


@dataclass(frozen=True)
class Granularity:
    """Which groundtruth definition to use: ``binary``, ``tri`` or ``quad``."""

    kind: str = "binary"
    n: int = 2
    split: float = 1.5

    def __post_init__(self) -> None:
        if self.kind not in ("binary", "tri", "quad"):
            raise ValueError(f"unknown label granularity {self.kind!r}")

    @classmethod
    def parse(cls, text: str) -> "Granularity":
        """``binary`` | ``tri:N`` | ``quad:N:split``."""
        parts = text.strip().lower().split(":")
        kind = parts[0]
        if kind == "binary":
            return cls("binary")
        if kind == "tri":
            return cls("tri", int(parts[1]) if len(parts) > 1 else 2)
        if kind == "quad":
            n = int(parts[1]) if len(parts) > 1 else 3
            split = float(parts[2]) if len(parts) > 2 else 1.5
            return cls("quad", n, split)
        raise ValueError(f"unknown label granularity {text!r}")

    def __str__(self) -> str:
        if self.kind == "binary":
            return "binary"
        if self.kind == "tri":
            return f"tri:{self.n}"
        return f"quad:{self.n}:{self.split}"

    @property
    def label_type(self) -> type[enum.IntEnum]:
        return {"binary": BinaryLabel, "tri": TriLabel, "quad": QuadLabel}[self.kind]

    @property
    def n_classes(self) -> int:
        return len(self.label_type)

    @property
    def class_names(self) -> list[str]:
        return [m.name.lower() for m in self.label_type]

    def label_ratios(self, ratios: RatioSummary) -> int:
        if self.kind == "binary":
            return int(fuse_binary(ratios))
        if self.kind == "tri":
            return int(fuse_tri(ratios, self.n))
        return int(fuse_quad(ratios, self.n, self.split))

    def label(self, frame: Frame) -> int:
        return self.label_ratios(frame_ratios(frame))

    def labels(self, frames: Seq[Frame]) -> np.ndarray:
        return np.array([self.label(f) for f in frames], dtype=np.int64)


def sample_labels(frame: Frame) -> np.ndarray:
    """Per-position fused labels of a frame (padded positions are 0)."""
    return fuse_samples(frame.rater_window)


def write_label_dump(frames: Seq[Frame], path: str | os.PathLike, tri_n: int = 2, quad_n: int = 3, split: float = 1.5) -> None:
    rater_count = frames[0].rater_window.shape[0] if frames else 0
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["frame_id", *[f"ratio_{r}" for r in range(1, rater_count + 1)], "ratio_sum", "binary", "tri", "quad"])
        for i, f in enumerate(frames):
            rs = frame_ratios(f)
            writer.writerow(
                [
                    i,
                    *map(repr, rs.per_rater.tolist()),
                    repr(rs.ratio_sum),
                    fuse_binary(rs).name.lower(),
                    fuse_tri(rs, tri_n).name.lower(),
                    fuse_quad(rs, quad_n, split).name.lower(),
                ]
            )
