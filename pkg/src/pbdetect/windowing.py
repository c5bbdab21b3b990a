"""Sliding-window segmentation of activity instances into fixed-length frames."""

from __future__ import annotations

import csv
import enum
import math
import os
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Iterable, NamedTuple, Sequence as Seq

import numpy as np

from . import N_FEATURES, SAMPLE_RATE_HZ
from .dataio import ActivityType, Cohort, Sequence


class Padding(str, enum.Enum):
    ZERO = "zero"
    LAST = "last"
    NEXT = "next"

    @classmethod
    def parse(cls, text: "str | Padding") -> "Padding":
        if isinstance(text, cls):
            return text
        key = str(text).strip().lower().replace("-padding", "").replace("0", "zero")
        return cls(key)


@dataclass(frozen=True)
class WindowSpec:
    window_len: int
    step: int
    padding: Padding = Padding.ZERO

    def __post_init__(self) -> None:
        if self.window_len <= 0 or self.step <= 0:
            raise ValueError("window length and step must be positive")
        if self.step > self.window_len:
            raise ValueError(f"step {self.step} exceeds window length {self.window_len}")
        object.__setattr__(self, "padding", Padding.parse(self.padding))

    @property
    def overlap(self) -> float:
        return 1.0 - self.step / self.window_len

    @property
    def seconds(self) -> float:
        return self.window_len / SAMPLE_RATE_HZ


def spec_from_seconds(length_s: float, overlap: float, padding: Padding | str = Padding.ZERO) -> WindowSpec:
    if length_s <= 0:
        raise ValueError("window length must be positive")
    if not 0.0 <= overlap < 1.0:
        raise ValueError(f"overlap must lie in [0, 1), got {overlap}")
    window = int(round(SAMPLE_RATE_HZ * length_s))
    if window < 1:
        raise ValueError(f"{length_s} s is shorter than one sample")
    step = max(1, int(round(window * (1.0 - overlap))))
    return WindowSpec(window, step, Padding.parse(padding))


def multi_length_plan(lengths_s: Seq[float], overlap: float, padding: Padding | str = Padding.ZERO) -> list[WindowSpec]:
    if not lengths_s:
        raise ValueError("at least one window length is required")
    return [spec_from_seconds(x, overlap, padding) for x in lengths_s]


def parse_sweep(text: str) -> list[float]:
    """``"1:7:0.5"`` -> ``[1.0, 1.5, ..., 7.0]`` (both ends inclusive)."""
    lo, hi, step = (float(x) for x in text.split(":"))
    if step <= 0 or hi < lo:
        raise ValueError(f"bad sweep {text!r}")
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return [round(lo + k * step, 10) for k in range(n)]


class InstanceKey(NamedTuple):
    subject_id: str
    trial: str
    index: int


# A transform maps a frame's data array to a new array.  Augmented frames keep
# their source array and a transform chain; ``Frame.data`` applies it on access.
Transform = Callable[["Frame", np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False, slots=True)
class Frame:
    """A window of ``W`` samples cut from one activity instance.

    ``padded_len`` trailing rows were filled by the padding rule.
    ``rater_window`` is ``(R, W)`` with padded positions set to 0.
    """

    base: np.ndarray
    subject_id: str
    cohort: Cohort
    activity: ActivityType
    start_idx: int
    padded_len: int
    rater_window: np.ndarray
    padding: Padding = Padding.ZERO
    instance: InstanceKey | None = None
    transforms: tuple[Transform, ...] = ()

    @property
    def data(self) -> np.ndarray:
        out = self.base
        for fn in self.transforms:
            out = fn(self, out)
        return out

    @property
    def window_len(self) -> int:
        return self.base.shape[0]

    @property
    def valid_len(self) -> int:
        return self.base.shape[0] - self.padded_len

    def with_transform(self, fn: Transform) -> "Frame":
        return replace(self, transforms=self.transforms + (fn,))


def segment_instance(
    samples: np.ndarray,
    raters: np.ndarray,
    spec: WindowSpec,
    successor: np.ndarray | None = None,
    *,
    subject_id: str = "",
    cohort: Cohort = Cohort.HEALTHY,
    activity: ActivityType = ActivityType.BEND_DOWN,
    offset: int = 0,
    instance: InstanceKey | None = None,
) -> list[Frame]:
    """Cut ``samples`` (L x 30) into frames starting at 0, S, 2S, ... < L.

    Windows running past the end are completed by ``spec.padding``: zeros, the
    final sample repeated, or the samples in ``successor`` (zeros once it runs
    out).  ``offset`` is the instance start in its source sequence.
    """
    samples = np.asarray(samples, dtype=np.float64)
    raters = np.asarray(raters, dtype=np.int8)
    length = samples.shape[0]
    if length < 1:
        raise ValueError("instance must hold at least one sample")
    W, S = spec.window_len, spec.step
    frames = []
    for start in range(0, length, S):
        stop = min(start + W, length)
        valid = stop - start
        pad = W - valid
        data = np.zeros((W, samples.shape[1]))
        data[:valid] = samples[start:stop]
        if pad:
            if spec.padding == Padding.LAST:
                data[valid:] = samples[-1]
            elif spec.padding == Padding.NEXT and successor is not None:
                take = min(pad, successor.shape[0])
                data[valid : valid + take] = successor[:take]
        window = np.zeros((raters.shape[0], W), dtype=np.int8)
        window[:, :valid] = raters[:, start:stop]
        data.setflags(write=False)
        window.setflags(write=False)
        frames.append(
            Frame(data, subject_id, cohort, activity, offset + start, pad, window, spec.padding, instance)
        )
    return frames


def iter_instances(sequences: Seq[Sequence]) -> Iterable[tuple[InstanceKey, Sequence, int]]:
    for seq in sequences:
        for k, _ in enumerate(seq.activities):
            yield InstanceKey(seq.subject_id, seq.trial.value, k), seq, k


def segment_dataset(
    sequences: Seq[Sequence],
    spec: WindowSpec,
    activity: ActivityType | None = None,
    *,
    subjects: Iterable[str] | None = None,
    instances: Iterable[InstanceKey] | None = None,
) -> list[Frame]:
    """Segment every (matching) activity instance of ``sequences``.

    Order is sequence order, then instance order, then window start.
    ``subjects``/``instances`` restrict which instances are cut.
    """
    keep_subjects = None if subjects is None else set(subjects)
    keep_instances = None if instances is None else set(instances)
    frames: list[Frame] = []
    for key, seq, k in iter_instances(sequences):
        inst = seq.activities[k]
        if activity is not None and inst.activity != activity:
            continue
        if keep_subjects is not None and seq.subject_id not in keep_subjects:
            continue
        if keep_instances is not None and key not in keep_instances:
            continue
        successor = seq.samples[inst.end :] if spec.padding == Padding.NEXT else None
        frames.extend(
            segment_instance(
                seq.samples[inst.start : inst.end],
                seq.raters[:, inst.start : inst.end],
                spec,
                successor,
                subject_id=seq.subject_id,
                cohort=seq.cohort,
                activity=inst.activity,
                offset=inst.start,
                instance=key,
            )
        )
    return frames


def expected_frame_count(sequences: Seq[Sequence], spec: WindowSpec, activity: ActivityType | None = None) -> int:
    return sum(
        math.ceil(len(inst) / spec.step)
        for seq in sequences
        for inst in seq.activities
        if activity is None or inst.activity == activity
    )


def write_frames_csv(frames: Seq[Frame], path: str | os.PathLike) -> None:
    """Dump frames: id, subject, activity, start, padding count, W x 30 row-major features."""
    if frames and len({f.window_len for f in frames}) != 1:
        raise ValueError("a frame dump holds frames of a single window length")
    width = frames[0].window_len * N_FEATURES if frames else 0
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["frame_id", "subject", "activity", "start_idx", "padded_len", *[f"x{i}" for i in range(width)]])
        for i, f in enumerate(frames):
            writer.writerow([i, f.subject_id, f.activity.slug, f.start_idx, f.padded_len, *map(repr, f.data.ravel().tolist())])
