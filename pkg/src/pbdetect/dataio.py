"""Dataset format, loading/validation and the synthetic data generator.

On disk a dataset is a JSON manifest plus one CSV per sequence (one subject
performing one trial).  CSV columns::

    t, a01..a13, e01..e13, s01..s04, activity, rater_1..rater_R

``a`` are joint angles (radians), ``e`` angular energies (squared angular
velocity), ``s`` rectified-sEMG upper envelopes.  ``activity`` is 0 for
transition samples and 1-5 for the five activities (``ActivityType``
order).  A cell holding several codes joined by ``+`` marks samples claimed
by overlapping annotations; such files are rejected.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import logging
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence as Seq

import numpy as np

from . import N_ANGLES, N_EMG, N_ENERGIES, N_FEATURES, SAMPLE_RATE_HZ
from .rng import stream

log = logging.getLogger(__name__)

ANGLE_COLUMNS = [f"a{i:02d}" for i in range(1, N_ANGLES + 1)]
ENERGY_COLUMNS = [f"e{i:02d}" for i in range(1, N_ENERGIES + 1)]
EMG_COLUMNS = [f"s{i:02d}" for i in range(1, N_EMG + 1)]
FEATURE_COLUMNS = ANGLE_COLUMNS + ENERGY_COLUMNS + EMG_COLUMNS


class DataFormatError(ValueError):
    """Raised when a sequence file or dataset violates the format."""


class ActivityType(enum.IntEnum):
    BEND_DOWN = 1
    ONE_LEG_STAND = 2
    SIT_TO_STAND = 3
    STAND_TO_SIT = 4
    REACH_FORWARD = 5

    @property
    def slug(self) -> str:
        return self.name.lower().replace("_", "-")

    @classmethod
    def parse(cls, text: str | int) -> "ActivityType":
        if isinstance(text, (int, np.integer)):
            return cls(int(text))
        key = str(text).strip().lower().replace("_", "-")
        for member in cls:
            if key in (member.slug, member.slug.replace("-", ""), str(member.value)):
                return member
        raise ValueError(f"unknown activity {text!r}")


class Cohort(str, enum.Enum):
    HEALTHY = "healthy"
    CP = "cp"

    @classmethod
    def parse(cls, text: str) -> "Cohort":
        if isinstance(text, cls):
            return text
        key = str(text).strip().lower()
        for member in cls:
            if key == member.value:
                return member
        raise ValueError(f"unknown cohort {text!r}")


class Trial(str, enum.Enum):
    NORMAL = "normal"
    DIFFICULT = "difficult"

    @classmethod
    def parse(cls, text: str) -> "Trial":
        if isinstance(text, cls):
            return text
        key = str(text).strip().lower()
        for member in cls:
            if key == member.value:
                return member
        raise ValueError(f"unknown trial {text!r}")


@dataclass(frozen=True)
class ActivityInstance:
    activity: ActivityType
    start: int
    end: int  # exclusive

    def __len__(self) -> int:
        return self.end - self.start


def _check_instances(instances: Seq[ActivityInstance], n: int) -> None:
    prev_end = 0
    for k, inst in enumerate(instances):
        if not 0 <= inst.start < inst.end <= n:
            raise DataFormatError(
                f"activity instance {k} [{inst.start},{inst.end}) outside [0,{n})"
            )
        if inst.start < prev_end:
            raise DataFormatError(
                f"overlapping activities: instance {k} starts at {inst.start} "
                f"before previous end {prev_end}"
            )
        prev_end = inst.end


@dataclass(frozen=True, eq=False)
class Sequence:
    """One subject-trial recording.

    ``samples`` is an ``(n, 30)`` float array; ``raters`` an ``(R, n)`` array
    of 0/1 marks, one row per rater.
    """

    subject_id: str
    cohort: Cohort
    trial: Trial
    samples: np.ndarray
    activities: tuple[ActivityInstance, ...]
    raters: np.ndarray
    rater_ids: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples, dtype=np.float64)
        raters = np.asarray(self.raters, dtype=np.int8)
        if samples.ndim != 2 or samples.shape[1] != N_FEATURES:
            raise DataFormatError(f"samples must be (n, {N_FEATURES}), got {samples.shape}")
        if not np.isfinite(samples).all():
            row = int(np.argwhere(~np.isfinite(samples))[0, 0])
            raise DataFormatError(f"non-finite feature at sample {row}")
        if raters.ndim != 2 or raters.shape[1] != samples.shape[0]:
            raise DataFormatError(
                f"rater-length mismatch: raters {raters.shape} vs {samples.shape[0]} samples"
            )
        if raters.size and not np.isin(raters, (0, 1)).all():
            raise DataFormatError("rater marks must be 0 or 1")
        _check_instances(self.activities, samples.shape[0])
        samples.setflags(write=False)
        raters.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "raters", raters)
        object.__setattr__(self, "activities", tuple(self.activities))
        if not self.rater_ids:
            ids = tuple(f"rater_{r + 1}" for r in range(raters.shape[0]))
            object.__setattr__(self, "rater_ids", ids)

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def rater_count(self) -> int:
        return self.raters.shape[0]

    @property
    def key(self) -> tuple[str, str]:
        return (self.subject_id, self.trial.value)


# ---------------------------------------------------------------------------
# CSV I/O


def _header(rater_count: int) -> list[str]:
    return ["t", *FEATURE_COLUMNS, "activity", *[f"rater_{r}" for r in range(1, rater_count + 1)]]


def activity_codes(seq: Sequence) -> np.ndarray:
    codes = np.zeros(len(seq), dtype=np.int64)
    for inst in seq.activities:
        codes[inst.start : inst.end] = int(inst.activity)
    return codes


def write_sequence(seq: Sequence, path: str | os.PathLike) -> None:
    """Write ``seq`` as CSV. Floats use shortest round-trip formatting."""
    codes = activity_codes(seq)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_header(seq.rater_count))
    samples = seq.samples.tolist()
    marks = seq.raters.T.tolist()
    for t in range(len(seq)):
        writer.writerow([t, *map(repr, samples[t]), int(codes[t]), *marks[t]])
    Path(path).write_text(buf.getvalue())


def _runs(codes: list[int]) -> list[ActivityInstance]:
    out = []
    start = None
    for t, c in enumerate(codes + [0]):
        if start is not None and c != codes[start]:
            out.append(ActivityInstance(ActivityType(codes[start]), start, t))
            start = None
        if start is None and c != 0:
            start = t
    return out


def load_sequence(
    path: str | os.PathLike,
    rater_count: int,
    subject_id: str | None = None,
    cohort: Cohort | str = Cohort.HEALTHY,
    trial: Trial | str = Trial.NORMAL,
) -> Sequence:
    """Load and validate one sequence CSV.

    Row numbers in diagnostics count data rows from 1 (the header is row 0).
    Rater columns may be left empty at the tail of the file, which is reported
    as a rater-length mismatch.
    """
    path = Path(path)
    expected = _header(rater_count)
    ncol = len(expected)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError(f"{path}: empty file") from None
        if [h.strip() for h in header] != expected:
            raise DataFormatError(
                f"{path}: header mismatch (expected {rater_count} rater columns): {header}"
            )
        feats: list[list[float]] = []
        codes: list[int] = []
        marks: list[list[str]] = []
        for row_no, row in enumerate(reader, start=1):
            if not row:
                continue
            if len(row) != ncol:
                raise DataFormatError(
                    f"{path}: wrong column count at row {row_no} ({len(row)} != {ncol})"
                )
            try:
                t = int(row[0])
                values = [float(v) for v in row[1 : 1 + N_FEATURES]]
            except ValueError as exc:
                raise DataFormatError(f"{path}: malformed row {row_no}: {exc}") from None
            if t != row_no - 1:
                raise DataFormatError(
                    f"{path}: malformed row {row_no}: sample index {t}, expected {row_no - 1}"
                )
            if not all(map(math.isfinite, values)):
                bad = next(i for i, v in enumerate(values) if not math.isfinite(v))
                raise DataFormatError(
                    f"{path}: non-finite feature {FEATURE_COLUMNS[bad]} at row {row_no}"
                )
            cell = row[1 + N_FEATURES].strip()
            parts = cell.split("+")
            if len(parts) > 1:
                raise DataFormatError(f"{path}: overlapping activities at row {row_no} ({cell})")
            try:
                code = int(cell)
            except ValueError:
                raise DataFormatError(f"{path}: malformed row {row_no}: activity {cell!r}") from None
            if not 0 <= code <= len(ActivityType):
                raise DataFormatError(f"{path}: malformed row {row_no}: activity code {code}")
            feats.append(values)
            codes.append(code)
            marks.append([m.strip() for m in row[2 + N_FEATURES :]])

    n = len(feats)
    raters = np.zeros((rater_count, n), dtype=np.int8)
    for r in range(rater_count):
        column = [m[r] for m in marks]
        length = n
        while length and column[length - 1] == "":
            length -= 1
        if length != n:
            raise DataFormatError(
                f"{path}: rater-length mismatch: rater_{r + 1} has {length} marks for {n} samples"
            )
        try:
            values = [int(v) for v in column]
        except ValueError as exc:
            raise DataFormatError(f"{path}: malformed rater_{r + 1} mark: {exc}") from None
        if any(v not in (0, 1) for v in values):
            raise DataFormatError(f"{path}: rater_{r + 1} marks must be 0 or 1")
        raters[r] = values

    return Sequence(
        subject_id=subject_id if subject_id is not None else path.stem,
        cohort=Cohort.parse(cohort),
        trial=Trial.parse(trial),
        samples=np.array(feats, dtype=np.float64).reshape(n, N_FEATURES),
        activities=tuple(_runs(codes)),
        raters=raters,
    )


# ---------------------------------------------------------------------------
# Manifest


@dataclass(frozen=True)
class SubjectEntry:
    id: str
    cohort: Cohort
    sequences: tuple[str, ...]
    trials: tuple[Trial, ...] = ()


@dataclass(frozen=True)
class DatasetManifest:
    """Binds sequence files to subjects.

    Paths are relative to ``root`` (the manifest's directory).  Each subject
    entry may carry an optional ``trials`` list parallel to ``sequences``;
    sequences without one are treated as normal trials.
    """

    subjects: tuple[SubjectEntry, ...]
    rater_count: int
    root: Path = Path(".")
    sample_rate_hz: int = SAMPLE_RATE_HZ

    def to_json(self) -> str:
        doc = {
            "sample_rate_hz": self.sample_rate_hz,
            "rater_count": self.rater_count,
            "subjects": [
                {
                    "id": s.id,
                    "cohort": s.cohort.value,
                    "sequences": list(s.sequences),
                    **({"trials": [t.value for t in s.trials]} if s.trials else {}),
                }
                for s in self.subjects
            ],
        }
        return json.dumps(doc, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str, root: Path = Path(".")) -> "DatasetManifest":
        doc = json.loads(text)
        rate = int(doc.get("sample_rate_hz", SAMPLE_RATE_HZ))
        if rate != SAMPLE_RATE_HZ:
            raise DataFormatError(f"sample_rate_hz must be {SAMPLE_RATE_HZ}, got {rate}")
        subjects = []
        for s in doc["subjects"]:
            trials = tuple(Trial.parse(t) for t in s.get("trials", ()))
            subjects.append(
                SubjectEntry(
                    id=str(s["id"]),
                    cohort=Cohort.parse(s["cohort"]),
                    sequences=tuple(s["sequences"]),
                    trials=trials,
                )
            )
        return cls(tuple(subjects), int(doc["rater_count"]), Path(root), rate)

    @classmethod
    def read(cls, path: str | os.PathLike) -> "DatasetManifest":
        path = Path(path)
        return cls.from_json(path.read_text(), root=path.parent)

    def entries(self) -> Iterable[tuple[SubjectEntry, Path, Trial]]:
        for s in self.subjects:
            for k, rel in enumerate(s.sequences):
                trial = s.trials[k] if k < len(s.trials) else Trial.NORMAL
                yield s, self.root / rel, trial


def load_dataset(manifest: DatasetManifest | str | os.PathLike) -> list[Sequence]:
    if not isinstance(manifest, DatasetManifest):
        manifest = DatasetManifest.read(manifest)
    return [
        load_sequence(path, manifest.rater_count, s.id, s.cohort, trial)
        for s, path, trial in manifest.entries()
    ]


def validate_dataset(manifest: DatasetManifest | str | os.PathLike) -> list[str]:
    """Return a list of invariant violations; empty iff the dataset is valid."""
    problems: list[str] = []
    if not isinstance(manifest, DatasetManifest):
        try:
            manifest = DatasetManifest.read(manifest)
        except (OSError, ValueError, KeyError, TypeError) as exc:
            return [f"manifest unreadable: {exc}"]
    if manifest.rater_count < 2:
        problems.append(f"rater_count must be >= 2, got {manifest.rater_count}")
    cohorts: dict[str, Cohort] = {}
    for s in manifest.subjects:
        if not s.sequences:
            problems.append(f"subject {s.id}: no sequences")
        if s.id in cohorts and cohorts[s.id] != s.cohort:
            problems.append(
                f"subject {s.id}: cohort inconsistency ({cohorts[s.id].value} vs {s.cohort.value})"
            )
        cohorts.setdefault(s.id, s.cohort)
        if s.trials and len(s.trials) != len(s.sequences):
            problems.append(f"subject {s.id}: trials list does not match sequences")
    for s, path, trial in manifest.entries():
        try:
            load_sequence(path, manifest.rater_count, s.id, s.cohort, trial)
        except (OSError, DataFormatError) as exc:
            problems.append(f"{path}: {exc}")
    return problems


def extract_instances(seq: Sequence) -> list[tuple[ActivityInstance, np.ndarray, np.ndarray]]:
    """Views over each activity instance: ``(instance, samples, rater marks)``."""
    return [
        (inst, seq.samples[inst.start : inst.end], seq.raters[:, inst.start : inst.end])
        for inst in seq.activities
    ]


# ---------------------------------------------------------------------------
# Synthetic data


# (median seconds, lognormal sigma) per activity; bounds in seconds.
DURATIONS = {
    ActivityType.BEND_DOWN: (4.0, 0.25),
    ActivityType.ONE_LEG_STAND: (4.5, 0.25),
    ActivityType.SIT_TO_STAND: (2.5, 0.2),
    ActivityType.STAND_TO_SIT: (3.0, 0.2),
    ActivityType.REACH_FORWARD: (4.0, 0.4),
}
DURATION_BOUNDS = (1.5, 9.0)


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of the synthetic dataset generator.

    ``two_trial_healthy``/``two_trial_cp`` subjects are recorded in both the
    normal and the difficult trial; the rest only in the normal one.  The
    defaults give 12 + 18 subjects and 17 + 29 = 46 sequences.
    ``protective_prevalence`` is the chance that an activity instance of a
    CP subject contains a protective episode.
    """

    n_healthy: int = 12
    n_cp: int = 18
    two_trial_healthy: int = 5
    two_trial_cp: int = 11
    rater_count: int = 4
    protective_prevalence: float = 0.5
    rater_boundary_jitter_sd: float = 0.25
    rater_miss_prob: float = 0.1
    seed: int = 7

    def validate(self) -> None:
        if self.rater_count < 2:
            raise ValueError(f"rater_count must be >= 2 for majority voting, got {self.rater_count}")
        for name in ("n_healthy", "n_cp", "two_trial_healthy", "two_trial_cp"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.two_trial_healthy > self.n_healthy or self.two_trial_cp > self.n_cp:
            raise ValueError("more two-trial subjects than subjects")
        for name in ("protective_prevalence", "rater_miss_prob"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.rater_boundary_jitter_sd < 0:
            raise ValueError("rater_boundary_jitter_sd must be >= 0")

    @property
    def jitter_margin(self) -> int:
        """Largest boundary shift (samples) a simulated rater can apply."""
        return int(math.ceil(3.0 * self.rater_boundary_jitter_sd * SAMPLE_RATE_HZ))


def _smoothstep(x: np.ndarray) -> np.ndarray:
    x = np.clip(x, 0.0, 1.0)
    return x * x * (3.0 - 2.0 * x)


def _excursion(activity: ActivityType, phase: np.ndarray) -> np.ndarray:
    if activity == ActivityType.ONE_LEG_STAND:
        up = _smoothstep(phase / 0.2)
        down = _smoothstep((1.0 - phase) / 0.2)
        return np.minimum(up, down) * (0.85 + 0.15 * np.sin(6 * np.pi * phase))
    if activity == ActivityType.SIT_TO_STAND:
        return 1.0 - _smoothstep(phase)
    if activity == ActivityType.STAND_TO_SIT:
        return _smoothstep(phase)
    return np.sin(np.pi * phase) ** 2


def _phase(n: int, pause: tuple[int, int] | None) -> np.ndarray:
    rate = np.ones(n)
    if pause is not None:
        rate[pause[0] : pause[1]] = 0.0
    progress = np.concatenate([[0.0], np.cumsum(rate)[:-1]])
    return progress / max(progress[-1], 1.0)


def _ramp(n: int, start: int, end: int, width: int = 15) -> np.ndarray:
    t = np.arange(n)
    rise = _smoothstep((t - start + width / 2) / width)
    fall = _smoothstep((end - t + width / 2) / width)
    return np.minimum(rise, fall)


class _Subject:
    def __init__(self, rng: np.random.Generator, templates: dict[ActivityType, np.ndarray]):
        self.base = rng.uniform(1.6, 2.8, N_ANGLES)
        self.gain = rng.normal(1.0, 0.1)
        self.emg_base = rng.uniform(0.08, 0.18, N_EMG)
        self.templates = templates


def _activity_templates(rng: np.random.Generator) -> dict[ActivityType, np.ndarray]:
    out = {}
    for act in ActivityType:
        amp = rng.uniform(-0.9, 0.9, N_ANGLES)
        amp[rng.random(N_ANGLES) < 0.3] *= 0.15  # weakly involved joints
        out[act] = amp
    return out


def _simulate_sequence(
    subject: _Subject,
    cohort: Cohort,
    trial: Trial,
    spec: SyntheticSpec,
    rng: np.random.Generator,
) -> tuple[np.ndarray, list[ActivityInstance], list[tuple[int, int]]]:
    fs = SAMPLE_RATE_HZ
    lo, hi = DURATION_BOUNDS
    segments = [int(rng.integers(60, 121))]
    acts = list(ActivityType)
    lengths = []
    for act in acts:
        median, sigma = DURATIONS[act]
        dur = float(np.clip(median * math.exp(rng.normal(0.0, sigma)), lo, hi))
        if trial == Trial.DIFFICULT:
            dur = min(dur * 1.1, hi)
        lengths.append(int(round(dur * fs)))
        segments.append(int(rng.integers(90, 181)))
    segments[-1] = int(rng.integers(60, 121))

    n = sum(segments) + sum(lengths)
    angles = np.empty((n, N_ANGLES))
    emg = np.empty((n, N_EMG))
    instances: list[ActivityInstance] = []
    truth: list[tuple[int, int]] = []

    pos = 0
    prev_pose = subject.base.copy()
    for k, act in enumerate(acts):
        gap = segments[k]
        amp = subject.templates[act] * subject.gain
        if trial == Trial.DIFFICULT and act in (ActivityType.BEND_DOWN, ActivityType.REACH_FORWARD):
            amp = amp * 0.9
        length = lengths[k]
        start_pose = subject.base + amp * _excursion(act, np.zeros(1))[0]
        # transition: drift from previous pose to the next activity's start pose
        w = _smoothstep(np.linspace(0.0, 1.0, gap))[:, None]
        sway = 0.03 * np.sin(2 * np.pi * np.arange(gap) / 75.0)[:, None]
        angles[pos : pos + gap] = prev_pose * (1 - w) + start_pose * w + sway
        emg[pos : pos + gap] = subject.emg_base
        pos += gap

        protective = cohort == Cohort.CP and rng.random() < spec.protective_prevalence
        pause = None
        mod = np.zeros(length)
        if protective:
            frac = rng.uniform(0.5, 1.0)
            plen = max(int(round(frac * length)), 1)
            ps = int(rng.integers(0, length - plen + 1))
            pe = ps + plen
            mod = _ramp(length, ps, pe)
            pause_len = int(rng.integers(24, 49))
            if pe - ps > pause_len + 20:
                p0 = int(rng.integers(ps + 10, pe - pause_len - 10 + 1))
                pause = (p0, p0 + pause_len)
            truth.append((pos + ps, pos + pe))
        phase = _phase(length, pause)
        shape = _excursion(act, phase)
        reduction = 1.0 - 0.45 * mod
        angles[pos : pos + length] = subject.base + amp * (shape * reduction)[:, None]
        effort = 0.12 * shape[:, None] * np.abs(rng.normal(1.0, 0.2, N_EMG))
        emg[pos : pos + length] = subject.emg_base + effort + 0.32 * mod[:, None]
        instances.append(ActivityInstance(act, pos, pos + length))
        prev_pose = angles[pos + length - 1].copy()
        pos += length
    tail = segments[-1]
    angles[pos : pos + tail] = prev_pose * 0.5 + subject.base * 0.5
    emg[pos : pos + tail] = subject.emg_base
    pos += tail
    assert pos == n

    angles += rng.normal(0.0, 0.01, angles.shape)
    velocity = np.gradient(angles, axis=0) * fs
    energy = velocity**2
    kernel = np.ones(15) / 15.0
    emg = emg + rng.normal(0.0, 0.03, emg.shape)
    emg = np.stack([np.convolve(emg[:, c], kernel, mode="same") for c in range(N_EMG)], axis=1)
    emg = np.clip(emg, 0.0, 1.0)
    samples = np.round(np.hstack([angles, energy, emg]), 6)
    return samples, instances, truth


def _rate(truth: list[tuple[int, int]], n: int, spec: SyntheticSpec, rng: np.random.Generator) -> np.ndarray:
    marks = np.zeros(n, dtype=np.int8)
    sd = spec.rater_boundary_jitter_sd * SAMPLE_RATE_HZ
    margin = spec.jitter_margin
    for start, end in truth:
        if rng.random() < spec.rater_miss_prob:
            continue
        shifts = np.clip(rng.normal(0.0, sd, 2) if sd > 0 else np.zeros(2), -margin, margin)
        s = int(np.clip(start + round(shifts[0]), 0, n))
        e = int(np.clip(end + round(shifts[1]), 0, n))
        if e > s:
            marks[s:e] = 1
    return marks


@dataclass
class SyntheticDataset:
    manifest: DatasetManifest
    sequences: list[Sequence]
    paths: list[str] = field(default_factory=list)
    true_intervals: list[list[tuple[int, int]]] = field(default_factory=list)

    def write(self, out_dir: str | os.PathLike) -> Path:
        """Write sequence CSVs and ``manifest.json``; returns the manifest path."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for seq, rel in zip(self.sequences, self.paths):
            write_sequence(seq, out / rel)
        path = out / "manifest.json"
        path.write_text(self.manifest.to_json())
        return path


def generate_synthetic(spec: SyntheticSpec = SyntheticSpec()) -> SyntheticDataset:
    """Generate a seeded synthetic dataset.

    Every sequence holds one instance of each activity separated by
    transitions.  CP instances may carry a protective episode, realised as a
    reduced joint-angle excursion, an elevated sEMG envelope and, when the
    episode is long enough, a pause in the movement.  Raters mark each episode
    with Gaussian boundary jitter (truncated at three SDs) and may miss it.
    """
    spec.validate()
    templates = _activity_templates(stream(spec.seed, "templates"))
    roster = [(f"H{i:02d}", Cohort.HEALTHY, i <= spec.two_trial_healthy) for i in range(1, spec.n_healthy + 1)]
    roster += [(f"P{i:02d}", Cohort.CP, i <= spec.two_trial_cp) for i in range(1, spec.n_cp + 1)]

    sequences: list[Sequence] = []
    paths: list[str] = []
    truths: list[list[tuple[int, int]]] = []
    entries = []
    for sid, cohort, two in roster:
        subject = _Subject(stream(spec.seed, f"subject/{sid}"), templates)
        trials = [Trial.NORMAL, Trial.DIFFICULT] if two else [Trial.NORMAL]
        rels = []
        for trial in trials:
            rng = stream(spec.seed, f"sequence/{sid}/{trial.value}")
            samples, instances, truth = _simulate_sequence(subject, cohort, trial, spec, rng)
            rater_rng = stream(spec.seed, f"raters/{sid}/{trial.value}")
            raters = np.stack([_rate(truth, len(samples), spec, rater_rng) for _ in range(spec.rater_count)])
            sequences.append(Sequence(sid, cohort, trial, samples, tuple(instances), raters))
            rel = f"{sid}_{trial.value}.csv"
            rels.append(rel)
            paths.append(rel)
            truths.append(truth)
        entries.append(SubjectEntry(sid, cohort, tuple(rels), tuple(trials)))
    manifest = DatasetManifest(tuple(entries), spec.rater_count)
    return SyntheticDataset(manifest, sequences, paths, truths)
