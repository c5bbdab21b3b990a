"""Cross-validated experiments: segment, label, augment, train, predict, score."""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence as Seq

import numpy as np

from ..augment import AugmentSpec, align_sample_labels, augment_training_set
from ..dataio import ActivityType, Cohort, Sequence
from ..labelfuse import Granularity, frame_ratios, fuse_samples, sample_labels
from ..model.network import FRAME, TIMESTEP, ModelConfig
from ..model.train import TrainConfig, predict, predict_instances, train
from ..rng import derive_seed
from ..windowing import Frame, WindowSpec, iter_instances, segment_dataset, spec_from_seconds
from .folds import Fold, FoldPlan
from .icc import IccResult, icc_two_way_mixed_absolute
from .metrics import ConfusionMatrix, MetricsReport, confusion, majority_class, metrics

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExperimentSetup:
    """Everything but the data and the fold plan.

    Several window specs train on the union of their frames; frame-level
    testing uses the first one.  A per-timestep model is tested sample by
    sample on whole test instances, against majority-fused sample labels.
    """

    windows: tuple[WindowSpec, ...] = (spec_from_seconds(3.0, 0.75),)
    augment: AugmentSpec | None = field(default_factory=AugmentSpec)
    granularity: Granularity = Granularity()
    model: ModelConfig = ModelConfig()
    train: TrainConfig = TrainConfig()
    activity: ActivityType | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        windows = tuple(self.windows)
        if not windows:
            raise ValueError("need at least one window spec")
        object.__setattr__(self, "windows", windows)
        if self.model.head == TIMESTEP:
            if self.granularity.kind != "binary":
                raise ValueError("per-timestep training supports binary labels only")
            classes = 2
        else:
            if len({w.window_len for w in windows}) > 1:
                log.warning("frame-level head trained on several window lengths")
            classes = self.granularity.n_classes
        if self.model.n_classes != classes:
            object.__setattr__(self, "model", replace(self.model, n_classes=classes))

    @property
    def class_names(self) -> list[str]:
        if self.model.head == TIMESTEP:
            return Granularity("binary").class_names
        return self.granularity.class_names

    def to_dict(self) -> dict:
        return {
            "windows": [
                {"window_len": w.window_len, "step": w.step, "padding": w.padding.value, "seconds": w.seconds}
                for w in self.windows
            ],
            "augment": self.augment.to_dict() if self.augment else None,
            "labels": str(self.granularity),
            "model": self.model.to_dict(),
            "train": {k: v for k, v in self.train.to_dict().items() if k != "seed"},
            "activity": self.activity.slug if self.activity else None,
            "seed": self.seed,
        }


@dataclass
class FoldOutcome:
    fold: int
    test_units: list
    n_train: int = 0
    n_test: int = 0
    metrics: MetricsReport | None = None
    baseline: ConfusionMatrix | None = None
    icc: IccResult | None = None
    history: list[float] = field(default_factory=list)
    error: str | None = None
    seconds: float = 0.0
    # CP-cohort test items: [truth, prediction] and per-rater votes
    cp_scores: np.ndarray | None = None
    cp_votes: np.ndarray | None = None

    def to_dict(self) -> dict:
        return {
            "fold": self.fold,
            "test_units": self.test_units,
            "n_train": self.n_train,
            "n_test": self.n_test,
            "metrics": self.metrics.to_dict() if self.metrics else None,
            "baseline": metrics(self.baseline, self.fold).to_dict() if self.baseline else None,
            "icc": self.icc.to_dict() if self.icc else None,
            "train_loss": self.history,
            "error": self.error,
        }


@dataclass
class ExperimentResult:
    setup: ExperimentSetup
    plan: FoldPlan
    folds: list[FoldOutcome]
    pooled: MetricsReport | None
    baseline: MetricsReport | None
    icc_model: IccResult | None
    icc_raters: IccResult | None
    seconds: float = 0.0
    data: dict | None = None

    def config_hash(self) -> str:
        """Identifies setup, fold scheme and data source."""
        key = {
            "setup": self.setup.to_dict(),
            "scheme": self.plan.scheme.value,
            "folds": len(self.plan),
            "data": self.data,
        }
        return hashlib.sha256(json.dumps(key, sort_keys=True).encode()).hexdigest()[:12]

    @property
    def errors(self) -> list[tuple[int, str]]:
        return [(f.fold, f.error) for f in self.folds if f.error]

    def fold_mean(self) -> dict | None:
        done = [f.metrics for f in self.folds if f.metrics]
        if not done:
            return None
        keys = ("accuracy", "f_mean", "precision_mean", "recall_mean")
        return {k: float(np.mean([getattr(m, k) for m in done])) for k in keys}

    def to_dict(self) -> dict:
        return {
            "config": self.setup.to_dict(),
            "data": self.data,
            "config_hash": self.config_hash(),
            "scheme": self.plan.scheme.value,
            "n_folds": len(self.plan),
            "class_names": self.setup.class_names,
            "pooled": self.pooled.to_dict() if self.pooled else None,
            "fold_mean": self.fold_mean(),
            "baseline": self.baseline.to_dict() if self.baseline else None,
            "icc": {
                "model_vs_groundtruth": self.icc_model.to_dict() if self.icc_model else None,
                "raters": self.icc_raters.to_dict() if self.icc_raters else None,
            },
            "folds": [f.to_dict() for f in self.folds],
            "errors": [{"fold": i, "error": e} for i, e in self.errors],
            "timings": {"total_s": self.seconds, "per_fold_s": [f.seconds for f in self.folds]},
        }


def _try_icc(scores: np.ndarray | None) -> IccResult | None:
    if scores is None or scores.shape[0] < 2:
        return None
    try:
        return icc_two_way_mixed_absolute(scores)
    except ValueError:
        return None


def _unit(u):
    return list(u) if isinstance(u, tuple) else u


def _segment(sequences, setup: ExperimentSetup, plan: FoldPlan, units, spec: WindowSpec) -> list[Frame]:
    if plan.by_instance:
        return segment_dataset(sequences, spec, setup.activity, instances=units)
    return segment_dataset(sequences, spec, setup.activity, subjects=units)


def _training_set(frames: list[Frame], setup: ExperimentSetup, fold_seed: int):
    if setup.model.head == FRAME:
        labels = setup.granularity.labels(frames)
    else:
        labels = [sample_labels(f) for f in frames]
    if setup.augment is None:
        return frames, list(labels), labels
    aug = augment_training_set(frames, replace(setup.augment, seed=derive_seed(fold_seed, "augment")))
    n = len(frames)
    if setup.model.head == FRAME:
        return aug, np.tile(labels, len(aug) // n), labels
    return aug, [align_sample_labels(f, labels[i % n]) for i, f in enumerate(aug)], labels


def _test_instances(sequences, setup: ExperimentSetup, plan: FoldPlan, units):
    keep = set(units)
    out = []
    for key, seq, k in iter_instances(sequences):
        inst = seq.activities[k]
        if setup.activity is not None and inst.activity != setup.activity:
            continue
        if (key if plan.by_instance else seq.subject_id) not in keep:
            continue
        out.append((seq, inst))
    return out


def run_fold(sequences: Seq[Sequence], setup: ExperimentSetup, plan: FoldPlan, fold: Fold) -> FoldOutcome:
    """Train on the fold's training units and score on its test units.

    Any error is recorded on the outcome instead of propagating.
    """
    start = time.perf_counter()
    out = FoldOutcome(fold.index, [_unit(u) for u in fold.test])
    try:
        fold_seed = derive_seed(setup.seed, f"fold/{fold.index}")
        train_frames: list[Frame] = []
        for spec in setup.windows:
            train_frames.extend(_segment(sequences, setup, plan, fold.train, spec))
        if not train_frames:
            raise ValueError("no training frames")
        frames, labels, base_labels = _training_set(train_frames, setup, fold_seed)
        tcfg = replace(setup.train, seed=derive_seed(fold_seed, "train"))
        model = train(frames, labels, setup.model, tcfg)
        out.n_train = len(frames)
        out.history = model.history
        K = setup.model.n_classes

        if setup.model.head == FRAME:
            test = _segment(sequences, setup, plan, fold.test, setup.windows[0])
            if not test:
                raise ValueError("no test frames")
            truth = setup.granularity.labels(test)
            pred = predict(model, test)
            cp = np.array([f.cohort == Cohort.CP for f in test], dtype=bool)
            votes = [(frame_ratios(f).per_rater >= 0.5).astype(np.float64) for f, c in zip(test, cp) if c]
            majority = majority_class(base_labels, K)
        else:
            test = _test_instances(sequences, setup, plan, fold.test)
            if not test:
                raise ValueError("no test instances")
            preds = predict_instances(model, [s.samples[i.start : i.end] for s, i in test])
            truths = [fuse_samples(s.raters[:, i.start : i.end]) for s, i in test]
            truth, pred = np.concatenate(truths), np.concatenate(preds)
            cp = np.concatenate([np.full(len(i), s.cohort == Cohort.CP) for s, i in test])
            votes = [s.raters[:, i.start : i.end].T.astype(np.float64) for s, i in test if s.cohort == Cohort.CP]
            majority = majority_class(
                np.concatenate([lab[: f.valid_len] for f, lab in zip(train_frames, base_labels)]), K
            )
        out.n_test = int(truth.size)
        out.metrics = metrics(confusion(truth, pred, K), fold.index)
        out.baseline = confusion(truth, np.full(truth.shape, majority), K)
        if cp.any():
            out.cp_scores = np.stack([truth[cp], pred[cp]], axis=1).astype(np.float64)
            out.cp_votes = np.vstack(votes) if votes[0].ndim == 2 else np.stack(votes)
            out.icc = _try_icc(out.cp_scores)
    except Exception as exc:  # recorded per fold; remaining folds proceed
        log.warning("fold %d failed: %s", fold.index, exc)
        out.error = f"{type(exc).__name__}: {exc}"
        out.metrics = out.baseline = out.icc = None
        out.cp_scores = out.cp_votes = None
    out.seconds = time.perf_counter() - start
    return out


_WORKER: tuple | None = None


def _init_worker(sequences, setup, plan) -> None:
    global _WORKER
    _WORKER = (sequences, setup, plan)


def _worker_fold(fold: Fold) -> FoldOutcome:
    sequences, setup, plan = _WORKER
    return run_fold(sequences, setup, plan, fold)


def run_experiment(
    sequences: Seq[Sequence], setup: ExperimentSetup, plan: FoldPlan, jobs: int = 1, data: dict | None = None
) -> ExperimentResult:
    """Run every fold of ``plan``; results are identical for any ``jobs``."""
    if jobs < 1:
        raise ValueError("jobs must be >= 1")
    start = time.perf_counter()
    if jobs == 1 or len(plan) == 1:
        outcomes = [run_fold(sequences, setup, plan, f) for f in plan.folds]
    else:
        with ProcessPoolExecutor(jobs, initializer=_init_worker, initargs=(list(sequences), setup, plan)) as pool:
            outcomes = list(pool.map(_worker_fold, plan.folds))

    done = [o for o in outcomes if o.metrics is not None]
    pooled = baseline = icc_model = icc_raters = None
    if done:
        pooled = metrics(sum((o.metrics.confusion for o in done[1:]), done[0].metrics.confusion))
        baseline = metrics(sum((o.baseline for o in done[1:]), done[0].baseline))
        scored = [o for o in done if o.cp_scores is not None]
        if scored:
            icc_model = _try_icc(np.vstack([o.cp_scores for o in scored]))
            icc_raters = _try_icc(np.vstack([o.cp_votes for o in scored]))
    return ExperimentResult(
        setup, plan, outcomes, pooled, baseline, icc_model, icc_raters, time.perf_counter() - start, data
    )


def strip_timings(report: dict) -> dict:
    return {k: v for k, v in report.items() if k != "timings"}


def write_confusion_csv(cm: ConfusionMatrix, class_names: Seq[str], path: str | os.PathLike) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["true\\predicted", *class_names])
        for name, row in zip(class_names, cm.tolist()):
            writer.writerow([name, *row])


def write_report(result: ExperimentResult, out_dir: str | os.PathLike, stem: str = "report") -> Path:
    """Write ``<stem>.json`` plus pooled and per-fold confusion CSVs."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{stem}.json"
    path.write_text(json.dumps(result.to_dict(), indent=2) + "\n")
    names = result.setup.class_names
    if result.pooled:
        write_confusion_csv(result.pooled.confusion, names, out / f"{stem}_confusion_pooled.csv")
    for f in result.folds:
        if f.metrics:
            write_confusion_csv(f.metrics.confusion, names, out / f"{stem}_confusion_fold{f.fold:02d}.csv")
    return path
