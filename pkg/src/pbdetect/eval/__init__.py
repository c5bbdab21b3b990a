"""Fold plans, metrics, agreement statistics and experiment orchestration."""

from .experiment import ExperimentResult, ExperimentSetup, run_experiment, strip_timings, write_report
from .folds import Fold, FoldPlan, Scheme, make_lsio, make_loso, make_lsso
from .icc import IccResult, icc_two_way_mixed_absolute
from .metrics import ConfusionMatrix, MetricsReport, confusion, majority_baseline, metrics

__all__ = [
    "ConfusionMatrix",
    "ExperimentResult",
    "ExperimentSetup",
    "Fold",
    "FoldPlan",
    "IccResult",
    "MetricsReport",
    "Scheme",
    "confusion",
    "icc_two_way_mixed_absolute",
    "majority_baseline",
    "make_lsio",
    "make_loso",
    "make_lsso",
    "metrics",
    "run_experiment",
    "strip_timings",
    "write_report",
]
