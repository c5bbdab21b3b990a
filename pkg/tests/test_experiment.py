import csv
import json

import numpy as np
import pytest

from pbdetect.dataio import Cohort, SyntheticSpec, generate_synthetic
from pbdetect.eval import ExperimentSetup, run_experiment, strip_timings, write_report
from pbdetect.eval.folds import make_lsso, make_loso
from pbdetect.labelfuse import Granularity
from pbdetect.model.network import ModelConfig
from pbdetect.model.train import TrainConfig
from pbdetect.windowing import iter_instances, spec_from_seconds

TINY = SyntheticSpec(n_healthy=2, n_cp=2, two_trial_healthy=0, two_trial_cp=0, seed=11)
FAST = dict(model=ModelConfig(layers=1, hidden=8), train=TrainConfig(epochs=1), augment=None)


@pytest.fixture(scope="module")
def tiny():
    return generate_synthetic(TINY).sequences


def _subjects(seqs):
    return sorted({s.subject_id for s in seqs})


def test_loso_run_and_report(tiny, tmp_path):
    plan = make_loso(_subjects(tiny))
    result = run_experiment(tiny, ExperimentSetup(**FAST), plan, data={"synthetic": "tiny"})
    assert len(result.folds) == 4 and not result.errors
    pooled = sum((f.metrics.confusion for f in result.folds[1:]), result.folds[0].metrics.confusion)
    assert result.pooled.confusion == pooled
    assert result.pooled.confusion.total == sum(f.n_test for f in result.folds)
    path = write_report(result, tmp_path, "r")
    d = json.loads(path.read_text())
    assert d["n_folds"] == 4 and d["scheme"] == "loso" and len(d["class_names"]) == 2
    assert set(d["icc"]) == {"model_vs_groundtruth", "raters"}
    rows = list(csv.reader((tmp_path / "r_confusion_pooled.csv").open()))
    assert len(rows) == 3 and len(rows[0]) == 3
    assert len(list(tmp_path.glob("r_confusion_fold*.csv"))) == 4


def test_runs_are_deterministic(tiny):
    plan = make_loso(_subjects(tiny))
    a = run_experiment(tiny, ExperimentSetup(**FAST), plan).to_dict()
    b = run_experiment(tiny, ExperimentSetup(**FAST), plan).to_dict()
    assert json.dumps(strip_timings(a)) == json.dumps(strip_timings(b))


def test_tri_class_report(tiny):
    setup = ExperimentSetup(granularity=Granularity("tri", 3), **FAST)
    assert setup.model.n_classes == 3 and "uncertain" in " ".join(setup.class_names).lower()
    result = run_experiment(tiny, setup, make_loso(_subjects(tiny)))
    assert result.pooled.confusion.counts.shape == (3, 3)


def test_single_class_fold_is_recorded():
    seqs = generate_synthetic(SyntheticSpec(n_healthy=1, n_cp=2, two_trial_healthy=0, two_trial_cp=0,
                                            protective_prevalence=0.0)).sequences
    result = run_experiment(seqs, ExperimentSetup(**FAST), make_loso(_subjects(seqs)))
    assert len(result.errors) == len(result.folds)
    assert all("single class" in err for _, err in result.errors)
    assert result.pooled is None and result.to_dict()["pooled"] is None


def test_timestep_head_scores_every_sample(tiny):
    setup = ExperimentSetup(
        windows=(spec_from_seconds(2.5, 0.75), spec_from_seconds(3.0, 0.75)),
        model=ModelConfig(layers=1, hidden=8, head="timestep"), train=TrainConfig(epochs=1), augment=None,
    )
    plan = make_loso(_subjects(tiny))
    result = run_experiment(tiny, setup, plan)
    instance_samples = sum(len(seq.activities[k]) for _, seq, k in iter_instances(tiny))
    assert sum(f.n_test for f in result.folds) == instance_samples
    assert result.pooled.confusion.total == sum(f.n_test for f in result.folds) > 0
    with pytest.raises(ValueError, match="binary"):
        ExperimentSetup(granularity=Granularity("tri", 2), model=ModelConfig(head="timestep"))


def test_lsso_folds_cover_every_subject(tiny):
    roster = sorted({(s.subject_id, s.cohort) for s in tiny})
    plan = make_lsso(roster, 2, seed=0)
    result = run_experiment(tiny, ExperimentSetup(**FAST), plan)
    tested = sorted(u for f in result.folds for u in f.test_units)
    assert tested == _subjects(tiny)
    assert all(sum(dict(roster)[u] == Cohort.CP for u in f.test_units) == 1 for f in result.folds)


def test_jobs_must_be_positive(tiny):
    with pytest.raises(ValueError):
        run_experiment(tiny, ExperimentSetup(**FAST), make_loso(_subjects(tiny)), jobs=0)
