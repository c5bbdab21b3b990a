import pytest

from pbdetect.dataio import Cohort
from pbdetect.eval.folds import Scheme, make_lsio, make_loso, make_lsso
from pbdetect.windowing import InstanceKey


def _roster(cp=18, healthy=12):
    return [(f"P{i:02d}", Cohort.CP) for i in range(cp)] + [(f"H{i:02d}", Cohort.HEALTHY) for i in range(healthy)]


def _partitions(plan, units):
    tested = plan.units()
    assert sorted(tested) == sorted(units)
    for f in plan.folds:
        assert not set(f.train) & set(f.test)
        assert set(f.train) | set(f.test) == set(units)


def test_loso():
    ids = [s for s, _ in _roster()]
    plan = make_loso(ids)
    assert len(plan) == 30 and plan.scheme == Scheme.LOSO
    _partitions(plan, ids)
    assert all(len(f.test) == 1 for f in plan.folds)
    assert len(make_loso(["a", "b"])) == 2
    with pytest.raises(ValueError, match="duplicate"):
        make_loso(["a", "b", "a"])
    with pytest.raises(ValueError):
        make_loso(["a"])


def test_lsso_composition():
    roster = _roster()
    plan = make_lsso(roster, folds=6, seed=3)
    cohort = dict(roster)
    _partitions(plan, [s for s, _ in roster])
    for f in plan.folds:
        assert sum(cohort[s] == Cohort.CP for s in f.test) == 3
        assert sum(cohort[s] == Cohort.HEALTHY for s in f.test) == 2
    assert make_lsso(roster, 6, 3) == plan
    assert make_lsso(roster, 6, 4) != plan


def test_lsso_infeasible():
    with pytest.raises(ValueError, match="short by 1"):
        make_lsso(_roster(cp=17), folds=6)


def test_lsio():
    keys = [InstanceKey(f"S{s}", "normal", i) for s in range(10) for i in range(10)]
    plan = make_lsio(keys, 0.2, seed=1)
    assert len(plan) == 5 and all(len(f.test) == 20 for f in plan.folds)
    _partitions(plan, keys)
    assert make_lsio(keys, 0.2, 1) == plan
    for s in range(10):  # every subject is both trained and tested
        assert any(k.subject_id == f"S{s}" for k in plan.folds[0].train)
        assert any(k.subject_id == f"S{s}" for k in plan.folds[0].test)
    with pytest.raises(ValueError):
        make_lsio(keys, 0.0)
    with pytest.raises(ValueError):
        make_lsio([], 0.2)


def test_plan_serialises():
    keys = [InstanceKey("S1", "normal", i) for i in range(4)]
    d = make_lsio(keys, 0.5, 0).to_dict()
    assert d["scheme"] == "lsio" and sum(len(f) for f in d["folds"]) == 4
