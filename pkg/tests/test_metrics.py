import numpy as np
import pytest

from pbdetect.eval.metrics import ConfusionMatrix, confusion, majority_baseline, majority_class, metrics

from oracles import metrics_oracle


def test_confusion_counts():
    assert confusion([0, 0, 1, 1], [0, 1, 1, 1], 2).tolist() == [[1, 1], [0, 2]]
    assert confusion([0, 1, 2], [0, 1, 2], 3).tolist() == np.eye(3, dtype=int).tolist()
    only_zero = confusion([0, 1, 1, 2], [0, 0, 0, 0], 3).counts
    assert only_zero[:, 1:].sum() == 0 and only_zero.sum() == 4


def test_confusion_errors():
    with pytest.raises(ValueError):
        confusion([0, 2], [0, 1], 2)
    with pytest.raises(ValueError):
        confusion([0, 1], [0], 2)


def test_hand_computed_case():
    m = metrics(ConfusionMatrix([[30, 10], [20, 40]]))
    assert m.precision[1] == pytest.approx(0.8) and m.recall[1] == pytest.approx(0.6667, abs=1e-4)
    assert m.f1[1] == pytest.approx(0.7273, abs=1e-4)
    assert m.precision[0] == pytest.approx(0.6) and m.recall[0] == pytest.approx(0.75)
    assert m.f1[0] == pytest.approx(0.6667, abs=1e-4)
    assert m.f_mean == pytest.approx(0.6970, abs=1e-4) and m.accuracy == pytest.approx(0.70)


def test_degenerate_class_scores_zero():
    m = metrics(ConfusionMatrix([[50, 0], [50, 0]]))
    assert m.recall[1] == 0 and m.f1[1] == 0 and m.precision[1] == 0
    assert m.f_mean == pytest.approx(1 / 3)


def test_perfect_and_empty():
    m = metrics(ConfusionMatrix(np.diag([3, 4, 5])))
    assert m.f_mean == 1.0 and m.accuracy == 1.0
    with pytest.raises(ValueError):
        metrics(ConfusionMatrix(np.zeros((2, 2), int)))
    with pytest.raises(ValueError):
        ConfusionMatrix([[1, -1], [0, 0]])


def test_random_matrices_match_oracle():
    rng = np.random.default_rng(0)
    for _ in range(100):
        K = int(rng.integers(2, 5))
        cm = rng.integers(0, 30, size=(K, K))
        cm[rng.random((K, K)) < 0.2] = 0
        if cm.sum() == 0:
            cm[0, 0] = 1
        m, o = metrics(ConfusionMatrix(cm)), metrics_oracle(cm.tolist())
        for key in ("accuracy", "f_mean", "precision_mean", "recall_mean"):
            assert abs(getattr(m, key) - o[key]) <= 1e-12
        for key in ("precision", "recall", "f1"):
            assert np.max(np.abs(np.array(getattr(m, key)) - o[key])) <= 1e-12
        assert all(0 <= v <= 1 for v in (*m.precision, *m.recall, *m.f1, m.accuracy))


def test_pooling_adds_matrices():
    a, b = ConfusionMatrix([[1, 2], [3, 4]]), ConfusionMatrix([[5, 0], [1, 1]])
    assert (a + b).tolist() == [[6, 2], [4, 5]] and (a + b).total == a.total + b.total


def test_majority_baseline():
    assert majority_class([0, 1, 1, 2], 3) == 1
    assert majority_class([0, 1], 2) == 0  # ties to the lowest class
    cm = majority_baseline([0, 0, 1], [1, 1, 0], 2)
    assert cm.tolist() == [[1, 0], [2, 0]]


def test_report_dict():
    d = metrics(ConfusionMatrix([[3, 1], [0, 2]]), fold=4).to_dict()
    assert d["fold"] == 4 and d["confusion"] == [[3, 1], [0, 2]] and d["support"] == [4, 2]
