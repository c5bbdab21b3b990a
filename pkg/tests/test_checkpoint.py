import json

import numpy as np
import pytest

from pbdetect.model import ModelConfig, TrainConfig, init_params, load_checkpoint, predict, save_checkpoint, train
from pbdetect.model.train import Normalizer, TrainedModel
from pbdetect.rng import stream

from test_train import separable


def test_round_trip_is_exact(tmp_path):
    cfg = ModelConfig(architecture="dual-stream", layers=2, stream_hidden=(5, 3), n_classes=3)
    rng = np.random.default_rng(0)
    model = TrainedModel(
        cfg,
        init_params(cfg, stream(1, "init")),
        Normalizer(rng.normal(size=30), rng.random(30) + 0.1),
        seed=11,
        history=[0.7, 0.31234567890123],
        train_config=TrainConfig(epochs=2, class_weight=(1.0, 2.0, 3.0)),
    )
    path = tmp_path / "ckpt.json"
    save_checkpoint(model, path)
    back = load_checkpoint(path)
    assert back.config == cfg and back.seed == 11 and back.history == model.history
    assert back.train_config == model.train_config
    for k, v in model.params.items():
        assert np.array_equal(back.params[k], v)
    assert np.array_equal(back.normalizer.mean, model.normalizer.mean)
    doc = json.loads(path.read_text())
    assert doc["config"]["stream_hidden"] == [5, 3]


def test_loaded_model_predicts_identically(tmp_path):
    frames, labels = separable(n=10)
    model = train(frames, labels, ModelConfig(layers=1, hidden=4), TrainConfig(epochs=2))
    save_checkpoint(model, tmp_path / "m.json")
    assert np.array_equal(predict(load_checkpoint(tmp_path / "m.json"), frames), predict(model, frames))


def test_malformed_checkpoint(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"format": 1}')
    with pytest.raises(ValueError):
        load_checkpoint(path)
    path.write_text('{"format": 99}')
    with pytest.raises(ValueError, match="format"):
        load_checkpoint(path)
