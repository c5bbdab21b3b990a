"""JSON checkpoints.  Floats are written with Python's shortest round-trip
repr, so a save/load cycle reproduces every weight bit for bit."""

from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np

from .network import ModelConfig
from .train import Normalizer, TrainConfig, TrainedModel

FORMAT_VERSION = 1


def model_to_dict(model: TrainedModel) -> dict:
    return {
        "format": FORMAT_VERSION,
        "config": model.config.to_dict(),
        "train_config": model.train_config.to_dict() if model.train_config else None,
        "seed": model.seed,
        "params": {k: {"shape": list(v.shape), "values": v.tolist()} for k, v in sorted(model.params.items())},
        "normalizer": {"mean": model.normalizer.mean.tolist(), "std": model.normalizer.std.tolist()},
        "history": list(model.history),
    }


def model_from_dict(d: dict) -> TrainedModel:
    if d.get("format") != FORMAT_VERSION:
        raise ValueError(f"unsupported checkpoint format {d.get('format')!r}")
    params = {}
    for k, v in d["params"].items():
        arr = np.array(v["values"], dtype=np.float64)
        if list(arr.shape) != v["shape"]:
            raise ValueError(f"parameter {k} has shape {arr.shape}, expected {tuple(v['shape'])}")
        params[k] = arr
    norm = Normalizer(np.array(d["normalizer"]["mean"]), np.array(d["normalizer"]["std"]))
    tcfg = TrainConfig.from_dict(d["train_config"]) if d.get("train_config") else None
    return TrainedModel(ModelConfig.from_dict(d["config"]), params, norm, int(d["seed"]), list(d["history"]), tcfg)


def save_checkpoint(model: TrainedModel, path: str | os.PathLike) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=1) + "\n")


def load_checkpoint(path: str | os.PathLike) -> TrainedModel:
    try:
        d = json.loads(Path(path).read_text())
        return model_from_dict(d)
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise ValueError(f"malformed checkpoint {path}: {exc}") from exc
