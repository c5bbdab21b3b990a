"""LSTM classifiers trained with BPTT and Adam, implemented on numpy."""

from .checkpoint import load_checkpoint, save_checkpoint
from .gradcheck import gradient_check
from .lstm import LstmLayer, LstmState, NumericalError, lstm_step
from .network import ModelConfig, cross_entropy, forward, init_params, loss_and_grads
from .optim import AdamState, adam_update
from .train import Normalizer, TrainConfig, TrainedModel, predict, predict_instances, predict_proba, train

__all__ = [
    "AdamState",
    "LstmLayer",
    "LstmState",
    "ModelConfig",
    "Normalizer",
    "NumericalError",
    "TrainConfig",
    "TrainedModel",
    "adam_update",
    "cross_entropy",
    "forward",
    "gradient_check",
    "init_params",
    "load_checkpoint",
    "loss_and_grads",
    "lstm_step",
    "predict",
    "predict_instances",
    "predict_proba",
    "save_checkpoint",
    "train",
]
