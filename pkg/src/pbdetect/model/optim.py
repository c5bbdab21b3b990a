"""Adam with bias correction."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class AdamState:
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0


def adam_update(params, grads, state: AdamState, cfg) -> tuple[dict, AdamState]:
    """One Adam step, applied in place to ``params`` and ``state``.

    ``cfg`` supplies ``learning_rate``, ``beta1``, ``beta2`` and ``eps``.
    """
    if set(grads) != set(params):
        raise ValueError("gradient keys do not match parameters")
    state.step += 1
    b1, b2 = cfg.beta1, cfg.beta2
    corr1 = 1.0 - b1**state.step
    corr2 = 1.0 - b2**state.step
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.shape:
            raise ValueError(f"gradient shape {g.shape} != parameter shape {p.shape} for {name}")
        m = state.m.setdefault(name, np.zeros_like(p))
        v = state.v.setdefault(name, np.zeros_like(p))
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p -= cfg.learning_rate * (m / corr1) / (np.sqrt(v / corr2) + cfg.eps)
    return params, state
