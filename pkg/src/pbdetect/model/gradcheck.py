"""Central finite-difference gradient checking."""

from __future__ import annotations

from typing import Callable

import numpy as np


def gradient_check(
    loss_fn: Callable[..., tuple[float, dict]],
    params: dict[str, np.ndarray],
    h: float = 1e-4,
) -> tuple[float, str]:
    """Largest relative error between analytic and numerical gradients.

    ``loss_fn(params, need_grads=True)`` returns ``(loss, grads)``.  Each
    entry is perturbed by ``+-h``; the error of an entry is
    ``|a - n| / max(|a|, |n|, 1e-8)``.  Returns ``(max error, worst entry)``.
    """
    if not h > 0:
        raise ValueError("finite-difference step must be positive")
    _, analytic = loss_fn(params, need_grads=True)
    worst, where = 0.0, ""
    for name, p in params.items():
        if p.dtype != np.float64:
            raise TypeError("gradient checking needs float64 parameters")
        flat = p.reshape(-1)
        a_flat = analytic[name].reshape(-1)
        for j in range(flat.size):
            old = flat[j]
            flat[j] = old + h
            up = loss_fn(params, need_grads=False)[0]
            flat[j] = old - h
            down = loss_fn(params, need_grads=False)[0]
            flat[j] = old
            num = (up - down) / (2.0 * h)
            a = a_flat[j]
            err = abs(a - num) / max(abs(a), abs(num), 1e-8)
            if err > worst:
                worst, where = err, f"{name}[{j}]"
    return worst, where
