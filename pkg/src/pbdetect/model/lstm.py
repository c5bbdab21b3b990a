"""Vanilla LSTM cell (no peepholes): single-step reference and batched layer.

Weights of one layer are stored fused over the four gates in row-vector
convention, gate order ``i, f, o, g`` (``g`` is the candidate cell)::

    z = x @ Wx + h_prev @ Wh + b          # (..., 4H)
    i, f, o = sigmoid(z[:H]), sigmoid(z[H:2H]), sigmoid(z[2H:3H])
    g = tanh(z[3H:])
    c = f * c_prev + i * g
    h = o * tanh(c)

The batched routines work time-major: ``(T, B, features)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

GATES = ("i", "f", "o", "g")


class NumericalError(ArithmeticError):
    """A non-finite value appeared in a forward pass or loss."""


def sigmoid(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * x))


@dataclass(frozen=True)
class LstmState:
    h: np.ndarray
    c: np.ndarray

    @classmethod
    def zeros(cls, hidden: int) -> "LstmState":
        return cls(np.zeros(hidden), np.zeros(hidden))


@dataclass(frozen=True)
class LstmLayer:
    Wx: np.ndarray  # (in, 4H)
    Wh: np.ndarray  # (H, 4H)
    b: np.ndarray  # (4H,)

    def __post_init__(self) -> None:
        four_h = self.b.shape[0]
        if four_h % 4 or self.Wx.shape[1] != four_h or self.Wh.shape != (four_h // 4, four_h):
            raise ValueError(f"inconsistent LSTM shapes Wx{self.Wx.shape} Wh{self.Wh.shape} b{self.b.shape}")

    @property
    def hidden(self) -> int:
        return self.Wh.shape[0]

    @property
    def input_dim(self) -> int:
        return self.Wx.shape[0]

    def gate(self, name: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(W_x, W_h, b)`` of one gate in column-vector convention (H x in, H x H, H)."""
        k = GATES.index(name)
        H = self.hidden
        cols = slice(k * H, (k + 1) * H)
        return self.Wx[:, cols].T, self.Wh[:, cols].T, self.b[cols]

    @classmethod
    def from_gates(cls, gates: dict[str, tuple[np.ndarray, np.ndarray, np.ndarray]]) -> "LstmLayer":
        Wx = np.concatenate([np.asarray(gates[g][0]).T for g in GATES], axis=1)
        Wh = np.concatenate([np.asarray(gates[g][1]).T for g in GATES], axis=1)
        b = np.concatenate([np.asarray(gates[g][2]) for g in GATES])
        return cls(Wx, Wh, b)


def lstm_step(x: np.ndarray, prev: LstmState, w: LstmLayer) -> LstmState:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (w.input_dim,) or prev.h.shape != (w.hidden,) or prev.c.shape != (w.hidden,):
        raise ValueError(
            f"shape mismatch: x{x.shape} h{prev.h.shape} c{prev.c.shape} for layer {w.input_dim}->{w.hidden}"
        )
    H = w.hidden
    z = x @ w.Wx + prev.h @ w.Wh + w.b
    i = sigmoid(z[:H])
    f = sigmoid(z[H : 2 * H])
    o = sigmoid(z[2 * H : 3 * H])
    g = np.tanh(z[3 * H :])
    c = f * prev.c + i * g
    return LstmState(o * np.tanh(c), c)


@dataclass
class LayerCache:
    X: np.ndarray  # (T, B, in)
    Hs: np.ndarray  # (T+1, B, H), Hs[0] is the initial state
    Cs: np.ndarray  # (T+1, B, H)
    G: np.ndarray  # (T, B, 4H) gate activations
    TC: np.ndarray  # (T, B, H) tanh(c)


def _sigmoid_scale(H: int, dtype) -> np.ndarray:
    # sigmoid(z) = 0.5 + 0.5 * tanh(z / 2): halve the i, f, o pre-activations
    # so one tanh call covers all four gates.
    return np.concatenate([np.full(3 * H, 0.5), np.ones(H)]).astype(dtype)


def layer_forward(
    X: np.ndarray,
    Wx: np.ndarray,
    Wh: np.ndarray,
    b: np.ndarray,
    h0: np.ndarray | None = None,
    c0: np.ndarray | None = None,
) -> tuple[np.ndarray, LayerCache]:
    """Run one LSTM layer over ``X`` (T, B, in); returns hidden states (T, B, H)."""
    T, B, _ = X.shape
    H = Wh.shape[0]
    dtype = X.dtype
    scale = _sigmoid_scale(H, dtype)
    Wxs = Wx.astype(dtype) * scale
    Whs = Wh.astype(dtype) * scale
    G = (X.reshape(T * B, -1) @ Wxs).reshape(T, B, 4 * H)
    G += b.astype(dtype) * scale
    Hs = np.zeros((T + 1, B, H), dtype)
    Cs = np.zeros((T + 1, B, H), dtype)
    if h0 is not None:
        Hs[0] = h0
    if c0 is not None:
        Cs[0] = c0
    TC = np.empty((T, B, H), dtype)
    rec = np.empty((B, 4 * H), dtype)
    ig = np.empty((B, H), dtype)
    h3 = 3 * H
    for t in range(T):
        z = G[t]
        np.matmul(Hs[t], Whs, out=rec)
        z += rec
        np.tanh(z, out=z)
        s = z[:, :h3]
        s *= 0.5
        s += 0.5
        c = Cs[t + 1]
        np.multiply(z[:, H : 2 * H], Cs[t], out=c)
        np.multiply(z[:, :H], z[:, h3:], out=ig)
        c += ig
        np.tanh(c, out=TC[t])
        np.multiply(TC[t], z[:, 2 * H : h3], out=Hs[t + 1])
    return Hs[1:], LayerCache(X, Hs, Cs, G, TC)


def layer_backward(
    dH: np.ndarray, cache: LayerCache, Wx: np.ndarray, Wh: np.ndarray, need_dx: bool = True
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray | None]:
    """Backpropagate ``dH`` (T, B, H) = dL/dH_t through the layer.

    Returns float64 gradients ``(dWx, dWh, db)`` and ``dX`` in the compute dtype.
    """
    G, Cs, TC, Hs, X = cache.G, cache.Cs, cache.TC, cache.Hs, cache.X
    T, B, four_h = G.shape
    H = four_h // 4
    dtype = G.dtype
    i = G[:, :, :H]
    f = G[:, :, H : 2 * H]
    o = G[:, :, 2 * H : 3 * H]
    g = G[:, :, 3 * H :]
    A = o * (1.0 - TC * TC)  # dc += dh * A
    Do = TC * o * (1.0 - o)  # dz_o = dh * Do
    K = np.empty((T, B, 4, H), dtype)  # dz_{i,f,g} = dc * K
    K[:, :, 0] = g * i * (1.0 - i)
    K[:, :, 1] = Cs[:-1] * f * (1.0 - f)
    K[:, :, 2] = 0.0
    K[:, :, 3] = i * (1.0 - g * g)
    F = np.ascontiguousarray(f)
    WhT = np.ascontiguousarray(Wh.astype(dtype).T)
    dZ = np.empty((T, B, four_h), dtype)
    dh = np.zeros((B, H), dtype)
    dc = np.zeros((B, H), dtype)
    tmp = np.empty((B, H), dtype)
    for t in range(T - 1, -1, -1):
        dh += dH[t]
        np.multiply(dh, A[t], out=tmp)
        dc += tmp
        dz = dZ[t].reshape(B, 4, H)
        np.multiply(dc[:, None, :], K[t], out=dz)
        np.multiply(dh, Do[t], out=dz[:, 2])
        dc *= F[t]
        np.matmul(dZ[t], WhT, out=dh)
    dZ2 = dZ.reshape(T * B, four_h)
    dWx = (X.reshape(T * B, -1).T @ dZ2).astype(np.float64)
    dWh = (Hs[:-1].reshape(T * B, H).T @ dZ2).astype(np.float64)
    db = dZ2.sum(axis=0, dtype=np.float64)
    dX = (dZ2 @ Wx.astype(dtype).T).reshape(T, B, -1) if need_dx else None
    return dWx, dWh, db, dX
