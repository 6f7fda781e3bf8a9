"""Stochastic and normalization layers: inverted dropout, batch normalization."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .tensor import Tensor, _accumulate, _make

MODES = ("train", "eval")


def _check_mode(mode: str) -> None:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")


def dropout(x: Tensor, rate: float, mode: str, rng=None) -> Tensor:
    """Inverted dropout: zero entries with probability ``rate`` and scale
    survivors by 1/(1-rate) in train mode; identity in eval mode."""
    _check_mode(mode)
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    if mode == "eval" or rate == 0.0:
        return x
    rng = np.random.default_rng(rng)
    keep = rng.random(x.shape) >= rate
    factor = keep / (1.0 - rate)

    def backward(g: np.ndarray) -> None:
        if x.requires_grad:
            _accumulate(x, g * factor)

    return _make("dropout", x.data * factor, (x,), backward)


@dataclass
class BatchNormState:
    """Running statistics and hyperparameters of one batch-norm layer."""

    mean: np.ndarray
    var: np.ndarray
    momentum: float = 0.1
    eps: float = 1e-5

    @classmethod
    def fresh(cls, width: int, momentum: float = 0.1, eps: float = 1e-5) -> "BatchNormState":
        return cls(mean=np.zeros((1, width)), var=np.ones((1, width)),
                   momentum=momentum, eps=eps)

    def copy(self) -> "BatchNormState":
        return BatchNormState(self.mean.copy(), self.var.copy(), self.momentum, self.eps)


def batch_norm(x: Tensor, gamma: Tensor, beta: Tensor, state: BatchNormState,
               mode: str) -> Tensor:
    """Per-feature standardization with affine output.

    Train mode uses batch statistics and updates the running estimates;
    eval mode standardizes with the running estimates. A train-mode batch
    of one row degenerates (zero variance), so it falls back to the
    running estimates with a warning.
    """
    _check_mode(mode)
    width = x.shape[1]
    if gamma.shape != (1, width) or beta.shape != (1, width):
        raise ValueError(
            f"batch_norm parameter shapes {gamma.shape}/{beta.shape} "
            f"do not match feature width {width}")
    if state.mean.shape != (1, width):
        raise ValueError(
            f"batch_norm running-stat width {state.mean.shape[1]} != input width {width}")

    use_batch_stats = mode == "train" and x.shape[0] > 1
    if mode == "train" and x.shape[0] == 1:
        warnings.warn("batch_norm on a single-row batch: using running statistics",
                      stacklevel=2)

    if use_batch_stats:
        n = x.shape[0]
        mu = x.data.mean(axis=0, keepdims=True)
        centered = x.data - mu
        var = (centered * centered).mean(axis=0, keepdims=True)
        inv = 1.0 / np.sqrt(var + state.eps)
        xhat = centered * inv
        state.mean = (1.0 - state.momentum) * state.mean + state.momentum * mu
        state.var = (1.0 - state.momentum) * state.var + state.momentum * var

        def backward(g: np.ndarray) -> None:
            dxhat = g * gamma.data
            if x.requires_grad:
                dvar = (dxhat * centered).sum(axis=0, keepdims=True) * (-0.5) * inv ** 3
                dmu = (-dxhat * inv).sum(axis=0, keepdims=True) \
                    + dvar * (-2.0 * centered).mean(axis=0, keepdims=True)
                _accumulate(x, dxhat * inv + dvar * (2.0 / n) * centered + dmu / n)
            if gamma.requires_grad:
                _accumulate(gamma, (g * xhat).sum(axis=0, keepdims=True))
            if beta.requires_grad:
                _accumulate(beta, g.sum(axis=0, keepdims=True))
    else:
        inv = 1.0 / np.sqrt(state.var + state.eps)
        xhat = (x.data - state.mean) * inv

        def backward(g: np.ndarray) -> None:
            if x.requires_grad:
                _accumulate(x, g * gamma.data * inv)
            if gamma.requires_grad:
                _accumulate(gamma, (g * xhat).sum(axis=0, keepdims=True))
            if beta.requires_grad:
                _accumulate(beta, g.sum(axis=0, keepdims=True))

    return _make("batch_norm", gamma.data * xhat + beta.data, (x, gamma, beta), backward)
