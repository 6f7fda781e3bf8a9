"""Adaptive-moment optimizer with bias correction."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor import Tensor


@dataclass
class AdamState:
    """First/second-moment accumulators for one parameter."""

    m: np.ndarray
    v: np.ndarray


class Adam:
    """Per-parameter moment tracking with bias-corrected updates.

    The update for gradient g at step t is
        m <- b1*m + (1-b1)*g
        v <- b2*v + (1-b2)*g^2
        theta <- theta - lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)
    """

    def __init__(self, params: dict[str, Tensor], lr: float = 0.001,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = dict(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.state = {name: AdamState(np.zeros_like(p.data), np.zeros_like(p.data))
                      for name, p in self.params.items()}

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.zero_grad()

    def step(self) -> None:
        """Apply one update from the gradients currently held by the parameters.

        A parameter whose gradient is unset is treated as having zero gradient.
        """
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for name, p in self.params.items():
            g = p.grad
            if g is None:
                g = np.zeros_like(p.data)
            if g.shape != p.data.shape:
                raise ValueError(
                    f"gradient shape {g.shape} does not match parameter "
                    f"{name!r} of shape {p.data.shape}")
            s = self.state[name]
            s.m = self.beta1 * s.m + (1.0 - self.beta1) * g
            s.v = self.beta2 * s.v + (1.0 - self.beta2) * (g * g)
            m_hat = s.m / bc1
            v_hat = s.v / bc2
            p.data -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
