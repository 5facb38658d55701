"""Adam optimizer over Parameter leaves."""

from __future__ import annotations

import numpy as np

from .autodiff import Parameter


class Adam:
    """Adam with bias-corrected first and second moment estimates.

    Update per parameter:
        m <- b1 m + (1 - b1) g
        v <- b2 v + (1 - b2) g^2
        p <- p - lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps)
    """

    def __init__(self, params, lr: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params: list[Parameter] = list(params)
        names = [p.name for p in self.params]
        if len(set(names)) != len(names):
            raise ValueError("duplicate parameter names")
        self.lr = float(lr)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.t = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def zero_grad(self):
        for p in self.params:
            p.zero_grad()

    def step(self):
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for p, m, v in zip(self.params, self.m, self.v):
            g = p.grad
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p.data -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)

    # checkpointing ---------------------------------------------------------

    def state_tensors(self) -> dict[str, np.ndarray]:
        out = {}
        for p, m, v in zip(self.params, self.m, self.v):
            out["adam.m." + p.name] = m
            out["adam.v." + p.name] = v
        return out

    def load_state_tensors(self, tensors: dict[str, np.ndarray], t: int):
        self.t = int(t)
        for i, p in enumerate(self.params):
            self.m[i] = np.array(tensors["adam.m." + p.name], dtype=np.float64)
            self.v[i] = np.array(tensors["adam.v." + p.name], dtype=np.float64)
