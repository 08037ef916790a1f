"""Adam with decoupled weight decay, plus the stepwise learning-rate decay rule."""

from __future__ import annotations

import numpy as np

from .layers import Param


class AdamW:
    def __init__(self, params: list[Param], lr: float, betas=(0.9, 0.999), eps=1e-8, weight_decay=0.0):
        self.params = list(params)
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.weight_decay = weight_decay
        self.t = 0
        self._m = [np.zeros_like(p.value) for p in self.params]
        self._v = [np.zeros_like(p.value) for p in self.params]

    def zero_grad(self):
        for p in self.params:
            p.grad[...] = 0.0

    def step(self):
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for p, m, v in zip(self.params, self._m, self._v):
            m *= self.beta1
            m += (1.0 - self.beta1) * p.grad
            v *= self.beta2
            v += (1.0 - self.beta2) * p.grad**2
            update = (m / bc1) / (np.sqrt(v / bc2) + self.eps)
            if self.weight_decay:
                update = update + self.weight_decay * p.value
            p.value -= self.lr * update


def step_lr(base_lr: float, epoch: int, step_size: int, gamma: float) -> float:
    """Learning rate decayed by gamma every step_size epochs (epoch is 0-based)."""
    return base_lr * gamma ** (epoch // step_size)
