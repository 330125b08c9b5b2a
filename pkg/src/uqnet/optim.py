"""Optimizers over named parameter tensors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .layers import ModelParams


class SGD:
    """Stochastic gradient descent with classical momentum."""

    def __init__(self, params: ModelParams, lr: float = 0.01, momentum: float = 0.0):
        self.params = params
        self.lr = float(lr)
        self.momentum = float(momentum)
        self.velocity = {n: np.zeros_like(t.data) for n, t in params.tensors.items()}
        self.t = 0

    def zero_grad(self):
        self.params.zero_grad()

    def step(self):
        self.t += 1
        for name, p in self.params.tensors.items():
            if p.grad is None:
                continue
            v = self.momentum * self.velocity[name] + p.grad
            self.velocity[name] = v
            p.data -= self.lr * v


class Adam:
    """Adam with bias correction (lr 1e-3, betas 0.9/0.999, eps 1e-8 by default)."""

    def __init__(self, params: ModelParams, lr: float = 1e-3, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr = float(lr)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.m = {n: np.zeros_like(t.data) for n, t in params.tensors.items()}
        self.v = {n: np.zeros_like(t.data) for n, t in params.tensors.items()}
        self.t = 0

    def zero_grad(self):
        self.params.zero_grad()

    def step(self):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for name, p in self.params.tensors.items():
            g = p.grad
            if g is None:
                continue
            self.m[name] = b1 * self.m[name] + (1 - b1) * g
            self.v[name] = b2 * self.v[name] + (1 - b2) * (g * g)
            m_hat = self.m[name] / (1 - b1 ** self.t)
            v_hat = self.v[name] / (1 - b2 ** self.t)
            p.data -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


@dataclass(frozen=True)
class OptimizerConfig:
    kind: str = "adam"          # "adam" | "sgd-momentum"
    lr: float = 1e-3
    momentum: float = 0.9       # sgd only
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def build(self, params: ModelParams):
        if self.kind == "adam":
            return Adam(params, self.lr, self.beta1, self.beta2, self.eps)
        if self.kind == "sgd-momentum":
            return SGD(params, self.lr, self.momentum)
        raise ValueError(f"unknown optimizer kind {self.kind!r}")
