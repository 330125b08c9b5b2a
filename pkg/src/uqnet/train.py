"""Minibatch training with per-epoch logging and best-validation selection."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import rng as _rng
from .data import Dataset
from .layers import DropoutMode, ModelParams, ModelSpec, model_forward
from .losses import LossBreakdown, cross_entropy, variational_loss_graph
from .optim import OptimizerConfig
from .tensor import NonFiniteError, Tensor, no_grad
from .uncertainty import kld_from_logvar, variational_heads


class TrainingDivergedError(RuntimeError):
    """Loss became non-finite; carries the offending step and epoch."""

    def __init__(self, step: int, epoch: int, detail: str):
        super().__init__(f"training diverged at step {step} (epoch {epoch}): {detail}")
        self.step = step
        self.epoch = epoch


@dataclass(frozen=True)
class TrainConfig:
    optimizer: OptimizerConfig = OptimizerConfig()
    epochs: int = 20
    batch_size: int = 64
    beta: float = 1.0  # KLD weight for the variational variant


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    split: str  # "train" | "val"
    loss: LossBreakdown
    accuracy: float


@dataclass
class TrainResult:
    params: ModelParams          # best-validation snapshot
    log: list[EpochStats] = field(default_factory=list)
    best_epoch: int = 0
    final_train_loss: float = float("nan")


def _deterministic_eval(params: ModelParams, spec: ModelSpec, ds: Dataset,
                        beta: float) -> tuple[LossBreakdown, float]:
    """Loss and accuracy with dropout off; variational CE is taken at eps = 0."""
    with no_grad():
        if spec.head == "variational":
            mu, logvar = variational_heads(params, spec, ds.inputs)
            ce = float(cross_entropy(mu, ds.labels))
            kl = float(kld_from_logvar(mu, logvar))
            breakdown = LossBreakdown.compose(ce, kl, beta)
            pred = mu.data.argmax(axis=1)
        else:
            logits = model_forward(params, spec, ds.inputs)
            breakdown = LossBreakdown.plain(float(cross_entropy(logits, ds.labels)))
            pred = logits.data.argmax(axis=1)
    return breakdown, float((pred == ds.labels).mean())


def train(params: ModelParams, spec: ModelSpec, train_ds: Dataset, val_ds: Dataset,
          cfg: TrainConfig, seed: int) -> TrainResult:
    """Train in place; return the best-validation parameter snapshot and log.

    Fully deterministic in (initial params, datasets, cfg, seed): batch
    order, dropout masks, and reparameterization noise all come from
    streams keyed by the seed and the step/epoch index.
    """
    if cfg.epochs < 1:
        raise ValueError("epochs must be >= 1")
    if spec.input_shape != train_ds.input_shape:
        raise ValueError(f"model expects inputs {spec.input_shape}, "
                         f"dataset provides {train_ds.input_shape}")

    opt = cfg.optimizer.build(params)
    result = TrainResult(params=params.copy())
    best_key: tuple[float, float] | None = None  # (accuracy, -loss), earliest epoch wins ties
    step = 0

    for epoch in range(cfg.epochs):
        order = _rng.stream(seed, _rng.NS_TRAIN_SHUFFLE, epoch).permutation(train_ds.n)
        for lo in range(0, train_ds.n, cfg.batch_size):
            idx = order[lo:lo + cfg.batch_size]
            x = Tensor(train_ds.inputs[idx])
            y = train_ds.labels[idx]
            pass_rng = _rng.PassRng(seed, step, _rng.NS_TRAIN_DROPOUT)
            try:
                if spec.head == "variational":
                    mu, logvar = variational_heads(params, spec, x, DropoutMode.TRAIN, pass_rng)
                    eps = _rng.stream(seed, _rng.NS_TRAIN_NOISE, step).standard_normal(mu.shape)
                    loss, breakdown = variational_loss_graph(mu, logvar, y, cfg.beta, eps)
                else:
                    logits = model_forward(params, spec, x, DropoutMode.TRAIN, pass_rng)
                    loss = cross_entropy(logits, y)
                    breakdown = LossBreakdown.plain(float(loss))
                if not np.isfinite(breakdown.total):
                    raise TrainingDivergedError(step, epoch, f"loss = {breakdown.total}")
                opt.zero_grad()
                loss.backward()
                opt.step()
            except NonFiniteError as e:
                raise TrainingDivergedError(step, epoch, str(e)) from e
            step += 1

        train_loss, train_acc = _deterministic_eval(params, spec, train_ds, cfg.beta)
        val_loss, val_acc = _deterministic_eval(params, spec, val_ds, cfg.beta)
        result.log.append(EpochStats(epoch, "train", train_loss, train_acc))
        result.log.append(EpochStats(epoch, "val", val_loss, val_acc))
        result.final_train_loss = train_loss.total

        key = (val_acc, -val_loss.total)
        if best_key is None or key > best_key:
            best_key = key
            result.params = params.copy()
            result.best_epoch = epoch

    return result
