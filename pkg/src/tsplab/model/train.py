"""Supervised training loop: Adam, stepped learning-rate decay, global-norm
gradient clipping. Deterministic for a fixed seed (fixed shuffle and
reduction order)."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError
from .network import sequence_nll_loss
from .params import ModelConfig, ModelParams, init_params

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass(frozen=True)
class TrainLogEntry:
    step: int
    lr: float
    loss: float


def lr_at(config: ModelConfig, step: int) -> float:
    return config.lr0 * config.decay_factor ** (step // config.decay_every)


def _batches(pairs, config: ModelConfig, rng: np.random.Generator) -> list[list[int]]:
    """Pad-free batching: shuffle within equal-size groups, then shuffle the
    combined batch list."""
    by_n: dict[int, list[int]] = {}
    for i, pair in enumerate(pairs):
        by_n.setdefault(pair.instance.n, []).append(i)
    batches: list[list[int]] = []
    for n in sorted(by_n):
        idx = np.asarray(by_n[n])
        idx = idx[rng.permutation(len(idx))]
        for lo in range(0, len(idx), config.batch_size):
            batches.append(idx[lo : lo + config.batch_size].tolist())
    order = rng.permutation(len(batches))
    return [batches[i] for i in order]


class AdamState:
    def __init__(self, params: ModelParams):
        self.m = {name: np.zeros_like(t.value) for name, t in params.named()}
        self.v = {name: np.zeros_like(t.value) for name, t in params.named()}
        self.t = 0

    def update(self, params: ModelParams, lr: float) -> None:
        self.t += 1
        b1c = 1.0 - ADAM_BETA1**self.t
        b2c = 1.0 - ADAM_BETA2**self.t
        for name, tensor in params.named():
            g = tensor.grad
            if g is None:
                continue
            m = self.m[name]
            v = self.v[name]
            m *= ADAM_BETA1
            m += (1.0 - ADAM_BETA1) * g
            v *= ADAM_BETA2
            v += (1.0 - ADAM_BETA2) * g * g
            step = lr * (m / b1c) / (np.sqrt(v / b2c) + ADAM_EPS)
            tensor.value = tensor.value - step.astype(tensor.value.dtype)


def clip_global_norm(params: ModelParams, max_norm: float) -> float:
    total = 0.0
    for _, tensor in params.named():
        if tensor.grad is not None:
            total += float(np.sum(tensor.grad.astype(np.float64) ** 2))
    norm = float(np.sqrt(total))
    if norm > max_norm:
        factor = max_norm / norm
        for _, tensor in params.named():
            if tensor.grad is not None:
                tensor.grad = tensor.grad * factor
    return norm


def train(
    dataset,
    config: ModelConfig,
    params: ModelParams | None = None,
) -> tuple[ModelParams, list[TrainLogEntry]]:
    """Minimize mean batch NLL over labeled pairs.

    Runs ``config.epochs`` passes (capped by ``config.max_steps`` when set)
    and logs (step, lr, loss) per step, loss being the pre-update mean NLL.
    """
    pairs = [p for p in dataset if p.tour is not None]
    if not pairs:
        raise ConfigError("training needs a non-empty labeled dataset")
    if params is None:
        params = init_params(config)
    rng = np.random.default_rng(config.seed)
    adam = AdamState(params)
    log: list[TrainLogEntry] = []
    step = 0
    done = False
    for _ in range(config.epochs):
        if done:
            break
        for batch_idx in _batches(pairs, config, rng):
            if config.max_steps is not None and step >= config.max_steps:
                done = True
                break
            batch = [pairs[i] for i in batch_idx]
            coords3 = np.stack([p.instance.model_xy() for p in batch])
            targets = np.asarray([p.tour.order for p in batch])
            params.zero_grad()
            loss = sequence_nll_loss(coords3, targets, params)
            mean_loss = float(loss.value) / len(batch)
            loss.backward()
            # gradient of the mean, then clip its global L2 norm
            for _, tensor in params.named():
                if tensor.grad is not None:
                    tensor.grad = tensor.grad / len(batch)
            clip_global_norm(params, config.grad_clip_l2)
            lr = lr_at(config, step)
            adam.update(params, lr)
            log.append(TrainLogEntry(step=step, lr=lr, loss=mean_loss))
            step += 1
    return params, log


def write_log(log: list[TrainLogEntry], path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "lr", "loss"])
        for entry in log:
            writer.writerow([entry.step, repr(entry.lr), repr(entry.loss)])
