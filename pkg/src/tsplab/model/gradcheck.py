"""Finite-difference verification of the autodiff kernel through the full
model loss, at small shapes and 64-bit precision."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..geometry import Tour
from . import autodiff as ad
from .network import sequence_nll_loss
from .params import ModelConfig, ModelParams, init_params

FD_STEP = 1e-5
REL_ERR_FLOOR = 1e-8

# Trial parameters are drawn uniform(-TRIAL_PARAM_AMP, +TRIAL_PARAM_AMP):
# generic positions where every path carries gradient signal. At init-scale
# draws the decoder path's gradient can be ~1e-10, where a 1e-5 finite
# difference measures nothing but roundoff.
TRIAL_PARAM_AMP = 1.5


@dataclass(frozen=True)
class GradCheckReport:
    max_rel_err: float
    per_tensor: dict[str, float]
    trials: int
    seed: int

    def __str__(self):
        lines = [f"grad check: {self.trials} trials, max relative error {self.max_rel_err:.3e}"]
        for name, err in sorted(self.per_tensor.items()):
            lines.append(f"  {name:16s} {err:.3e}")
        return "\n".join(lines)


def _loss_value(coords3: np.ndarray, targets: np.ndarray, params: ModelParams) -> float:
    with ad.no_grad():
        return float(sequence_nll_loss(coords3, targets, params).value)


def numeric_gradient(
    coords3: np.ndarray, targets: np.ndarray, params: ModelParams, name: str, h: float = FD_STEP
) -> np.ndarray:
    """Central finite differences of the loss w.r.t. one parameter tensor."""
    tensor = params[name]
    grad = np.zeros_like(tensor.value)
    flat = tensor.value.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        up = _loss_value(coords3, targets, params)
        flat[i] = orig - h
        down = _loss_value(coords3, targets, params)
        flat[i] = orig
        gflat[i] = (up - down) / (2.0 * h)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Per-tensor relative error: ||ga - gn|| / max(floor, ||ga|| + ||gn||)."""
    ga = np.linalg.norm(analytic.ravel())
    gn = np.linalg.norm(numeric.ravel())
    return float(np.linalg.norm((analytic - numeric).ravel()) / max(REL_ERR_FLOOR, ga + gn))


def grad_check(trials: int = 100, seed: int = 0, h: float = FD_STEP) -> GradCheckReport:
    """Compare analytic and finite-difference gradients on random tiny models.

    Each trial draws a fresh (params, instance, target) triple with n <= 6
    and hidden_dim <= 8 at f64, then checks every parameter tensor.
    """
    rng = np.random.default_rng(seed)
    per_tensor: dict[str, float] = {}
    for trial in range(trials):
        n = int(rng.integers(3, 7))
        d = int(rng.choice([4, 6, 8]))
        config = ModelConfig(hidden_dim=d, precision="f64", glimpses=1, seed=0)
        params = init_params(config, seed=0)
        for tensor in params.tensors.values():
            tensor.value = rng.uniform(-TRIAL_PARAM_AMP, TRIAL_PARAM_AMP, size=tensor.value.shape)
        coords3 = rng.random((1, n, 2))
        target = Tour(rng.permutation(n)).canonical()
        targets = np.asarray([target.order])

        params.zero_grad()
        loss = sequence_nll_loss(coords3, targets, params)
        loss.backward()

        for name, tensor in params.named():
            analytic = tensor.grad if tensor.grad is not None else np.zeros_like(tensor.value)
            numeric = numeric_gradient(coords3, targets, params, name, h)
            err = relative_error(analytic, numeric)
            if err > per_tensor.get(name, 0.0):
                per_tensor[name] = err
    return GradCheckReport(
        max_rel_err=max(per_tensor.values()),
        per_tensor=per_tensor,
        trials=trials,
        seed=seed,
    )
