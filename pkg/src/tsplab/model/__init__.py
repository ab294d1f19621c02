"""Supervised pointer model for tours, on a minimal autodiff kernel."""

from .autodiff import Tensor, no_grad
from .gradcheck import GradCheckReport, grad_check
from .network import (
    DecodeState,
    decode_greedy,
    decode_step,
    embed,
    encode,
    glimpse,
    greedy_decode_batch,
    pointer,
    sequence_nll,
    sequence_nll_loss,
)
from .params import ModelConfig, ModelParams, init_params, load_params, param_shapes, save_params
from .train import TrainLogEntry, lr_at, train, write_log

__all__ = [
    "Tensor",
    "no_grad",
    "GradCheckReport",
    "grad_check",
    "DecodeState",
    "decode_greedy",
    "decode_step",
    "embed",
    "encode",
    "glimpse",
    "greedy_decode_batch",
    "pointer",
    "sequence_nll",
    "sequence_nll_loss",
    "ModelConfig",
    "ModelParams",
    "init_params",
    "load_params",
    "param_shapes",
    "save_params",
    "TrainLogEntry",
    "lr_at",
    "train",
    "write_log",
]
