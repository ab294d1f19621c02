"""Model configuration, named parameter tensors, and the checkpoint format."""

from __future__ import annotations

import json
import struct
from dataclasses import asdict, dataclass, field

import numpy as np

from ..errors import CheckpointError, ConfigError
from .autodiff import Tensor, parameter

_MAGIC = b"TSPLABCK"
_FORMAT_VERSION = 1

# LSTM gate layout within the stacked (4d, .) weight blocks.
GATE_ORDER = ("input", "forget", "candidate", "output")


@dataclass(frozen=True)
class ModelConfig:
    hidden_dim: int = 128
    embed_kernel_width: int = 1  # odd; 1 = shared per-city affine embedding
    glimpses: int = 1
    batch_size: int = 128
    lr0: float = 1e-3
    decay_every: int = 5000
    decay_factor: float = 0.96
    grad_clip_l2: float = 1.0
    seed: int = 0
    precision: str = "f32"  # f32 for training, f64 for gradient checks
    epochs: int = 1
    max_steps: int | None = None

    def __post_init__(self):
        if self.hidden_dim < 1 or self.batch_size < 1 or self.decay_every < 1 or self.epochs < 1:
            raise ConfigError("hidden_dim, batch_size, decay_every, epochs must be positive")
        if self.embed_kernel_width < 1 or self.embed_kernel_width % 2 == 0:
            raise ConfigError("embed_kernel_width must be a positive odd integer")
        if self.glimpses < 0:
            raise ConfigError("glimpses must be non-negative")
        if not 0.0 < self.decay_factor <= 1.0:
            raise ConfigError("decay_factor must be in (0, 1]")
        if self.lr0 < 0 or self.grad_clip_l2 <= 0:
            raise ConfigError("lr0 must be >= 0 and grad_clip_l2 > 0")
        if self.precision not in ("f32", "f64"):
            raise ConfigError("precision must be f32 or f64")

    @property
    def dtype(self):
        return np.float32 if self.precision == "f32" else np.float64

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, data: dict) -> "ModelConfig":
        return cls(**data)


def param_shapes(config: ModelConfig) -> dict[str, tuple[int, ...]]:
    d = config.hidden_dim
    k = config.embed_kernel_width
    return {
        "embed_kernel": (d, 2, k),
        "embed_bias": (d,),
        "enc_wx": (4 * d, d),
        "enc_wh": (4 * d, d),
        "enc_b": (4 * d,),
        "dec_wx": (4 * d, d),
        "dec_wh": (4 * d, d),
        "dec_b": (4 * d,),
        "attn_ref": (d, d),
        "attn_query": (d, d),
        "attn_v": (d,),
        "glimpse_ref": (d, d),
        "glimpse_query": (d, d),
        "glimpse_v": (d,),
        "start_token": (d,),
    }


@dataclass
class ModelParams:
    config: ModelConfig
    tensors: dict[str, Tensor] = field(repr=False, default_factory=dict)

    def __getitem__(self, name: str) -> Tensor:
        return self.tensors[name]

    def named(self) -> list[tuple[str, Tensor]]:
        return list(self.tensors.items())

    def zero_grad(self) -> None:
        for t in self.tensors.values():
            t.grad = None


def init_params(config: ModelConfig, seed: int | None = None) -> ModelParams:
    """Uniform(-1/sqrt(d), 1/sqrt(d)) init; LSTM forget-gate biases start at 1."""
    rng = np.random.default_rng(config.seed if seed is None else seed)
    d = config.hidden_dim
    bound = 1.0 / np.sqrt(d)
    tensors: dict[str, Tensor] = {}
    for name, shape in param_shapes(config).items():
        value = rng.uniform(-bound, bound, size=shape).astype(config.dtype)
        if name in ("enc_b", "dec_b"):
            value[d : 2 * d] = 1.0
        tensors[name] = parameter(value)
    return ModelParams(config=config, tensors=tensors)


def save_params(params: ModelParams, path: str) -> None:
    """Versioned binary container: header JSON + named row-major f32 tensors."""
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", _FORMAT_VERSION))
        header = json.dumps({"config": params.config.to_json()}).encode("utf-8")
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        fh.write(struct.pack("<I", len(params.tensors)))
        for name, tensor in params.named():
            raw = name.encode("utf-8")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
            value = np.ascontiguousarray(tensor.value, dtype=np.float32)
            fh.write(struct.pack("<B", value.ndim))
            fh.write(struct.pack(f"<{value.ndim}I", *value.shape))
            fh.write(value.astype("<f4").tobytes())


def _read(fh, n: int, what: str) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise CheckpointError(f"truncated checkpoint while reading {what}")
    return data


def load_params(path: str) -> ModelParams:
    with open(path, "rb") as fh:
        if _read(fh, len(_MAGIC), "magic") != _MAGIC:
            raise CheckpointError(f"{path} is not a model checkpoint")
        (version,) = struct.unpack("<I", _read(fh, 4, "version"))
        if version != _FORMAT_VERSION:
            raise CheckpointError(f"unsupported checkpoint version {version}")
        (header_len,) = struct.unpack("<I", _read(fh, 4, "header length"))
        header = json.loads(_read(fh, header_len, "header"))
        config = ModelConfig.from_json(header["config"])
        expected = param_shapes(config)
        (count,) = struct.unpack("<I", _read(fh, 4, "tensor count"))
        tensors: dict[str, Tensor] = {}
        for _ in range(count):
            (name_len,) = struct.unpack("<H", _read(fh, 2, "tensor name length"))
            name = _read(fh, name_len, "tensor name").decode("utf-8")
            (ndim,) = struct.unpack("<B", _read(fh, 1, "tensor rank"))
            shape = struct.unpack(f"<{ndim}I", _read(fh, 4 * ndim, "tensor shape"))
            if name not in expected:
                raise CheckpointError(f"unexpected tensor {name!r} in checkpoint")
            if tuple(shape) != expected[name]:
                raise CheckpointError(
                    f"tensor {name!r} has shape {tuple(shape)}, config implies {expected[name]}"
                )
            size = int(np.prod(shape)) if shape else 1
            data = np.frombuffer(_read(fh, 4 * size, f"tensor {name!r} data"), dtype="<f4")
            if not np.all(np.isfinite(data)):
                raise CheckpointError(f"tensor {name!r} contains non-finite values")
            tensors[name] = parameter(data.reshape(shape).astype(config.dtype))
        missing = set(expected) - set(tensors)
        if missing:
            raise CheckpointError(f"checkpoint missing tensors: {sorted(missing)}")
    return ModelParams(config=config, tensors=tensors)
