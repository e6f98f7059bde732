"""Toy quantization-aware training: an MLP with hand-written gradients.

Weights of the quantizable layers pass through a fake-quantization chain
in the forward pass (normalize, quantize, dequantize, denormalize, all
recomputed from the live weights each step).  The backward pass treats
that chain as its straight-through surrogate: identity for the uniform
scheme, a ``max_bin / (max_bin + 1)`` scale for the truncation-ready one.
First and last layers stay at full precision by default.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .datasets import Dataset, DatasetSpec, make_dataset
from .errors import DomainError, PrecisionOrderError, ShapeError, TrainingError
from .quantize import (
    SCHEMES,
    TRUNCQUANT,
    QuantConfig,
    QuantizedTensor,
    dequantize,
    quantize,
)
from .tensors import DOREFA_TANH, denormalize, normalize
from .truncate import truncate
from . import fileio

QUANT_MODE = "quant"
TRUNC_MODE = "trunc"

_MASK_RECORD = "quantize_mask"


@dataclass
class MlpLayer:
    weight: np.ndarray  # (fan_in, fan_out)
    bias: np.ndarray  # (fan_out,)
    quantize: bool


@dataclass
class MlpModel:
    layers: list[MlpLayer]

    @classmethod
    def initialize(cls, sizes, rng: np.random.Generator) -> "MlpModel":
        """He-scaled random init; only interior layers are quantizable."""
        layers = []
        last = len(sizes) - 2
        for i, (fan_in, fan_out) in enumerate(zip(sizes, sizes[1:])):
            w = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_in, fan_out))
            layers.append(
                MlpLayer(w, np.zeros(fan_out), quantize=0 < i < last)
            )
        return cls(layers)


@dataclass(frozen=True)
class TrainConfig:
    scheme: str = TRUNCQUANT
    precision_set: tuple[int, ...] = (2, 3, 4, 8)
    epochs: int = 200
    batch_size: int = 64
    learning_rate: float = 0.1
    seed: int = 0
    dataset: DatasetSpec = field(default_factory=DatasetSpec)
    hidden: tuple[int, ...] = (16, 16)

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise DomainError(f"unknown scheme {self.scheme!r}")
        if not self.precision_set:
            raise DomainError("precision_set must be nonempty")
        if any(not 1 <= n <= 8 for n in self.precision_set):
            raise DomainError("every training precision must be in [1, 8]")


@dataclass(frozen=True)
class TrainStep:
    epoch: int
    n_sampled: int
    loss: float
    train_acc: float


def effective_weight(w: np.ndarray, bits: int, scheme: str) -> np.ndarray:
    """Fake-quantized stand-in for a weight matrix at the given precision."""
    wn, params = normalize(w, DOREFA_TANH)
    q = quantize(wn, QuantConfig(bits), scheme, norm=params)
    return denormalize(dequantize(q), params)


def _materialize(model: MlpModel, bits, scheme: str) -> list[np.ndarray]:
    weights = []
    for layer in model.layers:
        if layer.quantize and bits is not None:
            weights.append(effective_weight(layer.weight, bits, scheme))
        else:
            weights.append(layer.weight)
    return weights


def _relu(z):
    return np.maximum(z, 0.0)


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def cross_entropy(probs: np.ndarray, labels: np.ndarray) -> float:
    picked = probs[np.arange(len(labels)), labels]
    return float(-np.log(np.maximum(picked, 1e-300)).mean())


def _forward_with_weights(model: MlpModel, x: np.ndarray, weights):
    a = np.asarray(x, dtype=np.float64)
    cache = []
    last = len(model.layers) - 1
    for i, (layer, w) in enumerate(zip(model.layers, weights)):
        z = a @ w + layer.bias
        cache.append((a, z, w))
        a = _relu(z) if i < last else z
    return a, cache


def forward(model: MlpModel, x, bits=None, scheme: str = TRUNCQUANT):
    """Forward pass with fake-quantized weights; ``bits=None`` disables it.

    Returns the logits and the cache consumed by :func:`backward`.
    """
    return _forward_with_weights(model, x, _materialize(model, bits, scheme))


def backward(model: MlpModel, cache, loss_grad, bits=None, scheme: str = TRUNCQUANT):
    """Backprop from d(loss)/d(logits); returns per-layer (dW, db).

    The quantizer chain contributes only its straight-through factor, and
    only to the weight gradients of quantized layers.
    """
    loss_grad = np.asarray(loss_grad, dtype=np.float64)
    if loss_grad.shape != cache[-1][1].shape:
        raise ShapeError(
            f"loss gradient shape {loss_grad.shape} does not match logits "
            f"shape {cache[-1][1].shape}"
        )
    grads = [None] * len(model.layers)
    delta = loss_grad
    for i in reversed(range(len(model.layers))):
        a_in, _, w_eff = cache[i]
        dw = a_in.T @ delta
        db = delta.sum(axis=0)
        if model.layers[i].quantize and bits is not None and scheme == TRUNCQUANT:
            cfg = QuantConfig(bits)
            dw = dw * (cfg.max_bin / cfg.num_bins)
        grads[i] = (dw, db)
        if i > 0:
            delta = (delta @ w_eff.T) * (cache[i - 1][1] > 0)
    return grads


def accuracy(logits: np.ndarray, labels: np.ndarray) -> float:
    return float(np.mean(np.argmax(logits, axis=1) == labels))


def train(config: TrainConfig) -> tuple[MlpModel, list[TrainStep]]:
    """Plain SGD; each step samples one precision from the configured set.

    Deterministic given the config: identical seeds give bit-identical
    weights.  Raises :class:`TrainingError` if the loss goes non-finite.
    """
    data = make_dataset(config.dataset)
    rng = np.random.default_rng(config.seed)
    sizes = (data.train_x.shape[1], *config.hidden, config.dataset.num_classes)
    model = MlpModel.initialize(sizes, rng)
    precisions = np.array(sorted(config.precision_set), dtype=np.int64)

    log: list[TrainStep] = []
    step = 0
    n_train = len(data.train_x)
    for epoch in range(config.epochs):
        order = rng.permutation(n_train)
        for start in range(0, n_train, config.batch_size):
            idx = order[start : start + config.batch_size]
            bits = int(precisions[rng.integers(len(precisions))])
            bx, by = data.train_x[idx], data.train_y[idx]

            logits, cache = forward(model, bx, bits, config.scheme)
            probs = softmax(logits)
            loss = cross_entropy(probs, by)
            if not np.isfinite(loss):
                raise TrainingError(f"non-finite loss at step {step}")

            grad = probs.copy()
            grad[np.arange(len(by)), by] -= 1.0
            grad /= len(by)
            for layer, (dw, db) in zip(
                model.layers, backward(model, cache, grad, bits, config.scheme)
            ):
                layer.weight -= config.learning_rate * dw
                layer.bias -= config.learning_rate * db

            log.append(TrainStep(epoch, bits, loss, accuracy(logits, by)))
            step += 1
    return model, log


def evaluate(
    model: MlpModel,
    data: Dataset,
    bits=None,
    mode: str = QUANT_MODE,
    start_bits: int = 8,
    scheme: str = TRUNCQUANT,
) -> float:
    """Top-1 accuracy on the test split.

    ``quant`` mode quantizes weights directly at ``bits``; ``trunc`` mode
    quantizes at ``start_bits`` and right-shifts down to ``bits``.
    """
    if mode not in (QUANT_MODE, TRUNC_MODE):
        raise DomainError(f"unknown evaluation mode {mode!r}")
    if mode == TRUNC_MODE:
        if bits is None:
            raise DomainError("trunc mode needs a target bit width")
        if start_bits < bits:
            raise PrecisionOrderError(
                f"start precision {start_bits} is below target {bits}"
            )
        weights = []
        for layer in model.layers:
            if layer.quantize:
                wn, params = normalize(layer.weight, DOREFA_TANH)
                q = quantize(wn, QuantConfig(start_bits), scheme, norm=params)
                q = truncate(q, bits)
                weights.append(denormalize(dequantize(q), params))
            else:
                weights.append(layer.weight)
        logits, _ = _forward_with_weights(model, data.test_x, weights)
    else:
        logits, _ = forward(model, data.test_x, bits, scheme)
    return accuracy(logits, data.test_y)


def quantized_records(model: MlpModel, bits: int, scheme: str) -> dict:
    """Checkpoint records with quantizable layers stored as integer bins."""
    records: dict = {}
    flags = []
    for i, layer in enumerate(model.layers):
        if layer.quantize:
            wn, params = normalize(layer.weight, DOREFA_TANH)
            records[f"layer{i}/weight"] = quantize(
                wn, QuantConfig(bits), scheme, norm=params
            )
        else:
            records[f"layer{i}/weight"] = layer.weight
        records[f"layer{i}/bias"] = layer.bias
        flags.append(1.0 if layer.quantize else 0.0)
    records[_MASK_RECORD] = np.array(flags, dtype=np.float32)
    return records


def save_model(path, model: MlpModel):
    """Write the master weights as a checkpoint container (f32 payloads)."""
    records: dict = {}
    flags = []
    for i, layer in enumerate(model.layers):
        records[f"layer{i}/weight"] = layer.weight
        records[f"layer{i}/bias"] = layer.bias
        flags.append(1.0 if layer.quantize else 0.0)
    records[_MASK_RECORD] = np.array(flags, dtype=np.float32)
    fileio.write_checkpoint(path, records)


def model_from_records(records: dict) -> MlpModel:
    """Rebuild a model from checkpoint records.

    Quantized weight records are materialized (dequantize + denormalize)
    into fixed full-precision weights with quantization disabled.
    """
    mask = records.get(_MASK_RECORD)
    layers = []
    i = 0
    while f"layer{i}/weight" in records:
        w = records[f"layer{i}/weight"]
        if f"layer{i}/bias" not in records:
            raise DomainError(f"checkpoint is missing layer{i}/bias")
        b = np.asarray(records[f"layer{i}/bias"], dtype=np.float64)
        if isinstance(w, QuantizedTensor):
            if w.norm is None:
                raise DomainError(
                    f"layer{i}/weight has no normalization parameters"
                )
            weight = denormalize(dequantize(w), w.norm)
            flag = False
        else:
            weight = np.asarray(w, dtype=np.float64)
            flag = bool(mask is not None and i < len(mask) and mask[i])
        layers.append(MlpLayer(weight, b, flag))
        i += 1
    if not layers:
        raise DomainError("checkpoint contains no layers")
    return MlpModel(layers)


def load_model(path) -> MlpModel:
    return model_from_records(fileio.read_checkpoint(path))
