"""Closed-form storage estimates for the precision-switching strategies.

Three ways to serve a model at several bit widths: keep one dedicated
quantized copy per width, keep the fp32 parent and quantize on demand, or
keep a single truncation-ready model at the maximum width and bit-shift
down.  Exempt layers (typically first and last) stay at fp32 everywhere.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

from .errors import DomainError

BYTES_PER_FP32 = 4

DEDICATED = "dedicated"
OFA_FP32 = "ofa-fp32-parent"
TRUNCQUANT_STORAGE = "truncquant"
STRATEGIES = (DEDICATED, OFA_FP32, TRUNCQUANT_STORAGE)


@dataclass(frozen=True)
class LayerInfo:
    name: str
    param_count: int
    exempt: bool = False

    def __post_init__(self):
        if self.param_count <= 0:
            raise DomainError(f"layer {self.name!r} has no parameters")


_TRUTHY = {"1", "true", "yes", "y"}
_FALSY = {"0", "false", "no", "n", ""}


def read_layer_table(path) -> list[LayerInfo]:
    """Parse a layer table CSV with columns name,param_count,first_or_last."""
    layers = []
    with open(Path(path), newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"name", "param_count", "first_or_last"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise DomainError(
                f"layer table must have columns {sorted(required)}, "
                f"got {reader.fieldnames}"
            )
        for row in reader:
            try:
                count = int(row["param_count"])
            except ValueError:
                raise DomainError(
                    f"bad param_count {row['param_count']!r} for layer {row['name']!r}"
                ) from None
            flag = row["first_or_last"].strip().lower()
            if flag in _TRUTHY:
                exempt = True
            elif flag in _FALSY:
                exempt = False
            else:
                raise DomainError(
                    f"bad first_or_last flag {row['first_or_last']!r} "
                    f"for layer {row['name']!r}"
                )
            layers.append(LayerInfo(row["name"], count, exempt))
    if not layers:
        raise DomainError("layer table is empty")
    return layers


def fp32_bytes(layers) -> float:
    return float(BYTES_PER_FP32 * sum(l.param_count for l in layers))


def quantized_bytes(layers, bits: int) -> float:
    """One quantized copy: bits/8 per quantizable param, fp32 for exempt."""
    if not 1 <= bits <= 16:
        raise DomainError(f"bits must be in [1, 16], got {bits}")
    total = 0.0
    for layer in layers:
        if layer.exempt:
            total += BYTES_PER_FP32 * layer.param_count
        else:
            total += bits / 8.0 * layer.param_count
    return total


def dedicated_bytes(layers, bits_list) -> float:
    """Sum of one dedicated quantized model per requested width."""
    if not bits_list:
        raise DomainError("dedicated strategy needs at least one bit width")
    return float(sum(quantized_bytes(layers, b) for b in bits_list))


def truncquant_bytes(layers, max_bits: int) -> float:
    """A single model at the maximum precision of the switching range."""
    return quantized_bytes(layers, max_bits)


@dataclass(frozen=True)
class StorageRow:
    strategy: str
    total_bytes: float
    ratio_vs_truncquant: float


def storage_report(layers, dedicated_bits, max_bits: int = 8) -> list[StorageRow]:
    """Byte totals per strategy with ratios relative to the truncation-ready one."""
    base = truncquant_bytes(layers, max_bits)
    rows = [
        StorageRow(DEDICATED, dedicated_bytes(layers, dedicated_bits),
                   dedicated_bytes(layers, dedicated_bits) / base),
        StorageRow(OFA_FP32, fp32_bytes(layers), fp32_bytes(layers) / base),
        StorageRow(TRUNCQUANT_STORAGE, base, 1.0),
    ]
    return rows
