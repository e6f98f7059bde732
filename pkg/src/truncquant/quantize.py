"""Uniform and truncation-ready quantizers over the [0, 1] domain.

Both quantizers map normalized floats to integer bins in
``{0, ..., 2**n - 1}``.  The uniform quantizer rounds ``w * (2**n - 1)`` to
the nearest bin; the truncation-ready quantizer takes ``floor(2**n * w)``,
which makes lower precisions reachable from higher ones by a plain right
shift of the bins.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .tensors import NormalizationParams

UNIFORM = "uniform"
TRUNCQUANT = "truncquant"
SCHEMES = (UNIFORM, TRUNCQUANT)

MAX_BITS = 16


def bin_dtype(bits: int):
    """Smallest unsigned dtype that holds bins of the given width."""
    return np.uint8 if bits <= 8 else np.uint16


def round_half_away(x):
    """Round to the nearest integer, ties away from zero.

    The tie rule is isolated here; switching to half-to-even is a one-line
    change that the binwidth interval oracles would then have to mirror.
    """
    x = np.asarray(x)
    return np.copysign(np.floor(np.abs(x) + 0.5), x)


@dataclass(frozen=True)
class QuantConfig:
    """Derived constants for one bit precision (1..16)."""

    bits: int

    def __post_init__(self):
        if not 1 <= self.bits <= MAX_BITS:
            raise DomainError(f"bits must be in [1, {MAX_BITS}], got {self.bits}")

    @property
    def max_bin(self) -> int:
        return (1 << self.bits) - 1

    @property
    def num_bins(self) -> int:
        return 1 << self.bits

    @property
    def level_size(self) -> float:
        """Spacing of adjacent uniform dequantization levels, 1/(2**n - 1)."""
        return 1.0 / self.max_bin

    @property
    def step_size(self) -> float:
        """Quantization step in the normalized domain (equals level_size)."""
        return self.level_size

    # the [0, 1] unsigned convention makes the zero point vacuous
    zero_point: int = field(default=0, init=False)


@dataclass(frozen=True, eq=False)
class QuantizedTensor:
    """Integer bins plus everything needed to dequantize or truncate them."""

    bins: np.ndarray
    scheme: str
    bits: int
    norm: NormalizationParams | None = None

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise DomainError(f"unknown scheme {self.scheme!r}")
        if not 1 <= self.bits <= MAX_BITS:
            raise DomainError(f"bits must be in [1, {MAX_BITS}], got {self.bits}")
        bins = np.asarray(self.bins)
        if not np.issubdtype(bins.dtype, np.integer):
            raise DomainError("bins must be an integer array")
        if bins.size and int(bins.max()) > self.config.max_bin:
            raise DomainError(
                f"bins exceed the maximum {self.bits}-bit value {self.config.max_bin}"
            )
        if bins.size and int(bins.min()) < 0:
            raise DomainError("bins must be non-negative")
        object.__setattr__(self, "bins", bins.astype(bin_dtype(self.bits)))

    @property
    def config(self) -> QuantConfig:
        return QuantConfig(self.bits)


def _check_unit_domain(wn: np.ndarray):
    # NaN fails both comparisons, so it is rejected here as well
    if wn.size and not (np.all(wn >= 0.0) and np.all(wn <= 1.0)):
        raise DomainError("quantizer input must lie in [0, 1]")


def uniform_quantize(
    wn, cfg: QuantConfig, norm: NormalizationParams | None = None
) -> QuantizedTensor:
    """Round-to-nearest quantizer: ``bins = round(wn * (2**n - 1))``."""
    wn = np.asarray(wn, dtype=np.float64)
    _check_unit_domain(wn)
    bins = round_half_away(wn * cfg.max_bin)
    bins = np.clip(bins, 0, cfg.max_bin).astype(bin_dtype(cfg.bits))
    return QuantizedTensor(bins, UNIFORM, cfg.bits, norm)


def truncquant(
    wn, cfg: QuantConfig, norm: NormalizationParams | None = None
) -> QuantizedTensor:
    """Truncation-ready quantizer: ``bins = floor(2**n * wn)``, 1.0 clamped.

    ``2**n * wn`` is exact in binary floating point, so these bins commute
    with right shifts: quantizing at b bits and shifting by b-n gives the
    same result as quantizing at n bits directly.
    """
    wn = np.asarray(wn, dtype=np.float64)
    _check_unit_domain(wn)
    bins = np.floor(cfg.num_bins * wn)
    # wn == 1.0 alone would produce the unrepresentable bin 2**n
    bins = np.minimum(bins, cfg.max_bin).astype(bin_dtype(cfg.bits))
    return QuantizedTensor(bins, TRUNCQUANT, cfg.bits, norm)


def quantize(
    wn, cfg: QuantConfig, scheme: str, norm: NormalizationParams | None = None
) -> QuantizedTensor:
    """Dispatch to the quantizer selected by ``scheme``."""
    if scheme == UNIFORM:
        return uniform_quantize(wn, cfg, norm)
    if scheme == TRUNCQUANT:
        return truncquant(wn, cfg, norm)
    raise DomainError(f"unknown scheme {scheme!r}")


def dequantize(q: QuantizedTensor) -> np.ndarray:
    """Map bins back to the normalized [0, 1] domain.

    Uniform bins sit on the level grid ``k / (2**n - 1)``; truncation-ready
    bins are reconstructed at their bin centers ``(k + 0.5) / 2**n``, the
    choice under which the quantizer's affine surrogate has slope
    ``(2**n - 1) / 2**n``.
    """
    cfg = q.config
    bins = q.bins.astype(np.float64)
    if q.scheme == UNIFORM:
        return bins / cfg.max_bin
    return (bins + 0.5) / cfg.num_bins


def ste_backward(upstream_grad, cfg: QuantConfig, scheme: str) -> np.ndarray:
    """Straight-through gradient of a quantizer.

    Identity for the uniform scheme; for the truncation-ready scheme the
    gradient is scaled by ``max_bin / (max_bin + 1)`` to match the slope of
    the bin-center surrogate.
    """
    upstream_grad = np.asarray(upstream_grad, dtype=np.float64)
    if scheme == UNIFORM:
        return upstream_grad
    if scheme == TRUNCQUANT:
        return upstream_grad * (cfg.max_bin / cfg.num_bins)
    raise DomainError(f"unknown scheme {scheme!r}")
