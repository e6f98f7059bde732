"""Binwidth intervals, gap identification, and the error metrics.

A "binwidth" is the half-open interval of normalized floats that a scheme
maps to one integer bin.  Comparing the binwidths of direct quantization
against quantize-then-truncate exposes the regions where the two disagree
(the gaps); the error metrics below measure the cost of that disagreement.

Gap boundaries are exact rationals, so the interval extraction runs on
``fractions.Fraction`` and is authoritative; the brute-force sweeps in the
test suite only cross-validate it.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from .errors import DomainError, PrecisionOrderError, ShapeError
from .quantize import (
    TRUNCQUANT,
    UNIFORM,
    QuantConfig,
    QuantizedTensor,
    dequantize,
    quantize,
    truncquant,
)
from .truncate import truncate

L1 = "l1"
L2 = "l2"
NORM_KINDS = (L1, L2)

# smallest float above 1.0; top intervals end here so that membership of the
# clamped input 1.0 still works with half-open semantics
_ABOVE_ONE = float(np.nextafter(1.0, 2.0))


@dataclass(frozen=True)
class Interval:
    """Half-open interval [lo, hi)."""

    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise DomainError(f"empty interval [{self.lo}, {self.hi})")

    def __contains__(self, x) -> bool:
        return self.lo <= x < self.hi

    @property
    def width(self) -> float:
        return self.hi - self.lo


class GapInterval(NamedTuple):
    interval: Interval
    quant_bin: int
    trunc_bin: int


def _check_bin_index(i: int, cfg: QuantConfig):
    if not 0 <= i <= cfg.max_bin:
        raise DomainError(f"bin index {i} out of range [0, {cfg.max_bin}]")


def quant_binwidth(i: int, bits: int) -> Interval:
    """Input range mapped to bin ``i`` by the n-bit uniform quantizer.

    ``[(i - 0.5) / M, (i + 0.5) / M)`` clipped to the [0, 1] domain at the
    edges (the top interval keeps its right edge just above 1.0 so that the
    clamped input 1.0 is a member).
    """
    cfg = QuantConfig(bits)
    _check_bin_index(i, cfg)
    m = cfg.max_bin
    lo = max((i - 0.5) / m, 0.0)
    hi = min((i + 0.5) / m, _ABOVE_ONE)
    return Interval(lo, hi)


def trunc_binwidth(j: int, bits: int, start_bits: int) -> Interval:
    """Input range whose b-bit uniform bins right-shift to bin ``j``."""
    if start_bits <= bits:
        raise PrecisionOrderError(
            f"start precision must exceed target, got {start_bits} <= {bits}"
        )
    cfg = QuantConfig(bits)
    cfg_b = QuantConfig(start_bits)
    _check_bin_index(j, cfg)
    step = 1 << (start_bits - bits)
    mb = cfg_b.max_bin
    lo = max((j * step - 0.5) / mb, 0.0)
    hi = min(((j + 1) * step - 0.5) / mb, _ABOVE_ONE)
    return Interval(lo, hi)


def truncready_binwidth(k: int, bits: int) -> Interval:
    """Evenly spaced binwidth ``[k / 2**n, (k + 1) / 2**n)``.

    Identical for direct quantization and for truncation from any higher
    precision, which is what makes the scheme truncation-ready.
    """
    cfg = QuantConfig(bits)
    _check_bin_index(k, cfg)
    n_bins = cfg.num_bins
    return Interval(k / n_bins, (k + 1) / n_bins)


def _exact_uniform_bin(x: Fraction, max_bin: int) -> int:
    # round half away from zero; x is in [0, 1] so ties round up
    scaled = x * max_bin + Fraction(1, 2)
    return min(scaled.numerator // scaled.denominator, max_bin)


def _gap_segments(bits: int, start_bits: int):
    """Exact disagreement segments between direct and truncated bins."""
    if start_bits <= bits:
        raise PrecisionOrderError(
            f"start precision must exceed target, got {start_bits} <= {bits}"
        )
    QuantConfig(start_bits)  # range-check
    shift = start_bits - bits
    mn = (1 << bits) - 1
    mb = (1 << start_bits) - 1

    boundaries = {Fraction(0), Fraction(1)}
    for i in range(1, mn + 1):
        boundaries.add(Fraction(2 * i - 1, 2 * mn))
        boundaries.add(Fraction(2 * (i << shift) - 1, 2 * mb))
    points = sorted(boundaries)

    segments = []
    for lo, hi in zip(points, points[1:]):
        mid = (lo + hi) / 2
        q_bin = _exact_uniform_bin(mid, mn)
        t_bin = _exact_uniform_bin(mid, mb) >> shift
        if q_bin != t_bin:
            if segments and segments[-1][1] == lo and segments[-1][2:] == (q_bin, t_bin):
                segments[-1] = (segments[-1][0], hi, q_bin, t_bin)
            else:
                segments.append((lo, hi, q_bin, t_bin))
    return segments


def qt_gap_intervals(
    bits: int, start_bits: int, scheme: str = UNIFORM
) -> list[GapInterval]:
    """Maximal intervals where direct and truncated bin assignments differ.

    Each interval is annotated with the two disagreeing bins.  Empty for
    the truncation-ready scheme, whose two paths agree everywhere.
    """
    if scheme == TRUNCQUANT:
        if start_bits <= bits:
            raise PrecisionOrderError(
                f"start precision must exceed target, got {start_bits} <= {bits}"
            )
        return []
    if scheme != UNIFORM:
        raise DomainError(f"unknown scheme {scheme!r}")
    return [
        GapInterval(Interval(float(lo), float(hi)), q_bin, t_bin)
        for lo, hi, q_bin, t_bin in _gap_segments(bits, start_bits)
    ]


def qt_gap_measure(bits: int, start_bits: int, scheme: str = UNIFORM) -> float:
    """Total Lebesgue measure of the gap intervals within [0, 1]."""
    if scheme == TRUNCQUANT:
        if start_bits <= bits:
            raise PrecisionOrderError(
                f"start precision must exceed target, got {start_bits} <= {bits}"
            )
        return 0.0
    if scheme != UNIFORM:
        raise DomainError(f"unknown scheme {scheme!r}")
    total = sum(
        (hi - lo for lo, hi, _, _ in _gap_segments(bits, start_bits)),
        Fraction(0),
    )
    return float(total)


@dataclass(frozen=True)
class QtReport:
    """Per-tensor record of the error metrics at one (n, b) setting.

    ``e_q`` is the distance between the input and its direct quantization;
    ``e_t_direct`` the distance between truncated and directly quantized
    reconstructions; ``e_t_factored`` the shortcut
    ``delta_prime * level_size * gap_count`` (L1 only, where every gap
    mismatch is exactly one level).
    """

    layer: str
    n: int
    b: int
    total_weights: int
    gap_count: int
    level_size: float
    e_q: float
    e_t_direct: float
    e_t_factored: float | None
    norm_kind: str

    CSV_HEADER = (
        "layer",
        "n",
        "b",
        "total_weights",
        "gap_count",
        "level_size",
        "e_q",
        "e_t_direct",
        "e_t_factored",
        "norm_kind",
    )

    def csv_row(self) -> list[str]:
        return [
            self.layer,
            str(self.n),
            str(self.b),
            str(self.total_weights),
            str(self.gap_count),
            repr(self.level_size),
            repr(self.e_q),
            repr(self.e_t_direct),
            "" if self.e_t_factored is None else repr(self.e_t_factored),
            self.norm_kind,
        ]


def _distance(diff: np.ndarray, norm_kind: str) -> float:
    if norm_kind == L1:
        return float(np.abs(diff).sum())
    if norm_kind == L2:
        return float(np.sqrt(np.square(diff).sum()))
    raise DomainError(f"unknown norm kind {norm_kind!r}")


def quant_error(wn, q: QuantizedTensor, norm_kind: str = L1) -> float:
    """Distance between a normalized tensor and its dequantized bins.

    Computed in the normalized domain and scaled by the tensor's
    ``delta_prime`` so the result reads in the weight domain.
    """
    wn = np.asarray(wn, dtype=np.float64)
    if wn.shape != q.bins.shape:
        raise ShapeError(f"shape mismatch: {wn.shape} vs {q.bins.shape}")
    delta_prime = q.norm.delta_prime if q.norm is not None else 1.0
    return delta_prime * _distance(wn - dequantize(q), norm_kind)


def qt_error(
    wn,
    bits: int,
    start_bits: int,
    scheme: str = UNIFORM,
    norm_kind: str = L1,
    delta_prime: float = 1.0,
    layer: str = "tensor",
) -> QtReport:
    """Quantize directly at n bits and via b-bit quantize + truncate; compare.

    Along with the gap count this fills in the direct truncation error and,
    for L1, its factored form ``delta_prime * level_size * gap_count``.
    """
    if norm_kind not in NORM_KINDS:
        raise DomainError(f"unknown norm kind {norm_kind!r}")
    wn = np.asarray(wn, dtype=np.float64)
    cfg_n = QuantConfig(bits)
    cfg_b = QuantConfig(start_bits)
    if start_bits <= bits:
        raise PrecisionOrderError(
            f"start precision must exceed target, got {start_bits} <= {bits}"
        )

    q_direct = quantize(wn, cfg_n, scheme)
    q_start = quantize(wn, cfg_b, scheme)
    q_trunc = truncate(q_start, bits)

    gap_count = int(np.sum(q_direct.bins != q_trunc.bins))
    deq_direct = dequantize(q_direct)
    deq_trunc = dequantize(q_trunc)

    e_q = delta_prime * _distance(wn - deq_direct, norm_kind)
    e_t_direct = delta_prime * _distance(deq_trunc - deq_direct, norm_kind)
    e_t_factored = (
        delta_prime * cfg_n.level_size * gap_count if norm_kind == L1 else None
    )

    return QtReport(
        layer=layer,
        n=bits,
        b=start_bits,
        total_weights=int(wn.size),
        gap_count=gap_count,
        level_size=cfg_n.level_size,
        e_q=e_q,
        e_t_direct=e_t_direct,
        e_t_factored=e_t_factored,
        norm_kind=norm_kind,
    )


def surrogate_slope(bits: int) -> float:
    """Least-squares slope of the truncation-ready quantizer's surrogate.

    Fitted through the dequantized outputs across the quantizer's level
    grid ``k / (2**n - 1)``; the points are collinear with slope
    ``max_bin / (max_bin + 1)``, the same factor applied by
    :func:`ste_backward`.
    """
    cfg = QuantConfig(bits)
    x = np.arange(cfg.num_bins, dtype=np.float64) / cfg.max_bin
    y = dequantize(truncquant(x, cfg))
    xc = x - x.mean()
    return float(np.dot(xc, y - y.mean()) / np.dot(xc, xc))
