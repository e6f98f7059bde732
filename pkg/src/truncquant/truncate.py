"""Precision lowering by discarding least-significant bits of the bins.

Truncation operates purely on the integer bins; it never consults the
float domain.  Normalization parameters and the scheme tag are carried
over unchanged so the result stays self-describing.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from .errors import DomainError, PrecisionOrderError
from .quantize import QuantizedTensor, bin_dtype


def truncate(q: QuantizedTensor, target_bits: int) -> QuantizedTensor:
    """Drop to ``target_bits`` by right-shifting the bins.

    ``target_bits == q.bits`` is a no-op; raising precision is not possible.
    """
    if target_bits < 1:
        raise DomainError(f"target bits must be >= 1, got {target_bits}")
    if target_bits > q.bits:
        raise PrecisionOrderError(
            f"cannot truncate {q.bits}-bit bins to {target_bits} bits"
        )
    if target_bits == q.bits:
        return q
    shift = q.bits - target_bits
    bins = (q.bins.astype(np.uint32) >> shift).astype(bin_dtype(target_bits))
    return QuantizedTensor(bins, q.scheme, target_bits, q.norm)


def truncate_chain(q: QuantizedTensor, path: Sequence[int]) -> QuantizedTensor:
    """Fold :func:`truncate` along a strictly decreasing precision path."""
    path = list(path)
    if not path:
        return q
    if path[0] > q.bits:
        raise PrecisionOrderError(
            f"chain head {path[0]} exceeds source precision {q.bits}"
        )
    for prev, nxt in zip(path, path[1:]):
        if nxt >= prev:
            raise PrecisionOrderError(
                f"chain must be strictly decreasing, got {prev} -> {nxt}"
            )
    for bits in path:
        q = truncate(q, bits)
    return q
