"""Normalization of weight tensors onto the [0, 1] analysis domain.

All quantizers in this package operate on values in [0, 1]; the two maps
here carry raw weights into that domain and back.  ``dorefa-tanh`` is the
tanh compression used by DoReFa-style weight quantizers, ``minmax`` is a
plain affine map (handy when a tensor already lives in [0, 1]).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, DomainError

DOREFA_TANH = "dorefa-tanh"
MINMAX = "minmax"
NORM_MODES = (DOREFA_TANH, MINMAX)


def _as_float32(x: float) -> float:
    # norm parameters are stored as f32 on disk; round at creation time so
    # file round trips are bit-exact
    return float(np.float32(x))


@dataclass(frozen=True)
class NormalizationParams:
    """Invertible map between the raw weight domain and normalized [0, 1].

    ``delta_prime`` converts distances in the normalized domain back into
    weight-domain distances: one quantization level of size ``1/(2**n - 1)``
    spans ``delta_prime / (2**n - 1)`` in the weight domain.

    ``aux`` holds the mode-specific constants needed for inversion:
    ``(max |tanh(w)|, 0)`` for dorefa-tanh, ``(min, max)`` for minmax.
    """

    mode: str
    delta_prime: float
    aux: tuple[float, float]

    def __post_init__(self):
        if self.mode not in NORM_MODES:
            raise DomainError(f"unknown normalization mode {self.mode!r}")
        object.__setattr__(self, "delta_prime", _as_float32(self.delta_prime))
        object.__setattr__(
            self, "aux", (_as_float32(self.aux[0]), _as_float32(self.aux[1]))
        )


def normalize(w, mode: str = DOREFA_TANH) -> tuple[np.ndarray, NormalizationParams]:
    """Map a weight tensor into [0, 1]; returns the result and the inverse map.

    dorefa-tanh: ``w -> tanh(w) / (2 max|tanh(w)|) + 0.5``; the scaling
    factor is ``2 E(|tanh(w)| / max|tanh(w)|)``, i.e. twice the mean
    magnitude of the tanh-compressed weights.

    minmax: affine map of ``[min(w), max(w)]`` onto [0, 1]; the scaling
    factor is the range width.
    """
    w = np.asarray(w, dtype=np.float64)
    if w.size == 0:
        raise DomainError("cannot normalize an empty tensor")
    if not np.all(np.isfinite(w)):
        raise DomainError("cannot normalize non-finite values")

    if mode == MINMAX:
        lo = float(w.min())
        hi = float(w.max())
        if hi <= lo:
            raise DegenerateInputError(
                f"minmax normalization needs a nonzero range, got [{lo}, {hi}]"
            )
        wn = (w - lo) / (hi - lo)
        params = NormalizationParams(MINMAX, hi - lo, (lo, hi))
    elif mode == DOREFA_TANH:
        t = np.tanh(w)
        max_tanh = float(np.abs(t).max())
        if max_tanh == 0.0:
            raise DegenerateInputError(
                "dorefa-tanh normalization is undefined for an all-zero tensor"
            )
        symmetric = t / max_tanh  # in [-1, 1]
        wn = symmetric / 2.0 + 0.5
        delta_prime = 2.0 * float(np.mean(np.abs(symmetric)))
        params = NormalizationParams(DOREFA_TANH, delta_prime, (max_tanh, 0.0))
    else:
        raise DomainError(f"unknown normalization mode {mode!r}")

    return np.clip(wn, 0.0, 1.0), params


def denormalize(wn, params: NormalizationParams) -> np.ndarray:
    """Invert :func:`normalize`; input must lie in [0, 1]."""
    wn = np.asarray(wn, dtype=np.float64)
    if wn.size and (wn.min() < 0.0 or wn.max() > 1.0):
        raise DomainError("denormalize input must lie in [0, 1]")

    if params.mode == MINMAX:
        lo, hi = params.aux
        return lo + wn * (hi - lo)
    # dorefa-tanh; the inverse loses precision once tanh saturates, i.e. for
    # |w| large enough that max|tanh(w)| rounds to 1
    max_tanh = params.aux[0]
    return np.arctanh((2.0 * wn - 1.0) * max_tanh)
