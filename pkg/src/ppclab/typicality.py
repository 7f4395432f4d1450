"""Joint typicality and the decoders built on it."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import SUPPORT_TOL, BinaryInputDMC
from .ensemble import SampledCode

__all__ = [
    "DEFAULT_EPS",
    "DecoderOutput",
    "joint_type",
    "joint_counts",
    "typical_mask",
    "is_jointly_typical",
    "jt_decode",
    "decision_from_mask",
    "ml_decode",
]

DEFAULT_EPS = 0.1

# Slack on the typicality inequality so that exact boundary cases survive
# floating-point rounding.
_BOUNDARY_TOL = 1e-12


@dataclass(frozen=True)
class DecoderOutput:
    """Decoder decision: a 1-based message index, or ``None`` for failure."""

    index: int | None
    typical_count: int = -1

    @property
    def failed(self) -> bool:
        return self.index is None


def joint_counts(x, y, ny: int) -> np.ndarray:
    """Occurrence counts of each ``(x, y)`` pair along the last axis.

    Returns an array of shape ``x.shape[:-1] + (2, ny)``.
    """
    x = np.asarray(x, dtype=np.intp)
    y = np.asarray(y, dtype=np.intp)
    x, y = np.broadcast_arrays(x, y)
    cell = x * ny + y
    onehot = cell[..., None] == np.arange(2 * ny)
    return onehot.sum(axis=-2).reshape(x.shape[:-1] + (2, ny))


def joint_type(x, y, ny: int | None = None) -> np.ndarray:
    """Empirical joint distribution ``pi(x, y | x^n, y^n)`` as a ``(2, |Y|)`` array."""
    x = np.asarray(x)
    y = np.asarray(y)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-D words of equal length")
    if ny is None:
        ny = int(y.max()) + 1 if y.size else 1
    return joint_counts(x, y, ny) / x.size


def typical_mask(ch: BinaryInputDMC, eps: float, x, y) -> np.ndarray:
    """Vectorised typicality test along the last axis (broadcasting ``x``, ``y``)."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    x = np.asarray(x)
    n = x.shape[-1]
    counts = joint_counts(x, y, ch.output_alphabet_size)
    target = ch.joint
    dev = np.abs(counts - n * target)
    ok = dev <= eps * n * target + _BOUNDARY_TOL * n
    zero = target < SUPPORT_TOL
    # cells of zero mass must stay empty
    ok = np.where(zero, counts == 0, ok)
    return ok.all(axis=(-2, -1))


def is_jointly_typical(ch: BinaryInputDMC, eps: float, x, y) -> bool:
    x = np.asarray(x)
    y = np.asarray(y)
    if x.shape != y.shape:
        raise ValueError("x and y must have equal length")
    return bool(typical_mask(ch, eps, x, y))


def jt_decode(ch: BinaryInputDMC, eps: float, code: SampledCode | np.ndarray, y) -> DecoderOutput:
    """Return ``j`` if codeword ``j`` is the only one typical with ``y``.

    Every codeword is tested; there is no early exit.
    """
    words = code.codewords if isinstance(code, SampledCode) else np.asarray(code)
    return decision_from_mask(typical_mask(ch, eps, words, np.asarray(y)[None, :]))


def decision_from_mask(mask) -> DecoderOutput:
    """Unique-typical-codeword rule applied to a per-codeword typicality mask."""
    hits = np.flatnonzero(mask)
    if hits.size == 1:
        return DecoderOutput(int(hits[0]) + 1, 1)
    return DecoderOutput(None, int(hits.size))


def ml_decode(ch: BinaryInputDMC, code: SampledCode | np.ndarray, y) -> DecoderOutput:
    """Maximum-likelihood decision; ties and all-impossible outputs fail."""
    words = code.codewords if isinstance(code, SampledCode) else np.asarray(code)
    # score through joint counts so equal types give bit-identical scores
    counts = joint_counts(words, np.asarray(y)[None, :], ch.output_alphabet_size)
    with np.errstate(divide="ignore", invalid="ignore"):
        logw = np.log2(ch.w)
        terms = np.where(counts > 0, counts * logw, 0.0)
    ll = terms.sum(axis=(-2, -1))
    best = ll.max()
    if not np.isfinite(best):
        return DecoderOutput(None, 0)
    winners = np.flatnonzero(ll == best)
    if winners.size != 1:
        return DecoderOutput(None, int(winners.size))
    return DecoderOutput(int(winners[0]) + 1, 1)
