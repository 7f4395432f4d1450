"""Binary-input discrete memoryless channels and their single-letter quantities.

Outputs are integer labels ``0 .. |Y|-1``.  For the erasure channel the
labels are ``0 -> 0``, ``1 -> ?`` (erasure), ``2 -> 1``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SUPPORT_TOL",
    "BinaryInputDMC",
    "ChannelConstants",
    "bsc",
    "bec",
    "from_config",
    "entropy",
    "binary_entropy",
    "output_marginal",
    "mutual_information",
    "conditional_entropy_x_given_y",
    "concentration_constants",
    "transmit",
    "log_likelihood",
]

# Probabilities below this count as zero when taking supports.
SUPPORT_TOL = 1e-15


@dataclass(frozen=True, eq=False)
class BinaryInputDMC:
    """Channel ``w(y|x)`` with a designated input distribution ``q``.

    Parameters
    ----------
    w : array_like, shape (2, |Y|)
        Row ``x`` is the output distribution given input ``x``.
    q : array_like, shape (2,)
        Input distribution ``(q(0), q(1))``.
    name : str
        Label used in reports.
    """

    w: np.ndarray
    q: np.ndarray
    name: str = "matrix"
    config: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        w = np.array(self.w, dtype=float)
        q = np.array(self.q, dtype=float).ravel()
        if w.ndim != 2 or w.shape[0] != 2 or w.shape[1] < 1:
            raise ValueError(f"w must have shape (2, |Y|), got {w.shape}")
        if q.shape != (2,):
            raise ValueError("q must have two entries")
        if np.any(w < 0) or np.any(np.abs(w.sum(axis=1) - 1) > 1e-12):
            raise ValueError("each row of w must be a probability distribution")
        if np.any(q < 0) or abs(q.sum() - 1) > 1e-12:
            raise ValueError("q must be a probability distribution")
        w.setflags(write=False)
        q.setflags(write=False)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "q", q)

    @property
    def output_alphabet_size(self) -> int:
        return self.w.shape[1]

    @property
    def joint(self) -> np.ndarray:
        """``q(x) w(y|x)`` as a ``(2, |Y|)`` array."""
        return self.q[:, None] * self.w

    @property
    def is_uniform(self) -> bool:
        return bool(abs(self.q[0] - 0.5) < 1e-15)

    def with_input(self, q) -> "BinaryInputDMC":
        return BinaryInputDMC(self.w, q, self.name, dict(self.config, q=list(map(float, q))))

    def to_config(self) -> dict:
        cfg = dict(self.config)
        cfg.setdefault("kind", "matrix")
        cfg["q"] = [float(v) for v in self.q]
        if cfg["kind"] == "matrix":
            cfg["w"] = self.w.tolist()
        return cfg

    def __repr__(self) -> str:
        return f"BinaryInputDMC({self.name}, q={self.q.tolist()})"


@dataclass(frozen=True)
class ChannelConstants:
    """Support ratios and the bounded-difference constants derived from them."""

    beta_qw: float
    beta_q: float
    beta_t: float
    d_i: float
    d: float
    mutual_info: float
    cond_entropy_xy: float


def bsc(p: float, q=(0.5, 0.5)) -> BinaryInputDMC:
    """Binary symmetric channel with crossover probability ``p``."""
    if not 0 <= p <= 1:
        raise ValueError("p must lie in [0, 1]")
    w = [[1 - p, p], [p, 1 - p]]
    return BinaryInputDMC(w, q, f"BSC({p:g})", {"kind": "bsc", "param": p})


def bec(e: float, q=(0.5, 0.5)) -> BinaryInputDMC:
    """Binary erasure channel; output label 1 is the erasure."""
    if not 0 <= e <= 1:
        raise ValueError("e must lie in [0, 1]")
    w = [[1 - e, e, 0.0], [0.0, e, 1 - e]]
    return BinaryInputDMC(w, q, f"BEC({e:g})", {"kind": "bec", "param": e})


def from_config(cfg) -> BinaryInputDMC:
    """Build a channel from ``{"kind", "param", "q", "w"}`` (dict or JSON text)."""
    if isinstance(cfg, str):
        cfg = json.loads(cfg)
    kind = cfg.get("kind", "matrix")
    q = cfg.get("q", [0.5, 0.5])
    if kind == "bsc":
        return bsc(float(cfg["param"]), q)
    if kind == "bec":
        return bec(float(cfg["param"]), q)
    if kind == "matrix":
        return BinaryInputDMC(cfg["w"], q, "matrix", {"kind": "matrix"})
    raise ValueError(f"unknown channel kind {kind!r}")


def entropy(p) -> float:
    """Shannon entropy in bits of a probability vector (zeros ignored)."""
    p = np.asarray(p, dtype=float).ravel()
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


def binary_entropy(p: float) -> float:
    return entropy([p, 1 - p])


def output_marginal(ch: BinaryInputDMC) -> np.ndarray:
    return ch.q @ ch.w


def mutual_information(ch: BinaryInputDMC) -> float:
    """``I(X;Y) = H(Y) - H(Y|X)`` in bits."""
    h_y_given_x = sum(ch.q[x] * entropy(ch.w[x]) for x in (0, 1))
    return max(0.0, entropy(output_marginal(ch)) - h_y_given_x)


def conditional_entropy_x_given_y(ch: BinaryInputDMC) -> float:
    return max(0.0, entropy(ch.q) - mutual_information(ch))


def _support_ratio(p) -> float:
    p = np.asarray(p, dtype=float).ravel()
    p = p[p >= SUPPORT_TOL]
    return float(p.max() / p.min())


def concentration_constants(ch: BinaryInputDMC) -> ChannelConstants:
    """Max/min ratios over the supports of ``q w``, ``q`` and ``t``.

    ``d_i = log2(beta_qw * beta_q * beta_t)`` bounds the change of the
    information density when one channel use is altered; ``d = d_i**2``.
    """
    b_qw = _support_ratio(ch.joint)
    b_q = _support_ratio(ch.q)
    b_t = _support_ratio(output_marginal(ch))
    d_i = math.log2(b_qw * b_q * b_t)
    return ChannelConstants(
        beta_qw=b_qw,
        beta_q=b_q,
        beta_t=b_t,
        d_i=d_i,
        d=d_i * d_i,
        mutual_info=mutual_information(ch),
        cond_entropy_xy=conditional_entropy_x_given_y(ch),
    )


def transmit(ch: BinaryInputDMC, x, rng: np.random.Generator) -> np.ndarray:
    """Send each bit of ``x`` (any shape) through the channel independently."""
    x = np.asarray(x, dtype=np.intp)
    cdf = np.cumsum(ch.w, axis=1)
    cdf[:, -1] = 1.0
    u = rng.random(x.shape)
    y = (u[..., None] >= cdf[x][..., :-1]).sum(axis=-1)
    return y.astype(np.intp)


def log_likelihood(ch: BinaryInputDMC, x, y) -> np.ndarray | float:
    """``sum_i log2 w(y_i|x_i)`` along the last axis; ``-inf`` if impossible."""
    x = np.asarray(x, dtype=np.intp)
    y = np.asarray(y, dtype=np.intp)
    if x.shape[-1] != y.shape[-1]:
        raise ValueError("x and y must have equal length")
    with np.errstate(divide="ignore"):
        logw = np.log2(ch.w)
    out = logw[x, y].sum(axis=-1)
    return float(out) if np.ndim(out) == 0 else out
