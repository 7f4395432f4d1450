"""Polar transform, frozen-set design and polar parity-check matrices.

Convention: ``x = u G`` with ``G = F^{(x) ell}``, ``F = [[1, 0], [1, 1]]``,
row vectors, no bit reversal.  ``u[0]`` is the first bit a successive
decoder sees.  Index sets are 0-based.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .channel import BinaryInputDMC, entropy, transmit
from .gf2 import KERNEL, BitMatrix, column_submatrix, kron_power

__all__ = [
    "DEFAULT_BETA",
    "PolarDesign",
    "polar_transform_matrix",
    "polar_encode",
    "bec_exact_entropies",
    "exhaustive_entropies",
    "monte_carlo_entropies",
    "frozen_threshold",
    "select_frozen_set",
    "select_frozen_set_for_rate",
    "polar_parity_matrix",
    "polar_generator_matrix",
    "leakage_upper_bound",
    "build_design",
]

DEFAULT_BETA = 0.25

# Exhaustive construction enumerates the full (u, y) table.
_EXHAUSTIVE_MAX_CELLS = 1 << 21


@dataclass(frozen=True)
class PolarDesign:
    """Per-index conditional entropies together with the sets derived from them.

    ``class_L``/``class_M``/``class_H`` split ``range(n)`` by entropy at
    ``threshold`` and ``1 - threshold``.  Under the threshold rule the frozen
    set is ``class_M | class_H``.
    """

    ell: int
    cond_entropies: tuple[float, ...]
    beta: float
    threshold: float
    frozen: tuple[int, ...]
    class_M: tuple[int, ...]
    class_H: tuple[int, ...]
    class_L: tuple[int, ...]
    rule: str = "threshold"
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return 1 << self.ell

    @property
    def info(self) -> tuple[int, ...]:
        fz = set(self.frozen)
        return tuple(i for i in range(self.n) if i not in fz)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "PolarDesign":
        d = json.loads(text)
        for key in ("cond_entropies", "frozen", "class_M", "class_H", "class_L"):
            d[key] = tuple(d[key])
        return cls(**d)


def polar_transform_matrix(ell: int) -> BitMatrix:
    return kron_power(KERNEL, ell)


def polar_encode(ell: int, u) -> np.ndarray:
    """``u G`` over GF(2) along the last axis (batched); its own inverse."""
    u = np.asarray(u, dtype=np.uint8)
    n = 1 << ell
    if u.shape[-1] != n:
        raise ValueError(f"expected length {n}, got {u.shape[-1]}")
    x = u.copy()
    lead = x.shape[:-1]
    half = n // 2
    while half >= 1:
        v = x.reshape(lead + (n // (2 * half), 2, half))
        v[..., 0, :] ^= v[..., 1, :]
        half //= 2
    return x


def bec_exact_entropies(ell: int, erasure: float) -> np.ndarray:
    """``H(U_i | Y^n, U^{i-1})`` on the BEC with uniform inputs.

    Each synthetic channel is again an erasure channel; a channel with
    erasure probability ``z`` splits into ``2z - z^2`` (first) and ``z^2``.
    """
    if not 0 <= erasure <= 1:
        raise ValueError("erasure probability must lie in [0, 1]")
    z = np.array([float(erasure)])
    for _ in range(ell):
        z = np.stack([2 * z - z * z, z * z], axis=1).ravel()
    return z


def _msb_bits(n: int) -> np.ndarray:
    shifts = np.arange(n - 1, -1, -1)
    return ((np.arange(1 << n)[:, None] >> shifts) & 1).astype(np.uint8)


def exhaustive_entropies(ell: int, ch: BinaryInputDMC) -> np.ndarray:
    """Exact ``H(U_i | Y^n, U^{i-1})`` for ``U = X G`` and ``X ~ q^n``.

    Builds the whole ``p(u, y)`` table, so only tiny blocklengths qualify
    (``n <= 10`` for binary outputs, ``n <= 8`` for ternary).
    """
    n = 1 << ell
    ny = ch.output_alphabet_size
    if (1 << n) * ny**n > _EXHAUSTIVE_MAX_CELLS:
        raise ValueError(
            f"exhaustive construction too large at n = {n}, |Y| = {ny}; "
            "use monte_carlo_entropies"
        )
    a = ch.joint
    table = np.ones((1, 1))
    for _ in range(n):
        table = np.kron(table, a)
    # rows are x (MSB = first coordinate); permute to rows indexed by u
    u_bits = polar_encode(ell, _msb_bits(n))
    u_idx = u_bits.astype(np.int64) @ (1 << np.arange(n - 1, -1, -1))
    p_u = np.empty_like(table)
    p_u[u_idx] = table
    prefix = np.empty(n + 1)
    for i in range(n + 1):
        marg = p_u.reshape(1 << i, 1 << (n - i), -1).sum(axis=1)
        prefix[i] = entropy(marg)
    return np.clip(np.diff(prefix), 0.0, 1.0)


def _f(a, b):
    with np.errstate(invalid="ignore", over="ignore"):
        core = np.sign(a) * np.sign(b) * np.minimum(np.abs(a), np.abs(b))
        corr = np.log1p(np.exp(-np.abs(a + b))) - np.log1p(np.exp(-np.abs(a - b)))
    return core + np.where(np.isfinite(corr), corr, 0.0)


def _sc_posteriors(llr, u):
    """Posterior LLR of each ``u_i`` given the outputs and the true ``u^{i-1}``."""
    m = llr.shape[1]
    if m == 1:
        return llr
    h = m // 2
    a, b = llr[:, :h], llr[:, h:]
    ua, ub = u[:, :h], u[:, h:]
    la = _sc_posteriors(_f(a, b), ua)
    xa = polar_encode(int(math.log2(h)), ua)
    with np.errstate(invalid="ignore"):
        lb = _sc_posteriors(b + (1.0 - 2.0 * xa) * a, ub)
    return np.concatenate([la, lb], axis=1)


def _llr_entropy(llr):
    """Binary entropy (bits) of the posterior with log-likelihood ratio ``llr``."""
    a = np.abs(llr)
    with np.errstate(invalid="ignore", over="ignore"):
        e = np.exp(-a)
        h = (np.log1p(e) + a * e / (1.0 + e)) / math.log(2)
    return np.where(np.isinf(a), 0.0, h)


def monte_carlo_entropies(
    ell: int,
    ch: BinaryInputDMC,
    trials: int,
    rng: np.random.Generator,
    batch: int = 8192,
):
    """Monte Carlo estimate of ``H(U_i | Y^n, U^{i-1})`` for uniform inputs.

    Each trial draws ``u`` uniformly, sends ``u G`` through the channel and
    runs the successive-cancellation recursion with the true past bits; the
    binary entropy of each posterior is an unbiased sample.

    Returns
    -------
    mean, stderr : ndarray
        Per-index estimates and their standard errors.
    """
    if not ch.is_uniform:
        raise ValueError("Monte Carlo construction supports uniform q only")
    if trials < 1:
        raise ValueError("trials must be positive")

    n = 1 << ell
    with np.errstate(divide="ignore"):
        chan_llr = np.log(ch.w[0]) - np.log(ch.w[1])
    s1 = np.zeros(n)
    s2 = np.zeros(n)
    done = 0
    while done < trials:
        t = min(batch, trials - done)
        u = rng.integers(0, 2, size=(t, n), dtype=np.uint8)
        y = transmit(ch, polar_encode(ell, u), rng)
        h = _llr_entropy(_sc_posteriors(chan_llr[y], u))
        s1 += h.sum(axis=0)
        s2 += (h * h).sum(axis=0)
        done += t
    mean = s1 / trials
    if trials > 1:
        var = np.maximum(s2 - trials * mean * mean, 0.0) / (trials - 1)
        stderr = np.sqrt(var / trials)
    else:
        stderr = np.full(n, np.inf)
    return np.clip(mean, 0.0, 1.0), stderr


def frozen_threshold(n: int, beta: float) -> float:
    return 2.0 ** (-(n**beta))


def _classes(h: np.ndarray, thr: float):
    low = tuple(int(i) for i in np.flatnonzero(h <= thr))
    mid = tuple(int(i) for i in np.flatnonzero((h > thr) & (h <= 1 - thr)))
    high = tuple(int(i) for i in np.flatnonzero(h > 1 - thr))
    return low, mid, high


def select_frozen_set(entropies, beta: float = DEFAULT_BETA, meta: dict | None = None) -> PolarDesign:
    """Freeze every index whose conditional entropy exceeds ``2^(-n^beta)``."""
    if not 0 < beta < 0.5:
        raise ValueError("beta must lie in (0, 1/2)")
    h = np.asarray(entropies, dtype=float)
    n = h.size
    ell = n.bit_length() - 1
    if n != 1 << ell:
        raise ValueError("number of entropies must be a power of two")
    thr = frozen_threshold(n, beta)
    low, mid, high = _classes(h, thr)
    frozen = tuple(int(i) for i in np.flatnonzero(h > thr))
    return PolarDesign(ell, tuple(map(float, h)), beta, thr, frozen, mid, high, low,
                       "threshold", dict(meta or {}))


def select_frozen_set_for_rate(
    entropies, rate: float, beta: float = DEFAULT_BETA, meta: dict | None = None
) -> PolarDesign:
    """Keep the ``round(n R)`` lowest-entropy indices free and freeze the rest.

    This is a convenience mode for building ordinary polar codes of a given
    rate; the design records ``rule="rate"``.
    """
    h = np.asarray(entropies, dtype=float)
    n = h.size
    ell = n.bit_length() - 1
    k = int(math.floor(n * rate + 0.5))
    if not 0 <= k <= n:
        raise ValueError(f"rate {rate} gives {k} free indices out of {n}")
    order = np.argsort(h, kind="stable")
    frozen = tuple(sorted(int(i) for i in order[k:]))
    thr = frozen_threshold(n, beta)
    low, mid, high = _classes(h, thr)
    info = dict(meta or {})
    info["non_threshold_rule"] = True
    return PolarDesign(ell, tuple(map(float, h)), beta, thr, frozen, mid, high, low, "rate", info)


def polar_parity_matrix(design: PolarDesign) -> BitMatrix:
    """``H`` whose rows are the frozen columns of ``G^{-1} = G``.

    ``x H^T`` then equals the frozen part of ``u = x G``.
    """
    g = polar_transform_matrix(design.ell)
    return column_submatrix(g, design.frozen).T


def polar_generator_matrix(design: PolarDesign) -> BitMatrix:
    """Rows of ``G`` at the free indices: the ordinary polar code (frozen bits 0)."""
    g = polar_transform_matrix(design.ell)
    return BitMatrix(tuple(g.rows[i] for i in design.info), g.ncols)


def leakage_upper_bound(design: PolarDesign) -> float:
    """``|M & F| + sum over (H & F) of (1 - entropy)``, an upper bound on ``I(U_F; Y^n)``."""
    fz = set(design.frozen)
    h = design.cond_entropies
    mid = sum(1 for i in design.class_M if i in fz)
    high = sum(1.0 - h[i] for i in design.class_H if i in fz)
    return float(mid + high)


def build_design(cfg: dict, ch: BinaryInputDMC, rng: np.random.Generator | None = None) -> PolarDesign:
    """Construct a design from ``{"ell", "beta", "method", "trials", "rate"}``.

    ``method`` is ``"bec-exact"``, ``"exhaustive"`` or ``"monte-carlo"``; a
    ``"rate"`` key switches to rate-targeted selection.
    """
    ell = int(cfg["ell"])
    beta = float(cfg.get("beta", DEFAULT_BETA))
    method = cfg.get("method", "bec-exact" if ch.config.get("kind") == "bec" else "exhaustive")
    meta = {"method": method, "channel": ch.name}
    if method == "bec-exact":
        if ch.config.get("kind") != "bec" or not ch.is_uniform:
            raise ValueError("bec-exact needs a BEC with uniform q")
        h = bec_exact_entropies(ell, float(ch.config["param"]))
    elif method == "exhaustive":
        h = exhaustive_entropies(ell, ch)
    elif method == "monte-carlo":
        if rng is None:
            raise ValueError("monte-carlo construction needs an rng")
        trials = int(cfg.get("trials", 10000))
        h, se = monte_carlo_entropies(ell, ch, trials, rng)
        meta["trials"] = trials
        meta["stderr"] = [float(v) for v in se]
    else:
        raise ValueError(f"unknown design method {method!r}")
    if cfg.get("rate") is not None:
        return select_frozen_set_for_rate(h, float(cfg["rate"]), beta, meta)
    return select_frozen_set(h, beta, meta)
