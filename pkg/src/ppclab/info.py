"""Leakage of the constraint through the channel output.

Everything here is about the pair ``(S, Y^n)`` with ``S = X^n H^T``:
the joint law ``p_{S,Y}``, the information density ``i(s; y)``, the exact
mutual information ``I(S; Y^n)``, Monte Carlo estimates of
``P(i(S; Y^n) > n gamma)`` and the bounded-difference (Azuma) bound on it.

Output words are indexed most-significant-coordinate first in base ``|Y|``
when a full table over ``Y^n`` is built.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable

import numpy as np
from scipy.special import logsumexp
from scipy.stats import binomtest

from .channel import concentration_constants, output_marginal, transmit
from .ensemble import (
    ParityCheckEnsemble,
    _syndrome_index,
    sample_syndrome_and_word,
    syndrome_distribution,
)
from .gf2 import BitMatrix, span_words, unpack_words

__all__ = [
    "ProbabilityEstimate",
    "LeakageReport",
    "GammaProfile",
    "joint_sy_table",
    "joint_sy_probability",
    "log2_joint_sy",
    "info_density",
    "info_density_of_pairs",
    "exact_leakage",
    "sample_info_density",
    "estimate_P_A",
    "p_a_from_samples",
    "azuma_bound",
    "gamma_star_profile",
    "lipschitz_gap",
    "wilson_interval",
]

_LN2 = math.log(2.0)
_PRIMAL_MAX_CELLS = 1 << 21
_DUAL_MAX_WORK = 2 * 10**10
_MAX_COSET_DIM = 24


@dataclass(frozen=True)
class ProbabilityEstimate:
    """Monte Carlo probability with a Wilson 95% interval."""

    p: float
    low: float
    high: float
    count: int
    trials: int

    @property
    def half_width(self) -> float:
        return 0.5 * (self.high - self.low)


@dataclass
class LeakageReport:
    n: int
    r: int
    matrix_kind: str
    exact_I_SY: float | None = None
    per_n_rate_penalty: float | None = None
    gamma: float | None = None
    empirical_P_A: float | None = None
    P_A_half_width: float | None = None
    azuma_bound: float | None = None
    extra: dict = field(default_factory=dict)

    CSV_FIELDS = ("n", "r", "matrix_kind", "exact_I_SY", "per_n_rate_penalty",
                  "gamma", "empirical_P_A", "P_A_half_width", "azuma_bound")

    def to_row(self) -> dict:
        return {k: getattr(self, k) for k in self.CSV_FIELDS}

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def wilson_interval(count: int, trials: int, level: float = 0.95) -> ProbabilityEstimate:
    ci = binomtest(int(count), int(trials)).proportion_ci(confidence_level=level, method="wilson")
    return ProbabilityEstimate(count / trials, float(ci.low), float(ci.high), int(count), int(trials))


# ---------------------------------------------------------------------------
# exact joint tables
# ---------------------------------------------------------------------------


def _msb_digits(count: int, n: int, base: int, start: int = 0) -> np.ndarray:
    idx = np.arange(start, start + count, dtype=np.int64)
    powers = base ** np.arange(n - 1, -1, -1, dtype=np.int64)
    return ((idx[:, None] // powers) % base).astype(np.intp)


def _log_tn(ens: ParityCheckEnsemble, y: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        lt = np.log(output_marginal(ens.channel))
    return lt[y].sum(axis=-1)


def _primal_table(ens: ParityCheckEnsemble) -> np.ndarray:
    n, ny = ens.n, ens.channel.output_alphabet_size
    table = np.ones((1, 1))
    for _ in range(n):
        table = np.kron(table, ens.channel.joint)
    x_bits = _msb_digits(1 << n, n, 2)
    syn = _packed_syndromes_of_bits(ens.h, x_bits)
    out = np.zeros((1 << ens.r, ny**n))
    np.add.at(out, syn, table)
    return out


def _packed_syndromes_of_bits(h: BitMatrix, bits: np.ndarray) -> np.ndarray:
    if h.nrows == 0:
        return np.zeros(bits.shape[0], dtype=np.int64)
    hm = h.to_array().T.astype(np.int64)
    s_bits = (bits.astype(np.int64) @ hm) & 1
    return s_bits @ (1 << np.arange(h.nrows, dtype=np.int64))


def _fwht(a: np.ndarray) -> np.ndarray:
    """Unnormalised Walsh-Hadamard transform along the last axis."""
    a = a.copy()
    m = a.shape[-1]
    lead = a.shape[:-1]
    h = 1
    while h < m:
        v = a.reshape(lead + (m // (2 * h), 2, h))
        x, y = v[..., 0, :].copy(), v[..., 1, :]
        v[..., 0, :] += y
        v[..., 1, :] = x - y
        h *= 2
    return a


def _dual_chunks(ens: ParityCheckEnsemble, chunk: int):
    """Yield ``(y_digits, p(s, y))`` blocks using the character expansion.

    ``1{x H^T = s} = 2^-r sum_v (-1)^{v.(s + x H^T)}`` turns the coset sum
    into a product over coordinates for each ``v``, followed by a fast
    Walsh-Hadamard transform over ``v``.
    """
    n, r, ny = ens.n, ens.r, ens.channel.output_alphabet_size
    joint = ens.channel.joint
    v_bits = _msb_digits(1 << r, r, 2)[:, ::-1]  # bit j of v is check j
    signs = 1.0 - 2.0 * ((v_bits.astype(np.int64) @ ens.h.to_array().astype(np.int64)) & 1)
    total = ny**n
    for start in range(0, total, chunk):
        y = _msb_digits(min(chunk, total - start), n, ny, start)
        a0 = joint[0][y]
        a1 = joint[1][y]
        prods = np.prod(a0[:, None, :] + signs[None, :, :] * a1[:, None, :], axis=2)
        yield y, _fwht(prods) / (1 << r)


def _use_primal(ens: ParityCheckEnsemble) -> bool:
    ny = ens.channel.output_alphabet_size
    return (1 << ens.n) * ny**ens.n <= _PRIMAL_MAX_CELLS


def joint_sy_table(ens: ParityCheckEnsemble, method: str = "auto") -> np.ndarray:
    """Full ``p_{S,Y}`` table, shape ``(2^r, |Y|^n)``.

    ``method="primal"`` sums ``q^n w^n`` over all words; ``"dual"`` uses the
    Walsh-Hadamard form; ``"auto"`` takes primal when the word table is small.
    """
    if method == "auto":
        method = "primal" if _use_primal(ens) else "dual"
    if method == "primal":
        if not _use_primal(ens):
            raise ValueError("word table too large for the primal method")
        return _primal_table(ens)
    if method == "dual":
        _check_dual(ens)
        parts = [p for _, p in _dual_chunks(ens, _dual_chunk_size(ens))]
        return np.clip(np.concatenate(parts, axis=0).T, 0.0, None)
    raise ValueError(f"unknown method {method!r}")


def _dual_chunk_size(ens: ParityCheckEnsemble) -> int:
    return max(1, (1 << 24) // ((1 << ens.r) * max(ens.n, 1)))


def _check_dual(ens: ParityCheckEnsemble):
    ny = ens.channel.output_alphabet_size
    work = ny**ens.n * (1 << ens.r) * max(ens.n, 1)
    if ens.r > 20 or work > _DUAL_MAX_WORK:
        raise ValueError(
            f"exact enumeration infeasible (n = {ens.n}, r = {ens.r}, |Y| = {ny}); "
            "use estimate_P_A / sample_info_density for Monte Carlo estimates"
        )


# ---------------------------------------------------------------------------
# pointwise quantities
# ---------------------------------------------------------------------------


def _kernel_bits(ens: ParityCheckEnsemble) -> np.ndarray:
    if ens.coset_dim > _MAX_COSET_DIM:
        raise ValueError(f"coset dimension {ens.coset_dim} exceeds {_MAX_COSET_DIM}")
    return unpack_words(span_words(ens.nullspace), ens.n) if ens.n <= 62 else _span_bits(ens)


def _span_bits(ens: ParityCheckEnsemble) -> np.ndarray:
    words = np.zeros((1, ens.n), dtype=np.uint8)
    for v in ens.nullspace:
        words = np.concatenate([words, words ^ v])
    return words


def log2_joint_sy(ens: ParityCheckEnsemble, x, y, chunk: int = 1 << 22) -> np.ndarray:
    """``log2 p_{S,Y}(x H^T, y)`` for batches of words ``x`` and outputs ``y``.

    Uses ``x`` itself as coset representative:
    ``p(s, y) = sum_{k in K_0} q^n(x + k) w^n(y | x + k)``.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.uint8))
    y = np.atleast_2d(np.asarray(y, dtype=np.intp))
    kern = _kernel_bits(ens)
    with np.errstate(divide="ignore"):
        la = np.log(ens.channel.joint)
    out = np.empty(x.shape[0])
    step = max(1, chunk // (kern.shape[0] * max(ens.n, 1)))
    for lo in range(0, x.shape[0], step):
        xs = x[lo:lo + step, None, :] ^ kern[None, :, :]
        terms = la[xs, y[lo:lo + step, None, :]].sum(axis=2)
        out[lo:lo + step] = logsumexp(terms, axis=1)
    return out / _LN2


def joint_sy_probability(ens: ParityCheckEnsemble, s, y) -> float:
    """``p_{S,Y}(s, y)`` as a coset sum around a representative of ``K_s``."""
    y = np.asarray(y, dtype=np.intp).ravel()
    if y.size != ens.n:
        raise ValueError("output word has wrong length")
    try:
        rep = ens.coset_rep(s)
    except ValueError:
        return 0.0
    return float(2.0 ** log2_joint_sy(ens, rep[None, :], y[None, :])[0])


def info_density(ens: ParityCheckEnsemble, s, y) -> float:
    """``i(s; y) = log2 p_{S,Y}(s, y) / (p_S(s) t^n(y))``."""
    y = np.asarray(y, dtype=np.intp).ravel()
    p_s = ens._p_s[_syndrome_index(s, ens.r)]
    lt = _log_tn(ens, y) / _LN2
    if p_s <= 0 or not np.isfinite(lt):
        raise ValueError("information density undefined: zero marginal probability")
    return float(math.log2(joint_sy_probability(ens, s, y)) - math.log2(p_s) - lt)


def info_density_of_pairs(ens: ParityCheckEnsemble, x, y) -> np.ndarray:
    """``f(x, y) = i(x H^T; y)`` for batches of channel input/output pairs."""
    x = np.atleast_2d(np.asarray(x, dtype=np.uint8))
    y = np.atleast_2d(np.asarray(y, dtype=np.intp))
    s = _packed_syndromes_of_bits(ens.h, x)
    with np.errstate(divide="ignore"):
        lps = np.log2(ens._p_s[s])
    return log2_joint_sy(ens, x, y) - lps - _log_tn(ens, y) / _LN2


def exact_leakage(ens: ParityCheckEnsemble, method: str = "auto") -> float:
    """Exact ``I(S; Y^n)`` in bits by summing over every ``(s, y)``."""
    if ens.r == 0:
        return 0.0
    p_s = syndrome_distribution(ens)
    live = p_s > 0
    with np.errstate(divide="ignore"):
        lps = np.log2(p_s)
    if method == "auto":
        method = "primal" if _use_primal(ens) else "dual"
    if method == "primal":
        ny = ens.channel.output_alphabet_size
        blocks = [(_msb_digits(ny**ens.n, ens.n, ny), joint_sy_table(ens, "primal").T)]
    elif method == "dual":
        _check_dual(ens)
        blocks = _dual_chunks(ens, _dual_chunk_size(ens))
    else:
        raise ValueError(f"unknown method {method!r}")
    total = 0.0
    for y, p in blocks:
        p = np.clip(p[:, live], 0.0, None)
        lt = _log_tn(ens, y)[:, None] / _LN2
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = p * (np.log2(p) - lps[live][None, :] - lt)
        total += float(np.where(p > 0, terms, 0.0).sum())
    return max(total, 0.0)


# ---------------------------------------------------------------------------
# Monte Carlo
# ---------------------------------------------------------------------------


def sample_info_density(ens: ParityCheckEnsemble, trials: int, rng: np.random.Generator,
                        batch: int = 1 << 14) -> np.ndarray:
    """Samples of ``i(S; Y^n)`` with ``(S, X) ~ p_S q_S`` and ``Y ~ w^n(.|X)``."""
    out = np.empty(trials)
    for lo in range(0, trials, batch):
        m = min(batch, trials - lo)
        _, x = sample_syndrome_and_word(ens, rng, m)
        y = transmit(ens.channel, x, rng)
        out[lo:lo + m] = info_density_of_pairs(ens, x, y)
    return out


def p_a_from_samples(samples: np.ndarray, n: int, gamma: float) -> ProbabilityEstimate:
    hits = int(np.count_nonzero(np.asarray(samples) > n * gamma))
    return wilson_interval(hits, len(samples))


def estimate_P_A(ens: ParityCheckEnsemble, gamma: float, trials: int,
                 rng: np.random.Generator) -> ProbabilityEstimate:
    """Monte Carlo ``P(i(S; Y^n) > n gamma)`` with a Wilson 95% interval."""
    if trials < 1:
        raise ValueError("trials must be positive")
    return p_a_from_samples(sample_info_density(ens, trials, rng), ens.n, gamma)


def azuma_bound(n: int, eps: float, d: float) -> float:
    """``exp(-2 n eps^2 / d)`` clamped to ``[0, 1]``."""
    if eps < 0:
        raise ValueError("eps must be non-negative")
    if eps == 0:
        return 1.0
    if d <= 0:
        return 0.0
    return float(min(1.0, max(0.0, math.exp(-2.0 * n * eps * eps / d))))


@dataclass
class GammaProfile:
    rows: list[dict]

    @property
    def penalties(self) -> list[float]:
        return [row["penalty"] for row in self.rows]

    @property
    def strictly_decreasing(self) -> bool:
        p = self.penalties
        return all(b < a for a, b in zip(p, p[1:]))

    @property
    def non_increasing(self) -> bool:
        p = self.penalties
        return all(b <= a + 1e-12 for a, b in zip(p, p[1:]))


def gamma_star_profile(designs: Iterable[tuple[int, ParityCheckEnsemble]]) -> GammaProfile:
    """Per-blocklength rate penalty ``I(S; Y^n) / n``; trends are reported, not assumed."""
    rows = []
    for n, ens in designs:
        if n != ens.n:
            raise ValueError(f"declared n = {n} but ensemble has n = {ens.n}")
        leak = exact_leakage(ens)
        rows.append({"n": n, "r": ens.r, "kind": ens.kind, "I_SY": leak, "penalty": leak / n})
    return GammaProfile(rows)


def lipschitz_gap(ens: ParityCheckEnsemble) -> tuple[float, float]:
    """Largest change of ``f(x, y) = i(x H^T; y)`` under a one-coordinate edit.

    Only pairs with ``q^n(x) w^n(y|x) > 0`` on both sides count.  Returns
    ``(max_change, d_i)``.
    """
    n, ny = ens.n, ens.channel.output_alphabet_size
    if (1 << n) * ny**n > 1 << 18:
        raise ValueError("exhaustive Lipschitz check needs n <= 6")
    table = joint_sy_table(ens, "primal")
    p_s = syndrome_distribution(ens)
    x_bits = _msb_digits(1 << n, n, 2)
    ys = _msb_digits(ny**n, n, ny)
    s = _packed_syndromes_of_bits(ens.h, x_bits)
    with np.errstate(divide="ignore"):
        lj = np.log(ens.channel.joint)
        feas = np.isfinite(lj[x_bits[:, None, :], ys[None, :, :]].sum(axis=2))
        f = np.log2(table[s]) - np.log2(p_s[s])[:, None] - (_log_tn(ens, ys) / _LN2)[None, :]
    f = np.where(feas, f, np.nan)
    cube = f.reshape((2,) * n + (ny,) * n)
    worst = 0.0
    for i in range(n):
        moved = np.moveaxis(cube, (i, n + i), (-2, -1))
        flat = moved.reshape(moved.shape[:-2] + (2 * ny,))
        cnt = np.sum(~np.isnan(flat), axis=-1)
        ok = cnt >= 2
        if not ok.any():
            continue
        with np.errstate(invalid="ignore"):
            spread = np.nanmax(flat[ok], axis=-1) - np.nanmin(flat[ok], axis=-1)
        worst = max(worst, float(spread.max()))
    return worst, concentration_constants(ens.channel).d_i
