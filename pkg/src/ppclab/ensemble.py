"""Random codes drawn under parity-check constraints.

The ensemble is fixed by a parity-check matrix ``H`` (``r x n``) and the
input distribution ``q`` of a channel.  A constraint ``S`` is drawn from
``p_S(s) = q^n(K_s)``, the ``q``-mass of the coset ``K_s = {x : x H^T = s}``,
and the codewords are then drawn i.i.d. from ``q^n`` restricted to ``K_S``.

Words and syndromes are packed into integers wherever an exhaustive table is
built: bit ``i`` of a word is coordinate ``i``, bit ``j`` of a syndrome is
check ``j``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, NamedTuple

import numpy as np

from .channel import BinaryInputDMC
from .gf2 import (
    BitMatrix,
    nullspace_basis,
    pack_rows,
    rank,
    rref,
    solve_coset_rep,
    span_words,
    syndromes,
    unpack,
    unpack_words,
)

__all__ = [
    "EXACT_MAX_N",
    "EXACT_MAX_COSET_DIM",
    "SamplingError",
    "SymmetricConstraint",
    "odd_even_constraint",
    "parity_constraint",
    "ParityCheckEnsemble",
    "WordDistribution",
    "SampledCode",
    "codebook_size",
    "packed_syndromes",
    "log_qn",
    "syndrome_distribution",
    "conditional_codeword_distribution",
    "sample_syndrome_and_word",
    "sample_constrained_code",
    "sample_unconstrained_code",
    "verify_marginal_recovery",
    "gallager_ldpc_matrix",
]

EXACT_MAX_N = 20
EXACT_MAX_COSET_DIM = 24
_MAX_REJECTION_TRIALS = 10**9


class SamplingError(RuntimeError):
    """A sampler could not produce the requested words."""


# ---------------------------------------------------------------------------
# Generic symmetric constraints
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SymmetricConstraint:
    """Indicator ``phi(s, x)`` over ``s in range(size)`` with weights ``alpha``.

    Symmetric means ``sum_s alpha[s] * phi(s, x) == 1`` for every word ``x``.
    """

    size: int
    phi: Callable[[int, np.ndarray], int]
    alpha: tuple[float, ...]

    def is_symmetric(self, n: int, tol: float = 1e-12) -> bool:
        """Exhaustively check the symmetry identity over all ``2^n`` words."""
        for word in range(1 << n):
            x = unpack(word, n)
            total = sum(a * self.phi(s, x) for s, a in enumerate(self.alpha))
            if abs(total - 1.0) > tol:
                return False
        return True


def odd_even_constraint() -> SymmetricConstraint:
    """Two constraints: ``s = 0`` keeps even-parity words, ``s = 1`` odd ones."""
    return SymmetricConstraint(2, lambda s, x: int(int(np.sum(x)) % 2 == s), (1.0, 1.0))


def parity_constraint(h: BitMatrix) -> SymmetricConstraint:
    """``phi(s, x) = 1`` iff the packed syndrome of ``x`` equals ``s``."""
    rows = np.array(h.rows, dtype=object)

    def phi(s: int, x: np.ndarray) -> int:
        word = int(pack_rows(x)[0]) if h.ncols else 0
        syn = 0
        for j, row in enumerate(rows):
            syn |= (bin(word & int(row)).count("1") & 1) << j
        return int(syn == s)

    return SymmetricConstraint(1 << h.nrows, phi, (1.0,) * (1 << h.nrows))


# ---------------------------------------------------------------------------
# Parity-check ensemble
# ---------------------------------------------------------------------------


def packed_syndromes(h: BitMatrix, words: np.ndarray) -> np.ndarray:
    """Packed syndromes of packed words (int64 in, int64 out)."""
    words = np.asarray(words, dtype=np.int64)
    out = np.zeros(words.shape, dtype=np.int64)
    for j, row in enumerate(h.rows):
        par = np.bitwise_count(words & np.int64(row)).astype(np.int64) & 1
        out |= par << j
    return out


def log_qn(q: np.ndarray, words: np.ndarray, n: int) -> np.ndarray:
    """Natural-log ``q^n`` of packed words."""
    w = np.bitwise_count(np.asarray(words, dtype=np.int64)).astype(float)
    with np.errstate(divide="ignore"):
        lq0, lq1 = np.log(q[0]), np.log(q[1])
    # 0 * -inf must stay 0 for words that avoid the zero-mass symbol
    a = np.where(w > 0, w * lq1, 0.0)
    b = np.where(n - w > 0, (n - w) * lq0, 0.0)
    return a + b


@dataclass(frozen=True, eq=False)
class ParityCheckEnsemble:
    """The ``(H, q)`` pair that generates constrained codes.

    ``q`` is taken from ``channel``; the channel itself is carried along
    because every downstream quantity (leakage, decoding) needs it.
    """

    h: BitMatrix
    channel: BinaryInputDMC
    kind: str = "explicit"
    meta: dict = field(default_factory=dict, repr=False)

    @property
    def n(self) -> int:
        return self.h.ncols

    @property
    def r(self) -> int:
        return self.h.nrows

    @cached_property
    def rank(self) -> int:
        return rank(self.h)

    @cached_property
    def nullspace(self) -> list[np.ndarray]:
        return nullspace_basis(self.h)

    @cached_property
    def nullspace_array(self) -> np.ndarray:
        if not self.nullspace:
            return np.zeros((0, self.n), dtype=np.uint8)
        return np.stack(self.nullspace)

    @property
    def coset_dim(self) -> int:
        return self.n - self.rank

    @cached_property
    def kernel_words(self) -> np.ndarray:
        """Packed members of ``K_0`` (needs ``n <= 62``)."""
        if self.n > 62:
            raise ValueError("packed coset enumeration needs n <= 62")
        if self.coset_dim > EXACT_MAX_COSET_DIM:
            raise ValueError(
                f"coset dimension {self.coset_dim} exceeds {EXACT_MAX_COSET_DIM}"
            )
        return span_words(self.nullspace)

    @cached_property
    def image_words(self) -> np.ndarray:
        """Packed syndromes reachable as ``x H^T`` (the column space of ``H``)."""
        rows, pivots, _ = rref(self.h.T)
        basis = [unpack(rows[i], self.r) for i in range(len(pivots))]
        return np.sort(span_words(basis))

    @cached_property
    def _p_s(self) -> np.ndarray:
        return _syndrome_distribution(self)

    def coset_rep(self, s) -> np.ndarray:
        return solve_coset_rep(self.h, _syndrome_bits(s, self.r))

    def __repr__(self) -> str:
        return f"ParityCheckEnsemble({self.kind}, {self.r}x{self.n}, {self.channel.name})"


class WordDistribution(NamedTuple):
    """Sparse distribution over length-``n`` words given as packed ints."""

    words: np.ndarray
    probs: np.ndarray
    n: int

    def as_array(self) -> np.ndarray:
        return unpack_words(self.words, self.n)


@dataclass(frozen=True)
class SampledCode:
    """One draw ``(S, C)`` of the ensemble; ``codewords[m - 1]`` is message ``m``."""

    syndrome: np.ndarray
    codewords: np.ndarray
    rate: float

    @property
    def size(self) -> int:
        return self.codewords.shape[0]


def codebook_size(n: int, rate: float) -> int:
    """``max(2, round(2^(n R)))``."""
    return max(2, int(math.floor(2.0 ** (n * rate) + 0.5)))


def _syndrome_bits(s, r: int) -> np.ndarray:
    if isinstance(s, (int, np.integer)):
        return unpack(int(s), r)
    s = np.asarray(s, dtype=np.uint8).ravel()
    if s.size != r:
        raise ValueError(f"syndrome length {s.size} != {r}")
    return s


def _syndrome_index(s, r: int) -> int:
    if isinstance(s, (int, np.integer)):
        return int(s)
    return int(pack_rows(_syndrome_bits(s, r))[0]) if r else 0


def _syndrome_distribution(ens: ParityCheckEnsemble) -> np.ndarray:
    if ens.r > 30:
        raise ValueError(f"{ens.r} checks: syndrome table too large")
    p = np.zeros(1 << ens.r)
    if ens.channel.is_uniform:
        # every reachable coset holds 2^(n - rank) equally likely words
        p[ens.image_words] = 2.0 ** (-ens.rank)
        return p
    if ens.n > EXACT_MAX_N:
        raise ValueError(
            f"exact p_S needs n <= {EXACT_MAX_N} for non-uniform q; "
            "use sample_syndrome_and_word to sample S instead"
        )
    words = np.arange(1 << ens.n, dtype=np.int64)
    mass = np.exp(log_qn(ens.channel.q, words, ens.n))
    np.add.at(p, packed_syndromes(ens.h, words), mass)
    return p


def syndrome_distribution(ens: ParityCheckEnsemble) -> np.ndarray:
    """``p_S`` as an array indexed by packed syndrome.

    Exact: a closed form for uniform ``q``, enumeration of all ``2^n`` words
    otherwise (``n <= 20``).  Unreachable syndromes of a rank-deficient ``H``
    get probability zero.
    """
    return ens._p_s.copy()


def conditional_codeword_distribution(ens: ParityCheckEnsemble, s) -> WordDistribution:
    """``q_s``: ``q^n`` restricted to the coset ``K_s`` and renormalised."""
    if ens.coset_dim > EXACT_MAX_N:
        raise ValueError(f"coset dimension {ens.coset_dim} exceeds {EXACT_MAX_N}")
    idx = _syndrome_index(s, ens.r)
    if ens._p_s[idx] <= 0:
        raise ValueError(f"syndrome {idx} has zero probability")
    rep = int(pack_rows(ens.coset_rep(idx))[0]) if ens.n else 0
    words = ens.kernel_words ^ np.int64(rep)
    logp = log_qn(ens.channel.q, words, ens.n)
    probs = np.exp(logp - logp.max())
    probs /= probs.sum()
    return WordDistribution(words, probs, ens.n)


def sample_iid_words(q: np.ndarray, n: int, size: int, rng: np.random.Generator) -> np.ndarray:
    """``size`` words drawn from ``q^n`` as a ``(size, n)`` uint8 array."""
    return (rng.random((size, n)) < q[1]).astype(np.uint8)


def sample_syndrome_and_word(ens: ParityCheckEnsemble, rng: np.random.Generator, size: int = 1):
    """Draw ``(S, X)`` from ``p_S(s) q_s(x)``.

    That joint law equals ``q^n(x) 1{s = x H^T}``, so ``X`` is drawn from
    ``q^n`` and ``S`` is read off; this is exact at every blocklength.
    """
    x = sample_iid_words(ens.channel.q, ens.n, size, rng)
    return syndromes(ens.h, x), x


def sample_constrained_code(
    ens: ParityCheckEnsemble,
    rate: float,
    rng: np.random.Generator,
    *,
    size: int | None = None,
    method: str = "auto",
    max_trials: int | None = None,
) -> SampledCode:
    """Draw ``S ~ p_S`` and then ``size`` codewords i.i.d. from ``q_S``.

    Parameters
    ----------
    rate : float
        Code rate; the codebook holds ``codebook_size(n, rate)`` words unless
        ``size`` is given.
    method : {"auto", "exact", "rejection"}
        Non-uniform ``q`` only.  ``"exact"`` samples the enumerated coset
        (coset dimension at most 24); ``"rejection"`` draws from ``q^n`` and
        keeps words with the right syndrome; ``"auto"`` picks exact when
        feasible.
    """
    m = codebook_size(ens.n, rate) if size is None else int(size)
    s, x0 = sample_syndrome_and_word(ens, rng)
    s = s[0]
    q = ens.channel.q
    if ens.r == 0:
        words = sample_iid_words(q, ens.n, m, rng)
    elif ens.channel.is_uniform:
        rep = ens.coset_rep(s)
        coeffs = rng.integers(0, 2, size=(m, ens.coset_dim), dtype=np.int64)
        offs = (coeffs @ ens.nullspace_array.astype(np.int64)) & 1
        words = (offs ^ rep).astype(np.uint8)
    else:
        exact_ok = ens.coset_dim <= EXACT_MAX_COSET_DIM and ens.n <= 62
        if method == "exact" and not exact_ok:
            raise SamplingError(
                f"exact coset sampling needs n - rank <= {EXACT_MAX_COSET_DIM} "
                f"(got {ens.coset_dim})"
            )
        if method in ("auto", "exact") and exact_ok:
            dist = conditional_codeword_distribution(ens, s)
            pick = rng.choice(dist.words.size, size=m, p=dist.probs)
            words = unpack_words(dist.words[pick], ens.n)
        elif method in ("auto", "rejection"):
            words = _rejection_sample(ens, s, m, rng, max_trials)
        else:
            raise ValueError(f"unknown method {method!r}")
    return SampledCode(s, words, rate)


def _rejection_sample(ens, s, m, rng, max_trials):
    if max_trials is None:
        max_trials = min(10**6 * 2**ens.r, _MAX_REJECTION_TRIALS)
    kept, drawn = [], 0
    need = m
    batch = 4096
    while need > 0:
        if drawn >= max_trials:
            raise SamplingError(
                f"rejection sampler accepted {m - need}/{m} words "
                f"after {drawn} draws (p_S(s) too small)"
            )
        x = sample_iid_words(ens.channel.q, ens.n, min(batch, max_trials - drawn), rng)
        drawn += x.shape[0]
        ok = np.all(syndromes(ens.h, x) == s, axis=1)
        got = x[ok][:need]
        kept.append(got)
        need -= got.shape[0]
        batch = min(batch * 2, 1 << 20)
    return np.concatenate(kept)


def sample_unconstrained_code(
    q: np.ndarray, n: int, rate: float, rng: np.random.Generator, size: int | None = None
) -> SampledCode:
    """The unconstrained ensemble: every codeword i.i.d. from ``q^n``."""
    m = codebook_size(n, rate) if size is None else int(size)
    return SampledCode(np.zeros(0, dtype=np.uint8), sample_iid_words(q, n, m, rng), rate)


def verify_marginal_recovery(ens: ParityCheckEnsemble) -> float:
    """Total-variation distance between ``sum_s p_S(s) q_s`` and ``q^n``."""
    if ens.n > 12:
        raise ValueError("exhaustive marginal check needs n <= 12")
    n = ens.n
    mix = np.zeros(1 << n)
    p_s = ens._p_s
    for s in np.flatnonzero(p_s > 0):
        dist = conditional_codeword_distribution(ens, int(s))
        np.add.at(mix, dist.words, p_s[s] * dist.probs)
    target = np.exp(log_qn(ens.channel.q, np.arange(1 << n), n))
    return 0.5 * float(np.abs(mix - target).sum())


def gallager_ldpc_matrix(
    n: int, row_weight: int, col_weight: int, rng: np.random.Generator
) -> BitMatrix:
    """Regular LDPC parity-check matrix by Gallager's block construction.

    The first block of ``n / row_weight`` rows covers consecutive column
    groups; each further block is a random column permutation of it.
    """
    if row_weight < 1 or col_weight < 1 or row_weight > n:
        raise ValueError("weights must satisfy 1 <= row_weight <= n, col_weight >= 1")
    if (n * col_weight) % row_weight or n % row_weight:
        raise ValueError(
            f"no ({col_weight}, {row_weight})-regular block construction for n = {n}"
        )
    k = n // row_weight
    base = np.zeros((k, n), dtype=np.uint8)
    for i in range(k):
        base[i, i * row_weight:(i + 1) * row_weight] = 1
    blocks = [base] + [base[:, rng.permutation(n)] for _ in range(col_weight - 1)]
    return BitMatrix.from_array(np.vstack(blocks))
