"""Dense linear algebra over GF(2) with bit-packed rows.

A :class:`BitMatrix` stores every row as a Python ``int`` whose bit ``j`` is
the entry in column ``j``; row operations are then single XORs regardless of
width.  Vectors are plain ``numpy.uint8`` arrays of 0/1 entries.  Indices are
0-based throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "BitMatrix",
    "InconsistentSyndromeError",
    "pack",
    "unpack",
    "pack_rows",
    "unpack_words",
    "mat_mul",
    "kron",
    "kron_power",
    "rank",
    "rref",
    "nullspace_basis",
    "solve_coset_rep",
    "column_submatrix",
    "syndromes",
    "span_words",
    "KERNEL",
]


class InconsistentSyndromeError(ValueError):
    """Raised when ``x H^T = s`` has no solution (rank-deficient ``H``)."""


def pack(bits: Iterable[int]) -> int:
    """Pack a 0/1 sequence into an int, element ``j`` going to bit ``j``."""
    word = 0
    for j, b in enumerate(bits):
        if b & 1:
            word |= 1 << j
    return word


def unpack(word: int, length: int) -> np.ndarray:
    """Inverse of :func:`pack`; returns a ``uint8`` array of ``length`` bits."""
    return np.array([(word >> j) & 1 for j in range(length)], dtype=np.uint8)


def pack_rows(arr: np.ndarray) -> np.ndarray:
    """Pack each row of a ``(m, n)`` 0/1 array into an ``int64`` (``n <= 62``)."""
    arr = np.atleast_2d(np.asarray(arr, dtype=np.int64))
    n = arr.shape[1]
    if n > 62:
        raise ValueError(f"cannot pack {n} bits into int64 words")
    weights = np.left_shift(np.int64(1), np.arange(n, dtype=np.int64))
    return (arr & 1) @ weights


def unpack_words(words: np.ndarray, length: int) -> np.ndarray:
    """Unpack an array of int64 words into a ``(len(words), length)`` uint8 array."""
    words = np.asarray(words, dtype=np.int64)
    shifts = np.arange(length, dtype=np.int64)
    return ((words[..., None] >> shifts) & 1).astype(np.uint8)


@dataclass(frozen=True)
class BitMatrix:
    """Immutable ``nrows x ncols`` matrix over GF(2).

    Parameters
    ----------
    rows : tuple of int
        Packed rows; bit ``j`` of ``rows[i]`` is entry ``(i, j)``.
    ncols : int
        Number of columns.
    """

    rows: tuple[int, ...]
    ncols: int

    def __post_init__(self):
        if self.ncols < 0:
            raise ValueError("ncols must be non-negative")
        limit = 1 << self.ncols
        for r in self.rows:
            if r < 0 or r >= limit:
                raise ValueError(f"row {r:#x} does not fit in {self.ncols} columns")

    # -- constructors ------------------------------------------------------
    @classmethod
    def from_array(cls, arr) -> "BitMatrix":
        a = np.asarray(arr)
        if a.ndim != 2:
            raise ValueError(f"expected a 2-D array, got shape {a.shape}")
        if a.size and not np.all((a == 0) | (a == 1)):
            raise ValueError("entries must be 0 or 1")
        return cls(tuple(pack(row) for row in a.astype(np.uint8)), a.shape[1])

    @classmethod
    def identity(cls, n: int) -> "BitMatrix":
        return cls(tuple(1 << i for i in range(n)), n)

    @classmethod
    def zeros(cls, nrows: int, ncols: int) -> "BitMatrix":
        return cls((0,) * nrows, ncols)

    @classmethod
    def from_text(cls, text: str) -> "BitMatrix":
        """Parse the ``"rows cols"`` header + one ``0``/``1`` line per row format."""
        lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
        if not lines:
            raise ValueError("empty matrix text")
        try:
            nrows, ncols = (int(t) for t in lines[0].split())
        except ValueError as exc:
            raise ValueError(f"bad matrix header {lines[0]!r}") from exc
        body = lines[1:]
        if len(body) != nrows:
            raise ValueError(f"header says {nrows} rows, found {len(body)}")
        rows = []
        for ln in body:
            if len(ln) != ncols or set(ln) - {"0", "1"}:
                raise ValueError(f"bad matrix row {ln!r}")
            rows.append(pack(int(c) for c in ln))
        return cls(tuple(rows), ncols)

    @classmethod
    def load(cls, path) -> "BitMatrix":
        return cls.from_text(Path(path).read_text())

    # -- views -------------------------------------------------------------
    @property
    def nrows(self) -> int:
        return len(self.rows)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nrows, self.ncols)

    def to_array(self) -> np.ndarray:
        if not self.rows:
            return np.zeros((0, self.ncols), dtype=np.uint8)
        return np.stack([unpack(r, self.ncols) for r in self.rows])

    def to_text(self) -> str:
        lines = [f"{self.nrows} {self.ncols}"]
        for r in self.rows:
            lines.append("".join(str((r >> j) & 1) for j in range(self.ncols)))
        return "\n".join(lines) + "\n"

    def __getitem__(self, ij: tuple[int, int]) -> int:
        i, j = ij
        if not 0 <= j < self.ncols:
            raise IndexError(j)
        return (self.rows[i] >> j) & 1

    @property
    def T(self) -> "BitMatrix":
        cols = []
        for j in range(self.ncols):
            word = 0
            for i, r in enumerate(self.rows):
                if (r >> j) & 1:
                    word |= 1 << i
            cols.append(word)
        return BitMatrix(tuple(cols), self.nrows)

    def __matmul__(self, other: "BitMatrix") -> "BitMatrix":
        return mat_mul(self, other)

    def __repr__(self) -> str:
        return f"BitMatrix({self.nrows}x{self.ncols})"


def mat_mul(a: BitMatrix, b: BitMatrix) -> BitMatrix:
    """Matrix product over GF(2)."""
    if a.ncols != b.nrows:
        raise ValueError(f"dimension mismatch: {a.shape} @ {b.shape}")
    out = []
    for row in a.rows:
        acc = 0
        k = 0
        while row:
            if row & 1:
                acc ^= b.rows[k]
            row >>= 1
            k += 1
        out.append(acc)
    return BitMatrix(tuple(out), b.ncols)


def kron(a: BitMatrix, b: BitMatrix) -> BitMatrix:
    """Kronecker product ``a (x) b``."""
    out = []
    for ra in a.rows:
        for rb in b.rows:
            word = 0
            for j in range(a.ncols):
                if (ra >> j) & 1:
                    word |= rb << (j * b.ncols)
            out.append(word)
    return BitMatrix(tuple(out), a.ncols * b.ncols)


KERNEL = BitMatrix.from_array([[1, 0], [1, 1]])


def kron_power(base: BitMatrix, ell: int) -> BitMatrix:
    """``ell``-fold Kronecker power of ``base``; ``ell = 0`` gives ``[[1]]``."""
    if ell < 0:
        raise ValueError("ell must be non-negative")
    result = BitMatrix((1,), 1)
    for _ in range(ell):
        result = kron(result, base)
    return result


def rref(m: BitMatrix, rhs: Sequence[int] | None = None):
    """Reduced row echelon form.

    Pivots are chosen lowest column first, and within a column the lowest
    remaining row, so the output is a deterministic function of the input.

    Returns
    -------
    rows : list of int
        Reduced rows; the first ``len(pivots)`` are the pivot rows.
    pivots : list of int
        Pivot column of each leading row.
    rhs : list of int or None
        The right-hand side carried through the same row operations.
    """
    rows = list(m.rows)
    b = None if rhs is None else [int(v) & 1 for v in rhs]
    pivots: list[int] = []
    top = 0
    for col in range(m.ncols):
        if top == len(rows):
            break
        bit = 1 << col
        piv = next((i for i in range(top, len(rows)) if rows[i] & bit), None)
        if piv is None:
            continue
        rows[top], rows[piv] = rows[piv], rows[top]
        if b is not None:
            b[top], b[piv] = b[piv], b[top]
        for i in range(len(rows)):
            if i != top and rows[i] & bit:
                rows[i] ^= rows[top]
                if b is not None:
                    b[i] ^= b[top]
        pivots.append(col)
        top += 1
    return rows, pivots, b


def rank(m: BitMatrix) -> int:
    return len(rref(m)[1])


def nullspace_basis(h: BitMatrix) -> list[np.ndarray]:
    """Basis of ``{x : x H^T = 0}``, one vector per non-pivot column of ``H``."""
    rows, pivots, _ = rref(h)
    pivot_set = set(pivots)
    basis = []
    for free in range(h.ncols):
        if free in pivot_set:
            continue
        word = 1 << free
        for i, p in enumerate(pivots):
            if (rows[i] >> free) & 1:
                word |= 1 << p
        basis.append(unpack(word, h.ncols))
    return basis


def solve_coset_rep(h: BitMatrix, s) -> np.ndarray:
    """Return one ``x`` with ``x H^T = s``; free variables are set to zero."""
    s = np.asarray(s, dtype=np.uint8).ravel()
    if s.size != h.nrows:
        raise ValueError(f"syndrome has length {s.size}, H has {h.nrows} rows")
    rows, pivots, b = rref(h, s.tolist())
    if any(b[i] for i in range(len(pivots), len(rows))):
        raise InconsistentSyndromeError(
            "syndrome is outside the image of a rank-deficient H"
        )
    word = 0
    for i, p in enumerate(pivots):
        if b[i]:
            word |= 1 << p
    return unpack(word, h.ncols)


def column_submatrix(m: BitMatrix, idx: Iterable[int]) -> BitMatrix:
    """Columns of ``m`` listed in ``idx``, kept in ascending index order."""
    cols = sorted(set(int(j) for j in idx))
    for j in cols:
        if not 0 <= j < m.ncols:
            raise IndexError(f"column {j} out of range for {m.ncols} columns")
    out = []
    for r in m.rows:
        word = 0
        for k, j in enumerate(cols):
            if (r >> j) & 1:
                word |= 1 << k
        out.append(word)
    return BitMatrix(tuple(out), len(cols))


def syndromes(h: BitMatrix, x: np.ndarray) -> np.ndarray:
    """Syndromes ``x H^T`` for a ``(batch, n)`` or ``(n,)`` 0/1 array."""
    x = np.asarray(x, dtype=np.uint8)
    if x.shape[-1] != h.ncols:
        raise ValueError(f"word length {x.shape[-1]} != H columns {h.ncols}")
    ht = h.to_array().T.astype(np.int64)
    return ((x.astype(np.int64) @ ht) & 1).astype(np.uint8)


def span_words(basis: Sequence[np.ndarray], offset: np.ndarray | None = None) -> np.ndarray:
    """All ``2^k`` packed words ``offset + span(basis)`` as an int64 array.

    The combination with coefficient bits ``c`` sits at position ``c`` (bit
    ``i`` of ``c`` selects ``basis[i]``).
    """
    words = np.zeros(1, dtype=np.int64)
    if offset is not None:
        words[0] = int(pack_rows(offset)[0])
    for v in basis:
        words = np.concatenate([words, words ^ pack_rows(v)[0]])
    return words
