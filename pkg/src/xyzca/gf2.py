"""Bit-packed GF(2) linear algebra for rule-108 cellular-automaton evolution.

Rows are packed into Python ints (bit i of the int is entry i of the row,
so XOR/shift run at machine-word speed for any length).  A numpy
uint64-packed solver is provided separately for bulk linear systems where
many right-hand sides hit the same matrix.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .errors import InconsistentSystem


@dataclass(frozen=True)
class BitRow:
    """A cyclic bit vector of fixed length; index 0 is the lowest bit."""

    bits: int
    length: int

    def __post_init__(self):
        if self.length < 1:
            raise ValueError("BitRow length must be >= 1")
        if self.bits >> self.length:
            raise ValueError("bits exceed declared length")

    @classmethod
    def zeros(cls, length: int) -> "BitRow":
        return cls(0, length)

    @classmethod
    def single_one(cls, length: int, index: int = 0) -> "BitRow":
        return cls(1 << (index % length), length)

    @classmethod
    def from_string(cls, s: str) -> "BitRow":
        """Parse '0'/'1' text; character 0 is row index 0 (leftmost)."""
        if not s or set(s) - {"0", "1"}:
            raise ValueError(f"not a bit string: {s!r}")
        bits = 0
        for i, ch in enumerate(s):
            if ch == "1":
                bits |= 1 << i
        return cls(bits, len(s))

    def to_string(self) -> str:
        return "".join("1" if (self.bits >> i) & 1 else "0" for i in range(self.length))

    @classmethod
    def from_bits(cls, arr) -> "BitRow":
        arr = np.asarray(arr, dtype=np.uint8)
        bits = 0
        for i in np.nonzero(arr)[0]:
            bits |= 1 << int(i)
        return cls(bits, len(arr))

    def to_bits(self) -> np.ndarray:
        out = np.zeros(self.length, dtype=np.uint8)
        b = self.bits
        while b:
            i = (b & -b).bit_length() - 1
            out[i] = 1
            b &= b - 1
        return out

    def get(self, i: int) -> int:
        return (self.bits >> (i % self.length)) & 1

    def weight(self) -> int:
        return self.bits.bit_count()

    def __xor__(self, other: "BitRow") -> "BitRow":
        if self.length != other.length:
            raise ValueError("length mismatch")
        return BitRow(self.bits ^ other.bits, self.length)

    def is_zero(self) -> bool:
        return self.bits == 0


def rule108_step(row: BitRow) -> BitRow:
    """One step of the update rule f(R)_i = R_i + R_{i+1} (mod 2), cyclic."""
    b, L = row.bits, row.length
    shifted = (b >> 1) | ((b & 1) << (L - 1))
    return BitRow(b ^ shifted, L)


def rule108_step_bits(bits: int, length: int) -> int:
    """Raw-int variant of :func:`rule108_step` for hot loops."""
    shifted = (bits >> 1) | ((bits & 1) << (length - 1))
    return bits ^ shifted


@dataclass
class Gf2Matrix:
    """Dense GF(2) matrix; each row is a packed int over ``cols`` columns."""

    rows: List[int]
    cols: int

    @property
    def shape(self) -> Tuple[int, int]:
        return (len(self.rows), self.cols)

    @classmethod
    def zeros(cls, r: int, c: int) -> "Gf2Matrix":
        return cls([0] * r, c)

    @classmethod
    def identity(cls, n: int) -> "Gf2Matrix":
        return cls([1 << i for i in range(n)], n)

    @classmethod
    def from_dense(cls, arr) -> "Gf2Matrix":
        arr = np.asarray(arr, dtype=np.uint8) & 1
        rows = []
        for r in arr:
            bits = 0
            for i in np.nonzero(r)[0]:
                bits |= 1 << int(i)
            rows.append(bits)
        return cls(rows, arr.shape[1])

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.shape, dtype=np.uint8)
        for k, bits in enumerate(self.rows):
            b = bits
            while b:
                i = (b & -b).bit_length() - 1
                out[k, i] = 1
                b &= b - 1
        return out

    def mul_vec(self, v: BitRow) -> BitRow:
        """Matrix-vector product over GF(2)."""
        if v.length != self.cols:
            raise ValueError("dimension mismatch")
        bits = 0
        for k, row in enumerate(self.rows):
            if (row & v.bits).bit_count() & 1:
                bits |= 1 << k
        return BitRow(bits, len(self.rows))

    def mul_mat(self, other: "Gf2Matrix") -> "Gf2Matrix":
        """Matrix product self @ other: combine rows of ``other``."""
        if self.cols != len(other.rows):
            raise ValueError("dimension mismatch")
        out = []
        for row in self.rows:
            acc = 0
            b = row
            while b:
                j = (b & -b).bit_length() - 1
                acc ^= other.rows[j]
                b &= b - 1
            out.append(acc)
        return Gf2Matrix(out, other.cols)

    def xor(self, other: "Gf2Matrix") -> "Gf2Matrix":
        if self.shape != other.shape:
            raise ValueError("shape mismatch")
        return Gf2Matrix([a ^ b for a, b in zip(self.rows, other.rows)], self.cols)

    def transpose(self) -> "Gf2Matrix":
        r, c = self.shape
        rows = [0] * c
        for k, bits in enumerate(self.rows):
            b = bits
            while b:
                i = (b & -b).bit_length() - 1
                rows[i] |= 1 << k
                b &= b - 1
        return Gf2Matrix(rows, r)

    def rank(self) -> int:
        work = list(self.rows)
        rank = 0
        for col in range(self.cols):
            pivot = None
            for r in range(rank, len(work)):
                if (work[r] >> col) & 1:
                    pivot = r
                    break
            if pivot is None:
                continue
            work[rank], work[pivot] = work[pivot], work[rank]
            for r in range(len(work)):
                if r != rank and (work[r] >> col) & 1:
                    work[r] ^= work[rank]
            rank += 1
        return rank


def rule108_matrix(length: int) -> Gf2Matrix:
    """The linear map F = I + cyclic-shift realizing one rule-108 step."""
    if length < 1:
        raise ValueError("length must be >= 1")
    rows = []
    for i in range(length):
        rows.append((1 << i) | (1 << ((i + 1) % length)))
    return Gf2Matrix(rows, length)


def mat_pow(m: Gf2Matrix, n: int) -> Gf2Matrix:
    """n-th matrix power by repeated squaring (n >= 0)."""
    r, c = m.shape
    if r != c:
        raise ValueError("matrix must be square")
    if n < 0:
        raise ValueError("exponent must be >= 0")
    result = Gf2Matrix.identity(r)
    base = m
    while n:
        if n & 1:
            result = result.mul_mat(base)
        base = base.mul_mat(base)
        n >>= 1
    return result


def _rref(rows: List[int], cols: int) -> Tuple[List[int], List[int]]:
    """In-place-ish reduced row echelon form; returns (rows, pivot_cols)."""
    work = list(rows)
    pivots: List[int] = []
    rank = 0
    for col in range(cols):
        pivot = None
        for r in range(rank, len(work)):
            if (work[r] >> col) & 1:
                pivot = r
                break
        if pivot is None:
            continue
        work[rank], work[pivot] = work[pivot], work[rank]
        for r in range(len(work)):
            if r != rank and (work[r] >> col) & 1:
                work[r] ^= work[rank]
        pivots.append(col)
        rank += 1
    return work, pivots


def solve_linear(a: Gf2Matrix, b: BitRow) -> Tuple[BitRow, List[BitRow]]:
    """Solve A x = b over GF(2).

    Returns a particular solution together with a basis of the nullspace of
    A (the solution set is the particular solution plus the nullspace span).
    Raises :class:`InconsistentSystem` when b is outside the column space.
    """
    n_rows, n_cols = a.shape
    if b.length != n_rows:
        raise ValueError("rhs length must equal row count")
    # Augment each row with its rhs bit at column n_cols.
    aug = [a.rows[r] | (b.get(r) << n_cols) for r in range(n_rows)]
    work, pivots = _rref(aug, n_cols)
    # A zero row of A with rhs 1 signals inconsistency.
    for r in range(len(pivots), n_rows):
        if work[r] >> n_cols:
            raise InconsistentSystem("rhs not in column space")
    x = 0
    for r, col in enumerate(pivots):
        if work[r] >> n_cols:
            x |= 1 << col
    return BitRow(x, n_cols), kernel_basis(a)


def kernel_basis(m: Gf2Matrix) -> List[BitRow]:
    """Basis of {v : M v == 0}; dimension equals cols - rank(M)."""
    n_rows, n_cols = m.shape
    work, pivots = _rref(list(m.rows), n_cols)
    pivot_set = set(pivots)
    basis = []
    for free in range(n_cols):
        if free in pivot_set:
            continue
        v = 1 << free
        for r, col in enumerate(pivots):
            if (work[r] >> free) & 1:
                v |= 1 << col
        basis.append(BitRow(v, n_cols))
    return basis


def cycle_length_from_single_one(length: int) -> int:
    """Cycle length reached by rule-108 evolution from a single-1 row.

    The initial row is not generally on the cycle; the transient is skipped
    by hashing visited states until one repeats.
    """
    if length < 1:
        raise ValueError("length must be >= 1")
    seen = {}
    state = 1
    step = 0
    while state not in seen:
        seen[state] = step
        state = rule108_step_bits(state, length)
        step += 1
    return step - seen[state]


def cycle_length_of(row: BitRow) -> int:
    """Cycle length eventually reached from an arbitrary initial row."""
    seen = {}
    state = row.bits
    step = 0
    while state not in seen:
        seen[state] = step
        state = rule108_step_bits(state, row.length)
        step += 1
    return step - seen[state]


# ---------------------------------------------------------------------------
# numpy uint64-packed solver for bulk systems (many rhs against one matrix)
# ---------------------------------------------------------------------------


def pack_bits(bits: np.ndarray) -> np.ndarray:
    """Pack a uint8 0/1 array (..., n) into uint64 words (..., ceil(n/64)).

    Bit k of word w is entry 64*w + k (little-endian within each word).
    """
    bits = np.asarray(bits, dtype=np.uint8)
    n = bits.shape[-1]
    n_words = (n + 63) // 64
    padded = np.zeros(bits.shape[:-1] + (n_words * 64,), dtype=np.uint8)
    padded[..., :n] = bits
    by = np.packbits(padded, axis=-1, bitorder="little")
    return np.ascontiguousarray(by).view(np.uint64)


def unpack_bits(words: np.ndarray, n: int) -> np.ndarray:
    """Inverse of :func:`pack_bits`."""
    words = np.ascontiguousarray(words, dtype=np.uint64)
    bits = np.unpackbits(words.view(np.uint8), axis=-1, bitorder="little")
    return bits[..., :n]


class PackedSolver:
    """Cached RREF of a GF(2) matrix; solves M x = s for many vectors s.

    The elimination matrix E (with R = E @ M in RREF) is retained so each
    solve is a packed matrix-vector product plus a consistency check.
    """

    def __init__(self, dense_rows: np.ndarray):
        dense_rows = np.asarray(dense_rows, dtype=np.uint8) & 1
        self.n_rows, self.n_cols = dense_rows.shape
        a = pack_bits(dense_rows)
        e = pack_bits(np.eye(self.n_rows, dtype=np.uint8))
        pivots: List[Tuple[int, int]] = []
        rank = 0
        for col in range(self.n_cols):
            w, bit = divmod(col, 64)
            colbits = (a[rank:, w] >> np.uint64(bit)) & np.uint64(1)
            nz = np.nonzero(colbits)[0]
            if nz.size == 0:
                continue
            p = rank + int(nz[0])
            if p != rank:
                a[[rank, p]] = a[[p, rank]]
                e[[rank, p]] = e[[p, rank]]
            mask = ((a[:, w] >> np.uint64(bit)) & np.uint64(1)).astype(bool)
            mask[rank] = False
            if mask.any():
                a[mask] ^= a[rank]
                e[mask] ^= e[rank]
            pivots.append((rank, col))
            rank += 1
            if rank == self.n_rows:
                break
        self.rank = rank
        self._r = a
        self._e = e
        self._pivot_rows = np.array([p[0] for p in pivots], dtype=np.int64)
        self._pivot_cols = np.array([p[1] for p in pivots], dtype=np.int64)

    def solve(self, rhs_bits: np.ndarray) -> Optional[np.ndarray]:
        """Return one solution (uint8 of length n_cols), or None if none exists."""
        rhs_bits = np.asarray(rhs_bits, dtype=np.uint8) & 1
        if rhs_bits.shape != (self.n_rows,):
            raise ValueError("rhs shape mismatch")
        s = pack_bits(rhs_bits)
        t = (np.bitwise_count(self._e & s[None, :]).sum(axis=1) & 1).astype(np.uint8)
        if self.rank < self.n_rows and t[self.rank:].any():
            return None
        x = np.zeros(self.n_cols, dtype=np.uint8)
        x[self._pivot_cols] = t[self._pivot_rows]
        return x
