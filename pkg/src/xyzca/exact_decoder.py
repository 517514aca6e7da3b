"""Exact decoder for pure-dephasing noise: sweep, row-0 linear solve, class pick.

The decoder runs independently per sublattice.  On the black sublattice the
defect rule moves defects downward, so sweeping rows H-1..1 confines the
syndrome to row 0, where the remaining inversion problem is the L-by-L
system (I + F^H) x = residual over GF(2) (F is the one-step update matrix;
applying the update rule to x then fills all other rows).  The white
sublattice is the point reflection of the black one, so its defect plane is
reflected, decoded with the black pipeline, and reflected back.

The returned correction is the minimum-weight frame among the four
logical-class representatives per sublattice, which for i.i.d. dephasing is
also the most likely class at certified sizes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, List, Optional, Tuple

import numpy as np

from .errors import InvalidSyndrome, NotInNormalizer
from .gf2 import BitRow, Gf2Matrix, mat_pow, rule108_matrix
from .lattice import BLACK, WHITE, LatticeDims, PauliFrame, Sublattice, Syndrome, syndrome
from .logicals import LogicalSet, get_logical_set, logical_class

# Per-sublattice class labels in deterministic tie-break order.
CLASS_ORDER = ("I", "L", "LM", "M")


@dataclass
class DecodeResult:
    correction: PauliFrame
    class_weights: Dict[str, Dict[str, int]]
    chosen_class: Tuple[str, str]  # (black label, white label)


def _sweep_plane(plane: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Black-coordinate sweep: returns (z-plane correction, row-0 residual)."""
    s = plane.astype(np.uint8).copy()
    h = s.shape[0]
    corr = np.zeros_like(s)
    for j in range(h - 1, 0, -1):
        row = s[j].copy()
        corr[j] ^= row
        s[j] ^= row
        s[j - 1] ^= row ^ np.roll(row, -1)
    return corr, s[0].copy()


class _Row0Solver:
    """RREF of (I + F^H) with recorded row operations, reused across solves."""

    def __init__(self, L: int, H: int):
        a = mat_pow(rule108_matrix(L), H).xor(Gf2Matrix.identity(L))
        aug = [a.rows[r] | (1 << (L + r)) for r in range(L)]
        pivots: List[Tuple[int, int]] = []
        rank = 0
        for col in range(L):
            pivot = None
            for r in range(rank, L):
                if (aug[r] >> col) & 1:
                    pivot = r
                    break
            if pivot is None:
                continue
            aug[rank], aug[pivot] = aug[pivot], aug[rank]
            for r in range(L):
                if r != rank and (aug[r] >> col) & 1:
                    aug[r] ^= aug[rank]
            pivots.append((rank, col))
            rank += 1
        self.L = L
        self.rank = rank
        self._pivots = pivots
        mask = (1 << L) - 1
        self._e = [row >> L for row in aug]  # elimination coefficients
        self._zero_e = self._e[rank:]
        del mask

    def solve(self, residual_bits: int) -> int:
        for e in self._zero_e:
            if (e & residual_bits).bit_count() & 1:
                raise InvalidSyndrome(
                    "row-0 system inconsistent: syndrome unreachable by "
                    "dephasing noise on this sublattice"
                )
        x = 0
        for r, col in self._pivots:
            if (self._e[r] & residual_bits).bit_count() & 1:
                x |= 1 << col
        return x


@lru_cache(maxsize=None)
def _row0_solver(L: int, H: int) -> _Row0Solver:
    return _Row0Solver(L, H)


def _fill_from_row0(x_bits: int, dims: LatticeDims) -> np.ndarray:
    """Propagate a row-0 solution to all rows with the update rule."""
    L, H = dims.L, dims.H
    plane = np.zeros((H, L), dtype=np.uint8)
    row = BitRow(x_bits, L)
    plane[0] = row.to_bits()
    from .gf2 import rule108_step

    r = row
    for j in range(H - 1, 0, -1):
        r = rule108_step(r)
        plane[j] = r.to_bits()
    return plane


def _reflect_plane_defects(b_plane: np.ndarray) -> np.ndarray:
    """Map the white defect plane onto black-rule coordinates."""
    h, w = b_plane.shape
    rows = (-np.arange(h)) % h
    cols = (-np.arange(w) - 1) % w
    return b_plane[np.ix_(rows, cols)]


def _reflect_plane_qubits(z_plane: np.ndarray) -> np.ndarray:
    """Map a black-coordinate correction plane back onto white qubits."""
    h, w = z_plane.shape
    rows = (-np.arange(h)) % h
    cols = (-np.arange(w)) % w
    return z_plane[np.ix_(rows, cols)]


def sweep_to_row0(syn: Syndrome, sublattice: Sublattice) -> Tuple[PauliFrame, BitRow]:
    """Move all defects of one sublattice onto row 0.

    Returns the pure-Z frame C1 (in real coordinates) and the residual
    row-0 defect pattern.  For the white sublattice both the sweep and the
    residual live in the reflected coordinates its row-0 solver consumes.
    """
    dims = syn.dims
    if sublattice == BLACK:
        corr, residual = _sweep_plane(syn.a)
        f = PauliFrame.identity(dims)
        f.z[BLACK] = corr
    else:
        corr, residual = _sweep_plane(_reflect_plane_defects(syn.b))
        f = PauliFrame.identity(dims)
        f.z[WHITE] = _reflect_plane_qubits(corr)
    return f, BitRow.from_bits(residual)


def solve_row0(residual: BitRow, dims: LatticeDims, sublattice: Sublattice = BLACK) -> PauliFrame:
    """Find a pure-Z frame whose syndrome is the residual on row 0 only.

    Raises :class:`InvalidSyndrome` when the linear system is inconsistent,
    signalling a syndrome outside the pure-dephasing error set.
    """
    solver = _row0_solver(dims.L, dims.H)
    x = solver.solve(residual.bits)
    plane = _fill_from_row0(x, dims)
    f = PauliFrame.identity(dims)
    if sublattice == BLACK:
        f.z[BLACK] = plane
    else:
        f.z[WHITE] = _reflect_plane_qubits(plane)
    return f


def minimize_over_logicals(c: PauliFrame, logicals: LogicalSet) -> DecodeResult:
    """Minimum-weight representative among the four classes per sublattice.

    Ties break to the lexicographically smallest class label.
    """
    best = c.copy()
    weights: Dict[str, Dict[str, int]] = {}
    chosen: List[str] = []
    for sub, name, (lf, mf) in (
        (BLACK, "black", logicals.black_basis),
        (WHITE, "white", logicals.white_basis),
    ):
        reps = {
            "I": np.zeros_like(c.z[sub]),
            "L": lf.z[sub],
            "LM": lf.z[sub] ^ mf.z[sub],
            "M": mf.z[sub],
        }
        w = {
            label: int(np.count_nonzero(best.z[sub] ^ plane))
            for label, plane in reps.items()
        }
        weights[name] = w
        label = min(CLASS_ORDER, key=lambda k: (w[k], CLASS_ORDER.index(k)))
        chosen.append(label)
        best.z[sub] ^= reps[label]
    return DecodeResult(best, weights, (chosen[0], chosen[1]))


def decode_infinite_bias(syn: Syndrome, dims: LatticeDims) -> DecodeResult:
    """Sweep, solve and minimize, independently per sublattice."""
    if syn.dims != dims:
        raise ValueError("syndrome dims mismatch")
    c = PauliFrame.identity(dims)
    for sub in (BLACK, WHITE):
        c1, residual = sweep_to_row0(syn, sub)
        c2 = solve_row0(residual, dims, sub)
        c.z[sub] = c1.z[sub] ^ c2.z[sub]
    return minimize_over_logicals(c, get_logical_set(dims.L, dims.H))


def is_failure(e: PauliFrame, c: PauliFrame, logicals: LogicalSet) -> bool:
    """True when correction c leaves a logically nontrivial residual on e."""
    if not syndrome(e).same_as(syndrome(c)):
        raise NotInNormalizer("error and correction have different syndromes")
    return not logical_class(e ^ c, logicals).trivial


def hoeffding_failure_bound(n_support: int, p: float) -> float:
    """Concentration bound 3*exp(-(4n/3)(p - 1/2)^2) on the failure rate."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    return 3.0 * math.exp(-(4.0 * n_support / 3.0) * (p - 0.5) ** 2)
