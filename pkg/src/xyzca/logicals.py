"""Biased logical operators: fractal tilings, string logicals, size certification.

Two families of zero-syndrome operators are built here:

* **Tilings** — period-3 blocks repeated over a sublattice with a single
  Pauli letter.  The two block shapes (cyclic row shifts of each other)
  give two independent operators per sublattice; the third shift is their
  product.
* **Strings** — weight-``O(L)`` operators mixing two letters across the
  two sublattices.  Horizontal strings pair a black 2-of-3 row with the
  white row below it; vertical strings pair same-column 2-of-3 patterns.
  Their commutation relations against the tilings are what the class
  labelling relies on, so the phase constants below are frozen by the
  pairing-table test rather than by any drawing.

Size certification counts the group of row configurations that are
periodic under the update rule; certified sizes have exactly two
independent biased logicals per sublattice (four group elements).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, List, Optional, Tuple

import numpy as np

from .errors import NotInNormalizer
from .gf2 import Gf2Matrix, kernel_basis, mat_pow, rule108_matrix
from .lattice import (
    BLACK,
    WHITE,
    LatticeDims,
    PauliFrame,
    Sublattice,
    build_lattice,
    stabilizer_support,
    syndrome,
)

# Tiling blocks, indexed [row % 3][col % 3].  L omits cells with
# (row + col) % 3 == 2, M omits (row + col) % 3 == 1.
TILE_BLOCKS = {
    "L": np.array([[1, 1, 0], [1, 0, 1], [0, 1, 1]], dtype=np.uint8),
    "M": np.array([[1, 0, 1], [0, 1, 1], [1, 1, 0]], dtype=np.uint8),
}

# Column order of the string basis everywhere in this package.
STRING_KEYS = ("Zx_R", "Zy_R", "Zx_B", "Zy_B", "Xx_R", "Xy_R", "Xx_B", "Xy_B")

# Frozen string parameters: horizontal strings are (black_row, excluded
# column residue); vertical strings are (column, excluded row residue).
# The R->B color step shifts the support one column left twice.
_X_STRING_PARAMS = {"R": (2, 0), "B": (2, 1)}
_Y_STRING_PARAMS = {"R": (0, 1), "B": (1, 1)}


def _pattern(n: int, excluded_residue: int) -> np.ndarray:
    """Length-n 0/1 pattern that is 0 exactly on one residue class mod 3."""
    idx = np.arange(n)
    return ((idx % 3) != (excluded_residue % 3)).astype(np.uint8)


def tile_frame(dims: LatticeDims, block: str, sub: Sublattice, letter: str = "Z") -> PauliFrame:
    """Tile a 3x3 block over one sublattice with a single Pauli letter."""
    rows = np.arange(dims.H) % 3
    cols = np.arange(dims.L) % 3
    plane = TILE_BLOCKS[block][np.ix_(rows, cols)]
    f = PauliFrame.identity(dims)
    if letter in ("X", "Y"):
        f.x[sub] = plane.copy()
    if letter in ("Z", "Y"):
        f.z[sub] = plane.copy()
    return f


@dataclass
class TileLogicals:
    """The two independent pure-Z tilings per sublattice (L then M)."""

    black: Tuple[PauliFrame, PauliFrame]
    white: Tuple[PauliFrame, PauliFrame]


def tile_logicals(L: int, H: int) -> TileLogicals:
    dims = build_lattice(L, H)
    return TileLogicals(
        black=(tile_frame(dims, "L", BLACK), tile_frame(dims, "M", BLACK)),
        white=(tile_frame(dims, "L", WHITE), tile_frame(dims, "M", WHITE)),
    )


def _horizontal_string(
    dims: LatticeDims, black_row: int, excl: int, black_letter: str, white_letter: str
) -> PauliFrame:
    """String along a row pair: black row excludes ``excl``, the white row
    below it excludes ``excl + 2`` (locked by syndrome cancellation)."""
    f = PauliFrame.identity(dims)
    jb = black_row % dims.H
    jw = (black_row - 1) % dims.H
    black_pat = _pattern(dims.L, excl)
    white_pat = _pattern(dims.L, excl + 2)
    for letter, sub, row, pat in (
        (black_letter, BLACK, jb, black_pat),
        (white_letter, WHITE, jw, white_pat),
    ):
        if letter in ("X", "Y"):
            f.x[sub, row] ^= pat
        if letter in ("Z", "Y"):
            f.z[sub, row] ^= pat
    return f


def _vertical_string(
    dims: LatticeDims, col: int, excl: int, black_letter: str, white_letter: str
) -> PauliFrame:
    """String along one column: both sublattices exclude the same row residue."""
    f = PauliFrame.identity(dims)
    a = col % dims.L
    pat = _pattern(dims.H, excl)
    for letter, sub in ((black_letter, BLACK), (white_letter, WHITE)):
        if letter in ("X", "Y"):
            f.x[sub, :, a] ^= pat
        if letter in ("Z", "Y"):
            f.z[sub, :, a] ^= pat
    return f


def string_logicals(L: int, H: int) -> Dict[str, PauliFrame]:
    """The eight string logicals, keyed per :data:`STRING_KEYS`.

    Z-type strings put Z on black and Y on white; substituting Z->X and
    Y->Z on the same supports yields the X-type strings.
    """
    dims = build_lattice(L, H)
    out: Dict[str, PauliFrame] = {}
    for color in ("R", "B"):
        jb, excl = _X_STRING_PARAMS[color]
        out[f"Zx_{color}"] = _horizontal_string(dims, jb, excl, "Z", "Y")
        out[f"Xx_{color}"] = _horizontal_string(dims, jb, excl, "X", "Z")
        a, rho = _Y_STRING_PARAMS[color]
        out[f"Zy_{color}"] = _vertical_string(dims, a, rho, "Z", "Y")
        out[f"Xy_{color}"] = _vertical_string(dims, a, rho, "X", "Z")
    return {k: out[k] for k in STRING_KEYS}


def pauli_commutes(a: PauliFrame, b: PauliFrame) -> int:
    """+1 if the operators commute, -1 if the symplectic form is odd."""
    if a.dims != b.dims:
        raise ValueError("frames on different lattices")
    parity = (int((a.x & b.z).sum()) + int((a.z & b.x).sum())) & 1
    return -1 if parity else 1


@lru_cache(maxsize=None)
def count_biased_logicals(L: int, H: int) -> int:
    """Dimension of the space of length-L rows periodic under H update steps."""
    build_lattice(L, H)
    fh = mat_pow(rule108_matrix(L), H)
    m = fh.xor(Gf2Matrix.identity(L))
    return len(kernel_basis(m))


def certify_size(L: int, H: int) -> bool:
    """True when the biased logical group is minimal (and sides not both even)."""
    if (L % 2 == 0) and (H % 2 == 0):
        return False
    return count_biased_logicals(L, H) == 2


def propose_sizes(n_max: int) -> List[Tuple[int, int]]:
    """The one-parameter certified family (3*2^n, 3*(2^n + 1)), n = 0..n_max."""
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    out = []
    for n in range(n_max + 1):
        L = 3 * (1 << n)
        H = 3 * ((1 << n) + 1)
        if not certify_size(L, H):
            raise AssertionError(f"family size {L}x{H} failed certification")
        out.append((L, H))
    return out


@dataclass
class LogicalSet:
    """Tilings plus the string dual basis for one lattice size."""

    dims: LatticeDims
    black_basis: Tuple[PauliFrame, PauliFrame]
    white_basis: Tuple[PauliFrame, PauliFrame]
    string_basis: Dict[str, PauliFrame]
    # Pairing bit-vectors (one bit per string) of the four pure-Z tilings.
    _tiling_pairings: Dict[str, int]
    # When the mutual symplectic Gram matrix of the strings has full rank
    # they form a complete dual basis: zero pairings <=> stabilizer product.
    strings_complete: bool

    @classmethod
    def build(cls, L: int, H: int) -> "LogicalSet":
        dims = build_lattice(L, H)
        tiles = tile_logicals(L, H)
        strings = string_logicals(L, H)
        frames = {
            "Lb": tiles.black[0],
            "Mb": tiles.black[1],
            "Lw": tiles.white[0],
            "Mw": tiles.white[1],
        }
        pair = {name: _pairing_bits(f, strings) for name, f in frames.items()}
        keys = list(strings)
        gram = Gf2Matrix.from_dense(
            [
                [0 if pauli_commutes(strings[r], strings[c]) == 1 else 1 for c in keys]
                for r in keys
            ]
        )
        return cls(dims, tiles.black, tiles.white, strings, pair, gram.rank() == 8)


def _pairing_bits(frame: PauliFrame, strings: Dict[str, PauliFrame]) -> int:
    bits = 0
    for k, key in enumerate(STRING_KEYS):
        if pauli_commutes(frame, strings[key]) == -1:
            bits |= 1 << k
    return bits


@lru_cache(maxsize=None)
def get_logical_set(L: int, H: int) -> LogicalSet:
    """Cached LogicalSet per lattice size (construction is pure)."""
    return LogicalSet.build(L, H)


@lru_cache(maxsize=None)
def _stabilizer_pivots(L: int, H: int):
    """RREF pivot rows of the stabilizer generator matrix over 4LH bits.

    Bit layout of a frame vector: x-plane bits then z-plane bits, each in
    (sublattice, row, col) order.
    """
    dims = build_lattice(L, H)
    n = 2 * dims.N
    rows = []
    for kind in "AB":
        for j in range(dims.H):
            for i in range(dims.L):
                f = PauliFrame.identity(dims)
                for q, letter in stabilizer_support(dims, kind, i, j):
                    f = f.apply_pauli(q, letter)
                rows.append(_frame_to_int(f))
    pivots = {}  # pivot bit index -> reduced row
    for row in rows:
        r = row
        while r:
            top = r.bit_length() - 1
            if top in pivots:
                r ^= pivots[top]
            else:
                pivots[top] = r
                break
    return pivots, n


def _frame_to_int(frame: PauliFrame) -> int:
    bits = np.concatenate([frame.x.reshape(-1), frame.z.reshape(-1)])
    packed = np.packbits(bits, bitorder="little").tobytes()
    return int.from_bytes(packed, "little")


def is_stabilizer_product(frame: PauliFrame) -> bool:
    """Exact membership of a frame in the stabilizer group (as bit vectors)."""
    pivots, _ = _stabilizer_pivots(frame.dims.L, frame.dims.H)
    r = _frame_to_int(frame)
    while r:
        top = r.bit_length() - 1
        if top not in pivots:
            return False
        r ^= pivots[top]
    return True


_LABELS = {(0, 0): "I", (1, 0): "L", (0, 1): "M", (1, 1): "LM"}


@dataclass(frozen=True)
class LogicalClass:
    """Class of a zero-syndrome frame.

    ``black``/``white`` carry the biased labels when the frame's pairing
    vector lies in the tiling span (None otherwise, e.g. string classes);
    ``trivial`` is exact: the frame is a product of stabilizers.
    """

    black: Optional[str]
    white: Optional[str]
    trivial: bool
    pairings: int


def logical_class(frame: PauliFrame, basis: LogicalSet) -> LogicalClass:
    """Classify a zero-syndrome frame against the string dual basis."""
    if not syndrome(frame).is_zero():
        raise NotInNormalizer("frame has nonzero syndrome")
    if frame.is_identity():
        return LogicalClass("I", "I", True, 0)
    v = _pairing_bits(frame, basis.string_basis)
    coeffs = _solve_tiling_combo(v, basis._tiling_pairings)
    if v == 0:
        trivial = basis.strings_complete or is_stabilizer_product(frame)
        return LogicalClass("I" if trivial else None, "I" if trivial else None, trivial, v)
    if coeffs is None:
        return LogicalClass(None, None, False, v)
    eb_l, eb_m, ew_l, ew_m = coeffs
    return LogicalClass(_LABELS[(eb_l, eb_m)], _LABELS[(ew_l, ew_m)], False, v)


def _solve_tiling_combo(v: int, pair: Dict[str, int]) -> Optional[Tuple[int, int, int, int]]:
    """Express v as an XOR of the four tiling pairing vectors, if possible."""
    cols = [pair["Lb"], pair["Mb"], pair["Lw"], pair["Mw"]]
    for combo in range(16):
        acc = 0
        for k in range(4):
            if (combo >> k) & 1:
                acc ^= cols[k]
        if acc == v:
            return ((combo >> 0) & 1, (combo >> 1) & 1, (combo >> 2) & 1, (combo >> 3) & 1)
    return None
