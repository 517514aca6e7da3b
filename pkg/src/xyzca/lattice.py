"""Periodic XYZ color-code lattice: Pauli frames, stabilizers, syndromes, energies.

Geometry conventions (fixed once, everything downstream depends on them):

* Qubits live at ``(i, j, s)`` with column ``i`` in ``[0, L)``, row ``j`` in
  ``[0, H)`` and sublattice ``s`` (0 = black, 1 = white); all indices wrap.
* Plaquette ``(i, j)`` touches black sites ``{(i,j), (i,j+1), (i+1,j+1)}``
  and white sites ``{(i+1,j), (i+1,j-1), (i,j-1)}``.  With this choice a
  single Z on black ``(i,j)`` excites exactly the A-plaquettes
  ``(i,j), (i,j-1), (i-1,j-1)``, and a single Z on white ``(i,j)`` excites
  the B-plaquettes ``(i-1,j), (i-1,j+1), (i,j+1)`` — the point reflection
  of the black rule, anchored one column over.  The one-column anchor is
  forced: with it the horizontal string operators pick up independent
  black- and white-side pairings against the tiling operators, which is
  what the commutation table of the eight string logicals requires.
* A-stabilizers act as X on their black sites and Z on their white sites;
  B-stabilizers act as Z on black and Y on white.

Frames are stored as symplectic bit planes: ``x[s, j, i]`` and
``z[s, j, i]`` uint8 arrays of shape ``(2, H, L)``; Y on a qubit means both
planes are set there, and composition of frames is plane-wise XOR.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import IntEnum
from typing import List, Optional, Tuple

import numpy as np

from .errors import ConfigError, DimensionError


class Sublattice(IntEnum):
    BLACK = 0
    WHITE = 1


BLACK = Sublattice.BLACK
WHITE = Sublattice.WHITE

PAULI_LETTERS = ("X", "Y", "Z")


@dataclass(frozen=True)
class LatticeDims:
    """Lattice extents; L columns and H rows, each a multiple of three."""

    L: int
    H: int

    def __post_init__(self):
        if self.L < 3 or self.H < 3:
            raise DimensionError(f"lattice {self.L}x{self.H} too small")
        if self.L % 3 or self.H % 3:
            raise DimensionError(
                f"lattice {self.L}x{self.H} breaks three-colorability "
                "(both sides must be multiples of 3)"
            )

    @property
    def N(self) -> int:
        return 2 * self.L * self.H

    def wrap(self, i: int, j: int) -> Tuple[int, int]:
        return i % self.L, j % self.H


def build_lattice(L: int, H: int) -> LatticeDims:
    """Validate and construct lattice dimensions (raises DimensionError)."""
    return LatticeDims(L, H)


@dataclass(frozen=True)
class QubitCoord:
    i: int
    j: int
    s: Sublattice

    def reduced(self, dims: LatticeDims) -> "QubitCoord":
        i, j = dims.wrap(self.i, self.j)
        return QubitCoord(i, j, Sublattice(self.s))


def plaquettes_of(q: QubitCoord, dims: LatticeDims) -> List[Tuple[int, int]]:
    """The three plaquettes containing qubit q (wrapped coordinates)."""
    if q.s == BLACK:
        raw = [(q.i, q.j), (q.i, q.j - 1), (q.i - 1, q.j - 1)]
    else:
        raw = [(q.i - 1, q.j), (q.i - 1, q.j + 1), (q.i, q.j + 1)]
    return [dims.wrap(i, j) for i, j in raw]


def stabilizer_support(
    dims: LatticeDims, kind: str, i: int, j: int
) -> List[Tuple[QubitCoord, str]]:
    """Support of stabilizer A/B at plaquette (i, j): 6 (site, letter) pairs."""
    if kind not in ("A", "B"):
        raise ValueError(f"stabilizer kind must be 'A' or 'B', got {kind!r}")
    black_letter = "X" if kind == "A" else "Z"
    white_letter = "Z" if kind == "A" else "Y"
    black_sites = [(i, j), (i, j + 1), (i + 1, j + 1)]
    white_sites = [(i + 1, j), (i + 1, j - 1), (i, j - 1)]
    out = []
    for p, q in black_sites:
        pi, pj = dims.wrap(p, q)
        out.append((QubitCoord(pi, pj, BLACK), black_letter))
    for p, q in white_sites:
        pi, pj = dims.wrap(p, q)
        out.append((QubitCoord(pi, pj, WHITE), white_letter))
    return out


def _letter_planes(letter: str) -> Tuple[int, int]:
    """(x_component, z_component) of a Pauli letter."""
    if letter == "X":
        return 1, 0
    if letter == "Y":
        return 1, 1
    if letter == "Z":
        return 0, 1
    raise ValueError(f"not a Pauli letter: {letter!r}")


@dataclass
class PauliFrame:
    """Symplectic record of a Pauli operator on all 2LH qubits."""

    dims: LatticeDims
    x: np.ndarray = field(repr=False)  # shape (2, H, L) uint8
    z: np.ndarray = field(repr=False)

    @classmethod
    def identity(cls, dims: LatticeDims) -> "PauliFrame":
        shape = (2, dims.H, dims.L)
        return cls(dims, np.zeros(shape, np.uint8), np.zeros(shape, np.uint8))

    def copy(self) -> "PauliFrame":
        return PauliFrame(self.dims, self.x.copy(), self.z.copy())

    def compose(self, other: "PauliFrame") -> "PauliFrame":
        """Frame of the product operator (bitwise XOR of both planes)."""
        if self.dims != other.dims:
            raise ValueError("frames on different lattices")
        return PauliFrame(self.dims, self.x ^ other.x, self.z ^ other.z)

    __xor__ = compose

    def apply_pauli(self, q: QubitCoord, letter: str) -> "PauliFrame":
        """Frame after multiplying by a single Pauli (an involution)."""
        q = q.reduced(self.dims)
        xc, zc = _letter_planes(letter)
        out = self.copy()
        out.x[q.s, q.j, q.i] ^= xc
        out.z[q.s, q.j, q.i] ^= zc
        return out

    def weight(self) -> int:
        """Number of qubits acted on non-trivially."""
        return int(np.count_nonzero(self.x | self.z))

    def is_identity(self) -> bool:
        return not (self.x.any() or self.z.any())

    def is_pure_z(self) -> bool:
        return not self.x.any()

    def same_as(self, other: "PauliFrame") -> bool:
        return (
            self.dims == other.dims
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.z, other.z)
        )

    def key(self) -> bytes:
        """Hashable content snapshot (for caching decode outcomes)."""
        return self.x.tobytes() + self.z.tobytes()

    def letter_at(self, q: QubitCoord) -> str:
        q = q.reduced(self.dims)
        xc = self.x[q.s, q.j, q.i]
        zc = self.z[q.s, q.j, q.i]
        return {(0, 0): "I", (1, 0): "X", (1, 1): "Y", (0, 1): "Z"}[(int(xc), int(zc))]

    # -- serialization (documented wire format) ----------------------------
    #
    # JSON object {"L":, "H":, "x_plane": hex, "z_plane": hex}.  Bit k of a
    # plane is qubit (i, j, s) with k = s*L*H + j*L + i (black plane first,
    # row-major); bits pack little-endian into bytes, bytes render as hex.

    def _pack_plane(self, plane: np.ndarray) -> str:
        flat = plane.reshape(-1)
        return np.packbits(flat, bitorder="little").tobytes().hex()

    @staticmethod
    def _unpack_plane(hexstr: str, dims: LatticeDims) -> np.ndarray:
        raw = np.frombuffer(bytes.fromhex(hexstr), dtype=np.uint8)
        n = 2 * dims.H * dims.L
        if raw.size * 8 < n:
            raise ValueError("plane hex string too short")
        bits = np.unpackbits(raw, bitorder="little")[:n]
        return bits.reshape(2, dims.H, dims.L).astype(np.uint8)

    def to_json(self) -> str:
        return json.dumps(
            {
                "L": self.dims.L,
                "H": self.dims.H,
                "x_plane": self._pack_plane(self.x),
                "z_plane": self._pack_plane(self.z),
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "PauliFrame":
        obj = json.loads(text)
        dims = build_lattice(int(obj["L"]), int(obj["H"]))
        x = cls._unpack_plane(obj["x_plane"], dims)
        z = cls._unpack_plane(obj["z_plane"], dims)
        return cls(dims, x, z)


def apply_pauli(frame: PauliFrame, q: QubitCoord, letter: str) -> PauliFrame:
    return frame.apply_pauli(q, letter)


@dataclass
class Syndrome:
    """Defect bit planes over the plaquette grid (1 = excited)."""

    dims: LatticeDims
    a: np.ndarray = field(repr=False)  # (H, L) uint8, A-type defects
    b: np.ndarray = field(repr=False)

    @classmethod
    def zeros(cls, dims: LatticeDims) -> "Syndrome":
        return cls(dims, np.zeros((dims.H, dims.L), np.uint8), np.zeros((dims.H, dims.L), np.uint8))

    def __xor__(self, other: "Syndrome") -> "Syndrome":
        return Syndrome(self.dims, self.a ^ other.a, self.b ^ other.b)

    def is_zero(self) -> bool:
        return not (self.a.any() or self.b.any())

    def weight(self) -> int:
        return int(self.a.sum()) + int(self.b.sum())

    def same_as(self, other: "Syndrome") -> bool:
        return np.array_equal(self.a, other.a) and np.array_equal(self.b, other.b)

    # JSON wire form mirrors PauliFrame: row-major bits, little-endian
    # within bytes, hex-rendered, one string per defect plane.

    def to_json(self) -> str:
        return json.dumps(
            {
                "L": self.dims.L,
                "H": self.dims.H,
                "a": np.packbits(self.a.reshape(-1), bitorder="little").tobytes().hex(),
                "b": np.packbits(self.b.reshape(-1), bitorder="little").tobytes().hex(),
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "Syndrome":
        obj = json.loads(text)
        dims = build_lattice(int(obj["L"]), int(obj["H"]))
        n = dims.H * dims.L
        planes = []
        for key in ("a", "b"):
            raw = np.frombuffer(bytes.fromhex(obj[key]), dtype=np.uint8)
            if raw.size * 8 < n:
                raise ValueError(f"plane {key!r} hex string too short")
            planes.append(
                np.unpackbits(raw, bitorder="little")[:n].reshape(dims.H, dims.L).astype(np.uint8)
            )
        return cls(dims, planes[0], planes[1])


def syndrome(frame: PauliFrame) -> Syndrome:
    """Defect configuration of a frame (linear under frame composition)."""
    zb = frame.z[BLACK]
    xb = frame.x[BLACK]
    zw = frame.z[WHITE]
    xw = frame.x[WHITE]
    # A at (i,j): X on black {(i,j),(i,j+1),(i+1,j+1)}, Z on white
    # {(i+1,j),(i+1,j-1),(i,j-1)}; anticommutation picks up z-components
    # on the black sites and x-components on the white sites.
    a = (
        zb
        ^ np.roll(zb, -1, axis=0)
        ^ np.roll(zb, (-1, -1), axis=(0, 1))
        ^ np.roll(xw, -1, axis=1)
        ^ np.roll(xw, (1, -1), axis=(0, 1))
        ^ np.roll(xw, 1, axis=0)
    )
    yw = xw ^ zw
    b = (
        xb
        ^ np.roll(xb, -1, axis=0)
        ^ np.roll(xb, (-1, -1), axis=(0, 1))
        ^ np.roll(yw, -1, axis=1)
        ^ np.roll(yw, (1, -1), axis=(0, 1))
        ^ np.roll(yw, 1, axis=0)
    )
    return Syndrome(frame.dims, a, b)


def _toggles(letter: str, s: Sublattice) -> Tuple[int, int]:
    """(toggle_a, toggle_b): which defect planes a letter flips at its plaquettes."""
    xc, zc = _letter_planes(letter)
    if s == BLACK:
        # A carries X on black (anticommutes with z-component), B carries Z.
        return zc, xc
    # A carries Z on white (anticommutes with x-component), B carries Y.
    return xc, xc ^ zc


def energy(syn: Syndrome) -> int:
    """Total energy: each excited A, B, or A-xor-B term costs +1."""
    a = syn.a.astype(np.int64)
    b = syn.b.astype(np.int64)
    return int((a + b + (a ^ b)).sum())


def local_energy_change(frame: PauliFrame, q: QubitCoord, letter: str) -> int:
    """Energy change of multiplying the frame by one Pauli letter at q.

    Depends only on the defect bits of the (at most 3) plaquettes adjacent
    to q; returns an even integer in [-6, +6].
    """
    q = q.reduced(frame.dims)
    syn = syndrome(frame)
    ta, tb = _toggles(letter, q.s)
    delta = 0
    for (pi, pj) in plaquettes_of(q, frame.dims):
        a = int(syn.a[pj, pi])
        b = int(syn.b[pj, pi])
        before = 0 if (a == 0 and b == 0) else 2
        a2, b2 = a ^ ta, b ^ tb
        after = 0 if (a2 == 0 and b2 == 0) else 2
        delta += after - before
    return delta


@dataclass(frozen=True)
class NoiseParams:
    """Pauli noise rates (per unit time per qubit) and per-interval probabilities."""

    gamma_x: float = 0.0
    gamma_y: float = 0.0
    gamma_z: float = 0.0
    p_x: float = 0.0
    p_y: float = 0.0
    p_z: float = 0.0

    def __post_init__(self):
        for name in ("gamma_x", "gamma_y", "gamma_z"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        for name in ("p_x", "p_y", "p_z"):
            v = getattr(self, name)
            if not 0.0 <= v <= 0.5:
                raise ConfigError(f"{name} must lie in [0, 1/2]")

    @property
    def gamma_tot(self) -> float:
        return self.gamma_x + self.gamma_y + self.gamma_z

    @property
    def p_tot(self) -> float:
        return self.p_x + self.p_y + self.p_z

    @property
    def zeta(self) -> float:
        """Bias ratio gamma_z / gamma_y (inf at pure dephasing)."""
        if self.gamma_y == 0.0:
            return math.inf
        return self.gamma_z / self.gamma_y

    @property
    def zeta_p(self) -> float:
        if self.p_y == 0.0:
            return math.inf
        return self.p_z / self.p_y

    @classmethod
    def infinite_bias(cls, gamma_z: float) -> "NoiseParams":
        return cls(gamma_z=gamma_z)

    @classmethod
    def from_bias(cls, gamma_tot: float, zeta: float) -> "NoiseParams":
        """Split a total rate into Y+Z parts with bias zeta = gamma_z/gamma_y."""
        if gamma_tot < 0:
            raise ConfigError("gamma_tot must be >= 0")
        if math.isinf(zeta):
            return cls(gamma_z=gamma_tot)
        if zeta <= 0:
            raise ConfigError("zeta must be positive")
        gamma_y = gamma_tot / (zeta + 1.0)
        return cls(gamma_y=gamma_y, gamma_z=gamma_tot - gamma_y)


def all_qubits(dims: LatticeDims):
    """Iterate every qubit coordinate (black plane first, row-major)."""
    for s in (BLACK, WHITE):
        for j in range(dims.H):
            for i in range(dims.L):
                yield QubitCoord(i, j, s)


def random_frame(dims: LatticeDims, rng: np.random.Generator) -> PauliFrame:
    """Uniformly random frame (for linearity/property tests)."""
    shape = (2, dims.H, dims.L)
    return PauliFrame(
        dims,
        rng.integers(0, 2, size=shape, dtype=np.uint8),
        rng.integers(0, 2, size=shape, dtype=np.uint8),
    )
