"""Renormalization-group cluster decoder: the bias-agnostic global benchmark.

Defects are grouped into connected components under Chebyshev linking
distance 2^level on the torus.  Each cluster is neutralized, if possible,
by solving for a correction supported on the cluster's bounding box whose
syndrome reproduces exactly the cluster's defects; clusters that cannot be
neutralized are deferred to the next level, where the linking distance
doubles.  Defects surviving the top level (box = whole torus) are heralded
as a decoder failure.

The decoder consumes no noise parameters: identical syndromes give
identical outputs at every bias.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import DecoderFailure, NotNeutral
from .gf2 import PackedSolver
from .lattice import BLACK, WHITE, LatticeDims, PauliFrame, Syndrome, build_lattice

# Box side buckets: boxes are padded up to these sizes so the per-shape
# linear solvers can be cached and reused; anything larger uses the full
# torus extent.
_BOX_BUCKETS = (2, 4, 8, 16, 32)


@dataclass
class Cluster:
    """A connected set of defects with its covering torus rectangle."""

    defects: List[Tuple[int, int, int]]  # (kind, i, j); kind 0 = A, 1 = B
    box: Tuple[int, int, int, int]  # (i0, j0, width, height)
    level: int


def _defect_list(syn: Syndrome) -> List[Tuple[int, int, int]]:
    out = []
    for kind, plane in ((0, syn.a), (1, syn.b)):
        js, cols = np.nonzero(plane)
        for j, i in sorted(zip(js.tolist(), cols.tolist())):
            out.append((kind, i, j))
    out.sort(key=lambda d: (d[0], d[2], d[1]))
    return out


def _torus_cover_interval(vals: List[int], period: int) -> Tuple[int, int]:
    """Smallest wrapped interval [start, start+span) covering all values."""
    uniq = sorted(set(vals))
    if len(uniq) == 1:
        return uniq[0], 1
    gaps = [(uniq[k + 1] - uniq[k], k) for k in range(len(uniq) - 1)]
    gaps.append((uniq[0] + period - uniq[-1], len(uniq) - 1))
    gap, k = max(gaps)
    if k == len(uniq) - 1:  # largest gap is the wrap gap
        return uniq[0], uniq[-1] - uniq[0] + 1
    return uniq[k + 1], period - gap + 1


def cluster_defects(syn: Syndrome, level: int) -> List[Cluster]:
    """Partition defects into components linked within Chebyshev 2^level."""
    if level < 0:
        raise ValueError("level must be >= 0")
    dims = syn.dims
    defects = _defect_list(syn)
    if not defects:
        return []
    radius = 1 << level
    pos = np.array([(i, j) for _, i, j in defects], dtype=np.int64)
    di = np.abs(pos[:, 0, None] - pos[None, :, 0])
    dj = np.abs(pos[:, 1, None] - pos[None, :, 1])
    di = np.minimum(di, dims.L - di)
    dj = np.minimum(dj, dims.H - dj)
    adj = np.maximum(di, dj) <= radius
    n_comp, labels = connected_components(csr_matrix(adj), directed=False)
    clusters = []
    for c in range(n_comp):
        members = [defects[k] for k in np.nonzero(labels == c)[0]]
        i0, w = _torus_cover_interval([d[1] for d in members], dims.L)
        j0, h = _torus_cover_interval([d[2] for d in members], dims.H)
        clusters.append(Cluster(members, (i0, j0, w, h), level))
    clusters.sort(key=lambda cl: (cl.defects[0][0], cl.defects[0][2], cl.defects[0][1]))
    return clusters


def _bucket(side: int, full: int) -> int:
    for b in _BOX_BUCKETS:
        if side <= b < full:
            return b
    return full


@lru_cache(maxsize=None)
def _box_solver(L: int, H: int, w: int, h: int) -> PackedSolver:
    """Syndrome map of a w-by-h box of qubits onto its halo of plaquettes.

    Template anchored at box origin (1, 1) / equation origin (0, 0); the
    map is translation invariant so one solver serves every placement.
    """
    dims = build_lattice(L, H)
    ew, eh = min(w + 2, L), min(h + 2, H)
    n_eq = 2 * ew * eh
    n_var = 4 * w * h
    m = np.zeros((n_eq, n_var), dtype=np.uint8)

    def eq_index(kind: int, pi: int, pj: int) -> Optional[int]:
        ec = pi % L
        er = pj % H
        if ec >= ew or er >= eh:
            return None
        return kind * eh * ew + er * ew + ec

    var = 0
    for s in (BLACK, WHITE):
        for plane in ("x", "z"):
            for qr in range(h):
                for qc in range(w):
                    p, q = 1 + qc, 1 + qr
                    if s == BLACK:
                        triple = [(p, q), (p, q - 1), (p - 1, q - 1)]
                        targets = {"x": ["b"], "z": ["a"]}[plane]
                    else:
                        triple = [(p - 1, q), (p - 1, q + 1), (p, q + 1)]
                        targets = {"x": ["a", "b"], "z": ["b"]}[plane]
                    for t in targets:
                        kind = 0 if t == "a" else 1
                        for (pi, pj) in triple:
                            idx = eq_index(kind, pi, pj)
                            if idx is not None:
                                m[idx, var] ^= 1
                    var += 1
    return PackedSolver(m)


def neutralize_cluster(cluster: Cluster, dims: LatticeDims) -> PauliFrame:
    """Correction supported on the cluster's box reproducing its defects.

    Raises :class:`NotNeutral` when no such correction exists, deferring
    the cluster to the next level.
    """
    i0, j0, w, h = cluster.box
    w = _bucket(w, dims.L)
    h = _bucket(h, dims.H)
    ew, eh = min(w + 2, dims.L), min(h + 2, dims.H)
    solver = _box_solver(dims.L, dims.H, w, h)
    oi, oj = (i0 - 1) % dims.L, (j0 - 1) % dims.H
    rhs = np.zeros(solver.n_rows, dtype=np.uint8)
    for kind, i, j in cluster.defects:
        ec = (i - oi) % dims.L
        er = (j - oj) % dims.H
        if ec >= ew or er >= eh:
            raise AssertionError("cluster defect escaped its own box halo")
        rhs[kind * eh * ew + er * ew + ec] ^= 1
    x = solver.solve(rhs)
    if x is None:
        raise NotNeutral(f"cluster at box {cluster.box} not locally correctable")
    f = PauliFrame.identity(dims)
    var = 0
    for s in (BLACK, WHITE):
        for plane_name in ("x", "z"):
            plane = f.x if plane_name == "x" else f.z
            for qr in range(h):
                for qc in range(w):
                    if x[var]:
                        plane[s, (j0 + qr) % dims.H, (i0 + qc) % dims.L] ^= 1
                    var += 1
    return f


def max_level(dims: LatticeDims) -> int:
    return int(math.ceil(math.log2(max(dims.L, dims.H))))


def rg_decode(syn: Syndrome, dims: LatticeDims) -> PauliFrame:
    """Neutralize clusters at geometrically growing scales.

    Returns a frame whose syndrome equals the input; raises
    :class:`DecoderFailure` if defects survive the top level.
    """
    if syn.dims != dims:
        raise ValueError("syndrome dims mismatch")
    remaining = Syndrome(dims, syn.a.copy(), syn.b.copy())
    total = PauliFrame.identity(dims)
    for level in range(max_level(dims) + 1):
        if remaining.is_zero():
            break
        for cluster in cluster_defects(remaining, level):
            try:
                frame = neutralize_cluster(cluster, dims)
            except NotNeutral:
                continue
            total = total ^ frame
            for kind, i, j in cluster.defects:
                if kind == 0:
                    remaining.a[j, i] ^= 1
                else:
                    remaining.b[j, i] ^= 1
    if not remaining.is_zero():
        raise DecoderFailure("defects survive the maximum clustering scale")
    return total
