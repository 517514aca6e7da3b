"""Tests for the cluster-growing decoder."""

import numpy as np
import pytest

from xyzca.errors import DecoderFailure, NotNeutral
from xyzca.lattice import (
    BLACK,
    WHITE,
    PauliFrame,
    QubitCoord,
    Syndrome,
    build_lattice,
    syndrome,
)
from xyzca.logicals import get_logical_set, logical_class
from xyzca.rg_decoder import Cluster, cluster_defects, neutralize_cluster, rg_decode


def random_yz_frame(dims, rng, p_y, p_z) -> PauliFrame:
    f = PauliFrame.identity(dims)
    u = rng.random((2, dims.H, dims.L))
    y_mask = u < p_y
    z_mask = (u >= p_y) & (u < p_y + p_z)
    f.x[y_mask] = 1
    f.z[y_mask | z_mask] = 1
    return f


def test_cluster_empty_syndrome():
    dims = build_lattice(6, 9)
    assert cluster_defects(Syndrome.zeros(dims), 0) == []


def test_cluster_adjacent_defects_linked_at_level0():
    dims = build_lattice(12, 15)
    syn = Syndrome.zeros(dims)
    syn.a[3, 4] = 1
    syn.a[4, 5] = 1  # Chebyshev distance 1
    clusters = cluster_defects(syn, 0)
    assert len(clusters) == 1 and len(clusters[0].defects) == 2


def test_cluster_levels_merge_with_distance():
    dims = build_lattice(24, 27)
    syn = Syndrome.zeros(dims)
    syn.a[0, 0] = 1
    syn.a[0, 5] = 1  # distance 5 on the torus
    assert len(cluster_defects(syn, 1)) == 2  # radius 2
    assert len(cluster_defects(syn, 3)) == 1  # radius 8


def test_cluster_distance_wraps_around_torus():
    dims = build_lattice(12, 15)
    syn = Syndrome.zeros(dims)
    syn.a[0, 0] = 1
    syn.a[14, 11] = 1  # Chebyshev distance 1 across both wraps
    clusters = cluster_defects(syn, 0)
    assert len(clusters) == 1
    # The covering box wraps too.
    (i0, j0, w, h) = clusters[0].box
    assert (w, h) == (2, 2) and (i0, j0) == (11, 14)


def test_neutralize_single_z_cluster():
    dims = build_lattice(12, 15)
    e = PauliFrame.identity(dims).apply_pauli(QubitCoord(4, 7, BLACK), "Z")
    syn = syndrome(e)
    (cluster,) = cluster_defects(syn, 0)
    frame = neutralize_cluster(cluster, dims)
    assert syndrome(frame).same_as(syn)
    assert frame.weight() == 1


def test_neutralize_single_y_cluster():
    dims = build_lattice(12, 15)
    for sub in (BLACK, WHITE):
        e = PauliFrame.identity(dims).apply_pauli(QubitCoord(2, 3, sub), "Y")
        syn = syndrome(e)
        (cluster,) = cluster_defects(syn, 0)
        frame = neutralize_cluster(cluster, dims)
        assert syndrome(frame).same_as(syn)


def test_lone_defect_is_not_neutral():
    dims = build_lattice(12, 15)
    syn = Syndrome.zeros(dims)
    syn.a[5, 5] = 1
    (cluster,) = cluster_defects(syn, 0)
    with pytest.raises(NotNeutral):
        neutralize_cluster(cluster, dims)


def test_rg_decode_empty():
    dims = build_lattice(12, 15)
    assert rg_decode(Syndrome.zeros(dims), dims).is_identity()


def test_rg_decode_z_plus_far_y():
    dims = build_lattice(12, 15)
    ls = get_logical_set(12, 15)
    e = PauliFrame.identity(dims).apply_pauli(QubitCoord(1, 1, BLACK), "Z")
    e = e.apply_pauli(QubitCoord(7, 8, WHITE), "Y")
    c = rg_decode(syndrome(e), dims)
    assert syndrome(c).same_as(syndrome(e))
    assert logical_class(e ^ c, ls).trivial


def test_rg_decode_heralds_unreachable_syndrome():
    dims = build_lattice(12, 15)
    syn = Syndrome.zeros(dims)
    syn.a[5, 5] = 1
    with pytest.raises(DecoderFailure):
        rg_decode(syn, dims)


@pytest.mark.parametrize("dims_lh,p", [((12, 15), 0.03), ((12, 15), 0.10), ((24, 27), 0.05)])
def test_rg_decode_soundness_random(dims_lh, p):
    # Whenever a frame is returned its syndrome equals the input syndrome.
    dims = build_lattice(*dims_lh)
    rng = np.random.default_rng(dims_lh[0] * 1000 + int(p * 100))
    for _ in range(60):
        e = random_yz_frame(dims, rng, p / 11, 10 * p / 11)
        syn = syndrome(e)
        try:
            c = rg_decode(syn, dims)
        except DecoderFailure:
            continue
        assert syndrome(c).same_as(syn)


def test_rg_decode_bias_agnostic_determinism():
    # Identical syndromes decode identically however they were produced.
    dims = build_lattice(12, 15)
    rng = np.random.default_rng(3)
    e = random_yz_frame(dims, rng, 0.01, 0.05)
    syn = syndrome(e)
    c1 = rg_decode(syn, dims)
    c2 = rg_decode(Syndrome(dims, syn.a.copy(), syn.b.copy()), dims)
    assert c1.same_as(c2)
