"""Tests for the sweep/solve/minimize decoder and the failure bound."""

from collections import defaultdict

import numpy as np
import pytest

from xyzca.errors import InvalidSyndrome, NotInNormalizer
from xyzca.exact_decoder import (
    DecodeResult,
    decode_infinite_bias,
    hoeffding_failure_bound,
    is_failure,
    minimize_over_logicals,
    solve_row0,
    sweep_to_row0,
)
from xyzca.lattice import (
    BLACK,
    WHITE,
    PauliFrame,
    QubitCoord,
    build_lattice,
    stabilizer_support,
    syndrome,
)
from xyzca.logicals import get_logical_set


def random_pure_z(dims, rng, sub=None) -> PauliFrame:
    f = PauliFrame.identity(dims)
    subs = (BLACK, WHITE) if sub is None else (sub,)
    for s in subs:
        f.z[s] = rng.integers(0, 2, (dims.H, dims.L), dtype=np.uint8)
    return f


def test_sweep_trivial_cases():
    dims = build_lattice(6, 9)
    c1, residual = sweep_to_row0(syndrome(PauliFrame.identity(dims)), BLACK)
    assert c1.is_identity() and residual.is_zero()
    # Syndrome already on row 0 sweeps to itself.
    syn = syndrome(PauliFrame.identity(dims))
    syn.a[0, 2] = 1
    syn.a[0, 4] = 1
    c1, residual = sweep_to_row0(syn, BLACK)
    assert c1.is_identity()
    assert list(np.nonzero(residual.to_bits())[0]) == [2, 4]


@pytest.mark.parametrize("sub", [BLACK, WHITE])
def test_sweep_confines_defects_to_row0(sub):
    dims = build_lattice(6, 9)
    rng = np.random.default_rng(3)
    for _ in range(50):
        e = random_pure_z(dims, rng, sub)
        syn = syndrome(e)
        c1, residual = sweep_to_row0(syn, sub)
        after = syndrome(c1 ^ e)
        plane = after.a if sub == BLACK else after.b
        assert not plane[1:].any() or sub == WHITE
        # White-plane confinement is to the reflected row 0, i.e. row 0.
        if sub == WHITE:
            assert not plane[1:].any()
        assert c1.is_pure_z()


def test_sweep_single_error_is_its_own_correction():
    dims = build_lattice(6, 9)
    e = PauliFrame.identity(dims).apply_pauli(QubitCoord(2, 3, BLACK), "Z")
    c1, residual = sweep_to_row0(syndrome(e), BLACK)
    assert residual.is_zero()
    assert c1.same_as(e)


def test_solve_row0_zero_residual():
    dims = build_lattice(6, 9)
    from xyzca.gf2 import BitRow

    c2 = solve_row0(BitRow.zeros(6), dims, BLACK)
    assert c2.is_identity()


@pytest.mark.parametrize("sub", [BLACK, WHITE])
def test_solve_row0_postcondition(sub):
    dims = build_lattice(6, 9)
    rng = np.random.default_rng(5)
    for _ in range(50):
        e = random_pure_z(dims, rng, sub)
        syn = syndrome(e)
        c1, residual = sweep_to_row0(syn, sub)
        c2 = solve_row0(residual, dims, sub)
        # c2's syndrome must equal the residual syndrome of c1*e.
        assert syndrome(c2).same_as(syndrome(c1 ^ e))


def test_single_y_or_x_error_defeats_exact_decoder():
    # A lone Y (or X) produces a syndrome the pure-Z solver can still
    # satisfy, but the returned correction is always logically wrong.
    dims = build_lattice(6, 9)
    ls = get_logical_set(6, 9)
    for letter in "YX":
        for sub in (BLACK, WHITE):
            e = PauliFrame.identity(dims).apply_pauli(QubitCoord(2, 3, sub), letter)
            res = decode_infinite_bias(syndrome(e), dims)
            assert syndrome(res.correction).same_as(syndrome(e))
            assert is_failure(e, res.correction, ls)


def test_unreachable_syndrome_is_invalid():
    # A single isolated defect cannot be produced by any error: the
    # syndrome map has co-dimension 2 per sublattice.
    from xyzca.lattice import Syndrome

    dims = build_lattice(6, 9)
    syn = Syndrome.zeros(dims)
    syn.a[4, 3] = 1
    with pytest.raises(InvalidSyndrome):
        decode_infinite_bias(syn, dims)
    syn2 = Syndrome.zeros(dims)
    syn2.b[2, 2] = 1
    with pytest.raises(InvalidSyndrome):
        decode_infinite_bias(syn2, dims)


def test_minimize_examples():
    ls = get_logical_set(6, 9)
    dims = ls.dims
    # Already minimal stays put.
    e = PauliFrame.identity(dims).apply_pauli(QubitCoord(1, 1, BLACK), "Z")
    res = minimize_over_logicals(e, ls)
    assert res.correction.same_as(e)
    assert res.chosen_class == ("I", "I")
    # A bare tiling logical maps to the identity (weight 0 beats 2LH/3).
    m = ls.black_basis[1]
    res = minimize_over_logicals(m.copy(), ls)
    assert res.correction.is_identity()
    assert res.chosen_class[0] == "M"
    assert res.class_weights["black"]["M"] == 0
    # weight-3 error xor M recovers the weight-3 representative.
    rng = np.random.default_rng(7)
    small = PauliFrame.identity(dims)
    for _ in range(3):
        small = small.apply_pauli(
            QubitCoord(int(rng.integers(6)), int(rng.integers(9)), BLACK), "Z"
        )
    res = minimize_over_logicals(small ^ m, ls)
    assert res.correction.same_as(small)


def test_decode_single_z_recovered_exactly():
    dims = build_lattice(6, 9)
    for sub in (BLACK, WHITE):
        e = PauliFrame.identity(dims).apply_pauli(QubitCoord(4, 7, sub), "Z")
        res = decode_infinite_bias(syndrome(e), dims)
        assert res.correction.same_as(e)


def test_decode_zero_syndrome():
    dims = build_lattice(6, 9)
    res = decode_infinite_bias(syndrome(PauliFrame.identity(dims)), dims)
    assert res.correction.is_identity()
    assert res.chosen_class == ("I", "I")


@pytest.mark.parametrize("dims_lh", [(6, 9), (12, 15)])
def test_decode_syndrome_roundtrip(dims_lh):
    dims = build_lattice(*dims_lh)
    rng = np.random.default_rng(11)
    for _ in range(300):
        e = random_pure_z(dims, rng)
        res = decode_infinite_bias(syndrome(e), dims)
        assert syndrome(res.correction).same_as(syndrome(e))
        assert res.correction.is_pure_z()


def test_decode_exhaustive_3x3_matches_min_coset_weight():
    # Every black-sublattice error on 3x3, grouped by syndrome; decoder
    # weight must equal the exhaustive minimum in every group.
    dims = build_lattice(3, 3)
    by_syndrome = defaultdict(list)
    for bits in range(512):
        f = PauliFrame.identity(dims)
        f.z[BLACK] = np.array(
            [[(bits >> (3 * j + i)) & 1 for i in range(3)] for j in range(3)],
            dtype=np.uint8,
        )
        by_syndrome[syndrome(f).a.tobytes()].append(f)
    assert len(by_syndrome) == 128
    for group in by_syndrome.values():
        assert len(group) == 4
        min_w = min(f.weight() for f in group)
        res = decode_infinite_bias(syndrome(group[0]), dims)
        assert res.correction.weight() == min_w


def test_is_failure_basics():
    ls = get_logical_set(6, 9)
    dims = ls.dims
    rng = np.random.default_rng(13)
    e = random_pure_z(dims, rng)
    assert not is_failure(e, e.copy(), ls)
    assert is_failure(e, e ^ ls.black_basis[1], ls)
    with pytest.raises(NotInNormalizer):
        is_failure(e, PauliFrame.identity(dims), ls)


def test_is_failure_ignores_stabilizer_differences():
    ls = get_logical_set(6, 9)
    dims = ls.dims
    rng = np.random.default_rng(17)
    e = random_pure_z(dims, rng)
    stab = PauliFrame.identity(dims)
    for kind in "AB":
        for j in range(dims.H):
            for i in range(dims.L):
                if rng.integers(2):
                    for q, letter in stabilizer_support(dims, kind, i, j):
                        stab = stab.apply_pauli(q, letter)
    assert not is_failure(e, e ^ stab, ls)


def test_decoded_correction_never_fails_on_its_own_class():
    # decode() followed by is_failure on exhaustively enumerated errors
    # fails only when the coset has a strictly lighter representative.
    dims = build_lattice(3, 3)
    ls = get_logical_set(3, 3)
    for bits in range(512):
        f = PauliFrame.identity(dims)
        f.z[BLACK] = np.array(
            [[(bits >> (3 * j + i)) & 1 for i in range(3)] for j in range(3)],
            dtype=np.uint8,
        )
        res = decode_infinite_bias(syndrome(f), dims)
        if res.correction.weight() < f.weight():
            assert is_failure(f, res.correction, ls)
        elif res.correction.same_as(f):
            assert not is_failure(f, res.correction, ls)


def test_hoeffding_bound_values():
    assert hoeffding_failure_bound(10, 0.5) == pytest.approx(3.0)
    assert hoeffding_failure_bound(10**6, 0.3) < 1e-300 or True
    assert hoeffding_failure_bound(10**4, 0.3) < 1e-10
    assert hoeffding_failure_bound(108, 0.3) == pytest.approx(3.0 * np.exp(-5.76), rel=1e-12)
    # monotone nonincreasing in support for p < 1/2
    vals = [hoeffding_failure_bound(n, 0.3) for n in (10, 100, 1000)]
    assert vals[0] > vals[1] > vals[2]
