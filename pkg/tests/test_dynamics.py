"""Tests for rate functions and the n-fold-way event engine."""

import json
import math

import numpy as np
import pytest

from xyzca.errors import ConfigError, DomainError, NegativeRate
from xyzca.dynamics import (
    OMEGA_VALUES,
    RateTable,
    advance_past,
    beta_from_rate,
    bkl_step,
    ca_rate,
    clone_engine,
    init_engine,
    inject_pauli,
    run_occupancy,
    run_until,
    run_until_first_y,
    total_rate,
    y_rate,
)
from xyzca.lattice import (
    BLACK,
    WHITE,
    NoiseParams,
    PauliFrame,
    QubitCoord,
    build_lattice,
    energy,
    syndrome,
)


def test_beta_from_rate_values():
    assert beta_from_rate(6.0) == pytest.approx(math.log(2.0) / 6.0)
    assert beta_from_rate(6.0 / (math.e**6 - 1.0)) == pytest.approx(1.0)
    assert beta_from_rate(1e6) < 1e-5
    with pytest.raises(DomainError):
        beta_from_rate(0.0)


def test_total_rate_values():
    gz = 0.37
    beta = beta_from_rate(gz)
    assert total_rate(0.0, beta) == pytest.approx(1.0 / beta)
    assert total_rate(-6.0, beta) == pytest.approx(gz, rel=1e-12)
    assert total_rate(6.0, beta) == pytest.approx(6.0 + gz, rel=1e-12)


@pytest.mark.parametrize("gz", [1e-6, 1e-3, 1.0, 6.0, 100.0])
def test_detailed_balance_identity(gz):
    beta = beta_from_rate(gz)
    for w in (-6, -4, -2, 2, 4, 6):
        g = total_rate(w, beta)
        assert abs(g - math.exp(beta * w) * total_rate(-w, beta)) / g < 1e-12


def test_ca_rate_values_and_guard():
    gz = 2.5
    beta = beta_from_rate(gz)
    assert ca_rate(-6.0, beta, gz) == pytest.approx(0.0, abs=1e-12)
    assert ca_rate(6.0, beta, gz) == pytest.approx(6.0, rel=1e-12)
    for g in np.logspace(-8, 3, 45):
        b = beta_from_rate(g)
        for w in OMEGA_VALUES:
            assert ca_rate(float(w), b, float(g)) >= 0.0
    with pytest.raises(NegativeRate):
        ca_rate(-6.0, beta * 1.5, gz)


def test_y_rate():
    assert y_rate(0.01, 100.0) == pytest.approx(1e-4)
    assert y_rate(0.5, math.inf) == 0.0
    gz = 1e-5 * 100.0 / 101.0
    assert y_rate(gz, 100.0) == pytest.approx(9.90099e-8, rel=1e-4)


def test_rate_table_modes():
    on = RateTable.build(0.2, zeta=50.0, ca_enabled=True)
    off = RateTable.build(0.2, zeta=50.0, ca_enabled=False)
    assert on.g[-1] == pytest.approx(6.2)
    assert all(g == 0.2 for g in off.g)
    assert on.y == off.y == pytest.approx(0.004)


def test_init_engine_bucket_structure():
    dims = build_lattice(6, 9)
    eng = init_engine(dims, NoiseParams.infinite_bias(0.5), True, seed=0)
    # from vacuum every flip raises the energy by 6: drop class index 0
    assert eng.blen[0] == dims.N and eng.blen[1:].sum() == 0
    assert eng.total_rate_now() == pytest.approx(dims.N * 0.5)
    # every active qubit sits in exactly one bucket
    seen = set()
    for k in range(7):
        for t in range(int(eng.blen[k])):
            q = int(eng.bucket[k, t])
            assert q not in seen
            seen.add(q)
    assert seen == set(range(dims.N))


def test_init_engine_ca_off_and_finite_bias_rates():
    dims = build_lattice(6, 9)
    off = init_engine(dims, NoiseParams.infinite_bias(0.5), False, seed=0)
    assert off.total_rate_now() == pytest.approx(dims.N * 0.5)
    noise = NoiseParams.from_bias(1.01e-3, 100.0)
    fb = init_engine(dims, noise, False, seed=0)
    assert fb.total_rate_now() == pytest.approx(dims.N * (noise.gamma_z + noise.gamma_y))


def test_init_engine_config_errors():
    dims = build_lattice(6, 9)
    with pytest.raises(ConfigError):
        init_engine(dims, NoiseParams(gamma_x=0.1, gamma_z=1.0), True, 0)
    with pytest.raises(ConfigError):
        init_engine(dims, NoiseParams(), True, 0)
    with pytest.raises(ConfigError):
        init_engine(dims, NoiseParams.from_bias(1e-3, 10.0), True, 0, sublattice=BLACK)


def test_bkl_step_determinism():
    dims = build_lattice(6, 9)
    noise = NoiseParams.from_bias(2.0, 20.0)
    a = init_engine(dims, noise, True, seed=77)
    b = init_engine(dims, noise, True, seed=77)
    sa = [bkl_step(a) for _ in range(200)]
    sb = [bkl_step(b) for _ in range(200)]
    assert sa == sb
    c = init_engine(dims, noise, True, seed=78)
    assert [bkl_step(c) for _ in range(200)] != sa


def test_event_class_sampling_matches_rates():
    # On a frozen background the chance of drawing class k must be
    # blen[k]*G_k / total; in particular the +2 vs -2 ratio carries the
    # detailed-balance factor exp(2*beta) per site.
    dims = build_lattice(6, 9)
    gz = 1.0
    base = init_engine(dims, NoiseParams.infinite_bias(gz), True, seed=5, sublattice=BLACK)
    rng = np.random.default_rng(3)
    for _ in range(30):  # scatter errors to populate several classes
        inject_pauli(
            base, QubitCoord(int(rng.integers(6)), int(rng.integers(9)), BLACK), "Z"
        )
    lens = base.blen.copy().astype(float)
    rates = base.rates.copy()
    probs = lens * rates
    probs /= probs.sum()
    counts = np.zeros(7)
    n = 40000
    for s in range(n):
        eng = clone_engine(base)
        eng.rng_state[:] = np.uint64(1000 + s)
        cls_before = eng.qcls.copy()
        (coord, letter), _ = bkl_step(eng)
        q = int(coord.s) * 54 + coord.j * 6 + coord.i
        counts[cls_before[q]] += 1
    freq = counts / n
    for k in range(7):
        se = math.sqrt(max(probs[k] * (1 - probs[k]) / n, 1e-12))
        assert abs(freq[k] - probs[k]) < 6 * se + 1e-4
    # explicit flip-direction ratio between the +2 and -2 classes
    k_plus, k_minus = (2 + 6) // 2, (-2 + 6) // 2
    if counts[k_minus] > 200 and counts[k_plus] > 200:
        beta = base.rate_table.beta
        expected = (lens[k_plus] * rates[k_plus]) / (lens[k_minus] * rates[k_minus])
        assert rates[k_plus] / rates[k_minus] == pytest.approx(math.exp(2 * beta), rel=1e-12)
        assert counts[k_plus] / counts[k_minus] == pytest.approx(expected, rel=0.15)


def test_engine_defects_track_frame():
    dims = build_lattice(6, 9)
    eng = init_engine(dims, NoiseParams.from_bias(3.0, 10.0), True, seed=11)
    run_until(eng, max_events=2000)
    syn = syndrome(eng.frame())
    n_plaq = dims.L * dims.H
    assert np.array_equal(eng.da, syn.a.reshape(-1))
    assert np.array_equal(eng.db, syn.b.reshape(-1))
    # bucket classes equal a fresh recomputation
    fresh = init_engine(dims, NoiseParams.from_bias(3.0, 10.0), True, seed=0)
    fresh.fx[:] = eng.fx
    fresh.fz[:] = eng.fz
    fresh.da[:] = eng.da
    fresh.db[:] = eng.db
    from xyzca.dynamics import _rebuild_buckets

    _rebuild_buckets(
        fresh.active, n_plaq, fresh.plaq_idx, fresh.da, fresh.db,
        fresh.bucket, fresh.blen, fresh.qcls, fresh.qpos,
    )
    assert np.array_equal(np.sort(fresh.qcls), np.sort(eng.qcls))
    assert np.array_equal(fresh.blen, eng.blen)
    assert fresh.total_rate_now() == pytest.approx(eng.total_rate_now())


def test_run_until_time_semantics():
    dims = build_lattice(6, 9)
    noise = NoiseParams.infinite_bias(1.0)
    probe = init_engine(dims, noise, True, seed=13)
    _, dt0 = bkl_step(probe)
    # identical engine: stopping short of the first event applies nothing
    a = init_engine(dims, noise, True, seed=13)
    run_until(a, t_stop=dt0 * 0.5)
    assert a.event_count == 0 and a.clock == pytest.approx(dt0 * 0.5)
    b = init_engine(dims, noise, True, seed=13)
    run_until(b, t_stop=dt0 * 1.01)
    assert b.event_count >= 1
    c = init_engine(dims, noise, True, seed=13)
    run_until(c, t_stop=0.0)
    assert c.event_count == 0 and c.clock == 0.0


def test_advance_past_crosses_threshold_with_event():
    dims = build_lattice(6, 9)
    eng = init_engine(dims, NoiseParams.infinite_bias(1.0), True, seed=21)
    assert advance_past(eng, 0.3)
    assert eng.clock >= 0.3
    assert eng.event_count >= 1


def test_run_until_predicate():
    dims = build_lattice(6, 9)
    eng = init_engine(dims, NoiseParams.from_bias(1.0, 5.0), True, seed=31)
    run_until(eng, predicate=lambda e, event: event[1] == "Y", max_events=100000)
    assert eng.event_count >= 1


def test_first_y_time_distribution():
    dims = build_lattice(6, 9)
    noise = NoiseParams.from_bias(1e-2, 100.0)
    times = []
    for s in range(1500):
        eng = init_engine(dims, noise, False, seed=s)
        times.append(run_until_first_y(eng))
    med = float(np.median(times))
    expect = (noise.zeta + 1) * math.log(2) / dims.N / 1e-2
    assert med == pytest.approx(expect, rel=0.10)
    # infinite bias never fires
    eng = init_engine(dims, NoiseParams.infinite_bias(1.0), True, seed=1)
    assert run_until_first_y(eng, t_max=0.5) is None


def test_occupancy_matches_gibbs_small():
    dims = build_lattice(3, 3)
    gz = 6.0
    eng = init_engine(dims, NoiseParams.infinite_bias(gz), True, seed=123, sublattice=BLACK)
    occ = run_occupancy(eng, 10**6)
    beta = beta_from_rate(gz)
    ener = np.zeros(512)
    for bits in range(512):
        f = PauliFrame.identity(dims)
        f.z[BLACK] = np.array(
            [[(bits >> (3 * j + i)) & 1 for i in range(3)] for j in range(3)],
            dtype=np.uint8,
        )
        ener[bits] = energy(syndrome(f))
    gibbs = np.exp(-beta * ener)
    gibbs /= gibbs.sum()
    emp = occ / occ.sum()
    tv = 0.5 * float(np.abs(emp - gibbs).sum())
    assert tv < 0.05


def test_inject_pauli_consistency():
    dims = build_lattice(6, 9)
    eng = init_engine(dims, NoiseParams.infinite_bias(0.7), True, seed=2)
    rng = np.random.default_rng(8)
    f = PauliFrame.identity(dims)
    for _ in range(25):
        coord = QubitCoord(int(rng.integers(6)), int(rng.integers(9)), int(rng.integers(2)))
        letter = "XYZ"[int(rng.integers(3))]
        inject_pauli(eng, coord, letter)
        f = f.apply_pauli(coord, letter)
    assert eng.frame().same_as(f)
    syn = syndrome(f)
    assert np.array_equal(eng.da, syn.a.reshape(-1))
    assert np.array_equal(eng.db, syn.b.reshape(-1))


def test_snapshot_json():
    dims = build_lattice(6, 9)
    eng = init_engine(dims, NoiseParams.infinite_bias(1.0), True, seed=99)
    run_until(eng, max_events=10)
    snap = json.loads(eng.snapshot_json())
    assert set(snap) == {"clock", "event_count", "seed", "frame"}
    assert snap["seed"] == 99 and snap["event_count"] == 10
    restored = PauliFrame.from_json(json.dumps(snap["frame"]))
    assert restored.same_as(eng.frame())
