"""Continuous-time dynamics: noise processes, decoder rates, n-fold-way engine.

The single-qubit flip rates follow the detailed-balance family
``G(w) = w / (1 - exp(-beta*w))`` where ``w`` is the *energy drop* of the
flip under the symmetric defect Hamiltonian (each excited A, B or A-xor-B
term costs +1).  Choosing ``beta`` so that ``G(-6) = gamma_z`` makes the
cellular-automaton component ``G(w) - gamma_z`` vanish exactly on the most
energy-raising flips: those happen at the noise rate alone, while flips
that clear three defects run at ``6 + gamma_z``.  The chain is then
stationary for ``exp(-beta * E)``.

Note the sign convention: :func:`xyzca.lattice.local_energy_change`
reports the energy *increase* of a flip; the engine's rate classes are
indexed by its negation.

The event loop is an n-fold-way scheme: qubits are bucketed by the energy
drop of their prospective Z flip (seven classes), plus one bias-noise
class of uniform Y flips.  Waiting times are exponential in the total
rate; one event updates only the classes of the <= 18 qubits sharing a
toggled plaquette.  Randomness comes from a per-engine SplitMix64 stream,
so runs are reproducible from (seed, parameters) alone.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from numba import njit

from .errors import ConfigError, DomainError, NegativeRate
from .lattice import (
    BLACK,
    WHITE,
    LatticeDims,
    NoiseParams,
    PauliFrame,
    QubitCoord,
    Sublattice,
)

OMEGA_VALUES = (-6, -4, -2, 0, 2, 4, 6)


def beta_from_rate(gamma_z: float) -> float:
    """Largest inverse temperature keeping every CA rate nonnegative."""
    if gamma_z <= 0:
        raise DomainError("gamma_z must be positive")
    return math.log((6.0 + gamma_z) / gamma_z) / 6.0


def total_rate(omega: float, beta: float) -> float:
    """Detailed-balance flip rate G(omega) = omega / (1 - exp(-beta*omega))."""
    if beta <= 0:
        raise DomainError("beta must be positive")
    if omega == 0:
        return 1.0 / beta
    return omega / (1.0 - math.exp(-beta * omega))


def ca_rate(omega: float, beta: float, gamma_z: float) -> float:
    """Cellular-automaton component of the flip rate: G(omega) - gamma_z."""
    g = total_rate(omega, beta) - gamma_z
    if g < -1e-12 * max(1.0, gamma_z):  # tolerance scales with the rate's ulp
        raise NegativeRate(
            f"ca rate negative at omega={omega}: beta exceeds the duality value"
        )
    return max(g, 0.0)


def y_rate(gamma_z: float, zeta: float) -> float:
    """Bias-noise Y rate gamma_z / zeta (zero at infinite bias)."""
    if math.isinf(zeta):
        return 0.0
    if zeta <= 0:
        raise DomainError("zeta must be positive or infinite")
    return gamma_z / zeta


@dataclass(frozen=True)
class RateTable:
    """Per-class flip rates for one (gamma_z, zeta, ca_enabled) setting."""

    beta: float
    gamma_z: float
    zeta: float
    g: Tuple[float, ...]  # total Z-flip rate per omega class, OMEGA_VALUES order
    y: float
    ca_enabled: bool

    @classmethod
    def build(cls, gamma_z: float, zeta: float = math.inf, ca_enabled: bool = True) -> "RateTable":
        beta = beta_from_rate(gamma_z)
        if ca_enabled:
            g = tuple(total_rate(w, beta) for w in OMEGA_VALUES)
        else:
            g = tuple(gamma_z for _ in OMEGA_VALUES)
        return cls(beta, gamma_z, zeta, g, y_rate(gamma_z, zeta), ca_enabled)


# ---------------------------------------------------------------------------
# numba kernels
# ---------------------------------------------------------------------------

_U64 = np.uint64
_SM_GAMMA = _U64(0x9E3779B97F4A7C15)
_SM_MUL1 = _U64(0xBF58476D1CE4E5B9)
_SM_MUL2 = _U64(0x94D049BB133111EB)
_INV_2_53 = 1.1102230246251565e-16


@njit(cache=True, inline="always")
def _rng_u64(rng):
    rng[0] = rng[0] + _SM_GAMMA
    z = rng[0]
    z = (z ^ (z >> _U64(30))) * _SM_MUL1
    z = (z ^ (z >> _U64(27))) * _SM_MUL2
    return z ^ (z >> _U64(31))


@njit(cache=True, inline="always")
def _rng_f64(rng):
    return float(_rng_u64(rng) >> _U64(11)) * _INV_2_53


@njit(cache=True, inline="always")
def _z_drop_class(q, n_plaq, plaq_idx, da, db):
    """Class index (energy drop + 6) / 2 of a Z flip at qubit q."""
    de = 0
    if q < n_plaq:  # black sublattice: toggles a-defects, gated by b
        for t in range(3):
            p = plaq_idx[q, t]
            if db[p] == 0:
                de += 2 - 4 * da[p]
    else:  # white: toggles b-defects, gated by a
        for t in range(3):
            p = plaq_idx[q, t]
            if da[p] == 0:
                de += 2 - 4 * db[p]
    return (6 - de) // 2


@njit(cache=True, inline="always")
def _move_bucket(q, new_cls, bucket, blen, qcls, qpos):
    old = qcls[q]
    if old == new_cls:
        return
    pos = qpos[q]
    last = blen[old] - 1
    moved = bucket[old, last]
    bucket[old, pos] = moved
    qpos[moved] = pos
    blen[old] = last
    bucket[new_cls, blen[new_cls]] = q
    qpos[q] = blen[new_cls]
    qcls[q] = new_cls
    blen[new_cls] += 1


@njit(cache=True)
def _rebuild_buckets(active, n_plaq, plaq_idx, da, db, bucket, blen, qcls, qpos):
    for k in range(7):
        blen[k] = 0
    for idx in range(active.shape[0]):
        q = active[idx]
        k = _z_drop_class(q, n_plaq, plaq_idx, da, db)
        bucket[k, blen[k]] = q
        qpos[q] = blen[k]
        qcls[q] = k
        blen[k] += 1


@njit(cache=True)
def _advance(
    mode,  # 0: until t_limit (no overshoot applied); 1: until event >= t_limit; 2: until first Y
    t_limit,
    max_events,
    rates,
    gamma_y,
    n_plaq,
    fx,
    fz,
    da,
    db,
    plaq_idx,
    plaq_members,
    active,
    active_mask,
    bucket,
    blen,
    qcls,
    qpos,
    clock,
    rng,
    occ,
    collect_occ,
):
    """Shared event loop.  Returns (events_applied, last_q, last_kind, status).

    status: 0 = time/threshold condition met, 1 = total rate vanished,
    2 = max_events exhausted.  last_kind: 0 = Z, 1 = Y, -1 = none.
    """
    n_active = active.shape[0]
    applied = 0
    last_q = -1
    last_kind = -1
    key = _U64(0)
    if collect_occ:
        for q in range(n_plaq):
            if fz[q]:
                key ^= _U64(1) << _U64(q)
    while True:
        if applied >= max_events:
            return applied, last_q, last_kind, 2
        total = n_active * gamma_y
        for k in range(7):
            total += blen[k] * rates[k]
        if total <= 0.0:
            if mode == 0 and t_limit < math.inf:
                clock[0] = t_limit
            return applied, last_q, last_kind, 1
        dt = -math.log(1.0 - _rng_f64(rng)) / total
        if mode == 0 and clock[0] + dt > t_limit:
            clock[0] = t_limit
            return applied, last_q, last_kind, 0
        # pick the event class, then a uniform member
        r = _rng_f64(rng) * total
        kind = 1
        q = -1
        acc = 0.0
        for k in range(7):
            acc += blen[k] * rates[k]
            if r < acc:
                idx = int(_rng_f64(rng) * blen[k])
                if idx >= blen[k]:
                    idx = blen[k] - 1
                q = bucket[k, idx]
                kind = 0
                break
        if kind == 1:
            idx = int(_rng_f64(rng) * n_active)
            if idx >= n_active:
                idx = n_active - 1
            q = active[idx]
        if collect_occ:
            occ[key] += dt
        clock[0] += dt
        # apply the flip and toggle the touched defect planes
        black = q < n_plaq
        if kind == 0:
            fz[q] ^= 1
            if collect_occ and black:
                key ^= _U64(1) << _U64(q)
            for t in range(3):
                p = plaq_idx[q, t]
                if black:
                    da[p] ^= 1
                else:
                    db[p] ^= 1
        else:
            fx[q] ^= 1
            fz[q] ^= 1
            if collect_occ and black:
                key ^= _U64(1) << _U64(q)
            for t in range(3):
                p = plaq_idx[q, t]
                da[p] ^= 1
                if black:
                    db[p] ^= 1
        # refresh the omega class of every qubit sharing a touched plaquette
        for t in range(3):
            p = plaq_idx[q, t]
            for m in range(6):
                nb = plaq_members[p, m]
                if active_mask[nb]:
                    k2 = _z_drop_class(nb, n_plaq, plaq_idx, da, db)
                    _move_bucket(nb, k2, bucket, blen, qcls, qpos)
        applied += 1
        last_q = q
        last_kind = kind
        if mode == 1 and clock[0] >= t_limit:
            return applied, last_q, last_kind, 0
        if mode == 2 and kind == 1:
            return applied, last_q, last_kind, 0
        if mode != 0 and clock[0] >= t_limit:
            return applied, last_q, last_kind, 0


# ---------------------------------------------------------------------------
# engine state and wrappers
# ---------------------------------------------------------------------------


@dataclass
class EngineState:
    """Mutable n-fold-way simulation state (one engine = one Markov chain)."""

    dims: LatticeDims
    rate_table: RateTable
    ca_enabled: bool
    sublattice: Optional[Sublattice]
    seed: int
    event_count: int = 0
    # arrays below are owned by the engine and mutated in place
    fx: np.ndarray = field(repr=False, default=None)
    fz: np.ndarray = field(repr=False, default=None)
    da: np.ndarray = field(repr=False, default=None)
    db: np.ndarray = field(repr=False, default=None)
    plaq_idx: np.ndarray = field(repr=False, default=None)
    plaq_members: np.ndarray = field(repr=False, default=None)
    active: np.ndarray = field(repr=False, default=None)
    active_mask: np.ndarray = field(repr=False, default=None)
    bucket: np.ndarray = field(repr=False, default=None)
    blen: np.ndarray = field(repr=False, default=None)
    qcls: np.ndarray = field(repr=False, default=None)
    qpos: np.ndarray = field(repr=False, default=None)
    clock_arr: np.ndarray = field(repr=False, default=None)
    rng_state: np.ndarray = field(repr=False, default=None)
    rates: np.ndarray = field(repr=False, default=None)

    @property
    def clock(self) -> float:
        return float(self.clock_arr[0])

    @property
    def n_plaq(self) -> int:
        return self.dims.L * self.dims.H

    def total_rate_now(self) -> float:
        total = self.active.shape[0] * self.rate_table.y
        for k in range(7):
            total += int(self.blen[k]) * float(self.rates[k])
        return total

    def frame(self) -> PauliFrame:
        """Copy of the current accumulated error frame."""
        shape = (2, self.dims.H, self.dims.L)
        return PauliFrame(
            self.dims,
            self.fx.reshape(shape).copy(),
            self.fz.reshape(shape).copy(),
        )

    def frame_view(self) -> PauliFrame:
        """Zero-copy view of the frame; treat as read-only."""
        shape = (2, self.dims.H, self.dims.L)
        return PauliFrame(self.dims, self.fx.reshape(shape), self.fz.reshape(shape))

    def qubit_of(self, q: int) -> QubitCoord:
        n = self.n_plaq
        s = BLACK if q < n else WHITE
        r = q % n
        return QubitCoord(r % self.dims.L, r // self.dims.L, s)

    def snapshot_json(self) -> str:
        return json.dumps(
            {
                "clock": self.clock,
                "event_count": self.event_count,
                "seed": self.seed,
                "frame": json.loads(self.frame().to_json()),
            }
        )


def _adjacency_arrays(dims: LatticeDims) -> Tuple[np.ndarray, np.ndarray]:
    from .lattice import plaquettes_of

    n_plaq = dims.L * dims.H
    nq = 2 * n_plaq
    plaq_idx = np.zeros((nq, 3), dtype=np.int64)
    for q in range(nq):
        s = BLACK if q < n_plaq else WHITE
        r = q % n_plaq
        coord = QubitCoord(r % dims.L, r // dims.L, s)
        for t, (pi, pj) in enumerate(plaquettes_of(coord, dims)):
            plaq_idx[q, t] = pj * dims.L + pi
    members = np.zeros((n_plaq, 6), dtype=np.int64)
    counts = np.zeros(n_plaq, dtype=np.int64)
    for q in range(nq):
        for t in range(3):
            p = plaq_idx[q, t]
            members[p, counts[p]] = q
            counts[p] += 1
    if not (counts == 6).all():
        raise AssertionError("every plaquette must touch exactly 6 qubits")
    return plaq_idx, members


def init_engine(
    dims: LatticeDims,
    noise: NoiseParams,
    ca_enabled: bool,
    seed: int,
    sublattice: Optional[Sublattice] = None,
) -> EngineState:
    """Vacuum-initialized engine with populated rate buckets."""
    if noise.gamma_x != 0.0:
        raise ConfigError("the engine models Y+Z noise only (X = composition)")
    if noise.gamma_z <= 0.0:
        raise ConfigError("gamma_z must be positive")
    if sublattice is not None and noise.gamma_y != 0.0:
        raise ConfigError("single-sublattice mode requires infinite bias")
    table = RateTable.build(noise.gamma_z, noise.zeta, ca_enabled)
    n_plaq = dims.L * dims.H
    nq = 2 * n_plaq
    plaq_idx, plaq_members = _adjacency_arrays(dims)
    if sublattice is None:
        active = np.arange(nq, dtype=np.int64)
    elif sublattice == BLACK:
        active = np.arange(n_plaq, dtype=np.int64)
    else:
        active = np.arange(n_plaq, nq, dtype=np.int64)
    active_mask = np.zeros(nq, dtype=np.uint8)
    active_mask[active] = 1
    eng = EngineState(
        dims=dims,
        rate_table=table,
        ca_enabled=ca_enabled,
        sublattice=sublattice,
        seed=seed,
        fx=np.zeros(nq, dtype=np.uint8),
        fz=np.zeros(nq, dtype=np.uint8),
        da=np.zeros(n_plaq, dtype=np.uint8),
        db=np.zeros(n_plaq, dtype=np.uint8),
        plaq_idx=plaq_idx,
        plaq_members=plaq_members,
        active=active,
        active_mask=active_mask,
        bucket=np.zeros((7, active.shape[0]), dtype=np.int64),
        blen=np.zeros(7, dtype=np.int64),
        qcls=np.full(nq, -1, dtype=np.int64),
        qpos=np.zeros(nq, dtype=np.int64),
        clock_arr=np.zeros(1, dtype=np.float64),
        rng_state=np.array([seed], dtype=np.uint64),
        rates=np.array(table.g, dtype=np.float64),
    )
    _rebuild_buckets(
        eng.active, n_plaq, eng.plaq_idx, eng.da, eng.db, eng.bucket, eng.blen, eng.qcls, eng.qpos
    )
    return eng


_DUMMY_OCC = np.zeros(1, dtype=np.float64)


def _run(eng: EngineState, mode: int, t_limit: float, max_events: int, occ=None):
    collect = occ is not None
    applied, last_q, last_kind, status = _advance(
        mode,
        t_limit,
        max_events,
        eng.rates,
        eng.rate_table.y,
        eng.n_plaq,
        eng.fx,
        eng.fz,
        eng.da,
        eng.db,
        eng.plaq_idx,
        eng.plaq_members,
        eng.active,
        eng.active_mask,
        eng.bucket,
        eng.blen,
        eng.qcls,
        eng.qpos,
        eng.clock_arr,
        eng.rng_state,
        occ if collect else _DUMMY_OCC,
        collect,
    )
    eng.event_count += applied
    return applied, last_q, last_kind, status


def bkl_step(eng: EngineState) -> Tuple[Tuple[QubitCoord, str], float]:
    """Draw and apply one event; returns ((qubit, letter), waiting time)."""
    before = eng.clock
    applied, q, kind, status = _run(eng, 0, math.inf, 1)
    if applied == 0:
        raise ConfigError("total rate vanished; no event possible")
    return (eng.qubit_of(q), "Z" if kind == 0 else "Y"), eng.clock - before


def run_until(
    eng: EngineState,
    t_stop: Optional[float] = None,
    predicate=None,
    max_events: Optional[int] = None,
) -> EngineState:
    """Advance until the clock reaches t_stop, a predicate fires, or the
    event budget is spent.  Events that would overshoot t_stop are not
    applied (the clock parks at t_stop), which is exact for Markov dynamics.
    """
    if t_stop is None and predicate is None and max_events is None:
        raise ConfigError("run_until needs a stopping condition")
    if predicate is None:
        budget = max_events if max_events is not None else (1 << 62)
        limit = math.inf if t_stop is None else t_stop
        _run(eng, 0, limit, budget)
        return eng
    # generic predicate path: step singly (used only for small runs)
    budget = max_events if max_events is not None else (1 << 62)
    steps = 0
    while steps < budget:
        if t_stop is not None and eng.clock >= t_stop:
            break
        event, _ = bkl_step(eng)
        steps += 1
        if predicate(eng, event):
            break
    return eng


def advance_past(eng: EngineState, t_threshold: float) -> bool:
    """Apply events until one lands at clock >= t_threshold.

    Returns False if the total rate vanished before crossing.
    """
    if eng.clock >= t_threshold:
        return True
    _, _, _, status = _run(eng, 1, t_threshold, 1 << 62)
    return status == 0


def run_until_first_y(eng: EngineState, t_max: float = math.inf) -> Optional[float]:
    """Advance through events until the first Y; returns its time or None."""
    _, _, kind, status = _run(eng, 2, t_max, 1 << 62)
    if status == 0 and kind == 1:
        return eng.clock
    return None


def inject_pauli(eng: EngineState, coord: QubitCoord, letter: str) -> None:
    """Multiply an explicit Pauli into the engine state (state preparation).

    Updates frame planes, defect planes and rate buckets; not an event, so
    neither the clock nor the event count moves.
    """
    from .lattice import _letter_planes, _toggles

    coord = coord.reduced(eng.dims)
    n_plaq = eng.n_plaq
    q = int(coord.s) * n_plaq + coord.j * eng.dims.L + coord.i
    xc, zc = _letter_planes(letter)
    eng.fx[q] ^= xc
    eng.fz[q] ^= zc
    ta, tb = _toggles(letter, coord.s)
    for t in range(3):
        p = eng.plaq_idx[q, t]
        eng.da[p] ^= ta
        eng.db[p] ^= tb
    _rebuild_buckets(
        eng.active, n_plaq, eng.plaq_idx, eng.da, eng.db, eng.bucket, eng.blen, eng.qcls, eng.qpos
    )


def clone_engine(eng: EngineState) -> EngineState:
    """Independent deep copy (same RNG state: the twin replays the future)."""
    import copy as _copy

    new = _copy.copy(eng)
    for name in (
        "fx",
        "fz",
        "da",
        "db",
        "bucket",
        "blen",
        "qcls",
        "qpos",
        "clock_arr",
        "rng_state",
    ):
        setattr(new, name, getattr(eng, name).copy())
    return new


def run_occupancy(eng: EngineState, n_events: int) -> np.ndarray:
    """Time-weighted state occupancy over black-sublattice Z configurations.

    Only practical for small black sublattices (the histogram has
    2^(L*H) bins); intended for exact-Gibbs comparisons on 3x3.
    """
    if eng.n_plaq > 20:
        raise ConfigError("occupancy collection limited to <= 20 black qubits")
    occ = np.zeros(1 << eng.n_plaq, dtype=np.float64)
    _run(eng, 0, math.inf, n_events, occ=occ)
    return occ
