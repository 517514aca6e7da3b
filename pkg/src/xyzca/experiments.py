"""Experiment drivers: memory lifetimes, thresholds, and scaling fits.

A memory-time sample runs the event engine from vacuum and periodically
asks a global decoder whether the accumulated error is still correctable.
Corrections are never applied; the first check whose hypothetical
correction leaves a nontrivial logical class (or whose decoder heralds
failure) ends the sample, and the clock at that check is the memory time.
Check spacing adapts so that no inter-check gap exceeds a fixed fraction
(default 1e-3) of the larger of the running clock and an analytic
lower-bound estimate distance/initial-rate; because checks trigger on the
first event past the boundary, each gap carries at most one event of
overshoot.

Thresholds use i.i.d. Y/Z errors, the cluster decoder, and failure-curve
crossings between system sizes.  All sampling is seeded deterministically
per sample index, so tables are bit-identical across reruns and worker
counts.
"""

from __future__ import annotations

import math
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import beta as beta_dist
from scipy.stats import binom

from .dynamics import EngineState, advance_past, init_engine, run_until_first_y
from .errors import ConfigError, DecoderFailure, DegenerateFit, EmptyInput, ProbabilityError
from .exact_decoder import decode_infinite_bias, is_failure
from .lattice import LatticeDims, NoiseParams, PauliFrame, Syndrome, build_lattice, syndrome
from .logicals import LogicalSet, certify_size, get_logical_set, logical_class
from .rg_decoder import rg_decode

CHECK_FRACTION_CEILING = 1e-3


@dataclass(frozen=True)
class MemTimeConfig:
    """One memory-time measurement setting."""

    dims: LatticeDims
    gamma_z: float
    zeta: float = math.inf
    ca_enabled: bool = True
    checker: str = "exact"  # "exact" | "rg"
    n_samples: int = 100
    seed_base: int = 0
    check_fraction: float = CHECK_FRACTION_CEILING

    def __post_init__(self):
        if self.checker not in ("exact", "rg"):
            raise ConfigError(f"unknown checker {self.checker!r}")
        if self.check_fraction > CHECK_FRACTION_CEILING:
            raise ConfigError("check fraction must not exceed 1e-3")
        if self.checker == "exact":
            if not math.isinf(self.zeta):
                raise ConfigError("exact failure checks require infinite bias")
            if not certify_size(self.dims.L, self.dims.H):
                raise ConfigError(
                    f"exact failure checks require a certified size, not "
                    f"{self.dims.L}x{self.dims.H}"
                )

    def noise(self) -> NoiseParams:
        return NoiseParams.from_bias(
            self.gamma_z * (1.0 + (0.0 if math.isinf(self.zeta) else 1.0 / self.zeta)),
            self.zeta,
        )


@dataclass(frozen=True)
class ExperimentRecord:
    """One measured sample, carrying everything needed to reproduce it."""

    run_id: str
    L: int
    H: int
    gamma_z: float
    zeta: float
    ca_enabled: bool
    seed: int
    value: float
    kind: str = "memtime"


class _CheckCache:
    """Memo of frame -> failure verdict; dynamics revisits states often."""

    def __init__(self, cap: int = 8192):
        self.cap = cap
        self.data: Dict[bytes, bool] = {}

    def get(self, key: bytes) -> Optional[bool]:
        return self.data.get(key)

    def put(self, key: bytes, value: bool) -> None:
        if len(self.data) >= self.cap:
            self.data.clear()
        self.data[key] = value


def _failure_check(frame: PauliFrame, checker: str, ls: LogicalSet) -> bool:
    syn = syndrome(frame)
    if syn.is_zero():
        return not logical_class(frame, ls).trivial
    if checker == "exact":
        correction = decode_infinite_bias(syn, frame.dims).correction
    else:
        try:
            correction = rg_decode(syn, frame.dims)
        except DecoderFailure:
            return True  # heralded failures score as logical failures
    return is_failure(frame, correction, ls)


def memory_time_sample(
    config: MemTimeConfig, seed: int, return_details: bool = False
):
    """Simulated time until a global-decoder check first reports failure."""
    noise = config.noise()
    eng = init_engine(config.dims, noise, config.ca_enabled, seed)
    ls = get_logical_set(config.dims.L, config.dims.H)
    cache = _CheckCache()
    distance = 2 * config.dims.L * config.dims.H // 3
    t_lower = distance / eng.total_rate_now()
    last_check = 0.0
    gaps: List[Tuple[float, float]] = []  # (gap, planned dt)
    while True:
        dt = config.check_fraction * max(eng.clock, t_lower)
        if not advance_past(eng, last_check + dt):
            raise ConfigError("total rate vanished during a memory-time sample")
        gaps.append((eng.clock - last_check, dt))
        last_check = eng.clock
        frame = eng.frame_view()
        key = frame.key()
        verdict = cache.get(key)
        if verdict is None:
            verdict = _failure_check(frame, config.checker, ls)
            cache.put(key, verdict)
        if verdict:
            break
    if return_details:
        return eng.clock, gaps, t_lower
    return eng.clock


def _sample_worker(args) -> float:
    config, seed = args
    return memory_time_sample(config, seed)


def collect_memory_samples(
    config: MemTimeConfig, workers: int = 1
) -> List[float]:
    """n_samples memory times with per-index seeds (order-deterministic)."""
    seeds = [config.seed_base + k for k in range(config.n_samples)]
    if workers <= 1:
        return [memory_time_sample(config, s) for s in seeds]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_sample_worker, [(config, s) for s in seeds], chunksize=4))


def half_life(samples: Sequence[float]) -> Tuple[float, Tuple[float, float]]:
    """Median with a binomial order-statistic 95% confidence interval."""
    if len(samples) == 0:
        raise EmptyInput("half_life needs at least one sample")
    s = np.sort(np.asarray(samples, dtype=float))
    n = len(s)
    med = float(np.median(s))
    lo_idx = int(binom.ppf(0.025, n, 0.5))
    hi_idx = min(int(binom.ppf(0.975, n, 0.5)), n - 1)
    return med, (float(s[lo_idx]), float(s[hi_idx]))


@dataclass
class MemCurveRow:
    L: int
    H: int
    gamma_z: float
    zeta: float
    ca_enabled: bool
    beta: float
    n_samples: int
    median_T: float
    ci_low: float
    ci_high: float
    seed_base: int


def memory_curve(
    sizes: Sequence[Tuple[int, int]],
    gamma_z: float,
    zeta: float = math.inf,
    ca_enabled: bool = True,
    n_samples: int = 100,
    checker: str = "exact",
    seed_base: int = 0,
    workers: int = 1,
) -> List[MemCurveRow]:
    """Median memory time per size, seeds derived from the base per point."""
    from .dynamics import beta_from_rate

    rows = []
    for k, (L, H) in enumerate(sizes):
        config = MemTimeConfig(
            dims=build_lattice(L, H),
            gamma_z=gamma_z,
            zeta=zeta,
            ca_enabled=ca_enabled,
            checker=checker,
            n_samples=n_samples,
            seed_base=seed_base + 100003 * k,
        )
        samples = collect_memory_samples(config, workers=workers)
        med, (lo, hi) = half_life(samples)
        rows.append(
            MemCurveRow(
                L, H, gamma_z, zeta, ca_enabled, beta_from_rate(gamma_z),
                n_samples, med, lo, hi, config.seed_base,
            )
        )
    return rows


def iid_sample_error(dims: LatticeDims, p_y: float, p_z: float, seed: int) -> PauliFrame:
    """Independent per-qubit letter draw: Y w.p. p_y, Z w.p. p_z, else I."""
    if p_y < 0 or p_z < 0 or p_y + p_z > 1:
        raise ProbabilityError("need p_y, p_z >= 0 and p_y + p_z <= 1")
    rng = np.random.Generator(np.random.PCG64(seed))
    u = rng.random((2, dims.H, dims.L))
    f = PauliFrame.identity(dims)
    y_mask = u < p_y
    f.x[y_mask] = 1
    f.z[y_mask | ((u >= p_y) & (u < p_y + p_z))] = 1
    return f


@dataclass
class ThresholdRow:
    L: int
    H: int
    p_tot: float
    zeta_p: float
    trials: int
    failures: int
    fail_rate: float
    ci_low: float
    ci_high: float


@dataclass
class ThresholdScan:
    rows: List[ThresholdRow]
    crossings: List[Tuple[Tuple[int, int], Tuple[int, int], float, Tuple[float, float]]]
    # each crossing: (small size, large size, p_c estimate, bootstrap 95% CI)


def _clopper_pearson(k: int, n: int, alpha: float = 0.05) -> Tuple[float, float]:
    lo = 0.0 if k == 0 else float(beta_dist.ppf(alpha / 2, k, n - k + 1))
    hi = 1.0 if k == n else float(beta_dist.ppf(1 - alpha / 2, k + 1, n - k))
    return lo, hi


def _split_p(p_tot: float, zeta_p: float) -> Tuple[float, float]:
    if math.isinf(zeta_p):
        return 0.0, p_tot
    p_y = p_tot / (zeta_p + 1.0)
    return p_y, p_tot - p_y


def _threshold_trial(dims: LatticeDims, ls: LogicalSet, p_y: float, p_z: float, seed: int) -> bool:
    e = iid_sample_error(dims, p_y, p_z, seed)
    syn = syndrome(e)
    if syn.is_zero():
        return not logical_class(e, ls).trivial
    try:
        c = rg_decode(syn, dims)
    except DecoderFailure:
        return True
    return is_failure(e, c, ls)


def _threshold_cell(args) -> int:
    (L, H), p_tot, zeta_p, trials, seed0 = args
    dims = build_lattice(L, H)
    ls = get_logical_set(L, H)
    p_y, p_z = _split_p(p_tot, zeta_p)
    return sum(_threshold_trial(dims, ls, p_y, p_z, seed0 + t) for t in range(trials))


def _interp_crossing(p: np.ndarray, diff: np.ndarray) -> Optional[float]:
    """First sign change of diff(p), linearly interpolated."""
    for k in range(len(p) - 1):
        if diff[k] == 0 and diff[k + 1] == 0:
            continue
        if diff[k] >= 0 and diff[k + 1] < 0:
            span = diff[k] - diff[k + 1]
            frac = 0.5 if span == 0 else diff[k] / span
            return float(p[k] + frac * (p[k + 1] - p[k]))
    return None


def threshold_scan(
    sizes: Sequence[Tuple[int, int]],
    p_grid: Sequence[float],
    zeta_p: float,
    trials: int,
    seed_base: int = 0,
    workers: int = 1,
    n_boot: int = 200,
) -> ThresholdScan:
    """Failure-rate table plus pairwise failure-curve crossings.

    Below threshold the smaller size fails more often, so the crossing is
    where rate(small) - rate(large) changes sign along the grid.
    """
    if len(sizes) < 2:
        raise ConfigError("threshold scan needs at least two sizes")
    cells = []
    for si, (L, H) in enumerate(sizes):
        for pi, p in enumerate(p_grid):
            seed0 = seed_base + 1_000_003 * si + 7_919 * pi
            cells.append(((L, H), float(p), zeta_p, trials, seed0))
    if workers <= 1:
        counts = [_threshold_cell(c) for c in cells]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            counts = list(pool.map(_threshold_cell, cells))
    rows = []
    rate = {}
    idx = 0
    for si, (L, H) in enumerate(sizes):
        for pi, p in enumerate(p_grid):
            k = counts[idx]
            idx += 1
            lo, hi = _clopper_pearson(k, trials)
            rows.append(ThresholdRow(L, H, float(p), zeta_p, trials, k, k / trials, lo, hi))
            rate[(si, pi)] = k
    p_arr = np.asarray(p_grid, dtype=float)
    crossings = []
    boot_rng = np.random.Generator(np.random.PCG64(seed_base + 99991))
    for si in range(len(sizes) - 1):
        small = np.array([rate[(si, pi)] for pi in range(len(p_grid))]) / trials
        large = np.array([rate[(si + 1, pi)] for pi in range(len(p_grid))]) / trials
        pc = _interp_crossing(p_arr, small - large)
        if pc is None:
            continue
        boots = []
        for _ in range(n_boot):
            bs = boot_rng.binomial(trials, np.clip(small, 0, 1)) / trials
            bl = boot_rng.binomial(trials, np.clip(large, 0, 1)) / trials
            bpc = _interp_crossing(p_arr, bs - bl)
            if bpc is not None:
                boots.append(bpc)
        if boots:
            ci = (float(np.percentile(boots, 2.5)), float(np.percentile(boots, 97.5)))
        else:
            ci = (float(p_arr[0]), float(p_arr[-1]))
        crossings.append((tuple(sizes[si]), tuple(sizes[si + 1]), pc, ci))
    return ThresholdScan(rows, crossings)


@dataclass
class ScalingFit:
    """Least-squares fit on log-transformed data."""

    model: str  # "power-law" | "quadratic-exponential" | "linear-exponential"
    params: Dict[str, Tuple[float, float]]  # name -> (value, stderr)
    residuals: np.ndarray = field(repr=False, default=None)


_FIT_MODELS = {
    "power-law": (("exponent", "log_prefactor"), 1),
    "quadratic-exponential": (("a", "b", "c"), 2),
    "linear-exponential": (("b", "c"), 1),
}


def fit_scaling(points: Sequence[Tuple[float, float]], model: str) -> ScalingFit:
    """Fit T(x) under the chosen law; x is L for power laws, beta otherwise."""
    if model not in _FIT_MODELS:
        raise ConfigError(f"unknown scaling model {model!r}")
    names, degree = _FIT_MODELS[model]
    pts = [(float(x), float(y)) for x, y in points]
    if len(pts) < degree + 2:
        raise DegenerateFit(f"{model} needs at least {degree + 2} points")
    x = np.array([p[0] for p in pts])
    y = np.array([p[1] for p in pts])
    if (y <= 0).any() or (model == "power-law" and (x <= 0).any()):
        raise DegenerateFit("log-transform requires positive data")
    t = np.log(x) if model == "power-law" else x
    if np.ptp(t) == 0:
        raise DegenerateFit("no spread in the independent variable")
    z = np.log(y)
    try:
        # scaled covariance needs positive residual dof
        cov_kind = True if len(pts) >= degree + 3 else "unscaled"
        coeffs, cov = np.polyfit(t, z, deg=degree, cov=cov_kind)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise DegenerateFit(str(exc)) from exc
    stderr = np.sqrt(np.maximum(np.diag(cov), 0.0))
    fitted = np.polyval(coeffs, t)
    residuals = z - fitted
    params = {}
    for k, name in enumerate(names):
        params[name] = (float(coeffs[k]), float(stderr[k]))
    return ScalingFit(model, params, residuals)


def first_y_times(
    dims: LatticeDims, gamma_tot: float, zeta: float, n_samples: int, seed_base: int = 0
) -> List[float]:
    """Times of the first bias-noise event over independent engine runs."""
    noise = NoiseParams.from_bias(gamma_tot, zeta)
    out = []
    for k in range(n_samples):
        eng = init_engine(dims, noise, False, seed=seed_base + k)
        t = run_until_first_y(eng)
        if t is None:
            raise ConfigError("first-Y sampling needs finite bias")
        out.append(t)
    return out


# ---------------------------------------------------------------------------
# CSV interchange (fixed schemas, atomically written)
# ---------------------------------------------------------------------------

MEMTIME_HEADER = "run_id,L,H,gamma_z,zeta,ca_enabled,beta,n_samples,median_T,ci_low,ci_high,seed_base"
THRESHOLD_HEADER = "L,H,p_tot,zeta_p,trials,failures,fail_rate,ci_low,ci_high"


def fit_header_line(fit: ScalingFit, series: Optional[str] = None) -> str:
    """Comment-line form of a fit, embeddable in CSV outputs.

    Figure tooling reads these back instead of refitting:
    ``# fit:<model>[:series=<tag>]:<name>=<value>:<name>_err=<err>...``
    """
    parts = [f"# fit:{fit.model}"]
    if series is not None:
        parts.append(f"series={series}")
    for name, (value, err) in fit.params.items():
        parts.append(f"{name}={value!r}")
        parts.append(f"{name}_err={err!r}")
    return ":".join(parts)


def crossing_header_line(
    small: Tuple[int, int], large: Tuple[int, int], zeta_p: float, p_c: float, ci: Tuple[float, float]
) -> str:
    zp = "inf" if math.isinf(zeta_p) else repr(zeta_p)
    return (
        f"# crossing:zeta_p={zp}:small={small[0]}x{small[1]}:large={large[0]}x{large[1]}"
        f":p_c={p_c!r}:ci_low={ci[0]!r}:ci_high={ci[1]!r}"
    )


def atomic_write_text(path: str, text: str) -> None:
    """Write via a same-directory temp file + rename: never a torn file."""
    d = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _config_header_lines(config: Dict[str, object]) -> List[str]:
    return [f"# {key}={config[key]}" for key in sorted(config)]


def format_memtime_csv(rows: Iterable[MemCurveRow], run_id: str, config: Dict[str, object]) -> str:
    lines = _config_header_lines(config)
    lines.append(MEMTIME_HEADER)
    for r in rows:
        zeta_txt = "inf" if math.isinf(r.zeta) else repr(r.zeta)
        lines.append(
            f"{run_id},{r.L},{r.H},{r.gamma_z!r},{zeta_txt},{int(r.ca_enabled)},"
            f"{r.beta!r},{r.n_samples},{r.median_T!r},{r.ci_low!r},{r.ci_high!r},{r.seed_base}"
        )
    return "\n".join(lines) + "\n"


def format_threshold_csv(
    rows: Iterable[ThresholdRow],
    config: Dict[str, object],
    crossings: Sequence[Tuple[Tuple[int, int], Tuple[int, int], float, Tuple[float, float]]] = (),
    zeta_p: Optional[float] = None,
) -> str:
    lines = _config_header_lines(config)
    for small, large, pc, ci in crossings:
        zp = zeta_p if zeta_p is not None else math.inf
        lines.append(crossing_header_line(small, large, zp, pc, ci))
    lines.append(THRESHOLD_HEADER)
    for r in rows:
        zp_txt = "inf" if math.isinf(r.zeta_p) else repr(r.zeta_p)
        lines.append(
            f"{r.L},{r.H},{r.p_tot!r},{zp_txt},{r.trials},{r.failures},"
            f"{r.fail_rate!r},{r.ci_low!r},{r.ci_high!r}"
        )
    return "\n".join(lines) + "\n"
