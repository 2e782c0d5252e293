"""Monte Carlo realisation of the duel.

Replication ``i`` draws from its own xoshiro256** stream keyed by
``(master_seed, i)``, so estimates do not depend on how replications are
split across threads. Per-path summaries land in flat arrays and every
estimate is a numpy reduction over them.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _backend, _pykernel
from .model import DecisionConstants, ExitRule, FunctionalParams, GameSpec, derive_constants

DEFAULT_MAX_EPOCHS = 100_000
CHUNK = 16_384
MIN_FUNCTIONAL_REPLICATIONS = 1_000
MIN_TRANSFORM_DRAWS = 10_000
_MASK64 = (1 << 64) - 1


class NoValidSamplesError(RuntimeError):
    pass


@dataclass(frozen=True)
class PathRecord:
    tau: tuple
    delta: tuple
    x_incr: tuple
    y_incr: tuple
    a_cum: tuple
    b_cum: tuple
    nu: int | None
    mu: int | None
    indicator_time: bool
    indicator_asset: bool
    terminated: bool = True


@dataclass(frozen=True)
class EstimateReport:
    quantity: str
    mean: float
    std_error: float
    n_replications: int
    analytic: float | None = None
    n_rejected: int = 0


@dataclass(frozen=True)
class PathBatch:
    """Per-path summaries of ``n`` replications; exit index -1 means never."""

    constants: DecisionConstants
    status: np.ndarray
    nu: np.ndarray
    mu: np.ndarray
    a_pre: np.ndarray
    a_nu: np.ndarray
    b_pre: np.ndarray
    b_mu: np.ndarray
    tau_pre: np.ndarray
    tau_nu: np.ndarray
    tau_mu: np.ndarray

    @property
    def valid(self) -> np.ndarray:
        return self.status == _pykernel.STATUS_OK

    @property
    def n_capped(self) -> int:
        return int(np.count_nonzero(self.status != _pykernel.STATUS_OK))

    @property
    def indicator_time(self) -> np.ndarray:
        return (self.nu >= 0) & (self.nu >= self.constants.j_min)

    @property
    def indicator_asset(self) -> np.ndarray:
        return (self.mu < 0) | (self.nu - self.mu <= self.constants.m_cap)

    @property
    def win(self) -> np.ndarray:
        return self.indicator_time & self.indicator_asset & (self.nu >= 0)


def thread_count() -> int:
    raw = os.environ.get("DUELFUEL_THREADS")
    if raw:
        try:
            n = int(raw)
        except ValueError:
            raise ValueError(f"DUELFUEL_THREADS must be a positive integer, got {raw!r}") from None
        if n < 1:
            raise ValueError(f"DUELFUEL_THREADS must be a positive integer, got {raw!r}")
        return n
    return os.cpu_count() or 1


def _kernel_args(spec: GameSpec):
    rule = _pykernel.RULE_EXHAUSTION if spec.exit_rule is ExitRule.EXHAUSTION else _pykernel.RULE_DOMINANCE
    return (
        spec.observation.delay_law.kernel_code(),
        spec.observation.step_law.kernel_code(),
        float(spec.lambda_a),
        float(spec.lambda_b),
        int(spec.capacity_a),
        int(spec.capacity_b),
        rule,
    )


def simulate_paths(spec: GameSpec, n: int, master_seed: int, *, max_epochs: int = DEFAULT_MAX_EPOCHS,
                   threads: int | None = None, constants: DecisionConstants | None = None,
                   kernel=None) -> PathBatch:
    """Simulate ``n`` replications and return their per-path summaries."""
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    c = constants if constants is not None else derive_constants(spec)
    simulate_batch = (kernel or _backend.kernel).simulate_batch
    threads = threads or thread_count()
    seed = int(master_seed) & _MASK64
    args = _kernel_args(spec)

    out = dict(
        status=np.zeros(n, dtype=np.int8),
        nu=np.zeros(n, dtype=np.int64),
        mu=np.zeros(n, dtype=np.int64),
        a_pre=np.zeros(n, dtype=np.int64),
        a_nu=np.zeros(n, dtype=np.int64),
        b_pre=np.zeros(n, dtype=np.int64),
        b_mu=np.zeros(n, dtype=np.int64),
        tau_pre=np.zeros(n),
        tau_nu=np.zeros(n),
        tau_mu=np.zeros(n),
    )
    order = ("status", "nu", "mu", "a_pre", "a_nu", "b_pre", "b_mu", "tau_pre", "tau_nu", "tau_mu")

    def run(start):
        stop = min(start + CHUNK, n)
        views = [out[k][start:stop] for k in order]
        simulate_batch(seed, start, *args, int(max_epochs), *views)

    starts = range(0, n, CHUNK)
    if threads == 1 or n <= CHUNK:
        for s in starts:
            run(s)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run, starts))
    return PathBatch(constants=c, **out)


def sample_path(spec: GameSpec, seed: int, index: int = 0, *,
                max_epochs: int = DEFAULT_MAX_EPOCHS) -> PathRecord:
    """Full trajectory of replication ``index`` of the stream family ``seed``.

    Uses the same generator and draw order as :func:`simulate_paths`, so the
    record agrees with that replication's summary.
    """
    c = derive_constants(spec)
    rng = _pykernel.Xoshiro256(int(seed) & _MASK64, index)
    trace = {k: [] for k in ("tau", "delta", "x", "y", "a", "b")}
    law0, law, la, lb, cap_a, cap_b, rule = _kernel_args(spec)
    r = _pykernel.simulate_one(rng, law0, law, la, lb, cap_a, cap_b, rule, max_epochs, trace=trace)
    terminated = r[0] == _pykernel.STATUS_OK
    nu = r[1] if r[1] >= 0 else None
    mu = r[2] if r[2] >= 0 else None
    ind_time = nu is not None and nu >= c.j_min
    ind_asset = mu is None or (nu is not None and nu - mu <= c.m_cap)
    return PathRecord(
        tau=tuple(trace["tau"]),
        delta=tuple(trace["delta"]),
        x_incr=tuple(trace["x"]),
        y_incr=tuple(trace["y"]),
        a_cum=tuple(trace["a"]),
        b_cum=tuple(trace["b"]),
        nu=nu,
        mu=mu,
        indicator_time=ind_time,
        indicator_asset=ind_asset,
        terminated=terminated,
    )


def _report(quantity: str, values: np.ndarray, n_rejected: int, analytic=None) -> EstimateReport:
    n = int(values.size)
    if n == 0:
        raise NoValidSamplesError("no valid samples")
    mean = float(np.mean(values))
    if n > 1 and np.all(np.isfinite(values)):
        se = float(np.std(values, ddof=1) / math.sqrt(n))
    else:
        se = math.nan if n > 1 else 0.0
    return EstimateReport(quantity, mean, se, n, analytic=analytic, n_rejected=n_rejected)


def functional_samples(batch: PathBatch, params: FunctionalParams,
                       clamp_exponents: bool = False) -> np.ndarray:
    """Per-path integrand of the joint functional (valid paths only)."""
    ok = batch.valid
    win = batch.win[ok]
    nu = batch.nu[ok]
    e0 = (batch.a_pre[ok] - batch.b_pre[ok]).astype(float)
    e1 = (batch.a_nu[ok] - batch.b_mu[ok]).astype(float)
    if clamp_exponents:
        e0 = np.maximum(e0, 0.0)
        e1 = np.maximum(e1, 0.0)
    tau_pre = np.where(win, batch.tau_pre[ok], 0.0)
    tau_nu = np.where(win, batch.tau_nu[ok], 0.0)
    with np.errstate(over="ignore"):
        w = (params.zeta ** np.where(win, nu, 0).astype(float)
             * params.z0 ** e0 * params.z1 ** e1
             * np.exp(-params.theta0 * tau_pre - params.theta1 * tau_nu))
    return np.where(win, w, 0.0)


def monte_carlo_functional(spec: GameSpec, params: FunctionalParams, n: int, master_seed: int, *,
                           clamp_exponents: bool = False, batch: PathBatch | None = None,
                           threads: int | None = None) -> EstimateReport:
    """Sample mean of the functional's integrand over ``n`` independent paths.

    With ``clamp_exponents`` the z0/z1 exponents are floored at 0; by
    default they are signed powers (well defined for z in (0, 1]).
    """
    if batch is None:
        if n < MIN_FUNCTIONAL_REPLICATIONS:
            raise ValueError(f"n must be >= {MIN_FUNCTIONAL_REPLICATIONS}, got {n}")
        batch = simulate_paths(spec, n, master_seed, threads=threads)
    return _report("phi", functional_samples(batch, params, clamp_exponents), batch.n_capped)


def estimate_exit_stats(spec: GameSpec, n: int, master_seed: int, *, batch: PathBatch | None = None,
                        threads: int | None = None) -> dict[str, EstimateReport]:
    """Indicator-weighted exit statistics plus plain means of the exit quantities.

    Weighted keys (``win_probability``, ``e_nu``, ``e_mu``, ``e_tau_nu``,
    ``e_tau_pre``, ``e_tau_mu``) average quantity * 1{win}; plain keys
    (``nu``, ``mu``, ``tau_nu``, ``tau_pre``) average the raw values. A
    player that never exits contributes infinity.
    """
    if batch is None:
        if n < MIN_FUNCTIONAL_REPLICATIONS:
            raise ValueError(f"n must be >= {MIN_FUNCTIONAL_REPLICATIONS}, got {n}")
        batch = simulate_paths(spec, n, master_seed, threads=threads)
    ok = batch.valid
    rejected = batch.n_capped
    win = batch.win[ok]
    nu = np.where(batch.nu[ok] >= 0, batch.nu[ok], np.inf)
    mu = np.where(batch.mu[ok] >= 0, batch.mu[ok], np.inf)
    raw = {
        "nu": nu,
        "mu": mu,
        "tau_nu": batch.tau_nu[ok],
        "tau_pre": batch.tau_pre[ok],
        "tau_mu": batch.tau_mu[ok],
    }
    out = {"win_probability": _report("win_probability", win.astype(float), rejected)}
    for key in ("nu", "mu", "tau_nu", "tau_pre", "tau_mu"):
        weighted = np.where(win, raw[key], 0.0)
        out["e_" + key] = _report("e_" + key, weighted, rejected)
    for key in ("nu", "mu", "tau_nu", "tau_pre"):
        out[key] = _report(key, raw[key].astype(float), rejected)
    return out


def validate_transform(spec: GameSpec, s: float, g: float, n: int, master_seed: int) -> EstimateReport:
    """Empirical E[g^A(s)] for player A's drain count against exp(lambda_a s (g - 1))."""
    if n < MIN_TRANSFORM_DRAWS:
        raise ValueError(f"n must be >= {MIN_TRANSFORM_DRAWS}, got {n}")
    rng = np.random.default_rng(int(master_seed) & _MASK64)
    counts = rng.poisson(spec.lambda_a * s, size=n)
    values = np.power(float(g), counts)
    return _report("pgf", values, 0, analytic=math.exp(spec.lambda_a * s * (g - 1.0)))
