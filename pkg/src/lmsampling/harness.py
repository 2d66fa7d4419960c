"""Replicated sampling experiments and the figure reproductions.

Each replication ``i`` owns the seed ``derive_seed(seed, i, "rep")``; walks that
overshoot ``t_max`` are redrawn from a fresh stream ``(..., "retry", k)``.
Replications run in a thread pool (the compiled kernel releases the GIL) and
are gathered by index, so results do not depend on the thread count.
"""
from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__, samplaw
from .config import T_MAX, ExperimentConfig
from .covmap import MemoryPrediction, fit_decay, predict_memory
from .errors import DomainError, LmSamplingError, NumericError
from .memest import emp_acf, estimate
from .output import Panel, Series, csv_text, svg_text, write_text
from .procgen import (EXACT_MAX_N, FarimaSpec, GegenbauerSpec, farima_ma_coeffs,
                      gegenbauer_autocov, gen_at_indices, gen_trajectory_exact,
                      gen_trajectory_ma)
from .rng import derive_seed

THREADS_ENV = "LMSAMPLING_THREADS"
FAIL_FRACTION = 0.01


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def run_indexed(fn, count: int, threads: Optional[int] = None) -> list:
    """``[fn(0), ..., fn(count - 1)]``, computed on ``threads`` workers."""
    threads = default_threads() if threads is None else max(1, int(threads))
    if threads == 1 or count <= 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(count)))


# --------------------------------------------------------------------------
# sampled trajectories
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SampledPath:
    times: np.ndarray
    values: np.ndarray
    retries: int


def sampling_times(law, n: int, seed: int, t_max: int = T_MAX, max_retries: int = 20):
    """``T_0..T_{n-1}`` with ``T_{n-1} <= t_max``; returns (times, retries)."""
    for k in range(max_retries + 1):
        stream = () if k == 0 else ("retry", k)
        times = samplaw.walk(law, n - 1, seed, *stream).times
        if times[-1] <= t_max:
            return times, k
    raise NumericError(f"walk exceeded t_max={t_max} in {max_retries + 1} attempts")


def sampled_path(model, law, n: int, seed: int, m: int = 5000, t_max: int = T_MAX,
                 max_retries: int = 20, coeffs=None) -> SampledPath:
    """``Y_j = X_{T_j}``, j = 0..n-1, for one replication."""
    times, retries = sampling_times(law, n, seed, t_max, max_retries)
    if isinstance(model, FarimaSpec):
        table = coeffs if coeffs is not None else farima_ma_coeffs(model, m)
        vals = gen_at_indices(table, times, seed)
    elif isinstance(model, GegenbauerSpec):
        length = int(times[-1]) + 1
        if length > EXACT_MAX_N:
            raise DomainError(f"seasonal models are simulated exactly up to {EXACT_MAX_N} points")
        cov = gegenbauer_autocov(model, length - 1)
        vals = gen_trajectory_exact(cov, length, seed).values[times]
    else:
        raise DomainError(f"unsupported model {model!r}")
    return SampledPath(times, vals, retries)


# --------------------------------------------------------------------------
# experiments
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Summary:
    mean: float
    sd: float
    band_lo: float
    band_hi: float
    ok: int


def summarize(values: Sequence[float]) -> Summary:
    """Mean, sd and empirical 95% band of the finite entries."""
    v = np.asarray([x for x in values if x is not None and math.isfinite(x)], dtype=float)
    if v.size == 0:
        nan = float("nan")
        return Summary(nan, nan, nan, nan, 0)
    sd = float(v.std(ddof=1)) if v.size > 1 else 0.0
    lo, hi = np.percentile(v, [2.5, 97.5])
    return Summary(float(v.mean()), sd, float(lo), float(hi), int(v.size))


@dataclass(frozen=True)
class RepResult:
    index: int
    seed: int
    d_hat: float
    stderr: float
    retries: int
    error: str = ""


@dataclass
class RunRecord:
    config: dict
    reps: list
    summary: Summary
    prediction: Optional[MemoryPrediction]
    wall_time: float
    version: str = __version__
    seed: int = 0

    @property
    def d_hats(self) -> list:
        return [r.d_hat for r in self.reps]

    @property
    def failures(self) -> int:
        return sum(1 for r in self.reps if r.error)

    def csv(self) -> str:
        rows = [(r.index, r.seed, r.d_hat, r.stderr, r.retries, r.error or "ok") for r in self.reps]
        return csv_text(("rep", "seed", "d_hat", "stderr", "retries", "status"), rows, self.seed)

    def summary_csv(self) -> str:
        p = self.prediction
        s = self.summary
        rows = [(self.config["model"], self.config["law"], len(self.reps), s.ok,
                 s.mean, s.sd, s.band_lo, s.band_hi,
                 p.regime if p else "none", p.d_out if p else None)]
        return csv_text(("model", "law", "reps", "ok", "d_hat_mean", "d_hat_sd", "band_lo",
                         "band_hi", "regime", "d_pred"), rows, self.seed)


def _memory_d(model):
    if isinstance(model, FarimaSpec):
        return model.d
    return max((dj for t, dj in model.components if t == 0.0), default=0.0)


def run_experiment(cfg: ExperimentConfig, threads: Optional[int] = None) -> RunRecord:
    """Estimate the memory parameter of ``Y = X_T`` over ``cfg.reps`` replications."""
    start = time.perf_counter()
    coeffs = farima_ma_coeffs(cfg.model, cfg.m) if isinstance(cfg.model, FarimaSpec) else None

    def one(i):
        seed_i = derive_seed(cfg.seed, i, "rep")
        try:
            path = sampled_path(cfg.model, cfg.law, cfg.n, seed_i, cfg.m, cfg.t_max,
                                cfg.max_retries, coeffs)
            est = estimate(path.values, cfg.estimator, cfg.tuning)
            return RepResult(i, seed_i, est.d_hat, est.stderr, path.retries)
        except (LmSamplingError, ArithmeticError) as exc:
            return RepResult(i, seed_i, float("nan"), float("nan"), -1, str(exc) or type(exc).__name__)

    reps = run_indexed(one, cfg.reps, threads)
    failed = sum(1 for r in reps if r.error)
    if failed > FAIL_FRACTION * cfg.reps:
        raise NumericError(f"{failed} of {cfg.reps} replications failed; first: "
                           f"{next(r.error for r in reps if r.error)}")
    d = _memory_d(cfg.model)
    pred = predict_memory(d, cfg.law) if 0.0 < d < 0.5 else None
    return RunRecord(cfg.echo(), reps, summarize([r.d_hat for r in reps]), pred,
                     time.perf_counter() - start, __version__, cfg.seed)


def write_record(record: RunRecord, out_dir, stem: str = "experiment") -> list:
    out = Path(out_dir)
    return [write_text(out / f"{stem}_reps.csv", record.csv()),
            write_text(out / f"{stem}_summary.csv", record.summary_csv())]


# --------------------------------------------------------------------------
# figure 1: autocovariances of X and of two sampled processes
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class AcfFigure:
    lags: np.ndarray
    acf_x: np.ndarray
    acf_y1: np.ndarray
    acf_y2: np.ndarray
    gammas: tuple
    d: float
    seed: int

    def csv(self) -> str:
        rows = zip(self.lags.tolist(), self.acf_x.tolist(), self.acf_y1.tolist(), self.acf_y2.tolist())
        note = f"d={self.d:g} gammas={self.gammas[0]:g},{self.gammas[1]:g}"
        return csv_text(("lag", "acf_x", "acf_y1", "acf_y2"), rows, self.seed, note)

    def svg(self) -> str:
        lag = self.lags.tolist()
        return svg_text([
            Panel("X", [Series("acf", lag, self.acf_x.tolist())], "lag", "autocovariance"),
            Panel(f"Y, gamma = {self.gammas[0]:g}", [Series("acf", lag, self.acf_y1.tolist())], "lag"),
            Panel(f"Y, gamma = {self.gammas[1]:g}", [Series("acf", lag, self.acf_y2.tolist())], "lag"),
        ])

    def decay_exponents(self, lo: int = 1, hi: Optional[int] = None) -> tuple:
        hi = int(self.lags[-1]) if hi is None else hi
        return tuple(fit_decay(a, lo, hi).alpha_hat for a in (self.acf_x, self.acf_y1, self.acf_y2))


def repro_acf_figure(d: float = 0.35, gammas: Sequence[float] = (2.8, 1.9), n: int = 5000,
                     maxlag: int = 100, seed: int = 0, m: int = 5000,
                     t_max: int = T_MAX) -> AcfFigure:
    """Empirical autocovariances of ``X`` and of ``X`` sampled at two Pareto walks."""
    if len(gammas) != 2:
        raise DomainError("two tail exponents are required")
    coeffs = farima_ma_coeffs(FarimaSpec(d), m)
    # one trajectory of X, observed densely and along two independent walks
    xkey = derive_seed(seed, "fig1", "x")
    x = gen_trajectory_ma(coeffs, n, xkey).values
    acfs = [emp_acf(x, maxlag).values]
    for g in gammas:
        times, _ = sampling_times(samplaw.ParetoTail(g), n, derive_seed(seed, "fig1", repr(float(g))), t_max)
        acfs.append(emp_acf(gen_at_indices(coeffs, times, xkey), maxlag).values)
    return AcfFigure(np.arange(maxlag + 1), *acfs, tuple(float(g) for g in gammas), d, seed)


# --------------------------------------------------------------------------
# figure 2: estimated memory parameter against gamma
# --------------------------------------------------------------------------

DEFAULT_GAMMAS = tuple(round(1.7 + 0.1 * i, 1) for i in range(17))


@dataclass(frozen=True)
class DestRow:
    gamma: float
    d_in: float
    d_pred: Optional[float]
    regime: str
    d_hat_mean: float
    band_lo: float
    band_hi: float
    failures: int


@dataclass(frozen=True)
class DestFigure:
    rows: tuple
    reps: int
    n: int
    seed: int

    def csv(self) -> str:
        body = [(r.gamma, r.d_in, r.d_pred, r.d_hat_mean, r.band_lo, r.band_hi) for r in self.rows]
        return csv_text(("gamma", "d_in", "d_pred", "d_hat_mean", "band_lo", "band_hi"), body,
                        self.seed, f"reps={self.reps} n={self.n}")

    def svg(self) -> str:
        series = []
        for d in sorted({r.d_in for r in self.rows}):
            rs = [r for r in self.rows if r.d_in == d]
            g = [r.gamma for r in rs]
            series += [
                Series(f"d={d:g} mean", g, [r.d_hat_mean for r in rs]),
                Series(f"d={d:g} band", g, [r.band_lo for r in rs]),
                Series(f"d={d:g} band", g, [r.band_hi for r in rs]),
                Series(f"d={d:g} predicted", g, [0.0 if r.d_pred is None else r.d_pred for r in rs],
                       markers=True, line=False),
            ]
        return svg_text([Panel("estimated memory parameter", series, "gamma", "d")], 640, 400)


def feasible(d: float, gamma: float) -> bool:
    """Cells in the short-memory region of ``d = 0.35`` are too heavy tailed to simulate."""
    return not (d >= 0.35 and gamma < 2.0 * (1.0 - d))


def repro_dest_figure(d_values: Sequence[float] = (0.1, 0.35),
                      gammas: Sequence[float] = DEFAULT_GAMMAS, reps: int = 100, n: int = 5000,
                      seed: int = 0, estimator: str = "fexp", m: int = 5000,
                      threads: Optional[int] = None, t_max: int = T_MAX) -> DestFigure:
    rows = []
    for d in d_values:
        for g in gammas:
            if not feasible(d, g):
                continue
            cfg = ExperimentConfig(FarimaSpec(d), samplaw.ParetoTail(g), n=n, reps=reps,
                                   seed=derive_seed(seed, "fig2", repr(float(d)), repr(float(g))),
                                   estimator=estimator, m=m, t_max=t_max)
            rec = run_experiment(cfg, threads)
            p = rec.prediction
            rows.append(DestRow(float(g), float(d), p.d_out, p.regime, rec.summary.mean,
                                rec.summary.band_lo, rec.summary.band_hi, rec.failures))
    return DestFigure(tuple(rows), reps, n, seed)
