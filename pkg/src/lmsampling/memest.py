"""Empirical autocovariances and log-periodogram estimators of the memory parameter."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import fft as sfft

from .errors import DomainError, NumericError
from .procgen import CovSeq
from .specmap import SpectralGrid

LOGPER_VAR = math.pi ** 2 / 6.0  # variance of log of a unit exponential


@dataclass(frozen=True)
class EstimateResult:
    d_hat: float
    stderr: float
    ci95: tuple
    method: str
    bandwidth_or_order: int
    n: int


def _series(x) -> np.ndarray:
    x = np.asarray(x.values if hasattr(x, "values") else x, dtype=float)
    if x.ndim != 1:
        raise DomainError("series must be one-dimensional")
    if not np.all(np.isfinite(x)):
        raise DomainError("series contains non-finite values")
    return x


def emp_acf(series, maxlag: int) -> CovSeq:
    """Biased sample autocovariance ``(1/n) sum (x_t - m)(x_{t+h} - m)``, via FFT."""
    x = _series(series)
    n = x.size
    if not 0 <= maxlag < n:
        raise DomainError("maxlag must satisfy 0 <= maxlag < n")
    xc = x - x.mean()
    nfft = sfft.next_fast_len(2 * n, real=True)
    fx = sfft.rfft(xc, nfft)
    acov = sfft.irfft(fx * np.conj(fx), nfft)[: maxlag + 1] / n
    if not acov[0] > 0:
        raise DomainError("constant series: zero sample variance")
    return CovSeq(acov, "empirical", "", n=n)


def periodogram(series) -> SpectralGrid:
    """``I(lam_j) = |sum_t (x_t - m) e^{-i t lam_j}|^2 / (2 pi n)`` for j = 1..n//2."""
    x = _series(series)
    n = x.size
    if n < 16:
        raise DomainError("periodogram needs n >= 16")
    dft = sfft.rfft(x - x.mean())
    j = np.arange(1, n // 2 + 1)
    vals = np.abs(dft[j]) ** 2 / (2.0 * math.pi * n)
    return SpectralGrid(2.0 * math.pi * j / n, vals, f"periodogram(n={n})")


def _long_memory_regressor(lam):
    return -2.0 * np.log(2.0 * np.sin(0.5 * lam))


def _result(d, se, method, tuning, n):
    return EstimateResult(float(d), float(se), (float(d - 1.96 * se), float(d + 1.96 * se)),
                          method, int(tuning), int(n))


def _log_pgram(series):
    pg = periodogram(series)
    if np.any(pg.values <= 0):
        raise NumericError("periodogram vanishes at a Fourier frequency")
    return pg.freqs, np.log(pg.values)


def gph(series, m: Optional[int] = None) -> EstimateResult:
    """Log-periodogram regression over the ``m`` lowest Fourier frequencies."""
    x = _series(series)
    n = x.size
    m = int(math.floor(math.sqrt(n))) if m is None else int(m)
    if m < 2 or m > n // 2:
        raise DomainError(f"bandwidth m={m} outside [2, n/2]")
    lam, y = _log_pgram(x)
    reg = _long_memory_regressor(lam[:m])
    X = np.column_stack((reg, np.ones(m)))
    beta = np.linalg.lstsq(X, y[:m], rcond=None)[0]
    return _result(beta[0], math.pi / math.sqrt(24.0 * m), "gph", m, n)


def fexp(series, p: Optional[int] = None) -> EstimateResult:
    """FEXP regression over all Fourier frequencies with ``p`` cosine terms."""
    x = _series(series)
    n = x.size
    p = int(math.floor(math.log(n))) if p is None else int(p)
    if not 0 <= p <= 20:
        raise DomainError("FEXP order must lie in [0, 20]")
    lam, y = _log_pgram(x)
    cols = [_long_memory_regressor(lam), np.ones_like(lam)]
    cols += [np.cos(k * lam) for k in range(1, p + 1)]
    X = np.column_stack(cols)
    if np.linalg.matrix_rank(X) < X.shape[1]:
        raise NumericError("FEXP design matrix is rank deficient")
    beta = np.linalg.lstsq(X, y, rcond=None)[0]
    cov = np.linalg.inv(X.T @ X)
    return _result(beta[0], math.sqrt(LOGPER_VAR * cov[0, 0]), "fexp", p, n)


def estimate(series, method: str = "fexp", tuning: Optional[int] = None) -> EstimateResult:
    if method == "gph":
        return gph(series, tuning)
    if method == "fexp":
        return fexp(series, tuning)
    raise DomainError(f"unknown estimator {method!r}")
