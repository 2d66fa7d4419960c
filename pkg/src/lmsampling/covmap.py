"""Covariance of the randomly sampled process ``Y_n = X_{T_n}``.

The exact route sums ``sigma_Y(h) = sum_j sigma_X(j) P(T_h = j)`` on a window
``0..J`` of the law of ``T_h``.  The neglected part is certified by
``P(T_h > J) * sup_{j > J} |sigma_X(j)|``, so every covariance model carries
an envelope ``J -> sup_{j > J} |sigma_X(j)|``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import samplaw
from .errors import DomainError, ResourceError
from .procgen import CovSeq, FarimaSpec, arma_impulse, frac_autocov, frac_autocov_at
from .rng import generator
from .samplaw import Dirac, ParetoTail, Table

DEFAULT_TOL = 1e-10
_CHUNK = 1 << 18


# --------------------------------------------------------------------------
# covariance models
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class CovarianceModel:
    """``sigma_X`` as a vectorised function of integer lags plus a tail envelope.

    ``envelope(J)`` must bound ``sup_{j > J} |sigma_X(j)|``; ``None`` means the
    model is only known on a finite range and cannot be summed against an
    unbounded sampling law.
    """
    fn: Callable
    envelope: Optional[Callable] = None
    label: str = ""

    def __call__(self, lags):
        return np.asarray(self.fn(np.asarray(lags)), dtype=float)

    @property
    def var(self) -> float:
        return float(self(np.array([0]))[0])


def farima_covariance(spec: FarimaSpec) -> CovarianceModel:
    """FARIMA autocovariance at arbitrary lags.

    The ARMA part enters as ``sigma_X = r * sigma_W`` with ``r`` the ARMA
    impulse autocorrelation; since ``sigma_W`` decreases, for ``j > L``
    ``|sigma_X(j)| <= sum |r_k| sigma_W(j - L)``.
    """
    d, v = spec.d, spec.noise_var
    if spec.is_pure:
        def fn(lags):
            return frac_autocov_at(d, lags, v)

        def env(J):
            return float(frac_autocov_at(d, [J + 1], v)[0])

        return CovarianceModel(fn, env, spec.describe())
    rmax = max((abs(z) for z in np.roots(np.r_[1.0, spec.ar_coeffs])), default=0.0)
    L = len(spec.ma_coeffs) + 1 + (int(math.ceil(40.0 / -math.log(rmax))) if rmax > 0 else 0)
    h = arma_impulse(spec, L)
    r = np.correlate(h, h, mode="full")
    k = np.arange(-L, L + 1)
    rsum = float(np.abs(r).sum())

    def fn(lags):
        lags = np.abs(np.asarray(lags, dtype=np.int64))
        out = np.empty(lags.shape)
        flat, res = lags.ravel(), out.reshape(-1)
        step = max(1, _CHUNK // k.size)
        for s in range(0, flat.size, step):
            blk = flat[s:s + step]
            res[s:s + step] = frac_autocov_at(d, np.abs(blk[:, None] - k[None, :]), v) @ r
        return out

    def env(J):
        return rsum * float(frac_autocov_at(d, [max(J + 1 - L, 0)], v)[0])

    return CovarianceModel(fn, env, spec.describe())


def ar1_covariance(phi: float, noise_var: float = 1.0) -> CovarianceModel:
    """``sigma(j) = noise_var phi^j / (1 - phi^2)``."""
    if not -1.0 < phi < 1.0:
        raise DomainError("AR(1) needs |phi| < 1")
    c0 = noise_var / (1.0 - phi * phi)

    def fn(lags):
        return c0 * np.power(phi, np.abs(np.asarray(lags, dtype=float)))

    return CovarianceModel(fn, lambda J: c0 * abs(phi) ** (J + 1), f"AR1({phi:g})")


def power_covariance(c: float, alpha: float, var0: Optional[float] = None) -> CovarianceModel:
    """``sigma(j) = c j^{-alpha}`` for ``j >= 1`` and ``var0`` (default ``c``) at 0."""
    if alpha <= 0 or c <= 0:
        raise DomainError("power covariance needs c > 0 and alpha > 0")
    v0 = c if var0 is None else var0

    def fn(lags):
        j = np.abs(np.asarray(lags, dtype=float))
        with np.errstate(divide="ignore"):
            return np.where(j == 0, v0, c * j ** -alpha)

    return CovarianceModel(fn, lambda J: c * (J + 1.0) ** -alpha, f"power({c:g},{alpha:g})")


def tabulated_covariance(cov, envelope: Optional[Callable] = None) -> CovarianceModel:
    """A covariance known on lags ``0..H``; beyond ``H`` only ``envelope`` is known."""
    vals = np.asarray(cov.values if isinstance(cov, CovSeq) else cov, dtype=float)

    def fn(lags):
        lags = np.abs(np.asarray(lags, dtype=np.int64))
        if lags.size and lags.max() >= vals.size:
            raise DomainError(f"covariance tabulated only up to lag {vals.size - 1}")
        return vals[lags]

    return CovarianceModel(fn, envelope, getattr(cov, "model", "table"))


def as_model(sigma_x) -> CovarianceModel:
    if isinstance(sigma_x, CovarianceModel):
        return sigma_x
    if isinstance(sigma_x, FarimaSpec):
        return farima_covariance(sigma_x)
    if isinstance(sigma_x, CovSeq):
        return tabulated_covariance(sigma_x)
    if callable(sigma_x):
        return CovarianceModel(sigma_x)
    raise DomainError(f"cannot interpret {sigma_x!r} as a covariance")


# --------------------------------------------------------------------------
# exact covariance
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ExactCov:
    value: float
    bound: float
    window: int


def _needs_envelope(model, law):
    if isinstance(law, ParetoTail) and model.envelope is None:
        raise DomainError("an envelope is required to sum against an unbounded law")


def _exact_one(model: CovarianceModel, law, h: int, tol: float) -> ExactCov:
    if h < 0:
        raise DomainError("lag must be >= 0")
    if h == 0:
        return ExactCov(model.var, 0.0, 0)
    if isinstance(law, Dirac):
        return ExactCov(float(model(np.array([law.k * h]))[0]), 0.0, law.k * h)
    if isinstance(law, Table):
        table = samplaw.convolve_power(law, h)
        return ExactCov(float(np.dot(model(table.support), table.probs)), 0.0, table.stop)
    _needs_envelope(model, law)
    J = max(1024, 4 * h)
    while True:
        if J + 1 > samplaw.MAX_TABLE_LEN:
            raise ResourceError(f"tolerance {tol:g} needs a window beyond {samplaw.MAX_TABLE_LEN}")
        p = samplaw._power_on_window(law, h, J)
        tail_mass = max(0.0, 1.0 - math.fsum(p))
        bound = tail_mass * model.envelope(J)
        if bound <= tol:
            lags = np.arange(h, J + 1)
            return ExactCov(float(np.dot(model(lags), p[h:])), bound, J)
        J *= 2


def sampled_cov_exact(sigma_x, law, h: int, tol: float = DEFAULT_TOL) -> float:
    """``sigma_Y(h) = sum_j sigma_X(j) P(T_h = j)`` with absolute error at most ``tol``."""
    if tol <= 0:
        raise DomainError("tol must be positive")
    return _exact_one(as_model(sigma_x), law, int(h), tol).value


def _window_for(model, law, h, tol):
    """Smallest doubling window J on which the tail bound at lag ``h`` is below ``tol``."""
    return _exact_one(model, law, h, tol).window


def sampled_cov_exact_seq(sigma_x, law, hmax: int, tol: float = 1e-8) -> CovSeq:
    """``sigma_Y(0..hmax)`` in one sweep of convolution powers.

    Lags are processed in stages ``(2^s, 2^{s+1}]``; each stage uses the window
    certified at its last lag (tails of ``T_h`` grow with ``h``) and is seeded
    by one binary-exponentiation power.
    """
    model = as_model(sigma_x)
    if hmax < 0:
        raise DomainError("hmax must be >= 0")
    out = np.empty(hmax + 1)
    out[0] = model.var
    if hmax == 0:
        return CovSeq(out, "exact", model.label)
    if not isinstance(law, ParetoTail):
        for h in range(1, hmax + 1):
            out[h] = _exact_one(model, law, h, tol).value
        return CovSeq(out, "exact", model.label)
    _needs_envelope(model, law)
    lo = 1
    while lo <= hmax:
        hi = min(hmax, 2 * lo - 1) if lo > 1 else 1
        J = _window_for(model, law, hi, tol)
        sig = model(np.arange(J + 1))
        conv = samplaw._WindowConvolver(J)
        base = conv.spectrum(samplaw.pmf_window(law, J))
        cur = samplaw._power_on_window(law, lo, J)
        for h in range(lo, hi + 1):
            if h > lo:
                cur = conv.product(conv.spectrum(cur), base)
            out[h] = float(np.dot(sig[h:], cur[h:]))
        lo = hi + 1
    return CovSeq(out, "exact", model.label)


# --------------------------------------------------------------------------
# Monte Carlo
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class McEstimate:
    mean: float
    se: float
    reps: int

    def __iter__(self):
        return iter((self.mean, self.se))


def sampled_cov_mc(sigma_x, law, h: int, reps: int, seed: int) -> McEstimate:
    """Average of ``sigma_X(T_h)`` over ``reps`` independent walks."""
    if reps < 100:
        raise DomainError("Monte Carlo needs reps >= 100")
    model = as_model(sigma_x)
    if h == 0:
        return McEstimate(model.var, 0.0, reps)
    rng = generator(seed, "mc", h)
    vals = np.empty(reps)
    step = max(1, _CHUNK // h)
    for s in range(0, reps, step):
        k = min(step, reps - s)
        t = samplaw.draws(law, rng, k * h).reshape(k, h).astype(float).sum(axis=1)
        vals[s:s + k] = model(np.minimum(t, samplaw.MAX_DRAW).astype(np.int64))
    se = float(vals.std(ddof=1) / math.sqrt(reps))
    return McEstimate(float(vals.mean()), se, reps)


# --------------------------------------------------------------------------
# memory prediction and decay fits
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class MemoryPrediction:
    """Regime of ``Y`` given ``d`` and the law.

    ``alpha_out`` is the exponent of the covariance decay bound
    ``sigma_Y(h) <= C h^{-alpha_out}``.
    """
    regime: str
    d_in: float
    d_out: Optional[float]
    alpha_out: Optional[float]

    def summary(self) -> str:
        if self.d_out is None:
            return f"{self.regime}, d_Y = none"
        return f"{self.regime}, d_Y = {self.d_out:.2f}"


def predict_memory(d: float, law) -> MemoryPrediction:
    if not 0.0 < d < 0.5:
        raise DomainError(f"d must lie in (0, 1/2), got {d}")
    if not isinstance(law, ParetoTail) or law.gamma >= 2.0:
        return MemoryPrediction("preserved", d, d, 1.0 - 2.0 * d)
    g = law.gamma
    alpha = (1.0 - 2.0 * d) / (g - 1.0)
    if g >= 2.0 * (1.0 - d):
        return MemoryPrediction("reduced", d, max(d - 1.0 + g / 2.0, 0.0), alpha)
    return MemoryPrediction("short", d, None, alpha)


@dataclass(frozen=True)
class DecayFit:
    alpha_hat: float
    intercept: float
    r2: float
    lag_lo: int
    lag_hi: int
    n_used: int
    shrunk: bool

    def __iter__(self):
        return iter((self.alpha_hat, self.intercept, self.r2))


def fit_decay(cov, lag_lo: int, lag_hi: int) -> DecayFit:
    """Least-squares slope of ``log sigma(h)`` on ``log h`` over ``[lag_lo, lag_hi]``.

    Non-positive values are dropped; the effective window is reported.
    """
    vals = np.asarray(cov.values if isinstance(cov, CovSeq) else cov, dtype=float)
    if not 0 < lag_lo < lag_hi or lag_hi > vals.size - 1:
        raise DomainError(f"need 0 < lag_lo < lag_hi <= {vals.size - 1}")
    lags = np.arange(lag_lo, lag_hi + 1)
    y = vals[lags]
    ok = np.isfinite(y) & (y > 0)
    if ok.sum() < 10:
        raise DomainError("fewer than 10 positive lags in the window")
    x, ly = np.log(lags[ok]), np.log(y[ok])
    slope, icpt = np.polyfit(x, ly, 1)
    resid = ly - (slope * x + icpt)
    sst = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / sst if sst > 0 else 1.0
    used = lags[ok]
    return DecayFit(float(-slope), float(icpt), r2, int(used[0]), int(used[-1]), int(ok.sum()),
                    bool(not ok.all()))


def fini_ratio(c: float, alpha: float, law, cov_y, hs: Sequence[int]) -> list:
    """``sigma_Y(h) h^alpha / c``, which tends to ``E(T_1)^{-alpha}`` for finite-mean laws."""
    if not math.isfinite(samplaw.mean(law)):
        raise DomainError("the ratio needs a finite-mean sampling law")
    vals = np.asarray(cov_y.values if isinstance(cov_y, CovSeq) else cov_y, dtype=float)
    return [float(vals[h] * h ** alpha / c) for h in hs]
