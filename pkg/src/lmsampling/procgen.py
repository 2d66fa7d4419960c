"""Long-memory process models and Gaussian trajectory generation.

Polynomial convention: ``ar_coeffs = (a_1, ..., a_p)`` describe the operator
``A(L) = 1 + a_1 L + ... + a_p L^p`` (equivalently the monic polynomial
``z^p + a_1 z^(p-1) + ... + a_p``, whose roots must lie inside the unit
circle), and likewise ``ma_coeffs`` for ``B(L)``.  The FARIMA process is
``X = B(L) A(L)^{-1} (I - L)^{-d} eps``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import fft as sfft
from scipy import linalg, signal, special

from . import _backend
from .errors import DomainError, NumericError
from .quadrature import graded_points, integrate
from .rng import derive_seed

DEFAULT_M = 5000
ROOT_MARGIN = 1e-8
EXACT_MAX_N = 4096


# --------------------------------------------------------------------------
# model types
# --------------------------------------------------------------------------

def _check_poly(coeffs, name):
    c = np.asarray(coeffs, dtype=float)
    if c.size and np.any(np.abs(np.roots(np.concatenate(([1.0], c)))) >= 1.0 - ROOT_MARGIN):
        raise DomainError(f"{name} polynomial has a root of modulus >= 1")
    return tuple(float(v) for v in c)


@dataclass(frozen=True)
class FarimaSpec:
    d: float = 0.0
    ar_coeffs: tuple = ()
    ma_coeffs: tuple = ()
    noise_var: float = 1.0

    def __post_init__(self):
        if not (0.0 <= self.d < 0.5):
            raise DomainError(f"memory parameter d must lie in [0, 1/2), got {self.d}")
        if not self.noise_var > 0:
            raise DomainError("noise_var must be positive")
        object.__setattr__(self, "ar_coeffs", _check_poly(self.ar_coeffs, "AR"))
        object.__setattr__(self, "ma_coeffs", _check_poly(self.ma_coeffs, "MA"))
        object.__setattr__(self, "d", float(self.d))

    @property
    def is_pure(self) -> bool:
        """True for FARIMA(0, d, 0)."""
        return not self.ar_coeffs and not self.ma_coeffs

    def describe(self) -> str:
        return (f"FARIMA(p={len(self.ar_coeffs)},d={self.d:g},q={len(self.ma_coeffs)},"
                f"var={self.noise_var:g})")


@dataclass(frozen=True)
class GegenbauerSpec:
    """Spectral density ``|Phi|^2 prod_j |e^{il}-e^{i th_j}|^{-2d_j} |e^{il}-e^{-i th_j}|^{-2d_j}``.

    At ``theta_j`` in {0, pi} the two factors coincide and only one is kept,
    so the local exponent is ``2 d_j`` exactly as for FARIMA.
    """
    components: tuple = ()
    arma: FarimaSpec = field(default_factory=FarimaSpec)

    def __post_init__(self):
        comps = tuple((float(t), float(dj)) for t, dj in self.components)
        thetas = [t for t, _ in comps]
        if len(set(thetas)) != len(thetas):
            raise DomainError("Gegenbauer frequencies must be distinct")
        for t, dj in comps:
            if not 0.0 <= t <= math.pi:
                raise DomainError(f"frequency {t} outside [0, pi]")
            if not 0.0 < dj < 0.5:
                raise DomainError(f"exponent {dj} outside (0, 1/2)")
        if self.arma.d != 0.0:
            raise DomainError("the ARMA factor of a Gegenbauer model must have d = 0")
        object.__setattr__(self, "components", comps)

    def describe(self) -> str:
        parts = ",".join(f"{t:.6g}:{dj:g}" for t, dj in self.components)
        return f"Gegenbauer[{parts}]x{self.arma.describe()}"


@dataclass(frozen=True)
class MacoeffTable:
    coeffs: np.ndarray
    truncation_m: int
    tail_bound: float
    noise_var: float = 1.0


@dataclass(frozen=True)
class CovSeq:
    """Covariance at lags 0..H with provenance ``exact``, ``monte_carlo`` or ``empirical``."""
    values: np.ndarray
    provenance: str = "exact"
    model: str = ""
    se: Optional[np.ndarray] = None
    reps: Optional[int] = None
    n: Optional[int] = None

    @property
    def maxlag(self) -> int:
        return self.values.size - 1

    def __getitem__(self, h):
        return self.values[h]


@dataclass(frozen=True)
class Trajectory:
    values: np.ndarray
    model_id: str
    seed: int

    @property
    def n(self) -> int:
        return self.values.size


# --------------------------------------------------------------------------
# moving-average coefficients
# --------------------------------------------------------------------------

def _frac_tail_sq(d, x):
    """Upper bound on sum_{j > x} psi_j^2 for (I - L)^{-d}; uses psi_j <= j^(d-1)/Gamma(d)."""
    if d == 0.0:
        return 0.0
    if x < 1:
        return math.gamma(1 - 2 * d) / math.gamma(1 - d) ** 2
    return x ** (2 * d - 1) / ((1 - 2 * d) * math.gamma(d) ** 2)


def frac_ma_coeffs(d: float, m: int = DEFAULT_M) -> MacoeffTable:
    """Coefficients of ``(I - L)^{-d}`` up to lag ``m``: psi_j = psi_{j-1} (j-1+d)/j."""
    if not 0.0 <= d < 0.5:
        raise DomainError(f"d must lie in [0, 1/2), got {d}")
    if m < 0:
        raise DomainError("m must be >= 0")
    psi = np.empty(m + 1)
    psi[0] = 1.0
    if m:
        j = np.arange(1, m + 1)
        psi[1:] = np.cumprod((j - 1 + d) / j)
        if d > 0.0 and m > _ASYM_MIN:
            # the running product drifts by ~j*eps; switch to the gamma ratio
            k = int(_ASYM_MIN)
            psi[k:] = _gamma_ratio(np.arange(k, m + 1, dtype=float), d, 1.0) / special.gamma(d)
    return MacoeffTable(psi, m, _frac_tail_sq(d, m))


def arma_impulse(spec: FarimaSpec, m: int) -> np.ndarray:
    """First ``m + 1`` coefficients of ``B(L) / A(L)``."""
    x = np.zeros(m + 1)
    x[0] = 1.0
    return signal.lfilter(np.r_[1.0, spec.ma_coeffs], np.r_[1.0, spec.ar_coeffs], x)


def farima_ma_coeffs(spec: FarimaSpec, m: int = DEFAULT_M) -> MacoeffTable:
    """Causal MA(inf) coefficients of the FARIMA filter, truncated at lag ``m``."""
    frac = frac_ma_coeffs(spec.d, m)
    if spec.is_pure:
        return MacoeffTable(frac.coeffs, m, spec.noise_var * frac.tail_bound, spec.noise_var)
    # impulse response to 2m; its remainder beyond that is geometrically small
    h = arma_impulse(spec, 2 * m + 1)
    psi = np.convolve(h[: m + 1], frac.coeffs)[: m + 1]
    # ||psi 1_{>m}||_2 <= sum_k |h_k| ||phi 1_{>m-k}||_2 (Minkowski)
    k = np.arange(h.size)
    norms = np.sqrt([_frac_tail_sq(spec.d, m - kk) for kk in k])
    if spec.d == 0.0:
        norms = (k > m).astype(float)
    bound = float(np.dot(np.abs(h), norms)) ** 2
    return MacoeffTable(psi, m, spec.noise_var * bound, spec.noise_var)


# --------------------------------------------------------------------------
# autocovariances
# --------------------------------------------------------------------------

def frac_autocov(d: float, maxlag: int, noise_var: float = 1.0) -> np.ndarray:
    """FARIMA(0,d,0) autocovariance at lags 0..maxlag via the ratio recursion."""
    s = np.empty(maxlag + 1)
    s[0] = noise_var * math.exp(special.gammaln(1 - 2 * d) - 2 * special.gammaln(1 - d))
    if maxlag:
        h = np.arange(1, maxlag + 1)
        s[1:] = s[0] * np.cumprod((h - 1 + d) / (h - d))
        if d > 0.0 and maxlag > _ASYM_MIN:
            k = int(_ASYM_MIN)
            s[k:] = frac_autocov_at(d, np.arange(k, maxlag + 1), noise_var)
    return s


def frac_autocov_at(d: float, lags, noise_var: float = 1.0) -> np.ndarray:
    """FARIMA(0,d,0) autocovariance at arbitrary (possibly huge) integer lags."""
    h = np.abs(np.asarray(lags, dtype=float))
    c0 = noise_var * math.exp(special.gammaln(1 - 2 * d) - 2 * special.gammaln(1 - d))
    if d == 0.0:
        return np.where(h == 0, c0, 0.0)
    # rho(h) = Gamma(h+d) Gamma(1-d) / (Gamma(h+1-d) Gamma(d)); poch(x, a) = Gamma(x+a)/Gamma(x)
    out = special.poch(h + 1 - d, 2 * d - 1)
    big = h >= _ASYM_MIN
    if np.any(big):
        # poch loses relative accuracy for large arguments
        out = np.where(big, _gamma_ratio(np.maximum(h, _ASYM_MIN), d, 1 - d), out)
    return c0 * out / special.poch(1 - d, 2 * d - 1)


_ASYM_MIN = 64.0


def _gamma_ratio(x, a, b, terms=10):
    """Gamma(x+a)/Gamma(x+b) from the Stirling series of the log-gamma difference."""
    s = (a - b) * np.log(x)
    for n in range(1, terms + 1):
        c = _bernoulli_poly(n + 1, a) - _bernoulli_poly(n + 1, b)
        s = s + (-1) ** (n + 1) * c / (n * (n + 1)) * x ** (-float(n))
    return np.exp(s)


def _bernoulli_poly(n, t):
    bern = special.bernoulli(n)
    return sum(special.comb(n, k, exact=True) * bern[k] * t ** (n - k) for k in range(n + 1))


def farima_autocov(spec: FarimaSpec, maxlag: int) -> CovSeq:
    """Autocovariance of a FARIMA(p, d, q) process at lags 0..maxlag.

    The ARMA part is folded in exactly: ``sigma_X = r * sigma_W`` where ``r`` is
    the autocorrelation of the ARMA impulse response and ``sigma_W`` the
    FARIMA(0, d, 0) covariance, instead of a truncated psi-convolution.
    """
    if maxlag < 0:
        raise DomainError("maxlag must be >= 0")
    if spec.is_pure:
        return CovSeq(frac_autocov(spec.d, maxlag, spec.noise_var), "exact", spec.describe())
    # length at which the ARMA impulse response is below double precision
    rmax = max(abs(r) for r in np.roots(np.r_[1.0, spec.ar_coeffs])) if spec.ar_coeffs else 0.0
    L = len(spec.ma_coeffs) + 1
    if rmax > 0:
        L += int(math.ceil(40.0 / -math.log(rmax)))
    h = arma_impulse(spec, L)
    r = np.correlate(h, h, mode="full")  # lags -L..L
    w = frac_autocov(spec.d, maxlag + L, spec.noise_var)
    lags = np.arange(-L, L + 1)
    out = np.array([np.dot(r, w[np.abs(k - lags)]) for k in range(maxlag + 1)])
    return CovSeq(out, "exact", spec.describe())


def farima_sd(spec: FarimaSpec, lam):
    """Spectral density ``var/(2 pi) |B/A|^2 |1 - e^{i lam}|^{-2d}``."""
    from .specmap import farima_sd as _sd
    return _sd(spec, lam)


def gegenbauer_autocov(spec: GegenbauerSpec, maxlag: int, tol: float = 1e-8) -> CovSeq:
    """sigma(h) = int_{-pi}^{pi} cos(h lam) f(lam) d lam by singularity-split quadrature."""
    from .specmap import gegenbauer_sd

    if maxlag < 0:
        raise DomainError("maxlag must be >= 0")
    lags = np.arange(maxlag + 1)
    if not spec.components and not spec.arma.ar_coeffs and not spec.arma.ma_coeffs:
        out = np.zeros(maxlag + 1)
        out[0] = spec.arma.noise_var
        return CovSeq(out, "exact", spec.describe())
    pts = [0.0, math.pi]
    for t, _ in spec.components:
        pts.extend(graded_points(t, 0.0, math.pi, levels=60))
    # resolve the oscillation of cos(h lam)
    pts.extend(np.linspace(0.0, math.pi, max(2, maxlag // 4 + 2)))

    def integrand(x):
        return 2.0 * np.cos(np.multiply.outer(x, lags)) * gegenbauer_sd(spec, x, check=False)[:, None]

    res = integrate(integrand, pts, tol=tol, singular=[(t, 2.0 * dj) for t, dj in spec.components])
    if res.error > tol:
        raise NumericError("Gegenbauer autocovariance quadrature failed", res.error)
    return CovSeq(np.asarray(res.value), "exact", spec.describe())


# --------------------------------------------------------------------------
# generators
# --------------------------------------------------------------------------

def _noise_key(seed):
    return derive_seed(seed, "innovations")


def gen_at_indices(coeffs: MacoeffTable, indices: Sequence[int], seed: int,
                   backend: Optional[str] = None) -> np.ndarray:
    """X_t = sum_j psi_j eps_{t-j} at the given strictly increasing times."""
    idx = np.asarray(indices, dtype=np.int64)
    if idx.ndim != 1:
        raise DomainError("indices must be one-dimensional")
    if idx.size and (idx[0] < 0 or np.any(np.diff(idx) <= 0)):
        raise DomainError("indices must be strictly increasing and >= 0")
    return _backend.ma_at_indices(coeffs.coeffs, idx, _noise_key(seed),
                                  math.sqrt(coeffs.noise_var), backend=backend)


def gen_trajectory_ma(coeffs: MacoeffTable, n: int, seed: int, model_id: str = "",
                      backend: Optional[str] = None, chunk: int = 1 << 16) -> Trajectory:
    """Length-``n`` trajectory of the truncated moving average.

    Generated in chunks so memory stays O(m + chunk); the result equals
    ``gen_at_indices(coeffs, range(n), seed)`` bit for bit.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    parts = [gen_at_indices(coeffs, np.arange(s, min(n, s + chunk)), seed, backend)
             for s in range(0, n, chunk)]
    return Trajectory(np.concatenate(parts), model_id, int(seed))


def noise(seed: int, n: int, start: int = 0) -> np.ndarray:
    """The raw innovations used by the generators for ``seed``."""
    return _backend.noise_field(_noise_key(seed), np.arange(start, start + n))


def gen_trajectory_exact(cov: CovSeq, n: int, seed: int, model_id: str = "") -> Trajectory:
    """Gaussian vector with Toeplitz covariance ``cov[0..n-1]`` by Cholesky factorisation."""
    if n < 1 or n > EXACT_MAX_N:
        raise DomainError(f"exact sampler needs 1 <= n <= {EXACT_MAX_N}")
    c = np.asarray(cov.values if isinstance(cov, CovSeq) else cov, dtype=float)
    if c.size < n:
        raise DomainError(f"covariance has {c.size} lags, need {n}")
    T = linalg.toeplitz(c[:n])
    T[np.diag_indices(n)] += 1e-10 * max(c[0], 1.0)
    try:
        L = linalg.cholesky(T, lower=True)
    except linalg.LinAlgError:
        raise DomainError("covariance is not positive semidefinite") from None
    z = _backend.noise_field(derive_seed(seed, "exact"), np.arange(n))
    return Trajectory(L @ z, model_id or (cov.model if isinstance(cov, CovSeq) else ""), int(seed))
