"""Sampling-interval laws, their random walks, convolution powers and
characteristic functions.

A law ``S`` lives on {1, 2, ...}.  Three families are supported:

``Dirac(k)``
    deterministic sampling every ``k`` steps.
``ParetoTail(gamma)``
    ``P(S = j) = j**(1-gamma) - (j+1)**(1-gamma)``, the integer part of a
    Pareto variable; ``S(j) ~ (gamma-1) j**-gamma``.
``Table(pmf)``
    an explicit finite table on ``1..J``.

The characteristic function of ``ParetoTail`` is evaluated through the
identity ``S^(lam) = 1 + (1 - exp(-i lam)) Li_{gamma-1}(exp(i lam))`` and the
expansion of the polylogarithm around ``exp(0)``, which converges for
``|lam| < 2 pi``.  This is exact to rounding and stays cheap and accurate as
``lam -> 0``, where a direct partial sum would need astronomically many terms.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Union

import mpmath
import numpy as np
from scipy import fft as sfft
from scipy import special

from .errors import DomainError, NumericError, ResourceError
from .rng import generator

# largest table handled by convolve_power / the exact covariance sums
MAX_TABLE_LEN = 1 << 24
# draws are clipped here; far beyond any walk cap
MAX_DRAW = 1 << 62
_SERIES_TERMS = 64


# --------------------------------------------------------------------------
# law types
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Dirac:
    k: int

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise DomainError(f"Dirac law needs an integer k >= 1, got {self.k}")
        object.__setattr__(self, "k", int(self.k))

    def __str__(self):
        return f"dirac:{self.k}"


@dataclass(frozen=True)
class ParetoTail:
    gamma: float

    def __post_init__(self):
        if not (self.gamma > 1.0 and math.isfinite(self.gamma)):
            raise DomainError(f"ParetoTail needs gamma > 1, got {self.gamma}")
        object.__setattr__(self, "gamma", float(self.gamma))

    def __str__(self):
        return f"pareto:{self.gamma:g}"


@dataclass(frozen=True)
class Table:
    pmf: tuple = field()

    def __post_init__(self):
        p = np.asarray(self.pmf, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise DomainError("Table law needs a non-empty pmf list")
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise DomainError("Table pmf values must be finite and >= 0")
        if abs(p.sum() - 1.0) > 1e-12:
            raise DomainError(f"Table pmf sums to {p.sum()!r}, not 1")
        # trailing zeros carry no information
        last = int(np.flatnonzero(p)[-1])
        object.__setattr__(self, "pmf", tuple(float(v) for v in p[: last + 1]))

    @property
    def probs(self) -> np.ndarray:
        return np.asarray(self.pmf)

    def __str__(self):
        return "table:" + ",".join(repr(v) for v in self.pmf)


SamplingLaw = Union[Dirac, ParetoTail, Table]


def parse_law(text: str) -> SamplingLaw:
    """Parse ``dirac:k``, ``pareto:gamma`` or ``table:p1,p2,...``."""
    kind, _, arg = text.strip().partition(":")
    kind = kind.lower()
    try:
        if kind == "dirac":
            return Dirac(int(arg))
        if kind == "pareto":
            return ParetoTail(float(arg))
        if kind == "table":
            return Table(tuple(float(v) for v in arg.split(",")))
    except ValueError as exc:
        raise DomainError(f"bad law specification {text!r}: {exc}") from None
    raise DomainError(f"unknown law {text!r}; use dirac:k, pareto:g or table:p1,p2,...")


def is_dirac(law) -> bool:
    return isinstance(law, Dirac) or (isinstance(law, Table) and np.count_nonzero(law.probs) == 1)


def lattice_span(law) -> int:
    """gcd of the gaps between support points; 1 means ``|S^(lam)| < 1`` off zero.

    A one-point law has no gaps and reports its atom.
    """
    if isinstance(law, Dirac):
        return law.k
    if isinstance(law, ParetoTail):
        return 1
    support = np.flatnonzero(law.probs) + 1
    if support.size == 1:
        return int(support[0])
    return int(np.gcd.reduce(support[1:] - support[0]))


# --------------------------------------------------------------------------
# pmf, tail, moments
# --------------------------------------------------------------------------

def _pareto_pmf(gamma, j):
    j = np.asarray(j, dtype=float)
    # j^(1-g) - (j+1)^(1-g) without cancellation for large j
    return j ** (1.0 - gamma) * -np.expm1((1.0 - gamma) * np.log1p(1.0 / j))


def pmf(law: SamplingLaw, j):
    """P(S = j); ``j`` may be an integer or an integer array (all >= 1)."""
    ja = np.asarray(j)
    if np.any(ja < 1):
        raise DomainError("pmf is defined on j >= 1")
    if isinstance(law, Dirac):
        out = (ja == law.k).astype(float)
    elif isinstance(law, ParetoTail):
        out = _pareto_pmf(law.gamma, ja)
    else:
        p = law.probs
        ji = ja.astype(np.int64)
        out = np.where(ji <= p.size, p[np.minimum(ji, p.size) - 1], 0.0)
    return float(out) if np.ndim(out) == 0 else out


def tail(law: SamplingLaw, x):
    """P(S >= x)."""
    xa = np.asarray(x, dtype=float)
    xc = np.maximum(np.ceil(xa), 1.0)
    if isinstance(law, Dirac):
        out = (xc <= law.k).astype(float)
    elif isinstance(law, ParetoTail):
        out = xc ** (1.0 - law.gamma)
    else:
        surv = np.concatenate((np.cumsum(law.probs[::-1])[::-1], [0.0]))
        out = surv[np.minimum(xc, surv.size).astype(np.int64) - 1]
    return float(out) if np.ndim(out) == 0 else out


def mean(law: SamplingLaw) -> float:
    """E(S); ``math.inf`` for ParetoTail with gamma <= 2."""
    if isinstance(law, Dirac):
        return float(law.k)
    if isinstance(law, Table):
        return float(np.dot(np.arange(1, law.probs.size + 1), law.probs))
    if law.gamma <= 2.0:
        return math.inf
    # E S = sum_k P(S >= k) = zeta(gamma - 1)
    return float(special.zeta(law.gamma - 1.0))


def tail_index(law: SamplingLaw) -> Optional[float]:
    """sup{a : E S^a < inf}; None when every moment is finite."""
    if isinstance(law, ParetoTail):
        return law.gamma - 1.0
    return None


# --------------------------------------------------------------------------
# draws and walks
# --------------------------------------------------------------------------

def draws(law: SamplingLaw, rng: np.random.Generator, size: int) -> np.ndarray:
    """``size`` i.i.d. intervals as int64."""
    if isinstance(law, Dirac):
        return np.full(size, law.k, dtype=np.int64)
    if isinstance(law, ParetoTail):
        u = 1.0 - rng.random(size)  # (0, 1]
        x = np.floor(np.power(u, 1.0 / (1.0 - law.gamma)))
        return np.minimum(x, float(MAX_DRAW)).astype(np.int64)
    cdf = np.cumsum(law.probs)
    cdf[-1] = 1.0
    return np.searchsorted(cdf, rng.random(size), side="right").astype(np.int64) + 1


def draw(law: SamplingLaw, rng: np.random.Generator) -> int:
    """One interval; for ParetoTail ``floor(u**(1/(1-gamma)))``."""
    return int(draws(law, rng, 1)[0])


@dataclass(frozen=True)
class RandomWalkPath:
    times: np.ndarray
    seed: int

    @property
    def n(self) -> int:
        return self.times.size - 1


def walk(law: SamplingLaw, n: int, seed: int, *stream) -> RandomWalkPath:
    """T_0 = 0 and T_j = T_{j-1} + S_j for j = 1..n."""
    if n < 0:
        raise DomainError("walk length must be >= 0")
    steps = draws(law, generator(seed, "walk", *stream), n)
    times = np.zeros(n + 1, dtype=np.int64)
    # float cumsum would lose exactness; int64 saturates only past 9e18
    np.cumsum(steps, out=times[1:])
    return RandomWalkPath(times, int(seed))


# --------------------------------------------------------------------------
# convolution powers
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class PmfTable:
    """Distribution of T_h on ``start..start+len(probs)-1`` plus the mass beyond."""
    probs: np.ndarray
    start: int
    tail_mass: float

    @property
    def support(self) -> np.ndarray:
        return np.arange(self.start, self.start + self.probs.size)

    @property
    def stop(self) -> int:
        return self.start + self.probs.size - 1


def pmf_window(law: SamplingLaw, J: int) -> np.ndarray:
    """``p[j] = P(S = j)`` for j = 0..J (``p[0] = 0``)."""
    p = np.zeros(J + 1)
    if isinstance(law, Dirac):
        if law.k <= J:
            p[law.k] = 1.0
    elif isinstance(law, ParetoTail):
        p[1:] = _pareto_pmf(law.gamma, np.arange(1, J + 1))
    else:
        q = law.probs[:J]
        p[1:1 + q.size] = q
    return p


class _WindowConvolver:
    """Truncated convolution on 0..J; exact on the window since supports start at 1."""

    def __init__(self, J):
        self.J = J
        self.nfft = sfft.next_fast_len(2 * (J + 1), real=True)

    def spectrum(self, a):
        return sfft.rfft(a, self.nfft)

    def product(self, fa, fb):
        c = sfft.irfft(fa * fb, self.nfft)[: self.J + 1]
        np.maximum(c, 0.0, out=c)  # FFT round-off can dip below zero
        return c


def _power_on_window(law, h, J):
    conv = _WindowConvolver(J)
    base = conv.spectrum(pmf_window(law, J))
    acc = None
    while True:
        if h & 1:
            acc = base if acc is None else conv.spectrum(conv.product(acc, base))
        h >>= 1
        if not h:
            break
        base = conv.spectrum(conv.product(base, base))
    return sfft.irfft(acc, conv.nfft)[: J + 1].clip(min=0.0)


def convolve_power(law: SamplingLaw, h: int, cutoff_mass: float = 1e-10) -> PmfTable:
    """S^{*h}, the law of T_h, with the mass beyond the table at most ``cutoff_mass``."""
    if h < 1:
        raise DomainError("convolution power needs h >= 1")
    if not (0.0 < cutoff_mass <= 1e-8):
        raise DomainError("cutoff_mass must lie in (0, 1e-8]")
    if isinstance(law, Dirac):
        return PmfTable(np.array([1.0]), law.k * h, 0.0)
    if isinstance(law, Table):
        J = law.probs.size * h
        if J + 1 > MAX_TABLE_LEN:
            raise ResourceError(f"S^*{h} needs {J + 1} entries")
        probs = _power_on_window(law, h, J)
        probs = probs / probs.sum()
        return PmfTable(probs[h:], h, 0.0)
    J = max(1024, 4 * h)
    while True:
        if J + 1 > MAX_TABLE_LEN:
            raise ResourceError(
                f"mass cutoff {cutoff_mass:g} for S^*{h} not reached within "
                f"{MAX_TABLE_LEN} table entries")
        probs = _power_on_window(law, h, J)
        tail_mass = max(0.0, 1.0 - math.fsum(probs))
        if tail_mass <= cutoff_mass:
            return PmfTable(probs[h:], h, tail_mass)
        J *= 2


def convolution_sweep(law: SamplingLaw, hmax: int, J: int):
    """Yield ``(h, p_h)`` for h = 1..hmax with ``p_h[j] = P(T_h = j)`` on 0..J."""
    if J + 1 > MAX_TABLE_LEN:
        raise ResourceError(f"window of {J + 1} entries exceeds the table budget")
    conv = _WindowConvolver(J)
    p1 = pmf_window(law, J)
    base = conv.spectrum(p1)
    cur = p1
    for h in range(1, hmax + 1):
        if h > 1:
            cur = conv.product(conv.spectrum(cur), base)
        yield h, cur


# --------------------------------------------------------------------------
# characteristic function
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class CharFnValue:
    value: complex
    rho: float
    tau: float
    trunc_error: float


@lru_cache(maxsize=64)
def _polylog_coeffs(s: float):
    """zeta(s-k)/k! for k < _SERIES_TERMS and the leading singular coefficient."""
    with mpmath.workdps(40):
        n = round(s)
        integer = abs(s - n) < 1e-9 and n >= 1
        coeffs = []
        for k in range(_SERIES_TERMS):
            if integer and k == n - 1:
                coeffs.append(0.0)
            else:
                coeffs.append(complex(mpmath.zeta(s - k) / mpmath.factorial(k)))
        if integer:
            lead = float(mpmath.harmonic(n - 1) / mpmath.factorial(n - 1))
            return np.array(coeffs), lead, int(n)
        return np.array(coeffs), float(mpmath.gamma(1 - s)), None


def polylog_unit(s: float, mu):
    """Li_s(exp(i mu)) for 0 < |mu| < 2 pi, s > 0, with an error bound.

    Returns ``(value, err)`` arrays.  For non-integer ``s``
    ``Li_s(e^w) = Gamma(1-s) (-w)^(s-1) + sum_k zeta(s-k) w^k / k!``; for
    integer ``s = n`` the ``k = n-1`` term is replaced by
    ``w^(n-1)/(n-1)! (H_{n-1} - log(-w))``.
    """
    mu = np.asarray(mu, dtype=float)
    coeffs, lead, n = _polylog_coeffs(float(s))
    w = 1j * mu
    absmu = np.abs(mu)
    total = np.zeros(mu.shape, dtype=complex)
    mag = np.zeros(mu.shape)
    wk = np.ones(mu.shape, dtype=complex)
    for c in coeffs:
        term = c * wk
        total += term
        mag += np.abs(term)
        wk = wk * w
    # log(-w) and (-w)^(s-1) on the principal branch: -w = |mu| exp(-i pi/2 sgn mu)
    log_mw = np.log(absmu) - 0.5j * np.pi * np.sign(mu)
    if n is None:
        sing = lead * np.exp((s - 1.0) * log_mw)
    else:
        sing = w ** (n - 1) * (lead - log_mw / math.factorial(n - 1))
    total += sing
    mag += np.abs(sing)
    # first omitted term (geometric in |mu|/2pi) doubled, plus accumulated rounding
    omitted = 2.0 * np.abs(coeffs[-1]) * absmu ** _SERIES_TERMS
    err = omitted + 8.0 * np.finfo(float).eps * mag
    return total, err


def one_minus_char(law: SamplingLaw, lam) -> np.ndarray:
    """1 - S^(lam), computed without cancellation near lam = 0."""
    lam = np.asarray(lam, dtype=float)
    if np.any(np.abs(lam) > np.pi + 1e-12):
        raise DomainError("characteristic function evaluated on [-pi, pi]")
    if isinstance(law, Dirac):
        # 1 - e^{ik lam} = -2i sin(k lam/2) e^{ik lam/2}
        half = 0.5 * law.k * lam
        return -2j * np.sin(half) * np.exp(1j * half)
    if isinstance(law, Table):
        j = np.arange(1, law.probs.size + 1)
        half = 0.5 * np.multiply.outer(lam, j)
        return (-2j * np.sin(half) * np.exp(1j * half)) @ law.probs
    return _pareto_one_minus(law.gamma, lam)[0]


def _pareto_one_minus(gamma, lam):
    lam = np.asarray(lam, dtype=float)
    out = np.zeros(lam.shape, dtype=complex)
    err = np.zeros(lam.shape)
    nz = lam != 0.0
    if np.any(nz):
        li, li_err = polylog_unit(gamma - 1.0, lam[nz])
        # 1 - S^ = (e^{-i lam} - 1) Li ; e^{-i lam} - 1 = -2i sin(lam/2) e^{-i lam/2}
        f = -2j * np.sin(0.5 * lam[nz]) * np.exp(-0.5j * lam[nz])
        out[nz] = f * li
        err[nz] = np.abs(f) * li_err
    return out, err


def char_values(law: SamplingLaw, lam) -> np.ndarray:
    """Vectorised S^(lam) = E exp(i lam S)."""
    return 1.0 - one_minus_char(law, lam)


def char_fn(law: SamplingLaw, lam: float, tol: float = 1e-12) -> CharFnValue:
    """S^(lam) with modulus rho, argument tau in (-pi, pi] and an error bound."""
    if not -np.pi <= lam <= np.pi:
        raise DomainError("lambda must lie in [-pi, pi]")
    if isinstance(law, ParetoTail):
        om, err = _pareto_one_minus(law.gamma, np.array([lam]))
        value, trunc = complex(1.0 - om[0]), float(err[0])
        if trunc > tol:
            raise NumericError(f"characteristic function error {trunc:g} exceeds {tol:g}", trunc)
    else:
        value, trunc = complex(char_values(law, np.array([lam]))[0]), 0.0
    if isinstance(law, Dirac):
        value = complex(np.exp(1j * law.k * lam))
    rho = abs(value)
    tau = math.atan2(value.imag, value.real)
    if tau == -math.pi:
        tau = math.pi
    return CharFnValue(value, rho, tau, trunc)


def mod_arg(law: SamplingLaw, lam):
    """Vectorised (rho, tau) of S^(lam)."""
    v = char_values(law, lam)
    return np.abs(v), np.angle(v)
