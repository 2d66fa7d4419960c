"""Spectral densities, deterministic aliasing and the randomly sampled spectrum.

Densities are normalised so that ``sigma(h) = int_{-pi}^{pi} e^{ih lam} f(lam) d lam``.
All densities here are even, so frequencies are canonicalised to ``[0, pi]``.

The spectrum of ``Y_n = X_{T_n}`` is obtained from the Poisson-kernel
smoothing

    g(r, theta) = 1/2 int_{-pi}^{pi} f(lam) (P_{r rho}(tau - theta) + P_{r rho}(tau + theta)) d lam

where ``rho e^{i tau}`` is the characteristic function of the sampling law,
and ``f_Y(theta) = lim_{r -> 1} g(r, theta)``.  This is the Abel mean
``(1/2 pi) sum_h r^|h| sigma_Y(h) e^{-ih theta}``.  The variant carrying an
extra ``1/pi`` term is the real part of the one-sided transform; it equals
``(g + sigma_Y(0)/2 pi) / 2`` and halves every Fourier coefficient with h >= 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import optimize

from . import samplaw
from .errors import DomainError, NumericError
from .procgen import FarimaSpec, GegenbauerSpec
from .quadrature import graded_points, integrate

MERGE_TOL = 1e-9
DEFAULT_TOL = 1e-7
TWO_PI = 2.0 * math.pi


# --------------------------------------------------------------------------
# containers
# --------------------------------------------------------------------------

def _canonical(freq: float) -> float:
    """Map a frequency to [0, pi] using 2 pi periodicity and evenness."""
    w = math.remainder(float(freq), TWO_PI)
    return abs(w)


@dataclass(frozen=True)
class SingularitySet:
    """Singular frequencies in ``[0, pi]`` with their memory exponents."""
    entries: tuple = ()

    def __post_init__(self):
        merged: list = []
        for f0, e in sorted((_canonical(f0), float(e)) for f0, e in self.entries):
            if not 0.0 < e < 0.5:
                raise DomainError(f"exponent {e} outside (0, 1/2)")
            if merged and abs(f0 - merged[-1][0]) <= MERGE_TOL:
                merged[-1] = (merged[-1][0], max(merged[-1][1], e))
            else:
                merged.append((f0, e))
        object.__setattr__(self, "entries", tuple(merged))

    def __len__(self):
        return len(self.entries)

    @property
    def freqs(self) -> list:
        return [f0 for f0, _ in self.entries]

    def exponent_at(self, freq: float) -> Optional[float]:
        f0 = _canonical(freq)
        for g, e in self.entries:
            if abs(g - f0) <= MERGE_TOL:
                return e
        return None


@dataclass(frozen=True)
class SpectralGrid:
    freqs: np.ndarray
    values: np.ndarray
    meta: str = ""

    def __post_init__(self):
        if self.freqs.shape != self.values.shape:
            raise DomainError("freqs and values differ in shape")
        if np.any(np.diff(self.freqs) <= 0):
            raise DomainError("freqs must be strictly increasing")
        if np.any(self.values < 0):
            raise DomainError("spectral values must be nonnegative")


@dataclass(frozen=True)
class Density:
    """A vectorised even spectral density together with its singular set."""
    fn: Callable
    singularities: SingularitySet = field(default_factory=SingularitySet)
    label: str = ""

    def __call__(self, lam):
        return self.fn(np.asarray(lam, dtype=float))


@dataclass(frozen=True)
class KernelEval:
    r: float
    theta: float
    value: float
    quad_error: float


@dataclass(frozen=True)
class LimitEstimate:
    """Extrapolated ``lim_{r->1} g(r, theta)`` with its convergence record."""
    value: float
    theta: float
    r_seq: tuple
    g_values: tuple
    differences: tuple
    rate: Optional[float]
    method: str

    def __float__(self):
        return float(self.value)


# --------------------------------------------------------------------------
# model densities
# --------------------------------------------------------------------------

def _arma_factor(spec: FarimaSpec, lam):
    z = np.exp(-1j * lam)
    num = np.polyval(np.r_[spec.ma_coeffs[::-1], 1.0], z) if spec.ma_coeffs else 1.0
    den = np.polyval(np.r_[spec.ar_coeffs[::-1], 1.0], z) if spec.ar_coeffs else 1.0
    return spec.noise_var / TWO_PI * np.abs(num) ** 2 / np.abs(den) ** 2


def _gap(lam, theta):
    """|e^{i lam} - e^{i theta}| without cancellation."""
    return 2.0 * np.abs(np.sin(0.5 * (lam - theta)))


def _check_finite(out, check, what):
    if check and not np.all(np.isfinite(out)):
        raise DomainError(f"{what} evaluated at a singular frequency")
    return out


def farima_sd(spec: FarimaSpec, lam, check: bool = True):
    """``(var / 2 pi) |B / A|^2 |1 - e^{i lam}|^{-2d}``."""
    lam = np.asarray(lam, dtype=float)
    with np.errstate(divide="ignore"):
        out = _arma_factor(spec, lam) * _gap(lam, 0.0) ** (-2.0 * spec.d)
    out = _check_finite(out, check, "FARIMA density")
    return out if out.ndim else float(out)


def gegenbauer_sd(spec: GegenbauerSpec, lam, check: bool = True):
    """Product of Gegenbauer factors times the ARMA density.

    At ``theta`` in {0, pi} a single factor ``|e^{il} - e^{i theta}|^{-2d}`` is used.
    """
    lam = np.asarray(lam, dtype=float)
    out = _arma_factor(spec.arma, lam) * np.ones_like(lam)
    with np.errstate(divide="ignore"):
        for t, dj in spec.components:
            if t in (0.0, math.pi):
                out = out * _gap(lam, t) ** (-2.0 * dj)
            else:
                out = out * (_gap(lam, t) * _gap(lam, -t)) ** (-2.0 * dj)
    out = _check_finite(out, check, "Gegenbauer density")
    return out if out.ndim else float(out)


def farima_density(spec: FarimaSpec) -> Density:
    sings = SingularitySet(((0.0, spec.d),)) if spec.d > 0 else SingularitySet()
    return Density(lambda x: farima_sd(spec, x, check=False), sings, spec.describe())


def gegenbauer_density(spec: GegenbauerSpec) -> Density:
    sings = SingularitySet(tuple(spec.components))
    return Density(lambda x: gegenbauer_sd(spec, x, check=False), sings, spec.describe())


def white_density(level: float = 1.0) -> Density:
    return Density(lambda x: np.full(np.shape(x), float(level)), SingularitySet(), f"white({level:g})")


def density_of(model) -> Density:
    if isinstance(model, Density):
        return model
    if isinstance(model, FarimaSpec):
        return farima_density(model)
    if isinstance(model, GegenbauerSpec):
        return gegenbauer_density(model)
    if callable(model):
        return Density(model)
    raise DomainError(f"cannot build a spectral density from {model!r}")


# --------------------------------------------------------------------------
# deterministic sampling
# --------------------------------------------------------------------------

def alias_sd(f, k: int, lam):
    """Spectral density of ``(X_{kn})_n``; ``lam`` in ``[-pi, pi)``.

    For even ``k`` the boundary term uses ``sgn(lam)`` with ``sgn(0) = +1``.
    """
    if k < 1:
        raise DomainError("k must be >= 1")
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < -math.pi) or np.any(lam >= math.pi + 1e-15):
        raise DomainError("lambda must lie in [-pi, pi)")
    ell = k // 2
    if k % 2:
        shifts = [np.full(lam.shape, 2 * math.pi * j) for j in range(-ell, ell + 1)]
    else:
        shifts = [np.full(lam.shape, 2 * math.pi * j) for j in range(-ell + 1, ell)]
        shifts.append(2 * math.pi * ell * np.where(lam >= 0, 1.0, -1.0))
    total = np.zeros(lam.shape)
    for s in shifts:
        v = np.asarray(f((lam - s) / k), dtype=float)
        if not np.all(np.isfinite(v)):
            raise DomainError("aliased argument hits a singularity")
        total = total + v
    out = total / k
    return out if out.ndim else float(out)


def fold_singularities(sings: SingularitySet, k: int) -> SingularitySet:
    """Images of singular frequencies under decimation by ``k``; coinciding images merge."""
    if k < 1:
        raise DomainError("k must be >= 1")
    return SingularitySet(tuple((k * f0, e) for f0, e in sings.entries))


def full_circle(sings: SingularitySet) -> list:
    """Singular frequencies as points of ``[-pi, pi)`` (both members of each +/- pair)."""
    out = []
    for f0, _ in sings.entries:
        if f0 <= MERGE_TOL:
            out.append(0.0)
        elif f0 >= math.pi - MERGE_TOL:
            out.append(-math.pi)
        else:
            out.extend((-f0, f0))
    return sorted(out)


def aliased_density(f, k: int) -> Density:
    f = density_of(f)

    def fn(x):
        # the density is even: evaluate on |x| folded back into [-pi, pi)
        x = np.asarray(x, dtype=float)
        # wrap only what is outside: x + pi - pi would erase tiny frequencies
        out = (x < -math.pi) | (x >= math.pi)
        w = np.where(out, np.remainder(x + math.pi, TWO_PI) - math.pi, x)
        return np.asarray(alias_sd(f, k, w), dtype=float)

    return Density(fn, fold_singularities(f.singularities, k), f"alias{k}({f.label})")


def local_exponent(f, lambda0: float, offsets: Sequence[float]) -> float:
    """Memory exponent at ``lambda0`` from the log-log slope of ``f(lambda0 + delta)``."""
    delta = np.asarray(offsets, dtype=float)
    if delta.size < 2 or np.any(delta <= 0) or np.any(np.diff(delta) >= 0):
        raise DomainError("offsets must be positive and strictly decreasing")
    if delta.min() < 1e-6 * (1 - 1e-12):
        raise DomainError("offsets below 1e-6 are not resolvable")
    vals = np.asarray(f(lambda0 + delta), dtype=float)
    if not np.all(np.isfinite(vals)) or np.any(vals <= 0):
        raise DomainError("density must be finite and positive at every probe")
    slope = np.polyfit(np.log(delta), np.log(vals), 1)[0]
    return float(-slope / 2.0)


# --------------------------------------------------------------------------
# Poisson kernel and the randomly sampled spectrum
# --------------------------------------------------------------------------

def _poisson(one_minus_s, s, t):
    """P_s(t) from ``1 - s`` directly; stable as s -> 1."""
    return (one_minus_s * (1.0 + s)) / (TWO_PI * (one_minus_s ** 2 + 4.0 * s * np.sin(0.5 * t) ** 2))


def poisson_kernel(s, t):
    """``P_s(t) = (1/2 pi)(1 - s^2) / (1 - 2 s cos t + s^2)`` for ``0 <= s < 1``."""
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < 0) or np.any(s_arr >= 1):
        raise DomainError("Poisson kernel needs 0 <= s < 1")
    out = _poisson(1.0 - s_arr, s_arr, np.asarray(t, dtype=float))
    return out if np.ndim(out) else float(out)


def _kernel_parts(law, lam, r):
    """``(1 - r rho, r rho, tau)`` at each ``lam``, computed from ``1 - S^``."""
    w = samplaw.one_minus_char(law, lam)
    z = 1.0 - w
    rho = np.abs(z)
    one_minus_rho = (2.0 * w.real - np.abs(w) ** 2) / (1.0 + rho)
    one_minus_s = (1.0 - r) + r * one_minus_rho
    return one_minus_s, r * rho, np.angle(z)


def _wrap(x):
    return np.remainder(x + math.pi, TWO_PI) - math.pi


def _peak_points(law, theta):
    """Frequencies in (0, pi) where ``tau(lam) = +/- theta`` (mod 2 pi)."""
    grid = np.unique(np.concatenate((np.geomspace(1e-12, 1e-2, 300),
                                     np.linspace(1e-2, math.pi, 2049))))
    tau = np.angle(1.0 - samplaw.one_minus_char(law, grid))
    roots = []
    for target in (theta, -theta):
        u = _wrap(tau - target)
        idx = np.nonzero((np.sign(u[:-1]) != np.sign(u[1:])) & (np.abs(u[:-1] - u[1:]) < math.pi))[0]
        for i in idx:
            def fn(x):
                return float(_wrap(np.angle(1.0 - samplaw.one_minus_char(law, x)) - target))
            try:
                roots.append(optimize.brentq(fn, grid[i], grid[i + 1], xtol=1e-15, rtol=4e-16))
            except ValueError:
                roots.append(0.5 * (grid[i] + grid[i + 1]))
    return roots


def _breakpoints(f: Density, law, theta):
    pts = [0.0, math.pi]
    pts.extend(graded_points(0.0, 0.0, math.pi, levels=60))
    for f0 in f.singularities.freqs:
        pts.extend(graded_points(f0, 0.0, math.pi, levels=60))
    for p in _peak_points(law, theta):
        pts.extend(graded_points(p, 0.0, math.pi, levels=50))
    pts.extend(np.linspace(0.0, math.pi, 33))
    return np.unique(np.clip(pts, 0.0, math.pi))


def _singular_pairs(f: Density):
    return [(f0, 2.0 * e) for f0, e in f.singularities.entries]


def _check_law(law):
    if samplaw.is_dirac(law):
        raise DomainError("random-sampling spectrum needs a non-degenerate law")


def _g_integrand(f: Density, law, r, theta):
    def fn(x):
        oms, s, tau = _kernel_parts(law, x, r)
        return f(x) * (_poisson(oms, s, tau - theta) + _poisson(oms, s, tau + theta))
    return fn


def g_r_theta(f, law, r: float, theta: float, tol: float = DEFAULT_TOL) -> KernelEval:
    """The Poisson smoothing ``g(r, theta)`` of the sampled spectrum, ``0 <= r < 1``."""
    if not 0.0 <= r < 1.0:
        raise DomainError("r must lie in [0, 1)")
    if not -math.pi < theta < math.pi:
        raise DomainError("theta must lie in (-pi, pi)")
    _check_law(law)
    f = density_of(f)
    theta = abs(theta)
    res = integrate(_g_integrand(f, law, r, theta), _breakpoints(f, law, theta), tol=tol,
                    singular=_singular_pairs(f))
    return KernelEval(float(r), float(theta), float(res.value), res.error)


def g_at_one(f, law, theta: float, tol: float = DEFAULT_TOL) -> KernelEval:
    """``g`` evaluated at ``r = 1`` inside the integral.

    For ``theta != 0`` and an aperiodic law the integrand is dominated uniformly
    in ``r`` near 1, so this equals ``lim_{r->1} g(r, theta)``.
    """
    if not 0.0 < abs(theta) < math.pi:
        raise DomainError("theta must lie in (0, pi) in absolute value")
    _check_law(law)
    if samplaw.lattice_span(law) != 1:
        raise DomainError("the r = 1 evaluation needs an aperiodic law")
    f = density_of(f)
    theta = abs(theta)
    res = integrate(_g_integrand(f, law, 1.0, theta), _breakpoints(f, law, theta), tol=tol,
                    singular=_singular_pairs(f))
    return KernelEval(1.0, float(theta), float(res.value), res.error)


def default_r_seq() -> tuple:
    return tuple(1.0 - 2.0 ** -j for j in range(3, 13))


def sampled_sd_limit(f, law, theta: float, r_seq: Optional[Sequence[float]] = None,
                     tol: float = DEFAULT_TOL, method: str = "extrapolate") -> LimitEstimate:
    """``f_Y(theta) = lim_{r->1} g(r, theta)``.

    ``method="extrapolate"`` fits ``a + b (1 - r)^c`` to the last four values of
    ``g`` along ``r_seq`` and requires the successive differences to shrink.
    ``method="direct"`` evaluates the kernel at ``r = 1`` (see :func:`g_at_one`).
    """
    if not 0.0 < theta < math.pi:
        raise DomainError("theta must lie in (0, pi)")
    f = density_of(f)
    if method == "direct":
        ev = g_at_one(f, law, theta, tol)
        return LimitEstimate(ev.value, theta, (1.0,), (ev.value,), (), None, "direct")
    if method != "extrapolate":
        raise DomainError(f"unknown method {method!r}")
    rs = np.asarray(default_r_seq() if r_seq is None else r_seq, dtype=float)
    if rs.size < 4 or np.any(np.diff(rs) <= 0) or rs[0] < 0 or rs[-1] >= 1:
        raise DomainError("r_seq must hold >= 4 increasing values in [0, 1)")
    g = np.array([g_r_theta(f, law, r, theta, tol).value for r in rs])
    diffs = np.diff(g)
    last = np.abs(diffs[-3:])
    noise = 4.0 * tol
    if np.all(last <= noise):
        return LimitEstimate(float(g[-1]), theta, tuple(rs), tuple(g), tuple(diffs), None, "extrapolate")
    if np.any(last[1:] > last[:-1] + noise):
        raise NumericError(f"g(r, {theta:g}) is not converging: differences {last}", float(last[-1]))
    x = 1.0 - rs[-4:]
    y = g[-4:]

    def model(xx, a, b, c):
        return a + b * xx ** c

    try:
        (a, b, c), _ = optimize.curve_fit(model, x, y, p0=(y[-1], (y[0] - y[-1]) / x[0], 1.0),
                                          bounds=([-np.inf, -np.inf, 0.05], [np.inf, np.inf, 4.0]),
                                          maxfev=20000)
    except (RuntimeError, ValueError) as exc:
        raise NumericError(f"extrapolation failed: {exc}", float(last[-1])) from None
    return LimitEstimate(float(a), theta, tuple(rs), tuple(g), tuple(diffs), float(c), "extrapolate")


def tabulate(f, freqs, meta: str = "") -> SpectralGrid:
    freqs = np.asarray(freqs, dtype=float)
    vals = np.asarray(density_of(f)(freqs), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise DomainError("density is not finite on the grid")
    return SpectralGrid(freqs, vals, meta)


def sampled_sd_grid(f, law, freqs, tol: float = DEFAULT_TOL, method: str = "extrapolate",
                    meta: str = "") -> SpectralGrid:
    vals = np.array([sampled_sd_limit(f, law, t, tol=tol, method=method).value for t in freqs])
    return SpectralGrid(np.asarray(freqs, dtype=float), np.maximum(vals, 0.0), meta)


def sampled_sd_fourier(f, law, lags: Sequence[int], tol: float = 1e-7, method: str = "direct",
                       theta_min: float = 1e-8) -> np.ndarray:
    """``int_{-pi}^{pi} e^{ih theta} f_Y(theta) d theta`` for each ``h`` in ``lags``.

    The outer integral runs over ``[theta_min, pi]`` with the limit evaluated at
    every node; ``(0, theta_min)`` is closed with the power law fitted at
    ``theta_min``.
    """
    f = density_of(f)
    lags = np.asarray(lags, dtype=float)

    def fy(t):
        return sampled_sd_limit(f, law, float(t), tol=0.01 * tol, method=method).value

    def integrand(x):
        vals = np.array([fy(t) for t in x])
        return 2.0 * np.cos(np.multiply.outer(x, lags)) * vals[:, None]

    pts = np.concatenate((graded_points(theta_min, theta_min, math.pi, levels=60),
                          np.linspace(theta_min, math.pi, 9)))
    res = integrate(integrand, pts, tol=tol)
    # power-law closure on (0, theta_min): f_Y ~ c theta^{-2e}
    f1, f2 = fy(theta_min), fy(2 * theta_min)
    e = 0.5 * math.log(f1 / f2) / math.log(2.0)
    if not 0.0 <= e < 0.5:
        e = 0.0
    head = 2.0 * theta_min * f1 / (1.0 - 2.0 * e)
    return np.asarray(res.value) + head
