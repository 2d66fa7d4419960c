import math

import numpy as np
import pytest
from scipy import optimize

from lmsampling import covmap, procgen, samplaw, specmap
from lmsampling.errors import DomainError
from lmsampling.procgen import FarimaSpec, GegenbauerSpec
from lmsampling.quadrature import graded_points, integrate
from lmsampling.samplaw import Dirac, ParetoTail, Table
from lmsampling.specmap import SingularitySet

PI = math.pi


def fourier_coeff(dens, h, tol=1e-10):
    """2 int_0^pi cos(h x) f(x) dx with the density's singular set resolved."""
    sings = dens.singularities
    pts = [0.0, PI, *np.linspace(0.0, PI, 4 * h + 9)]
    for f0 in sings.freqs:
        pts.extend(graded_points(f0, 0.0, PI, levels=40))
    pairs = [(f0, 2 * e) for f0, e in sings.entries]
    return 2.0 * integrate(lambda x: np.cos(h * x) * dens(x), pts, tol=tol, singular=pairs).value


# ---------------------------------------------------------------- singular sets

def test_singularity_set_canonical_and_merging():
    s = SingularitySet(((-PI / 4, 0.2), (PI / 4 + 1e-12, 0.3), (2 * PI, 0.1), (3 * PI, 0.05)))
    assert s.freqs == pytest.approx([0.0, PI / 4, PI])
    assert s.exponent_at(PI / 4) == 0.3
    assert s.exponent_at(-PI / 4) == 0.3
    assert s.exponent_at(1.0) is None
    with pytest.raises(DomainError):
        SingularitySet(((0.0, 0.5),))


@pytest.mark.parametrize("k", range(1, 13))
def test_folding_is_the_image_of_the_circle(k):
    # brute force: every point of the full singular circle mapped by lam -> k lam mod 2 pi
    sings = SingularitySet(((0.0, 0.2), (PI / 4, 0.35), (2 * PI / 3, 0.1), (1.0, 0.15)))
    images = {}
    for lam in specmap.full_circle(sings):
        img = abs(math.remainder(k * lam, 2 * PI))
        e = sings.exponent_at(lam)
        key = round(img, 9)
        images[key] = max(images.get(key, 0.0), e)
    folded = specmap.fold_singularities(sings, k)
    assert len(folded) == len(images)
    for (f0, e), key in zip(folded.entries, sorted(images)):
        assert f0 == pytest.approx(key, abs=1e-9)
        assert e == images[key]


def _multiple_of(x, step):
    q = x / step
    return abs(q - round(q)) * step <= 1e-9


@pytest.mark.parametrize("k", range(1, 13))
def test_folding_counts_on_random_sets(k):
    # frequencies on a rational grid so that merges actually occur
    r = np.random.default_rng(k)
    step = 2 * PI / k
    for _ in range(60):
        size = int(r.integers(1, 6))
        grid = PI * r.integers(0, 25, size=size) / 24
        sings = SingularitySet(tuple((f, float(r.uniform(0.05, 0.45))) for f in grid))
        folded = specmap.fold_singularities(sings, k)
        nx, ny = len(sings), len(folded)
        assert 1 <= ny <= nx
        fs = sings.freqs
        clash = any(_multiple_of(a - b, step) or _multiple_of(a + b, step)
                    for i, a in enumerate(fs) for b in fs[i + 1:])
        assert (ny < nx) == clash
        assert max(e for _, e in folded.entries) == max(e for _, e in sings.entries)


def test_full_circle_points():
    pts = specmap.full_circle(SingularitySet(((0.0, 0.2), (1.0, 0.1), (PI, 0.3))))
    assert pts == pytest.approx([-PI, -1.0, 0.0, 1.0])


# ---------------------------------------------------------------- model densities

def test_farima_density_examples():
    spec = FarimaSpec(0.3)
    lam = 0.7
    ref = 1 / (2 * PI) * abs(2 * math.sin(lam / 2)) ** -0.6
    assert specmap.farima_sd(spec, lam) == pytest.approx(ref, rel=1e-14)
    with pytest.raises(DomainError):
        specmap.farima_sd(spec, 0.0)
    ar = FarimaSpec(0.0, ar_coeffs=(-0.5,))
    assert specmap.farima_sd(ar, 0.0) == pytest.approx(1 / (2 * PI) / 0.25)


def test_density_integrates_to_variance():
    spec = FarimaSpec(0.35, ma_coeffs=(0.4,))
    dens = specmap.density_of(spec)
    assert fourier_coeff(dens, 0) == pytest.approx(procgen.farima_autocov(spec, 0).values[0], rel=1e-8)


def test_local_exponent_examples():
    offs = np.geomspace(1e-2, 1e-6, 8)
    assert specmap.local_exponent(specmap.density_of(FarimaSpec(0.35)), 0.0, offs) == pytest.approx(0.35, abs=1e-3)
    g = specmap.density_of(GegenbauerSpec(((2 * PI / 3, 0.2),)))
    assert specmap.local_exponent(g, 2 * PI / 3, offs) == pytest.approx(0.2, abs=1e-3)
    assert specmap.local_exponent(specmap.white_density(), 1.0, offs) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(DomainError):
        specmap.local_exponent(g, 1.0, [1e-3, 1e-7])


# ---------------------------------------------------------------- deterministic sampling

@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_alias_preserves_mass(k):
    f = specmap.density_of(FarimaSpec(0.2, ar_coeffs=(-0.3,)))
    x = np.linspace(-PI, PI, 4001)[:-1]
    dx = 2 * PI / 4000
    # smooth part: compare the periodic trapezoid sums of a regularised copy
    reg = specmap.Density(lambda t: f(t) * np.abs(2 * np.sin(t / 2)) ** 0.4)
    a = np.sum(specmap.alias_sd(reg, k, x + 0.5 * dx)) * dx
    b = np.sum(reg(x + 0.5 * dx)) * dx
    assert a == pytest.approx(b, rel=1e-10)


@pytest.mark.parametrize("k", [2, 3, 5])
def test_alias_fourier_coefficients_are_decimated_covariances(k):
    spec = FarimaSpec(0.3)
    dens = specmap.aliased_density(spec, k)
    sig = procgen.frac_autocov(0.3, 3 * k)
    for h in (0, 1, 3):
        assert fourier_coeff(dens, h) == pytest.approx(sig[k * h], rel=1e-7)


def test_alias_gegenbauer_folds_frequency():
    th = 2 * PI / 3
    dens = specmap.aliased_density(GegenbauerSpec(((th, 0.3),)), 3)
    assert dens.singularities.freqs == pytest.approx([0.0])
    offs = np.geomspace(1e-3, 1e-6, 8)
    assert specmap.local_exponent(dens, 0.0, offs) == pytest.approx(0.3, abs=2e-3)
    assert np.isfinite(dens(np.array([th])))[0]


def test_alias_sign_convention_even_k():
    f = specmap.Density(lambda t: 1.0 + np.asarray(t, dtype=float))  # not even, exposes the branch
    k = 2
    v0 = specmap.alias_sd(f, k, 0.0)
    assert v0 == pytest.approx(0.5 * (f(0.0) + f(-PI)))
    with pytest.raises(DomainError):
        specmap.alias_sd(f, k, PI + 0.1)


# ---------------------------------------------------------------- Poisson smoothing

def test_poisson_kernel_series_and_mass():
    s, t = 0.7, 0.9
    series = (1 + 2 * sum(s ** j * math.cos(j * t) for j in range(1, 200))) / (2 * PI)
    assert specmap.poisson_kernel(s, t) == pytest.approx(series, rel=1e-13)
    mass = integrate(lambda x: specmap.poisson_kernel(0.99, x), np.linspace(-PI, PI, 65), tol=1e-13).value
    assert mass == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(DomainError):
        specmap.poisson_kernel(1.0, 0.0)


def _sup_over_s(t):
    # coarse grid for a valid bracket, then golden-section refinement
    grid = np.linspace(0.0, 0.999, 1000)
    i = int(np.clip(np.argmax(specmap.poisson_kernel(grid, t)), 1, grid.size - 2))
    res = optimize.minimize_scalar(lambda s: -2 * PI * specmap.poisson_kernel(s, t),
                                   bracket=(grid[i - 1], grid[i], grid[i + 1]), method="golden", tol=1e-12)
    return -res.fun, res.x


@pytest.mark.parametrize("t", [0.3, 0.5, 0.7, 1.2])
def test_poisson_sup_law(t):
    peak, s_arg = _sup_over_s(t)
    assert peak == pytest.approx(1 / abs(math.sin(t)), abs=1e-8)
    assert s_arg == pytest.approx((1 - abs(math.sin(t))) / math.cos(t), abs=1e-5)


@pytest.mark.parametrize("s", [0.0, 0.5, 0.9, 0.999])
def test_poisson_unit_mass(s):
    pts = np.unique(np.r_[np.linspace(-PI, PI, 33), graded_points(0.0, -PI, PI, levels=20)])
    mass = integrate(lambda x: specmap.poisson_kernel(s, x), pts, tol=1e-13).value
    assert mass == pytest.approx(1.0, abs=1e-10)


def test_poisson_bound_and_monotonicity():
    s = np.linspace(0.0, 0.99, 34)[:, None]
    t = np.linspace(-PI, PI, 401)[None, :]
    assert np.all(2 * PI * specmap.poisson_kernel(s, t) <= (1 + s) / (1 - s) * (1 + 1e-14))
    assert specmap.poisson_kernel(0.0, 1.3) == pytest.approx(1 / (2 * PI), rel=1e-15)
    # strictly decreasing in |t| on (0, pi/2]
    grid = np.linspace(1e-3, PI / 2, 300)
    for sv in (0.1, 0.6, 0.95):
        assert np.all(np.diff(specmap.poisson_kernel(sv, grid)) < 0)
        assert np.all(specmap.poisson_kernel(sv, -grid) == specmap.poisson_kernel(sv, grid))


def test_g_at_zero_radius_and_positivity():
    spec, law = FarimaSpec(0.3), ParetoTail(2.8)
    s0 = procgen.frac_autocov(0.3, 0)[0]
    for th in (0.2, 1.5, 3.0):
        assert specmap.g_r_theta(spec, law, 0.0, th).value == pytest.approx(s0 / (2 * PI), rel=1e-7)
    for r in (0.3, 0.9, 0.99):
        for th in (0.1, 1.0, 3.0):
            assert specmap.g_r_theta(spec, ParetoTail(1.5), r, th, tol=1e-7).value >= 0


def test_kernel_stable_near_one():
    # direct formula with s = 1 - 1e-13 loses digits; the 1 - s form does not
    oms = 1e-13
    v = specmap._poisson(oms, 1.0 - oms, 0.5)
    ref = oms * (2 - oms) / (2 * PI * (oms ** 2 + 4 * (1 - oms) * math.sin(0.25) ** 2))
    assert v == pytest.approx(ref, rel=1e-12)


@pytest.mark.parametrize("r", [0.5, 0.8])
@pytest.mark.parametrize("theta", [0.3, 2.0])
def test_g_matches_abel_series(r, theta):
    spec, law = FarimaSpec(0.3), ParetoTail(2.8)
    J = int(math.ceil(math.log(1e-12) / math.log(r)))
    sy = covmap.sampled_cov_exact_seq(spec, law, J, tol=1e-11).values
    j = np.arange(1, J + 1)
    abel = (sy[0] + 2 * np.sum(r ** j * sy[1:] * np.cos(j * theta))) / (2 * PI)
    g = specmap.g_r_theta(spec, law, r, theta, tol=1e-10)
    assert g.value == pytest.approx(abel, abs=1e-8)


def test_g_of_white_noise_is_flat():
    f = specmap.white_density(1.0 / (2 * PI))
    for r, th in ((0.3, 0.5), (0.999, 2.5)):
        assert specmap.g_r_theta(f, ParetoTail(1.6), r, th).value == pytest.approx(1 / (2 * PI), abs=1e-8)


def test_g_rejects_degenerate_laws():
    with pytest.raises(DomainError):
        specmap.g_r_theta(FarimaSpec(0.2), Dirac(2), 0.5, 1.0)
    with pytest.raises(DomainError):
        specmap.g_at_one(FarimaSpec(0.2), Table((0.5, 0.0, 0.5)), 1.0)


def test_limit_methods_agree():
    spec, law = FarimaSpec(0.3), ParetoTail(2.8)
    for theta in (0.1, 1.0, 2.5):
        ext = specmap.sampled_sd_limit(spec, law, theta)
        direct = specmap.sampled_sd_limit(spec, law, theta, method="direct")
        assert float(ext) == pytest.approx(float(direct), rel=1e-4)
        assert ext.method == "extrapolate" and direct.method == "direct"


def test_limit_of_white_noise():
    f = specmap.white_density(0.5)
    est = specmap.sampled_sd_limit(f, ParetoTail(2.0), 1.0)
    assert float(est) == pytest.approx(0.5, abs=1e-7)


def test_sampled_spectrum_bounded_away_from_memory():
    # short-memory cell: d = 0.1 with gamma = 1.7 gives a bounded f_Y near 0
    spec, law = FarimaSpec(0.1), ParetoTail(1.7)
    # the bound is approached like theta^0.1, so look at the per-decade exponent
    vals = [float(specmap.sampled_sd_limit(spec, law, t, method="direct")) for t in (1e-2, 1e-3, 1e-4)]
    slopes = [0.5 * math.log(vals[i + 1] / vals[i]) / math.log(10) for i in range(2)]
    assert slopes[1] < slopes[0] < 0.05
    # preserved cell: the blow-up rate matches 2d
    law2 = ParetoTail(2.8)
    a, b = (float(specmap.sampled_sd_limit(spec, law2, t, method="direct")) for t in (1e-3, 1e-4))
    assert 0.5 * math.log(b / a) / math.log(10) == pytest.approx(0.1, abs=0.02)
