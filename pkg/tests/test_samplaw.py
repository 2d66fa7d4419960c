import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import signal, special, stats

from lmsampling import samplaw
from lmsampling.errors import DomainError, NumericError
from lmsampling.rng import generator
from lmsampling.samplaw import Dirac, ParetoTail, Table


def direct_char(gamma, lam, J=2_000_000):
    """Partial sum of sum_j pmf(j) e^{ij lam}; Abel remainder <= pmf(J+1)/|sin(lam/2)|."""
    j = np.arange(1, J + 1, dtype=float)
    p = samplaw.pmf(ParetoTail(gamma), j)
    val = complex(np.sum(p * np.exp(1j * lam * j)))
    bound = float(samplaw.pmf(ParetoTail(gamma), J + 1)) / abs(math.sin(lam / 2))
    return val, bound


# ---------------------------------------------------------------- laws

def test_law_validation_and_strings():
    assert str(samplaw.parse_law("dirac:3")) == "dirac:3"
    assert samplaw.parse_law("pareto:1.9") == ParetoTail(1.9)
    assert samplaw.parse_law("table:0.5,0.5").probs.tolist() == [0.5, 0.5]
    for bad in ("dirac:0", "pareto:1", "table:0.5,0.4", "uniform:3", "dirac:x"):
        with pytest.raises(DomainError):
            samplaw.parse_law(bad)
    with pytest.raises(DomainError):
        Table((0.5, -0.1, 0.6))


def test_pmf_examples():
    assert samplaw.pmf(Dirac(3), 3) == 1.0
    assert samplaw.pmf(Dirac(3), 2) == 0.0
    assert samplaw.pmf(ParetoTail(2.0), 1) == pytest.approx(0.5, rel=1e-15)
    assert samplaw.pmf(ParetoTail(2.0), 2) == pytest.approx(1 / 2 - 1 / 3, rel=1e-14)
    assert samplaw.pmf(Table((0.2, 0.8)), 2) == 0.8
    with pytest.raises(DomainError):
        samplaw.pmf(ParetoTail(2.0), 0)


def test_pmf_matches_integral_form():
    # P(S = k) = int_k^{k+1} (g-1) t^{-g} dt
    g = 2.3
    for k in (1, 7, 1000, 10 ** 9):
        exact = mpmath.quad(lambda t: (g - 1) * t ** (-g), [k, k + 1])
        assert samplaw.pmf(ParetoTail(g), k) == pytest.approx(float(exact), rel=1e-12)


def test_tail_examples():
    assert samplaw.tail(ParetoTail(1.9), 10) == pytest.approx(10 ** -0.9, rel=1e-14)
    assert samplaw.tail(Dirac(5), 6) == 0.0
    for law in (Dirac(4), ParetoTail(1.3), Table((0.1, 0.9))):
        assert samplaw.tail(law, 1) == 1.0


def test_normalisation():
    # truncated sum plus the analytic tail
    for g in (1.2, 1.9, 2.8):
        law = ParetoTail(g)
        J = 10 ** 6
        total = math.fsum(samplaw.pmf(law, np.arange(1, J + 1))) + samplaw.tail(law, J + 1)
        assert total == pytest.approx(1.0, abs=1e-10)


def test_mean():
    assert samplaw.mean(Dirac(7)) == 7.0
    assert samplaw.mean(ParetoTail(1.9)) == math.inf
    assert samplaw.mean(ParetoTail(2.0)) == math.inf
    assert samplaw.mean(ParetoTail(3.0)) == pytest.approx(math.pi ** 2 / 6, rel=1e-14)
    assert samplaw.mean(Table((0.25, 0.75))) == 1.75


@pytest.mark.parametrize("g", [2.5, 2.8, 3.0, 4.0])
def test_mean_against_direct_summation(g):
    # sum_{k<=N} P(S >= k) plus an Euler-Maclaurin tail for sum_{k>N} k^{1-g}
    N = 10 ** 6
    k = np.arange(1, N + 1, dtype=float)
    head = math.fsum(k ** (1 - g))
    s = 1 - g
    tail = (N ** (s + 1)) / -(s + 1) - 0.5 * N ** s - s * N ** (s - 1) / 12
    assert samplaw.mean(ParetoTail(g)) == pytest.approx(head + tail, rel=1e-8)


def test_tail_index():
    assert samplaw.tail_index(ParetoTail(1.9)) == pytest.approx(0.9)
    assert samplaw.tail_index(ParetoTail(2.8)) == pytest.approx(1.8)
    assert samplaw.tail_index(Dirac(3)) is None
    assert samplaw.tail_index(Table((0.5, 0.5))) is None


# ---------------------------------------------------------------- draws and walks

def test_draw_dirac_and_inverse_cdf_point():
    r = generator(1)
    assert all(samplaw.draw(Dirac(4), r) == 4 for _ in range(20))
    # u = 0.99, gamma = 2: floor(0.99^{-1}) = 1
    assert math.floor(0.99 ** (1 / (1 - 2.0))) == 1


def test_pareto_draws_goodness_of_fit():
    law = ParetoTail(2.8)
    x = samplaw.draws(law, generator(2024, "gof"), 10 ** 6)
    edges = np.arange(1, 21)
    counts = np.array([np.sum(x == k) for k in edges] + [np.sum(x > 20)])
    probs = np.append(samplaw.pmf(law, edges), samplaw.tail(law, 21))
    p = stats.chisquare(counts, probs * x.size).pvalue
    assert p > 0.001


def test_table_draws_match_pmf():
    law = Table((0.1, 0.0, 0.6, 0.3))
    x = samplaw.draws(law, generator(5), 200_000)
    assert set(np.unique(x)) <= {1, 3, 4}
    freq = np.bincount(x, minlength=5)[1:] / x.size
    assert np.allclose(freq, law.probs, atol=0.005)


def test_walk_examples():
    assert samplaw.walk(Dirac(3), 5, 0).times.tolist() == [0, 3, 6, 9, 12, 15]
    w1 = samplaw.walk(ParetoTail(1.5), 100, 9)
    w2 = samplaw.walk(ParetoTail(1.5), 100, 9)
    assert np.array_equal(w1.times, w2.times)
    assert not np.array_equal(w1.times, samplaw.walk(ParetoTail(1.5), 100, 10).times)


def test_walk_law_of_large_numbers():
    law = ParetoTail(2.8)
    w = samplaw.walk(law, 10 ** 6, 77)
    assert w.times[-1] / w.n == pytest.approx(float(special.zeta(1.8)), rel=0.01)


@settings(max_examples=40, deadline=None)
@given(g=st.floats(1.05, 4.0), n=st.integers(0, 500), seed=st.integers(0, 2 ** 63))
def test_walk_is_strictly_increasing(g, n, seed):
    t = samplaw.walk(ParetoTail(g), n, seed).times
    assert t[0] == 0 and t.size == n + 1
    assert np.all(np.diff(t) >= 1)


# ---------------------------------------------------------------- convolution powers

def test_convolve_power_examples():
    tab = samplaw.convolve_power(Dirac(4), 3)
    assert tab.start == 12 and tab.probs.tolist() == [1.0]
    law = ParetoTail(2.8)
    tab = samplaw.convolve_power(law, 2)
    assert tab.start == 2
    assert tab.probs[0] == pytest.approx(samplaw.pmf(law, 1) ** 2, rel=1e-12)
    # P(T_2 = 3) = 2 p1 p2
    assert tab.probs[1] == pytest.approx(2 * samplaw.pmf(law, 1) * samplaw.pmf(law, 2), rel=1e-12)


@pytest.mark.parametrize("h", [1, 5, 20])
def test_convolve_power_normalisation(h):
    tab = samplaw.convolve_power(ParetoTail(2.8), h)
    assert math.fsum(tab.probs) + tab.tail_mass == pytest.approx(1.0, abs=1e-10)
    assert tab.tail_mass <= 1e-10
    assert np.all(tab.probs >= 0)


def test_convolve_power_semigroup():
    law = ParetoTail(2.8)
    a, b, c = (samplaw.convolve_power(law, h) for h in (3, 4, 7))
    conv = signal.fftconvolve(a.probs, b.probs)
    n = min(conv.size, c.probs.size)
    # both start at 7
    assert np.max(np.abs(conv[:n] - c.probs[:n])) <= 1e-9


def test_convolve_power_table_exact():
    law = Table((0.5, 0.5))
    tab = samplaw.convolve_power(law, 3)
    assert tab.start == 3
    assert np.allclose(tab.probs, [1 / 8, 3 / 8, 3 / 8, 1 / 8], atol=1e-15)


def test_convolve_power_arguments():
    with pytest.raises(DomainError):
        samplaw.convolve_power(ParetoTail(2.0), 0)
    with pytest.raises(DomainError):
        samplaw.convolve_power(ParetoTail(2.0), 2, cutoff_mass=1e-3)


# ---------------------------------------------------------------- characteristic function

def test_char_fn_trivial_cases():
    for law in (Dirac(3), ParetoTail(1.4), Table((0.3, 0.7))):
        v = samplaw.char_fn(law, 0.0)
        assert v.value == pytest.approx(1.0) and v.rho == pytest.approx(1.0)
    v = samplaw.char_fn(Dirac(5), 0.7)
    assert v.value == pytest.approx(np.exp(3.5j), abs=1e-15)
    assert v.rho == pytest.approx(1.0, abs=1e-15)
    assert -math.pi < v.tau <= math.pi
    assert v.value == pytest.approx(v.rho * np.exp(1j * v.tau), abs=1e-15)


@pytest.mark.parametrize("g", [1.3, 1.9, 2.8])
@pytest.mark.parametrize("lam", [0.05, 0.5, 2.0, math.pi])
def test_char_fn_against_partial_sums(g, lam):
    direct, bound = direct_char(g, lam)
    v = samplaw.char_fn(ParetoTail(g), lam)
    assert abs(v.value - direct) <= bound + 1e-12
    assert v.trunc_error <= 1e-12


def test_polylog_against_mpmath():
    for s in (0.3, 0.8, 1.0, 1.8, 2.0):
        for mu in (1e-4, 0.3, 2.5):
            val, err = samplaw.polylog_unit(s, np.array([mu]))
            ref = complex(mpmath.polylog(s, mpmath.exp(1j * mu)))
            assert abs(val[0] - ref) <= 1e-12 * abs(ref)


def test_strict_modulus_bound_for_random_laws():
    lam = np.linspace(1e-3, math.pi, 500)
    for law in (ParetoTail(1.2), ParetoTail(2.8), Table((0.3, 0.3, 0.4)), Table((0.5, 0.5))):
        rho, _ = samplaw.mod_arg(law, lam)
        assert np.all(rho < 1.0)
    # support {1, 3} has span 2, so the modulus returns to one at pi
    lattice = Table((0.5, 0.0, 0.5))
    assert samplaw.lattice_span(lattice) == 2
    rho, _ = samplaw.mod_arg(lattice, np.array([math.pi]))
    assert rho[0] == pytest.approx(1.0, abs=1e-14)


def test_finite_mean_lipschitz_bound():
    lam = np.linspace(1e-4, math.pi, 400)
    for law in (ParetoTail(2.2), ParetoTail(3.5), Table((0.2, 0.3, 0.5))):
        m = samplaw.mean(law)
        assert np.all(np.abs(samplaw.one_minus_char(law, lam)) <= m * lam * (1 + 1e-12))


@pytest.mark.parametrize("g", [1.3, 1.5, 1.8])
def test_local_behaviour_stabilises(g):
    # second-order term is -i zeta(g-1) lam; strip it before rescaling
    lams = [1e-3, 1e-4, 1e-5, 1e-6]
    lin = -1j * float(special.zeta(g - 1)) if g - 1 != 1 else 0.0
    z = [(complex(samplaw.one_minus_char(ParetoTail(g), lam)) - lin * lam) * lam ** (1 - g)
         for lam in lams]
    steps = [abs(z[i + 1] - z[i]) for i in range(3)]
    assert steps[0] > steps[1] > steps[2]
    limit = special.gamma(2 - g) * np.exp(-0.5j * math.pi * (g - 1))
    assert abs(z[-1] - limit) <= 0.01 * abs(limit)
    assert z[-1].real > 0 and z[-1].imag < 0


def test_char_fn_domain():
    with pytest.raises(DomainError):
        samplaw.char_fn(ParetoTail(2.0), 4.0)
    with pytest.raises(NumericError):
        samplaw.char_fn(ParetoTail(2.0), 1.0, tol=0.0)
