import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mollikit.heatlab import (GAUSSIAN_BOUND, BackwardOverflow, Field1D, HeatField,
                              backward_attempt, blowup_table, bump_mollify, bump_weights,
                              gaussian_test_function, heat_field, heat_forward,
                              heavy_tail_surrogate, max_principle_probe, mode_decay, mollify_mc,
                              normalized, random_test_function, uncertainty_product, weierstrass)


def smooth(N=512, L=np.pi):
    return Field1D.sample(lambda x: np.exp(np.cos(x)) + 0.3 * np.sin(2 * x), N, L)


# --- Monte Carlo mollification -------------------------------------------------

def test_mc_constant():
    est, se = mollify_mc(lambda a: np.full(len(a), 2.5), 0.3, 0.7, 100, np.random.default_rng(0))
    assert est == 2.5 and se == 0.0


def test_mc_second_moment():
    est, se = mollify_mc(lambda a: a ** 2, 0.0, 1.0, 100_000, np.random.default_rng(1))
    assert abs(est - 1.0) < 4 * se


def test_mc_quadratic_closed_form():
    est, se = mollify_mc(lambda a: -(a - 2) ** 2, 1.0, 0.5, 100_000, np.random.default_rng(2))
    assert abs(est + 1.25) < 4 * se


def test_mc_vector_mean():
    est, se = mollify_mc(lambda a: (a ** 2).sum(-1), np.zeros(3), 0.5, 50_000,
                         np.random.default_rng(3))
    assert abs(est - 0.75) < 4 * se


def test_mc_errors():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError, match="sigma"):
        mollify_mc(np.sin, 0.0, 0.0, 10, rng)
    with pytest.raises(ValueError):
        mollify_mc(np.sin, 0.0, 1.0, 1, rng)
    with pytest.raises(ValueError, match="at input"):
        mollify_mc(lambda a: np.where(a > 0, a, np.nan), 0.0, 1.0, 100, rng)


def test_cubic_exponential_has_no_mollification():
    # E exp(z^3) is infinite: later estimates keep dwarfing earlier ones
    f = lambda a: np.exp(a ** 3)
    small, _ = mollify_mc(f, 0.0, 1.0, 1000, np.random.default_rng(7))
    large, _ = mollify_mc(f, 0.0, 1.0, 1_000_000, np.random.default_rng(8))
    z = np.random.default_rng(8).standard_normal(1_000_000)
    assert large > 1e6 * small
    assert f(z).max() > 1e6 * f(np.random.default_rng(7).standard_normal(1000)).max()


# --- forward heat solve ----------------------------------------------------------

def test_field_validation():
    with pytest.raises(ValueError):
        Field1D(np.zeros(100))
    with pytest.raises(ValueError):
        Field1D(np.zeros(4))
    with pytest.raises(ValueError):
        Field1D(np.array([0, 1, 2, np.nan, 0, 0, 0, 0.0]))


def test_zero_time_is_identity():
    g = smooth()
    for method in ("spectral", "direct"):
        np.testing.assert_array_equal(heat_forward(g, 0.0, method).samples, g.samples)
    with pytest.raises(ValueError):
        heat_forward(g, -0.1)


@pytest.mark.parametrize("L", [np.pi, 2.0, 5.0])
def test_sine_mode_decays_by_multiplier(L):
    g = Field1D.sample(lambda x: np.sin(np.pi * x / L), 256, L)
    for t in (0.01, 0.3, 2.0):
        expect = np.exp(-(np.pi / L) ** 2 * t / 2) * g.samples
        np.testing.assert_allclose(heat_forward(g, t).samples, expect, atol=1e-12)


def test_constant_is_conserved():
    g = Field1D(np.full(64, 1.7))
    for method in ("spectral", "direct"):
        np.testing.assert_allclose(heat_forward(g, 0.5, method).samples, 1.7, atol=1e-13)


def test_mean_is_conserved():
    g = smooth()
    assert heat_forward(g, 0.8).samples.mean() == pytest.approx(g.samples.mean(), abs=1e-13)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.0, 2.0), st.floats(0.0, 2.0))
def test_semigroup(t1, t2):
    g = smooth(256)
    a = heat_forward(heat_forward(g, t1), t2).samples
    b = heat_forward(g, t1 + t2).samples
    np.testing.assert_allclose(a, b, atol=1e-10)


@pytest.mark.parametrize("t", [0.01, 0.1, 0.5])
def test_direct_matches_spectral(t):
    g = smooth(1024)
    d = heat_forward(g, t, "direct").samples
    s = heat_forward(g, t, "spectral").samples
    assert np.abs(d - s).max() <= 1e-6


def test_direct_kernel_has_unit_mass():
    g = Field1D(np.ones(512))
    assert np.abs(heat_forward(g, 0.2, "direct").samples - 1).max() < 1e-14


def test_mode_decay_law():
    rng = np.random.default_rng(0)
    c = np.zeros(129, complex)
    c[:21] = rng.normal(size=21) + 1j * rng.normal(size=21)
    c[0] = c[0].real
    g = Field1D(np.fft.irfft(c, n=256))
    t = 0.4
    ratio = mode_decay(g, t)
    expect = np.exp(-g.omega ** 2 * t / 2)
    assert np.abs(ratio[:21] - expect[:21]).max() < 1e-10
    assert np.all(np.isnan(ratio[21:]) | (np.abs(np.fft.rfft(g.samples))[21:] < 1e-12))


def test_total_variation_non_increasing():
    g = Field1D.sample(lambda x: np.sign(np.sin(x)) + 0.5 * np.sign(np.cos(3 * x)), 1024)
    tv = [heat_forward(g, t).total_variation() for t in np.linspace(0, 1, 30)]
    assert np.all(np.diff(tv) <= 1e-10)


def test_heat_field_rows():
    g = smooth(128)
    times = [0.0, 0.1, 0.5]
    h = heat_field(g, times)
    np.testing.assert_array_equal(h.values[0], g.samples)
    np.testing.assert_allclose(h.values[2], heat_forward(g, 0.5).samples, atol=1e-14)
    with pytest.raises(ValueError):
        HeatField(g, np.array([0.5, 0.1]), h.values[:2])


def test_heat_field_csv(tmp_path):
    h = heat_field(Field1D(np.zeros(8)), [0.0, 1.0])
    path = tmp_path / "h.csv"
    h.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,x,u" and len(lines) == 17


def test_interpolation_reproduces_band_limited_field():
    g = smooth(256)
    xq = np.linspace(-3, 3, 37)
    np.testing.assert_allclose(g.interpolate(xq), np.exp(np.cos(xq)) + 0.3 * np.sin(2 * xq),
                               atol=1e-12)


def test_coefficients_conjugate_symmetric():
    B, w = smooth(64).coefficients()
    # index 0 holds k = -N/2; pair k with -k for k = 1..N/2-1
    np.testing.assert_allclose(B[1:][::-1], np.conj(B[1:]), atol=1e-14)
    assert w[32] == 0.0


# --- backward solve --------------------------------------------------------------

def test_backward_round_trip():
    g = Field1D.sample(lambda x: np.cos(x) + 0.5 * np.sin(3 * x) - 0.2 * np.cos(5 * x), 32)
    back, rep = backward_attempt(heat_forward(g, 0.05), 0.05)
    np.testing.assert_allclose(back.samples, g.samples, atol=1e-8)
    assert len(rep.k) == 17


def test_backward_injected_mode_amplified_by_e8():
    L, t, eps = np.pi, 0.25, 1e-6
    gT = Field1D(np.zeros(256), L)
    noisy = gT.with_samples(eps * np.sin(8 * np.pi * gT.x / L))
    back, rep = backward_attempt(noisy, t, k_max=8)
    assert rep.factor[8] == pytest.approx(np.exp(8), rel=1e-14)
    assert rep.factor[8] == pytest.approx(2980.958, abs=1e-3)
    amp = np.abs(back.samples).max() / eps
    assert amp == pytest.approx(np.exp(8), rel=1e-9)


def test_backward_overflow_names_first_mode():
    gT = Field1D(np.zeros(512))
    with pytest.raises(BackwardOverflow) as info:
        backward_attempt(gT, 0.25)
    # exp(k^2/8) > 1e300 first at k = 75
    assert info.value.k == 75
    assert np.exp(74 ** 2 / 8) < 1e300 < np.exp(75 ** 2 / 8)
    with pytest.raises(ValueError):
        backward_attempt(gT, 0.0)


def test_heavy_tail_blowup_table_is_monotone():
    gT = heavy_tail_surrogate(1e-3, N=512)
    rows, exc = blowup_table(gT, 0.25, [2, 4, 8, 16, 32, 64, 128])
    norms = [n for _, n in rows]
    assert np.all(np.diff(norms) > 0)
    assert norms[-1] > 1e100 * norms[0]
    assert isinstance(exc, BackwardOverflow) and exc.k == 75
    # gT itself is small
    assert np.abs(gT.samples).max() <= 5e-4


# --- bump mollifier --------------------------------------------------------------

def test_bump_weights_unit_mass_and_even():
    y, w = bump_weights(0.3)
    assert w.sum() == pytest.approx(1.0, abs=1e-15)
    np.testing.assert_allclose(w, w[::-1], atol=1e-18)
    assert w[0] == 0 and w[-1] == 0
    with pytest.raises(ValueError):
        bump_weights(0.3, 32)


def test_bump_constant_and_affine():
    assert bump_mollify(lambda x: np.full_like(x, 3.0), 0.2, 0.4) == pytest.approx(3.0, abs=1e-14)
    assert bump_mollify(lambda x: x, 0.7, 0.4) == pytest.approx(0.7, abs=1e-14)


def test_bump_on_absolute_value():
    vals = [bump_mollify(np.abs, 0.0, s) for s in (0.5, 0.25, 0.125)]
    for v, s in zip(vals, (0.5, 0.25, 0.125)):
        assert 0 < v <= s
    assert vals[0] > vals[1] > vals[2]


# --- uncertainty principle -------------------------------------------------------

def test_gaussian_attains_bound():
    _, _, p = uncertainty_product(gaussian_test_function())
    assert p == pytest.approx(GAUSSIAN_BOUND, rel=1e-6)
    assert GAUSSIAN_BOUND == pytest.approx(0.0063326, abs=1e-7)


@pytest.mark.parametrize("scale", [0.5, 2.0])
def test_dilation_invariance(scale):
    vx, vxi, p = uncertainty_product(gaussian_test_function(scale=scale))
    assert p == pytest.approx(GAUSSIAN_BOUND, rel=1e-6)
    vx1, _, _ = uncertainty_product(gaussian_test_function())
    assert vx == pytest.approx(scale ** 2 * vx1, rel=1e-9)


def test_hermite_function_exceeds_bound():
    N, L = 4096, 8.0
    x = -L + 2 * L * np.arange(N) / N
    phi = Field1D(normalized(x * np.exp(-np.pi * x * x), 2 * L / N), L)
    _, _, p = uncertainty_product(phi)
    # first Hermite function: both variances triple
    assert p == pytest.approx(9 * GAUSSIAN_BOUND, rel=1e-6)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_random_functions_respect_bound(seed):
    _, _, p = uncertainty_product(random_test_function(seed))
    assert p >= GAUSSIAN_BOUND * (1 - 1e-9)


def test_uncertainty_preconditions():
    g = gaussian_test_function()
    with pytest.raises(ValueError, match="unit"):
        uncertainty_product(g.with_samples(2 * g.samples))
    wide = Field1D(normalized(np.ones(64), 2 * np.pi / 64))
    with pytest.raises(ValueError, match="decay"):
        uncertainty_product(wide)


# --- maximum principle -----------------------------------------------------------

def test_max_principle_constant_field():
    h = heat_field(Field1D(np.full(64, 0.3)), np.linspace(0, 1, 10))
    assert max_principle_probe(h)


def test_max_principle_weierstrass():
    g = Field1D.sample(weierstrass, 1024)
    h = heat_field(g, np.linspace(0, 1, 64))
    rep = max_principle_probe(h)
    assert rep.passed, rep


def test_max_principle_catches_bump():
    g = Field1D.sample(np.cos, 128)
    h = heat_field(g, np.linspace(0, 1, 16))
    vals = h.values.copy()
    vals[9, 40] += 5.0
    rep = max_principle_probe(HeatField(g, h.times, vals))
    assert not rep.passed
    assert rep.worst_at == (float(h.times[9]), float(g.x[40]))
    assert rep.boundary_gap > 0


def test_weierstrass_is_bounded():
    x = np.linspace(-np.pi, np.pi, 1001)
    b = 3 ** -0.5
    assert np.abs(weierstrass(x)).max() <= (1 - b ** 25) / (1 - b) + 1e-12
    assert weierstrass(np.array([0.0]))[0] == pytest.approx((1 - b ** 25) / (1 - b))


def test_bump_small_sigma_does_not_underflow():
    for s in (1 / 32, 1e-3, 1e-5):
        _, w = bump_weights(s)
        assert np.all(np.isfinite(w)) and w.sum() == pytest.approx(1.0, abs=1e-14)
        assert 0 <= bump_mollify(np.abs, 0.0, s) <= s
