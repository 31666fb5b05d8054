import math

import mpmath as mp
import numpy as np
import pytest
from scipy import stats

from selfsimvol import mc
from selfsimvol.kernels import CovarianceKernel
from selfsimvol.pricing import bs_call
from selfsimvol.spectrum import KernelError

FBM6 = CovarianceKernel("fbm", 0.6)
BM = CovarianceKernel("bm")


@pytest.fixture(scope="module")
def fbm_samples():
    return mc.mixing_samples(FBM6, 256, 40_000, seed=5)


@pytest.fixture(scope="module")
def bm_samples():
    return mc.mixing_samples(BM, 256, 40_000, seed=9)


def test_paths_mean_and_variance():
    p = mc.simulate_vol_paths(FBM6, 1.0, 64, 40_000, seed=1)
    n = p.shape[0]
    se_mean = p.std(axis=0, ddof=1) / math.sqrt(n)
    assert np.all(np.abs(p.mean(axis=0)) < 4 * se_mean + 1e-12)
    var1 = p[:, -1].var(ddof=1)
    se_var = var1 * math.sqrt(2 / (n - 1))
    assert abs(var1 - 1.0) < 4 * se_var
    var_half = p[:, 31].var(ddof=1)
    assert abs(var_half - 0.5**1.2) < 4 * var_half * math.sqrt(2 / (n - 1))


def test_noncentered_mean():
    k = CovarianceKernel("fbm", 0.6, mean_coeff=0.7)
    p = mc.simulate_vol_paths(k, 2.0, 32, 20_000, seed=2)
    se = p[:, -1].std(ddof=1) / math.sqrt(p.shape[0])
    assert abs(p[:, -1].mean() - 0.7 * 2**0.6) < 4 * se


def test_integrated_variance_constant_path():
    c, T, n = 1.7, 0.4, 50
    y, yt = mc.integrated_variance(np.full((1, n), c), T, n)
    # trapezoid with X_0 = 0 loses half a step of c^2 at the origin
    assert y[0] == pytest.approx(c * c * T - 0.5 * c * c * T / n)
    assert yt[0] == pytest.approx(math.sqrt(y[0] / T))


def test_expected_integrated_variance(fbm_samples):
    y = fbm_samples.samples_Y1
    se = y.std(ddof=1) / math.sqrt(y.size)
    assert abs(y.mean() - 1 / 2.2) < 4 * se + 1e-3


def test_sample_invariants(fbm_samples):
    assert np.all(fbm_samples.samples_Ytilde1 > 0)
    assert np.array_equal(fbm_samples.samples_Y1, fbm_samples.samples_Ytilde1**2)


def test_reproducible_across_threads_and_layout():
    a = mc.mixing_samples(FBM6, 64, 10_000, seed=3, threads=1)
    b = mc.mixing_samples(FBM6, 64, 10_000, seed=3, threads=4)
    assert np.array_equal(a.samples_Y1, b.samples_Y1)
    c = mc.mixing_samples(FBM6, 64, 5_000, seed=3)
    assert np.array_equal(a.samples_Y1[:4096], c.samples_Y1[:4096])
    d = mc.mixing_samples(FBM6, 64, 10_000, seed=4)
    assert not np.array_equal(a.samples_Y1, d.samples_Y1)


def test_ks_scaling_of_integrated_variance():
    T = 0.05
    pT = mc.simulate_vol_paths(FBM6, T, 128, 20_000, seed=11)
    yT, _ = mc.integrated_variance(pT, T, 128)
    y1 = mc.mixing_samples(FBM6, 128, 20_000, seed=12).samples_Y1
    assert stats.ks_2samp(yT, T**2.2 * y1).pvalue > 0.01


def test_mixing_price_limits_and_parity(fbm_samples):
    p, se = mc.mixing_price(fbm_samples, 0.5, 1e-12, 1.0, 1.0)
    assert p == pytest.approx(1.0, abs=1e-11)
    vol = 1.0 * 0.5**0.6 * fbm_samples.samples_Ytilde1
    c = bs_call(0.5, 1.1, 1.0, vol)
    from selfsimvol.pricing import bs_put

    assert np.max(np.abs(c - bs_put(0.5, 1.1, 1.0, vol) - (1.0 - 1.1))) < 1e-15
    call, _ = mc.mixing_price(fbm_samples, 0.5, 1.1, 1.0, 1.0, "call")
    put, _ = mc.mixing_price(fbm_samples, 0.5, 1.1, 1.0, 1.0, "put")
    assert call - put == pytest.approx(-0.1, abs=1e-14)


def test_atm_leading_term(bm_samples):
    T = 0.01
    price, se = mc.mixing_price(bm_samples, T, 1.0, 1.0, 1.0)
    mu = mc.estimate_moments(bm_samples)["mu_half"]
    c1 = mu / math.sqrt(2 * math.pi)
    assert price == pytest.approx(c1 * T**1.0, rel=0.02)  # T^(H+1/2) with H = 1/2


def test_martingale(fbm_samples):
    s = mc.asset_samples(fbm_samples, 0.3, 2.0, 1.0, seed=1)
    se = s.std(ddof=1) / math.sqrt(s.size)
    assert abs(s.mean() - 2.0) < 4 * se


def test_moment_bounds(fbm_samples):
    m = mc.estimate_moments(fbm_samples)
    ey = fbm_samples.samples_Y1.mean()
    assert m["mu_half"] <= math.sqrt(ey)
    assert m["mu_3half"] * m["mu_half"] >= ey**2
    assert m["mu_half"] ** 3 <= m["mu_3half"]


def test_moments_match_exact_laplace(fbm_samples):
    qf = mc.quadratic_form(FBM6, 256)
    m = mc.estimate_moments(fbm_samples)
    assert abs(m["mu_half"] - qf.fractional_moment(0.5)) < 4 * m["stderr_half"]
    assert abs(m["mu_3half"] - qf.fractional_moment(1.5)) < 4 * m["stderr_3half"]


def test_bm_moment_fixture_against_continuum_laplace_transform():
    # E exp(-s int_0^1 W^2) = cosh(sqrt(2 s))^(-1/2)
    mp.mp.dps = 30
    f = lambda s: (1 - mp.sech(mp.sqrt(2 * s)) ** 0.5) * s ** -1.5  # noqa: E731
    mu_half = float(0.5 / mp.gamma(0.5) * mp.quad(f, [0, 1, 10, mp.inf]))
    fixture = 0.6229539429342748  # 2048-step quadratic form, exact in law
    assert fixture == pytest.approx(mu_half, abs=1e-5)
    assert mc.quadratic_form(BM, 2048).fractional_moment(0.5) == pytest.approx(fixture, rel=1e-9)
    assert mc.quadratic_form(BM, 2048).fractional_moment(1.5) == pytest.approx(0.4966968352645223, rel=1e-9)


def test_quadratic_form_matches_sampler():
    qf = mc.quadratic_form(FBM6, 64)
    s = mc.mixing_samples(FBM6, 64, 20_000, seed=8)
    assert qf.mean == pytest.approx(s.samples_Y1.mean(), rel=0.02)
    assert qf.tilted_mean(0.0) == pytest.approx(qf.mean)


def test_tilted_matches_plain(fbm_samples):
    qf = mc.quadratic_form(FBM6, 256)
    for T, K in ((0.1, 1.25), (0.1, 0.8)):
        kind = "call" if K > 1 else "put"
        p, se = mc.mixing_price(fbm_samples, T, K, 1.0, 1.0, kind)
        tp = mc.mixing_price_tilted(qf, T, K, 1.0, 1.0, 40_000, seed=2)
        assert abs(tp.price - p) < 4 * math.hypot(se, tp.stderr)
        assert tp.theta > 0 and tp.rel_stderr < 0.02


def test_tilted_reproducible():
    qf = mc.quadratic_form(BM, 64)
    a = mc.mixing_price_tilted(qf, 0.01, 1.1, 1.0, 1.0, 9_000, seed=1, threads=1)
    b = mc.mixing_price_tilted(qf, 0.01, 1.1, 1.0, 1.0, 9_000, seed=1, threads=3)
    assert a.log_price == b.log_price


def test_density_normalization_and_scaling(fbm_samples):
    x = np.linspace(1e-4, 3.0, 3000)
    d = mc.estimate_density(fbm_samples, x)
    assert np.trapezoid(d, x) == pytest.approx(1.0, abs=1e-2)
    T = 0.2
    y = np.linspace(0.1, 0.6, 11)
    lhs = mc.estimate_density(fbm_samples, y, "mixing", T)
    rhs = T**-0.6 * mc.estimate_density(fbm_samples, T**-0.6 * y, "mixing", 1.0)
    assert np.allclose(lhs, rhs, rtol=1e-10)


def test_price_density_symmetry(fbm_samples):
    T, s0 = 0.5, 1.0
    x = np.linspace(0.7, 1.4, 8)
    d = mc.estimate_density(fbm_samples, x, "price", T, s0, 1.0)
    m = mc.estimate_density(fbm_samples, s0**2 / x, "price", T, s0, 1.0)
    assert np.allclose(d, (s0 / x) ** 3 * m, rtol=0.08)


def test_density_needs_samples():
    small = mc.mixing_samples(BM, 16, 500, seed=1)
    with pytest.raises(ValueError):
        mc.estimate_density(small, [1.0])


def test_euler_cross_check(bm_samples):
    T, K = 0.5, 1.05
    e, se_e = mc.euler_price(BM, T, K, 1.0, 0.8, 128, 20_000, seed=4)
    p, se_p = mc.mixing_price(bm_samples, T, K, 1.0, 0.8)
    assert abs(e - p) < 4 * math.hypot(se_e, se_p) + 2e-3


def test_mixing_variance_below_euler(bm_samples):
    _, se_e = mc.euler_price(BM, 0.5, 1.05, 1.0, 0.8, 128, 20_000, seed=4)
    sub = mc.MixingSamples(bm_samples.samples_Ytilde1[:20_000], bm_samples.samples_Y1[:20_000], 256, 20_000, 9, BM)
    _, se_m = mc.mixing_price(sub, 0.5, 1.05, 1.0, 0.8)
    assert se_m <= se_e


def test_cholesky_failure(monkeypatch):
    def bad(kernel, grid):
        n = len(grid)
        A = np.ones((n, n))
        A[0, 1] = A[1, 0] = 5.0
        return A

    monkeypatch.setattr(mc, "gram_matrix", bad)
    with pytest.raises(KernelError):
        mc.cholesky_factor(BM, np.linspace(0.1, 1, 8))


def test_usage_errors(fbm_samples):
    with pytest.raises(ValueError):
        mc.simulate_vol_paths(FBM6, 1.0, 1, 10, 0)
    with pytest.raises(ValueError):
        mc.mixing_price(fbm_samples, 0.1, 1.0, 1.0, 1.0, "digital")
    with pytest.raises(ValueError):
        mc.MixingSamples(np.array([]), np.array([]), 2, 0, 0, BM)
