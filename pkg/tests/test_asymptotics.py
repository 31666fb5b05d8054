import math

import numpy as np
import pytest

from selfsimvol import asymptotics as A
from selfsimvol import mc
from selfsimvol.kernels import CovarianceKernel
from selfsimvol.spectrum import solve_spectrum, spectral_constants


@pytest.fixture(scope="module")
def bm_const():
    return spectral_constants(solve_spectrum(CovarianceKernel("bm"), 1.0, (256, 512, 1024), 64))


@pytest.fixture(scope="module")
def fbm_const():
    return spectral_constants(solve_spectrum(CovarianceKernel("fbm", 0.6), 1.0, (256, 512, 1024), 64))


def log_mixing_density_oracle(qf, x, T, H, n=50_000, seed=3):
    """log of the exact density of Ytilde_T for the discretized quadratic form.

    With Y = a1 xi1^2 + R, f_Y(y) = exp(-y/(2 a1)) / sqrt(2 pi a1) * E[exp(R/(2 a1)) (y - R)^(-1/2)];
    tilting R by exp(R/(2 a1)) leaves E_Q[(y - R)^(-1/2)], which has tiny variance in the tail.
    """
    a = np.sort(qf.weights)[::-1]
    a1, rest = a[0], a[1:]
    q = 1.0 - rest / a1
    log_prod = -0.5 * np.sum(np.log(q))
    rng = np.random.Generator(np.random.Philox(seed))
    y = (x / T**H) ** 2
    r = (rng.standard_normal((n, rest.size)) ** 2 / q) @ rest
    g = np.where(r < y, 1.0 / np.sqrt(np.clip(y - r, 1e-300, None)), 0.0)
    log_fy = -y / (2 * a1) - 0.5 * math.log(2 * math.pi * a1) + log_prod + math.log(g.mean())
    return math.log(2 * T ** (-2 * H) * x) + log_fy


def test_z_factor():
    lam, H = 2.0, 0.6
    T = (4 / 3 / lam) ** (1 / 2.2)
    z, lead, gap = A.z_factor(T, lam, H)
    assert z == pytest.approx(0.5, rel=1e-15)
    assert z - lead == pytest.approx(gap, rel=1e-12)
    assert A.z_factor(1e8, lam, H)[0] == pytest.approx(0.25, rel=1e-6)
    for T in (0.01, 0.3, 0.9):
        z, lead, _ = A.z_factor(T, lam, H)
        upper = 0.25 * math.sqrt((lam + 4) / lam) * T ** (-H - 0.5)
        assert upper > z > lead


def test_mixing_density_forms(bm_const):
    c = bm_const
    T, x = 0.05, 0.4
    v = A.mixing_density_asymptotic(x, T, c)
    expected = 2 * c.const_C_centered * T**-0.5 * math.exp(-x * x / (2 * T * c.lambda1))
    assert v.value == pytest.approx(expected, rel=1e-13)
    v1 = A.mixing_density_asymptotic(x / T**0.5, 1.0, c)
    assert v.value == pytest.approx(T**-0.5 * v1.value, rel=1e-13)
    assert v.error_exponent == 0.5
    with pytest.raises(ValueError):
        A.mixing_density_asymptotic(0.0, T, c)


@pytest.mark.parametrize("kind,H", [("bm", 0.5), ("fbm", 0.6), ("fbm", 0.75)])
def test_mixing_density_against_exact_tail(kind, H):
    k = CovarianceKernel(kind, H)
    c = spectral_constants(solve_spectrum(k, 1.0, (256, 512, 1024), 64))
    qf = mc.quadratic_form(k, 512)
    x, Ts = 0.3, [0.05, 0.02, 0.01, 0.005]
    errs = []
    for T in Ts:
        exact = log_mixing_density_oracle(qf, x, T, H)
        errs.append(abs(math.expm1(A.mixing_density_asymptotic(x, T, c).log_value - exact)))
    slope = np.polyfit(np.log(Ts), np.log(errs), 1)[0]
    assert errs[-1] < errs[0]
    assert slope >= H - 0.2  # at least as fast as the declared O(T^H)


def test_noncentered_mixing_density():
    k = CovarianceKernel("fbm", 0.6, mean_coeff=0.5)
    c = spectral_constants(solve_spectrum(k, 1.0, (128, 256, 512), 32))
    r = A.mixing_density_asymptotic(0.3, 0.01, c)
    assert math.isfinite(r.log_value)
    with pytest.raises(A.RegimeError):
        A.call_asymptotic(0.01, 1.1, c)
    with pytest.raises(A.RegimeError):
        A.density_asymptotic(1.1, 0.01, c)


def test_density_symmetry_and_arranged_point(bm_const):
    s0 = 1.0
    for x in (0.6, 0.85, 1.3, 2.0):
        lhs = A.density_asymptotic(x, 0.03, bm_const, s0).log_value
        rhs = A.density_asymptotic(s0**2 / x, 0.03, bm_const, s0).log_value + 3 * math.log(s0 / x)
        assert lhs == pytest.approx(rhs, abs=1e-12)
    lam = bm_const.lambda1
    T = math.sqrt(4 / 3 / lam)  # lambda1 T^(2H+1) = 4/3
    x = math.e
    full = A.density_asymptotic(x, T, bm_const, s0).log_value
    n1 = 1
    pre = (
        0.5 * math.log(s0) - 0.5 * math.log(2) - math.lgamma(0.5) - 0.25 * math.log(lam) + bm_const.log_product
        - 1.5 * math.log(x) - 0.5 * math.log(math.log(x)) - 2 * n1 / 4 * math.log(T)
    )
    assert full - pre == pytest.approx(-1.0, abs=1e-12)  # (x/s0)^(-2z) = e^-1 with z = 1/2


def test_density_regime_error(bm_const):
    with pytest.raises(A.RegimeError):
        A.density_asymptotic(1.0, 0.01, bm_const, 1.0)


@pytest.mark.parametrize("x", [1.2, 0.8])
def test_density_against_mixture_oracle(bm_const, x):
    qf = mc.quadratic_form(CovarianceKernel("bm"), 512)
    for i, T in enumerate((0.02, 0.005)):
        d = mc.asset_density_tilted(qf, T, x, 1.0, 1.0, 40_000, seed=10 + i)
        gap = d.log_price - A.density_asymptotic(x, T, bm_const).log_value
        assert abs(gap) < 4 * d.rel_stderr + 0.03


def test_call_put_structure(fbm_const):
    c = fbm_const
    H = 0.6
    r = A.call_asymptotic(0.01, 1.1, c)
    assert r.error_exponent == pytest.approx((2 * H + 1) / 4)
    # n1 = 1 power of T
    a = A.call_asymptotic(0.01, 1.1, c).log_value + math.log(1.1) / math.sqrt(c.lambda1) * 0.01**-1.1
    b = A.call_asymptotic(0.02, 1.1, c).log_value + math.log(1.1) / math.sqrt(c.lambda1) * 0.02**-1.1
    assert (b - a) / math.log(2) == pytest.approx(3 * (2 * H + 1) / 4, rel=1e-12)
    Ks = np.linspace(1.01, 2.0, 30)
    vals = [A.call_asymptotic(0.01, K, c).log_value for K in Ks]
    assert np.all(np.diff(vals) < 0)
    for K in (0.5, 0.8, 0.95):
        p = A.put_asymptotic(0.01, K, c).log_value
        assert p == pytest.approx(math.log(K) + A.call_asymptotic(0.01, 1 / K, c).log_value, abs=1e-12)
    K = 1 / math.e
    coef = A.AsymptoticCoefficients.from_constants(c)
    p = A.put_asymptotic(0.01, K, coef).log_value
    assert p - coef.log_M_tilde(K) - 3 * (2 * H + 1) / 4 * math.log(0.01) == pytest.approx(
        -(c.lambda1**-0.5) * 0.01**-1.1, rel=1e-12
    )


def test_prefactor_swap(fbm_const):
    coef = A.AsymptoticCoefficients.from_constants(fbm_const, s0=1.3)
    for K in (0.7, 1.0, 1.2):
        assert coef.log_M_tilde(K) == pytest.approx(math.log(K / 1.3) + coef.log_M(1.3**2 / K), abs=1e-12)


def test_call_put_regime_errors(fbm_const):
    with pytest.raises(A.RegimeError):
        A.call_asymptotic(0.01, 0.9, fbm_const)
    with pytest.raises(A.RegimeError):
        A.put_asymptotic(0.01, 1.1, fbm_const)
    with pytest.raises(A.RegimeError):
        A.iv_asymptotic_otm(0.01, 1.0, fbm_const)


def test_call_log_extraction_short_ladder(bm_const):
    qf = mc.quadratic_form(CovarianceKernel("bm"), 512)
    coef = A.AsymptoticCoefficients.from_constants(bm_const)
    T = 0.005
    tp = mc.mixing_price_tilted(qf, T, 1.1, 1.0, 1.0, 40_000, seed=4)
    extracted = tp.log_price + math.log(1.1) / (math.sqrt(bm_const.lambda1) * T) - 1.5 * math.log(T)
    assert extracted == pytest.approx(coef.log_M(1.1), abs=0.06)


def test_iv_otm(bm_const, fbm_const):
    a = A.iv_asymptotic_otm(0.01, 1.1, bm_const).value
    b = A.iv_asymptotic_otm(0.0001, 1.1, bm_const).value
    assert a == pytest.approx(b, rel=1e-14)
    assert a == pytest.approx(bm_const.lambda1**0.25 * math.sqrt(math.log(1.1)) / math.sqrt(2), rel=1e-14)
    for K in (0.7, 1.3):
        assert A.iv_asymptotic_otm(0.01, K, fbm_const).value == pytest.approx(
            A.iv_asymptotic_otm(0.01, 1 / K, fbm_const).value, rel=1e-14
        )
    # sigma enters as sqrt(sigma)
    sp = solve_spectrum(CovarianceKernel("fbm", 0.6), 1.0, (256, 512, 1024), 64)
    c4 = spectral_constants(sp, sigma=4.0)
    assert A.iv_asymptotic_otm(0.01, 1.1, c4).value == pytest.approx(
        2 * A.iv_asymptotic_otm(0.01, 1.1, fbm_const).value, rel=1e-13
    )


@pytest.fixture(scope="module")
def samples06():
    return mc.mixing_samples(CovarianceKernel("fbm", 0.6), 256, 30_000, seed=21)


def test_atm_bounds_sandwich_and_width(samples06):
    widths, Ts = [], [1 / 365, 2 / 365, 7 / 365, 14 / 365]
    for T in Ts:
        b = A.atm_bounds(T, samples06, 1.0, 3.0)
        p, _ = mc.mixing_price(samples06, T, 1.0, 1.0, 3.0)
        slack = 1e-12 * p  # the plain price carries ndtr cancellation at this size
        assert b.U1 - slack <= p <= b.U2 + slack
        widths.append(b.U2 - b.U1)
    slope = np.polyfit(np.log(Ts), np.log(widths), 1)[0]
    assert slope == pytest.approx(5 * 0.6 + 2.5, abs=0.2)
    tiny = A.atm_bounds(1e-12, samples06, 1.0, 3.0)
    assert tiny.U2 < 1e-6


def test_atm_bounds_large_vol_branch():
    v = np.array([0.5, 1.9, 2.5, 4.0, 10.0])
    lo, hi = A._atm_bound_terms(v, 1.0)
    from scipy import special

    exact = special.erf(v / (2 * math.sqrt(2)))
    assert np.all(lo <= exact + 1e-15) and np.all(exact <= hi + 1e-15)


def test_atm_expansions(samples06):
    m = mc.estimate_moments(samples06)
    c = spectral_constants(solve_spectrum(CovarianceKernel("fbm", 0.6), 1.0, (128, 256, 512), 32), sigma=1.0)
    coef = A.AsymptoticCoefficients.from_constants(c, 1.0, m["mu_half"], m["mu_3half"])
    H = 0.6
    T = 1e-8
    assert A.atm_call_expansion(T, coef).value / T ** (H + 0.5) == pytest.approx(coef.c1, rel=1e-8)
    T = 0.01
    second = (coef.c1 * T ** (H + 0.5) - A.atm_call_expansion(T, coef).value) / T ** (3 * H + 1.5)
    assert second == pytest.approx(coef.c2, rel=1e-10)
    assert coef.c2 / coef.c1 == pytest.approx(m["mu_3half"] / m["mu_half"] / 24, rel=1e-14)
    assert A.atm_iv_expansion(1e-10, coef).value / 1e-10**H == pytest.approx(m["mu_half"], rel=1e-9)
    assert m["mu_half"] ** 3 - m["mu_3half"] <= 0


def test_atm_iv_matches_mc_at_one_week():
    from selfsimvol.pricing import implied_vol

    k = CovarianceKernel("fbm", 0.6)
    s = mc.mixing_samples(k, 256, 30_000, seed=2)
    m = mc.estimate_moments(s)
    c = spectral_constants(solve_spectrum(k, 1.0, (128, 256, 512), 32), sigma=3.0)
    coef = A.AsymptoticCoefficients.from_constants(c, 1.0, m["mu_half"], m["mu_3half"])
    T = 7 / 365
    p, _ = mc.mixing_price(s, T, 1.0, 1.0, 3.0)
    iv = implied_vol(p, T, 1.0, 1.0, method="atm_series").implied_vol
    assert A.atm_iv_expansion(T, coef).value == pytest.approx(iv, rel=0.01)


def test_result_unpacking(bm_const):
    value, order = A.call_asymptotic(0.01, 1.2, bm_const)
    assert value > 0 and order.startswith("O(")


def test_atm_remainder_matches_direct_difference(samples06):
    m = mc.estimate_moments(samples06)
    sp = solve_spectrum(CovarianceKernel("fbm", 0.6), 1.0, (128, 256, 512), 32)
    for T, sig in ((0.5, 3.0), (0.2, 1.0), (2.0, 3.0)):  # both series and erf branches
        p, _ = mc.mixing_price(samples06, T, 1.0, 1.0, sig)
        coef = A.AsymptoticCoefficients.from_constants(
            spectral_constants(sp, sigma=sig), 1.0, m["mu_half"], m["mu_3half"]
        )
        direct = p - A.atm_call_expansion(T, coef).value
        rem, se = A.atm_remainder(T, samples06, 1.0, sig)
        assert rem == pytest.approx(direct, rel=1e-8, abs=1e-15)
        assert se > 0
