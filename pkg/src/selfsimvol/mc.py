"""Monte-Carlo oracle for the uncorrelated self-similar volatility model.

Volatility paths are exact Gaussian draws on a uniform grid (dense Cholesky).
Option prices use the mixing representation: conditionally on the volatility
path the log-price is Gaussian, so a call is the Black-Scholes price at the
path's realized volatility.

Random numbers follow a counter-based contract. Paths are generated in
fixed blocks of ``BLOCK_PATHS``; block ``b`` draws from a Philox stream keyed
by ``(seed, b)``, so path ``j`` depends only on ``(seed, j)`` and never on
the thread count.
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy import integrate, optimize, special, stats

from .kernels import CovarianceKernel, gram_matrix, mean_eval
from .pricing import bs_call, bs_put, log_bs_otm
from .spectrum import KernelError

__all__ = [
    "BLOCK_PATHS",
    "THREADS_ENV",
    "MixingSamples",
    "QuadraticForm",
    "TiltedPrice",
    "block_generator",
    "cholesky_factor",
    "simulate_vol_paths",
    "integrated_variance",
    "mixing_samples",
    "mixing_price",
    "quadratic_form",
    "saddle_point",
    "mixing_price_tilted",
    "asset_density_tilted",
    "estimate_moments",
    "asset_samples",
    "estimate_density",
    "euler_price",
]

BLOCK_PATHS = 4096
THREADS_ENV = "SELFSIMVOL_THREADS"
_MASK64 = (1 << 64) - 1
_MAX_JITTER_STEPS = 8


def _n_threads(threads: int | None) -> int:
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get(THREADS_ENV)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def block_generator(seed: int, block: int, stream: int = 0) -> np.random.Generator:
    """Philox generator keyed by ``(seed, block)``; ``stream`` separates independent uses."""
    key = np.array([int(seed) & _MASK64, ((int(stream) << 48) | int(block)) & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _blocks(n_paths: int) -> list[tuple[int, int, int]]:
    out = []
    for b, start in enumerate(range(0, n_paths, BLOCK_PATHS)):
        out.append((b, start, min(BLOCK_PATHS, n_paths - start)))
    return out


def _run_blocks(fn, n_paths: int, threads: int | None) -> list:
    blocks = _blocks(n_paths)
    nt = _n_threads(threads)
    if nt == 1 or len(blocks) == 1:
        return [fn(*blk) for blk in blocks]
    with ThreadPoolExecutor(max_workers=nt) as pool:
        return list(pool.map(lambda blk: fn(*blk), blocks))


def cholesky_factor(kernel: CovarianceKernel, grid) -> np.ndarray:
    """Lower Cholesky factor of the grid covariance, with jitter escalation."""
    cov = gram_matrix(kernel, grid)
    n = cov.shape[0]
    scale = np.trace(cov) / n
    jitter = 0.0
    for step in range(_MAX_JITTER_STEPS + 1):
        try:
            return sla.cholesky(cov + jitter * np.eye(n), lower=True)
        except sla.LinAlgError:
            jitter = scale * np.finfo(float).eps * 10.0 ** (step + 1)
    raise KernelError(f"covariance not positive definite on the {n}-point grid after jitter escalation")


def _grid(T: float, n_steps: int) -> np.ndarray:
    return T * np.arange(1, n_steps + 1) / n_steps


def _check_sizes(n_steps: int, n_paths: int) -> None:
    if n_steps < 2:
        raise ValueError("n_steps must be >= 2")
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")


def simulate_vol_paths(
    kernel: CovarianceKernel,
    T: float,
    n_steps: int,
    n_paths: int,
    seed: int,
    threads: int | None = None,
) -> np.ndarray:
    """Exact Gaussian volatility paths at ``t_i = i T / n_steps``, shape ``(n_paths, n_steps)``."""
    _check_sizes(n_steps, n_paths)
    grid = _grid(T, n_steps)
    L = cholesky_factor(kernel, grid)
    mean = np.asarray(mean_eval(kernel, grid))

    def block(b, start, size):
        z = block_generator(seed, b).standard_normal((size, n_steps))
        return z @ L.T + mean

    return np.concatenate(_run_blocks(block, n_paths, threads), axis=0)


def integrated_variance(paths, T: float, n_steps: int) -> tuple[np.ndarray, np.ndarray]:
    """Trapezoidal ``Y_T = int_0^T X^2`` with the endpoint ``X_0 = 0``; returns ``(Y_T, Ytilde_T)``."""
    x = np.atleast_2d(np.asarray(paths, dtype=float))
    if x.shape[1] != n_steps:
        raise ValueError("paths do not match n_steps")
    h = T / n_steps
    sq = x * x
    y = h * (sq[:, :-1].sum(axis=1) + 0.5 * sq[:, -1])
    return y, np.sqrt(y / T)


@dataclass(frozen=True)
class MixingSamples:
    """Draws of the unit-horizon realized volatility ``Ytilde_1`` and ``Y_1 = Ytilde_1**2``."""

    samples_Ytilde1: np.ndarray
    samples_Y1: np.ndarray
    n_steps: int
    n_paths: int
    seed: int
    kernel: CovarianceKernel
    stderr: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.samples_Ytilde1.size == 0:
            raise ValueError("empty sample set")
        if not np.all(self.samples_Ytilde1 > 0):
            raise ValueError("integrated variance samples must be strictly positive")

    @property
    def hurst(self) -> float:
        return self.kernel.hurst

    def describe(self) -> dict:
        return {
            "kernel": self.kernel.describe(),
            "n_steps": self.n_steps,
            "n_paths": self.n_paths,
            "seed": self.seed,
            "mean_Y1": float(self.samples_Y1.mean()),
            "mean_Ytilde1": float(self.samples_Ytilde1.mean()),
            "stderr": dict(self.stderr),
        }


def mixing_samples(
    kernel: CovarianceKernel,
    n_steps: int = 512,
    n_paths: int = 100_000,
    seed: int = 0,
    threads: int | None = None,
) -> MixingSamples:
    """Stream volatility paths on ``[0, 1]`` block by block and keep only ``Y_1``.

    Gives the same draws as ``integrated_variance(simulate_vol_paths(...))``
    without holding the path matrix in memory.
    """
    _check_sizes(n_steps, n_paths)
    grid = _grid(1.0, n_steps)
    L = cholesky_factor(kernel, grid)
    mean = np.asarray(mean_eval(kernel, grid))

    def block(b, start, size):
        z = block_generator(seed, b).standard_normal((size, n_steps))
        return integrated_variance(z @ L.T + mean, 1.0, n_steps)[0]

    y1 = np.concatenate(_run_blocks(block, n_paths, threads))
    yt = np.sqrt(y1)
    y1 = yt * yt  # keep Y1 == Ytilde1**2 bit-for-bit
    se = {
        "Y1": float(y1.std(ddof=1) / math.sqrt(n_paths)) if n_paths > 1 else float("nan"),
        "Ytilde1": float(yt.std(ddof=1) / math.sqrt(n_paths)) if n_paths > 1 else float("nan"),
    }
    return MixingSamples(yt, y1, n_steps, n_paths, int(seed), kernel, se)


def _mean_stderr(values: np.ndarray) -> tuple[float, float]:
    n = values.size
    mean = float(np.sum(values) / n)  # numpy sums pairwise: order independent of threading
    if n < 2:
        return mean, float("nan")
    return mean, float(np.std(values, ddof=1) / math.sqrt(n))


def mixing_price(
    samples: MixingSamples,
    T: float,
    K: float,
    s0: float,
    sigma_scale: float,
    kind: str = "call",
) -> tuple[float, float]:
    """Conditional Black-Scholes price averaged over the mixing samples.

    The realized volatility at maturity ``T`` is ``sigma T**H Ytilde_1`` by
    self-similarity, so each sample is priced at total standard deviation
    ``sigma T**(H + 1/2) Ytilde_1``.
    """
    if samples is None or samples.samples_Ytilde1.size == 0:
        raise ValueError("mixing_price needs a nonempty sample set")
    if T <= 0 or K <= 0 or s0 <= 0 or sigma_scale <= 0:
        raise ValueError("T, K, s0 and sigma_scale must be positive")
    vol = sigma_scale * T**samples.hurst * samples.samples_Ytilde1
    if kind == "call":
        prices = bs_call(T, K, s0, vol)
    elif kind == "put":
        prices = bs_put(T, K, s0, vol)
    else:
        raise ValueError(f"option kind must be 'call' or 'put', got {kind!r}")
    return _mean_stderr(np.asarray(prices))


# ---------------------------------------------------------------------------
# importance sampling for far out-of-the-money prices


@dataclass(frozen=True)
class QuadraticForm:
    """Trapezoidal ``Y_1`` written as ``sum_i a_i (xi_i + c_i)**2`` with iid standard ``xi``."""

    weights: np.ndarray
    shifts: np.ndarray
    n_steps: int
    kernel: CovarianceKernel

    @property
    def mean(self) -> float:
        return float(np.sum(self.weights * (1.0 + self.shifts**2)))

    def log_mgf(self, theta: float) -> float:
        """``log E exp(theta Y_1)`` for ``theta < 1 / (2 max a)``."""
        q = 1.0 - 2.0 * theta * self.weights
        return float(np.sum(-0.5 * np.log(q) + theta * self.weights * self.shifts**2 / q))

    def tilted_mean(self, theta: float) -> float:
        q = 1.0 - 2.0 * theta * self.weights
        return float(np.sum(self.weights / q + self.weights * self.shifts**2 / q**2))

    def fractional_moment(self, p: float) -> float:
        """Exact ``E[Y_1**p]`` for ``0 < p < 2``, ``p != 1``, from the Laplace transform.

        Uses ``y**q = q / Gamma(1-q) int_0^inf (1 - exp(-s y)) s**(-q-1) ds``
        with ``q = p`` or ``q = p - 1`` (then multiplied through by ``y``).
        """
        if not (0 < p < 2) or p == 1:
            raise ValueError("p must lie in (0, 1) or (1, 2)")
        a, c2 = self.weights, self.shifts**2
        m1 = self.mean
        q = p if p < 1 else p - 1.0

        def integrand(u):
            s = math.exp(u)
            d = 1.0 + 2.0 * s * a
            lap = math.exp(float(np.sum(-0.5 * np.log(d) - s * a * c2 / d)))
            if p < 1:
                g = -math.expm1(math.log(lap)) if lap > 0 else 1.0
            else:
                # E[Y] - E[Y exp(-sY)]
                g = m1 - lap * float(np.sum(a / d + a * c2 / d**2))
            return g * s ** (-q)

        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, _ = integrate.quad(integrand, -60.0, 60.0, limit=400, epsabs=0.0, epsrel=1e-11)
        return q / math.gamma(1.0 - q) * val


def quadratic_form(kernel: CovarianceKernel, n_steps: int = 512) -> QuadraticForm:
    """Eigen-decomposition of the trapezoidal ``Y_1`` for the grid used by the path sampler."""
    grid = _grid(1.0, n_steps)
    L = cholesky_factor(kernel, grid)
    w = np.full(n_steps, 1.0 / n_steps)
    w[-1] *= 0.5
    M = (L.T * w) @ L
    a, Q = sla.eigh(M)
    a = np.clip(a, 0.0, None)
    mean = np.asarray(mean_eval(kernel, grid))
    if np.any(mean != 0):
        # X = L xi + m with m = L u for u = L^-1 m
        u = sla.solve_triangular(L, mean, lower=True)
        shifts = Q.T @ u
    else:
        shifts = np.zeros(n_steps)
    return QuadraticForm(a, shifts, n_steps, kernel)


def saddle_point(qf: QuadraticForm, T: float, k: float, sigma_scale: float) -> tuple[float, float]:
    """Dominant ``Y_1`` and the matching exponential tilt for log-moneyness ``k``.

    The conditional price decays like ``exp(-k**2 / (2 c Y) - c Y / 8)`` with
    ``c = sigma**2 T**(2H+1)`` while ``Y_1`` has tail ``exp(-Y / (2 a_max))``;
    the maximizing ``Y`` balances the two.
    """
    H = qf.kernel.hurst
    c = sigma_scale**2 * T ** (2 * H + 1)
    amax = float(qf.weights.max())
    y_star = abs(k) / math.sqrt(c * (1.0 / amax + c / 4.0))
    y_star = max(y_star, qf.mean)
    hi = 0.5 / amax
    f = lambda th: qf.tilted_mean(th) - y_star  # noqa: E731
    if f(0.0) >= 0:
        return y_star, 0.0
    lo, top = 0.0, hi * (1.0 - 1e-15)
    theta = optimize.brentq(f, lo, top, xtol=1e-300, rtol=1e-14, maxiter=500)
    return y_star, float(theta)


@dataclass(frozen=True)
class TiltedPrice:
    """Importance-sampled out-of-the-money price kept in log space."""

    log_price: float
    rel_stderr: float
    theta: float
    y_star: float
    n_paths: int
    effective_sample_size: float

    @property
    def price(self) -> float:
        return math.exp(self.log_price)

    @property
    def stderr(self) -> float:
        return self.price * self.rel_stderr


def _tilted_log_mean(qf: QuadraticForm, th: float, n_paths: int, seed: int, threads, log_f):
    """Log of ``E[f(Y_1)]`` from draws under the tilt ``theta``; ``log_f`` maps ``Y_1`` to ``log f``."""
    q = 1.0 - 2.0 * th * qf.weights
    if np.any(q <= 0):
        raise ValueError("tilt parameter outside the moment generating function domain")
    sd = 1.0 / np.sqrt(q)
    centre = qf.shifts / q
    lmgf = qf.log_mgf(th)

    def block(b, start, size):
        z = block_generator(seed, b, stream=1).standard_normal((size, qf.n_steps))
        xi = z * sd + centre
        y = (xi * xi) @ qf.weights
        return lmgf - th * y + log_f(y)

    logs = np.concatenate(_run_blocks(block, n_paths, threads))
    top = float(np.max(logs))
    w = np.exp(logs - top)
    mean_w, se_w = _mean_stderr(w)
    ess = float(np.sum(w) ** 2 / np.sum(w * w))
    return top + math.log(mean_w), se_w / mean_w, ess


def _check_otm(T, K, s0, sigma_scale) -> float:
    if T <= 0 or K <= 0 or s0 <= 0 or sigma_scale <= 0:
        raise ValueError("T, strike/level, s0 and sigma_scale must be positive")
    k = math.log(K / s0)
    if k == 0.0:
        raise ValueError("tilted estimators are for points away from the money (K != s0)")
    return k


def mixing_price_tilted(
    qf: QuadraticForm,
    T: float,
    K: float,
    s0: float,
    sigma_scale: float,
    n_paths: int = 100_000,
    seed: int = 0,
    theta: float | None = None,
    threads: int | None = None,
) -> TiltedPrice:
    """Out-of-the-money mixing price under an exponential tilt of ``Y_1``.

    Draws ``xi_i ~ N(c_i / q_i, 1 / q_i)`` with ``q_i = 1 - 2 theta a_i`` so that
    the tilted law has density ``exp(theta Y) / E exp(theta Y)`` relative to the
    original; each sample carries the likelihood ratio ``exp(log_mgf - theta Y)``.
    Calls are priced for ``K > s0`` and puts for ``K < s0``.
    """
    k = _check_otm(T, K, s0, sigma_scale)
    y_star, th = saddle_point(qf, T, k, sigma_scale)
    if theta is not None:
        th = float(theta)
    scale = sigma_scale * T ** (qf.kernel.hurst + 0.5)
    log_mean, rel_se, ess = _tilted_log_mean(
        qf, th, n_paths, seed, threads, lambda y: log_bs_otm(k, scale * np.sqrt(y))
    )
    return TiltedPrice(log_mean + math.log(s0), rel_se, th, y_star, n_paths, ess)


def asset_density_tilted(
    qf: QuadraticForm,
    T: float,
    x: float,
    s0: float,
    sigma_scale: float,
    n_paths: int = 100_000,
    seed: int = 0,
    threads: int | None = None,
) -> TiltedPrice:
    """Density of ``S_T`` at ``x`` as the mixture of conditional lognormal densities.

    Exact in law (no kernel smoothing), importance-sampled like
    :func:`mixing_price_tilted`; ``log_price`` holds ``log D_T(x)``.
    """
    k = _check_otm(T, x, s0, sigma_scale)
    y_star, th = saddle_point(qf, T, k, sigma_scale)
    scale = sigma_scale * T ** (qf.kernel.hurst + 0.5)
    log_norm = math.log(x) + 0.5 * math.log(2.0 * math.pi)

    def log_f(y):
        v = scale * np.sqrt(y)
        return -log_norm - np.log(v) - (k + 0.5 * v * v) ** 2 / (2.0 * v * v)

    log_mean, rel_se, ess = _tilted_log_mean(qf, th, n_paths, seed, threads, log_f)
    return TiltedPrice(log_mean, rel_se, th, y_star, n_paths, ess)


def estimate_moments(samples: MixingSamples) -> dict:
    """Fractional moments ``mu_1/2 = E[Y_1**0.5]`` and ``mu_3/2 = E[Y_1**1.5]`` with standard errors."""
    y = samples.samples_Y1
    m_half, se_half = _mean_stderr(samples.samples_Ytilde1)
    m_3half, se_3half = _mean_stderr(y * samples.samples_Ytilde1)
    return {"mu_half": m_half, "mu_3half": m_3half, "stderr_half": se_half, "stderr_3half": se_3half}


def asset_samples(samples: MixingSamples, T: float, s0: float, sigma_scale: float, seed: int = 0) -> np.ndarray:
    """One draw of ``S_T`` per volatility sample from the conditional lognormal law."""
    v = sigma_scale * T ** (samples.hurst + 0.5) * samples.samples_Ytilde1
    z = block_generator(seed, 0, stream=2).standard_normal(v.size)
    return s0 * np.exp(v * z - 0.5 * v * v)


def estimate_density(
    samples: MixingSamples,
    eval_grid,
    target: str = "mixing",
    T: float = 1.0,
    s0: float = 1.0,
    sigma_scale: float = 1.0,
    seed: int = 0,
) -> np.ndarray:
    """Gaussian kernel density estimate (Silverman bandwidth) on ``eval_grid``.

    ``target="mixing"`` estimates the density of ``Ytilde_T = T**H Ytilde_1``;
    ``target="price"`` that of ``S_T``, drawing one conditional lognormal per
    volatility sample.
    """
    n = samples.samples_Ytilde1.size
    if n < 10_000:
        raise ValueError("density estimation needs at least 1e4 samples")
    x = np.asarray(eval_grid, dtype=float)
    H = samples.hurst
    if target == "mixing":
        data = T**H * samples.samples_Ytilde1
    elif target == "price":
        data = asset_samples(samples, T, s0, sigma_scale, seed)
    else:
        raise ValueError("target must be 'mixing' or 'price'")
    kde = stats.gaussian_kde(data, bw_method="silverman")
    return kde(x.ravel()).reshape(x.shape)


def euler_price(
    kernel: CovarianceKernel,
    T: float,
    K: float,
    s0: float,
    sigma_scale: float,
    n_steps: int,
    n_paths: int,
    seed: int,
    kind: str = "call",
) -> tuple[float, float]:
    """Log-Euler simulation of the asset with an independent Brownian driver.

    Only used to cross-check the mixing estimator.
    """
    paths = simulate_vol_paths(kernel, T, n_steps, n_paths, seed)
    h = T / n_steps
    vol = sigma_scale * np.abs(np.concatenate([np.zeros((n_paths, 1)), paths[:, :-1]], axis=1))
    dw = block_generator(seed, 0, stream=3).standard_normal((n_paths, n_steps)) * math.sqrt(h)
    log_s = math.log(s0) + np.sum(vol * dw - 0.5 * vol * vol * h, axis=1)
    s_T = np.exp(log_s)
    payoff = np.maximum(s_T - K, 0.0) if kind == "call" else np.maximum(K - s_T, 0.0)
    return _mean_stderr(payoff)
