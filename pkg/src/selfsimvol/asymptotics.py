"""Closed-form small-time asymptotics for the uncorrelated self-similar model.

Every formula consumes ``SpectralConstants`` of the sigma-scaled kernel
(``lambda1 -> sigma**2 lambda1``), so the volatility scale never appears
explicitly except in the at-the-money coefficients, which use the unscaled
fractional moments together with ``sigma``.

Each evaluator returns an ``AsymptoticResult``: the value, its logarithm
(finite even when the value underflows) and the structural error order.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .mc import MixingSamples
from .spectrum import SpectralConstants

__all__ = [
    "RegimeError",
    "AsymptoticResult",
    "AsymptoticCoefficients",
    "AtmBounds",
    "z_factor",
    "mixing_density_asymptotic",
    "density_asymptotic",
    "call_asymptotic",
    "put_asymptotic",
    "iv_asymptotic_otm",
    "atm_bounds",
    "atm_remainder",
    "atm_call_expansion",
    "atm_iv_expansion",
]

_SQRT_2PI = math.sqrt(2.0 * math.pi)


class RegimeError(ValueError):
    """The requested point lies outside the regime where the formula holds."""


@dataclass(frozen=True)
class AsymptoticResult:
    """Leading-order value with its declared error order.

    ``error_exponent`` is the power ``p`` in a relative error ``O(T**p)``
    (absolute for the ATM expansions, see ``order``).
    """

    value: float
    log_value: float
    order: str
    error_exponent: float

    def __iter__(self):
        yield self.value
        yield self.order

    def __float__(self) -> float:
        return float(self.value)


def _result(log_value, order: str, exponent: float) -> AsymptoticResult:
    log_value = float(log_value)
    return AsymptoticResult(math.exp(log_value), log_value, order, float(exponent))


@dataclass(frozen=True)
class AsymptoticCoefficients:
    """Constants shared by the asymptotic formulas.

    ``mu_half`` and ``mu_threehalf`` are the fractional moments of the
    unscaled ``Y_1``; ``lambda1`` and ``product_term`` belong to the scaled
    kernel.
    """

    hurst: float
    lambda1: float
    n1: int
    product_term: float
    log_product: float
    sigma_scale: float
    s0: float = 1.0
    mu_half: float | None = None
    mu_threehalf: float | None = None
    centered: bool = True

    @classmethod
    def from_constants(
        cls,
        constants: SpectralConstants,
        s0: float = 1.0,
        mu_half: float | None = None,
        mu_threehalf: float | None = None,
    ) -> AsymptoticCoefficients:
        if s0 <= 0:
            raise ValueError("s0 must be positive")
        return cls(
            hurst=constants.hurst,
            lambda1=constants.lambda1,
            n1=constants.n1,
            product_term=constants.product_term,
            log_product=constants.log_product,
            sigma_scale=constants.sigma_scale,
            s0=float(s0),
            mu_half=mu_half,
            mu_threehalf=mu_threehalf,
            centered=constants.centered,
        )

    def _log_gamma_block(self) -> float:
        n1 = self.n1
        return -(n1 / 2) * math.log(2.0) - special.gammaln(n1 / 2)

    def log_M(self, K: float) -> float:
        """Log of the call prefactor for ``K > s0``."""
        s0, n1 = self.s0, self.n1
        if not K > s0:
            raise RegimeError("the call prefactor needs K > s0")
        return (
            0.5 * math.log(s0 * K)
            + self._log_gamma_block()
            + (4 - n1) / 4 * math.log(self.lambda1)
            + (n1 - 2) / 2 * math.log(math.log(K / s0))
            + self.log_product
        )

    def log_M_tilde(self, K: float) -> float:
        """Log of the put prefactor for ``0 < K < s0``."""
        s0, n1 = self.s0, self.n1
        if not 0 < K < s0:
            raise RegimeError("the put prefactor needs 0 < K < s0")
        return (
            0.5 * math.log(s0 * K)
            + self._log_gamma_block()
            + (4 - n1) / 4 * math.log(self.lambda1)
            + (n1 - 2) / 2 * math.log(math.log(s0 / K))
            + self.log_product
        )

    def M(self, K: float) -> float:
        return math.exp(self.log_M(K))

    def M_tilde(self, K: float) -> float:
        return math.exp(self.log_M_tilde(K))

    def _moments(self) -> tuple[float, float]:
        if self.mu_half is None or self.mu_threehalf is None:
            raise ValueError("fractional moments mu_1/2 and mu_3/2 are required")
        return self.mu_half, self.mu_threehalf

    @property
    def c1(self) -> float:
        mu_h, _ = self._moments()
        return self.s0 * self.sigma_scale * mu_h / _SQRT_2PI

    @property
    def c2(self) -> float:
        _, mu_3h = self._moments()
        return self.s0 * self.sigma_scale**3 * mu_3h / (24.0 * _SQRT_2PI)

    def as_dict(self) -> dict:
        out = {
            "hurst": self.hurst,
            "lambda1": self.lambda1,
            "n1": self.n1,
            "product_term": self.product_term,
            "sigma_scale": self.sigma_scale,
            "s0": self.s0,
            "mu_half": self.mu_half,
            "mu_threehalf": self.mu_threehalf,
        }
        if self.mu_half is not None and self.mu_threehalf is not None:
            out["c1"] = self.c1
            out["c2"] = self.c2
        return out


def _require_centered(coef: AsymptoticCoefficients) -> None:
    if not coef.centered:
        raise RegimeError("this asymptotic formula is established for centered volatility only")


def _check_T(T: float) -> None:
    if not T > 0:
        raise ValueError("T must be positive")


def z_factor(T: float, lambda1: float, hurst: float = 0.5) -> tuple[float, float, float]:
    """``z(T) = sqrt((lambda1 T**(2H+1) + 4) / (lambda1 T**(2H+1))) / 4``.

    Returns ``(z, leading, gap)`` where ``leading = lambda1**-0.5 T**(-H-1/2) / 2``
    is the small-time form and ``gap = z - leading``.
    """
    _check_T(T)
    if not lambda1 > 0:
        raise ValueError("lambda1 must be positive")
    a = lambda1 * T ** (2 * hurst + 1)
    z = 0.25 * math.sqrt((a + 4.0) / a)
    leading = 0.5 / math.sqrt(a)
    # z - leading without cancellation
    gap = 0.25 * a / (math.sqrt(a) * (math.sqrt(a + 4.0) + 2.0))
    return z, leading, gap


def mixing_density_asymptotic(
    x: float, T: float, constants: SpectralConstants, centered: bool | None = None
) -> AsymptoticResult:
    """Leading term of the density of ``Ytilde_T`` as ``T -> 0``.

    Centered: ``2 C T**(-H n1) x**(n1-1) exp(-x**2 / (2 T**(2H) lambda1))``.
    Noncentered: the extra factor ``exp(sqrt(delta / lambda1) x / T**H)`` with
    exponents ``T**(-H(n1+1)/2) x**((n1-1)/2)``.
    """
    if not x > 0:
        raise ValueError("x must be positive")
    _check_T(T)
    H, lam1, n1 = constants.hurst, constants.lambda1, constants.n1
    if centered is None:
        centered = constants.centered
    gauss = -x * x / (2.0 * T ** (2 * H) * lam1)
    if centered:
        logv = (
            math.log(2.0 * constants.const_C_centered)
            - H * n1 * math.log(T)
            + (n1 - 1) * math.log(x)
            + gauss
        )
    else:
        if constants.const_C_noncentered is None:
            raise ValueError("noncentered formula needs a nonzero mean projection")
        logv = (
            math.log(2.0 * constants.const_C_noncentered)
            - H * (n1 + 1) / 2 * math.log(T)
            + (n1 - 1) / 2 * math.log(x)
            + math.sqrt(constants.delta / lam1) * x / T**H
            + gauss
        )
    return _result(logv, "O_x(T^H)", H)


def density_asymptotic(
    x: float, T: float, constants: SpectralConstants | AsymptoticCoefficients, s0: float | None = None
) -> AsymptoticResult:
    """Leading term of the asset-price density away from the money.

    For ``x < s0`` the mirror form with ``log(s0/x)`` and ``s0/x`` is used,
    so the result satisfies ``D(x) = (s0/x)**3 D(s0**2/x)`` identically.
    """
    coef = _coef(constants, s0)
    _require_centered(coef)
    _check_T(T)
    s0 = coef.s0
    if not x > 0:
        raise ValueError("x must be positive")
    if x == s0:
        raise RegimeError("x == s0 is the at-the-money regime; use the ATM expansions")
    H, lam1, n1 = coef.hurst, coef.lambda1, coef.n1
    ratio = x / s0 if x > s0 else s0 / x
    a = lam1 * T ** (2 * H + 1)
    expo = math.sqrt(4.0 + a) / (2.0 * math.sqrt(a))
    logv = (
        0.5 * math.log(s0)
        + coef._log_gamma_block()
        - n1 / 4 * math.log(lam1)
        + coef.log_product
        - 1.5 * math.log(x)
        + (n1 - 2) / 2 * math.log(math.log(ratio))
        - (2 * H + 1) * n1 / 4 * math.log(T)
        - expo * math.log(ratio)
    )
    return _result(logv, "O(T^(2H+1)) + O_eps(T^((2H+1)/4) |log(x/s0)|^(-1/2))", (2 * H + 1) / 4)


def _coef(constants, s0: float | None) -> AsymptoticCoefficients:
    # s0=None keeps the spot stored in AsymptoticCoefficients (1 for raw constants)
    if isinstance(constants, AsymptoticCoefficients):
        if s0 is not None and s0 != constants.s0:
            return dataclasses.replace(constants, s0=float(s0))
        return constants
    return AsymptoticCoefficients.from_constants(constants, s0=1.0 if s0 is None else s0)


def call_asymptotic(
    T: float, K: float, constants: SpectralConstants | AsymptoticCoefficients, s0: float | None = None
) -> AsymptoticResult:
    """Out-of-the-money call, ``M T**((2H+1)(4-n1)/4) (s0/K)**(lambda1**-0.5 T**(-H-1/2))``."""
    coef = _coef(constants, s0)
    _require_centered(coef)
    _check_T(T)
    s0 = coef.s0
    if not K > s0:
        raise RegimeError("call asymptotics need K > s0; use put_asymptotic or the ATM expansions")
    H, lam1, n1 = coef.hurst, coef.lambda1, coef.n1
    logv = (
        coef.log_M(K)
        + (2 * H + 1) * (4 - n1) / 4 * math.log(T)
        - math.log(K / s0) / (math.sqrt(lam1) * T ** (H + 0.5))
    )
    return _result(logv, "O(T^((2H+1)/4))", (2 * H + 1) / 4)


def put_asymptotic(
    T: float, K: float, constants: SpectralConstants | AsymptoticCoefficients, s0: float | None = None
) -> AsymptoticResult:
    """Out-of-the-money put, ``M~ T**((2H+1)(4-n1)/4) (K/s0)**(lambda1**-0.5 T**(-H-1/2))``."""
    coef = _coef(constants, s0)
    _require_centered(coef)
    _check_T(T)
    s0 = coef.s0
    if not 0 < K < s0:
        raise RegimeError("put asymptotics need 0 < K < s0")
    H, lam1, n1 = coef.hurst, coef.lambda1, coef.n1
    logv = (
        coef.log_M_tilde(K)
        + (2 * H + 1) * (4 - n1) / 4 * math.log(T)
        - math.log(s0 / K) / (math.sqrt(lam1) * T ** (H + 0.5))
    )
    return _result(logv, "O(T^((2H+1)/4))", (2 * H + 1) / 4)


def iv_asymptotic_otm(
    T: float, K: float, constants: SpectralConstants | AsymptoticCoefficients, s0: float | None = None
) -> AsymptoticResult:
    """Leading out-of-the-money implied volatility ``lambda1**0.25 sqrt|log(K/s0)| T**((2H-1)/4) / sqrt 2``."""
    coef = _coef(constants, s0)
    _require_centered(coef)
    _check_T(T)
    s0 = coef.s0
    if not K > 0:
        raise ValueError("K must be positive")
    if K == s0:
        raise RegimeError("K == s0 is the at-the-money regime; use atm_iv_expansion")
    H = coef.hurst
    k = abs(math.log(K / s0))
    logv = 0.25 * math.log(coef.lambda1) + 0.5 * math.log(k) - 0.5 * math.log(2.0) + (2 * H - 1) / 4 * math.log(T)
    # absolute error O(T^((6H+1)/4) log 1/T), i.e. relative O(T^(H+1/2) log 1/T)
    return _result(logv, "O(T^((6H+1)/4) log(1/T))", H + 0.5)


@dataclass(frozen=True)
class AtmBounds:
    """Sample-average lower and upper bounds for the at-the-money call."""

    U1: float
    U2: float
    stderr_U1: float
    stderr_U2: float
    T: float

    def __iter__(self):
        yield self.U1
        yield self.U2


def _atm_bound_terms(v: np.ndarray, s0: float) -> tuple[np.ndarray, np.ndarray]:
    # Exact per-sample call is s0 * (2/sqrt(2 pi)) * int_0^(v/2) exp(-y^2/2) dy.
    # Taylor bounds a - a^3/6 <= int <= a - a^3/6 + a^5/40 hold for all a,
    # Mills-ratio bounds take over for a = v/2 > 1.
    lower = s0 * (v - v**3 / 24.0) / _SQRT_2PI
    upper = lower + s0 * v**5 / (640.0 * _SQRT_2PI)
    tail = v > 2.0
    if np.any(tail):
        vt = v[tail]
        poly = math.sqrt(math.pi / 2.0) - vt / 2.0 + vt**3 / 48.0
        e = np.exp(-vt * vt / 8.0)
        lower[tail] += 2.0 * s0 / _SQRT_2PI * (poly - (2.0 / vt) * e)
        upper[tail] += 2.0 * s0 / _SQRT_2PI * (poly - vt**5 / 1280.0 - (2.0 * vt / (vt * vt + 4.0)) * e)
    return lower, upper


def atm_bounds(T: float, samples: MixingSamples, s0: float = 1.0, sigma_scale: float = 1.0) -> AtmBounds:
    """Lower and upper bounds ``U1 <= C(T, s0) <= U2`` as sample averages.

    The bounds hold sample by sample, so ``U1 <= mixing_price <= U2`` holds
    exactly when both use the same samples.
    """
    _check_T(T)
    H = samples.hurst
    v = sigma_scale * T ** (H + 0.5) * samples.samples_Ytilde1
    lo, hi = _atm_bound_terms(v, s0)
    n = v.size
    se = (lambda a: float(np.std(a, ddof=1) / math.sqrt(n))) if n > 1 else (lambda a: float("nan"))
    return AtmBounds(float(np.sum(lo) / n), float(np.sum(hi) / n), se(lo), se(hi), T)


def atm_remainder(T: float, samples: MixingSamples, s0: float = 1.0, sigma_scale: float = 1.0) -> tuple[float, float]:
    """Sample average of ``C - c1 T**(H+1/2) + c2 T**(3H+3/2)`` and its standard error.

    With ``c1, c2`` built from the fractional moments of the same samples this
    equals the Monte-Carlo ATM call minus the two-term expansion, but it is
    summed per sample from the erf series so the ``O(T**(5H+5/2))`` remainder
    survives rounding even when the price itself is ~1e-3.
    """
    _check_T(T)
    v = sigma_scale * T ** (samples.hurst + 0.5) * samples.samples_Ytilde1
    x = v / (2.0 * math.sqrt(2.0))
    rem = np.empty_like(x)
    small = x < 1.0
    xs = x[small]
    term = xs**5 / 2.0  # (-1)^k x^(2k+1) / k! at k = 2
    acc = term / 5.0
    for k in range(3, 40):
        term = -term * xs * xs / k
        acc += term / (2 * k + 1)
    rem[small] = acc
    xl = x[~small]
    rem[~small] = 0.5 * math.sqrt(math.pi) * special.erf(xl) - xl + xl**3 / 3.0
    rem *= 2.0 * s0 / math.sqrt(math.pi)
    n = rem.size
    return float(np.mean(rem)), float(np.std(rem, ddof=1) / math.sqrt(n)) if n > 1 else float("nan")


def atm_call_expansion(T: float, coef: AsymptoticCoefficients) -> AsymptoticResult:
    """Two-term at-the-money call ``c1 T**(H+1/2) - c2 T**(3H+3/2)``."""
    _check_T(T)
    H = coef.hurst
    val = coef.c1 * T ** (H + 0.5) - coef.c2 * T ** (3 * H + 1.5)
    return AsymptoticResult(val, math.log(val) if val > 0 else -math.inf, "O(T^(5H+5/2)) absolute", 5 * H + 2.5)


def atm_iv_expansion(T: float, coef: AsymptoticCoefficients) -> AsymptoticResult:
    """Two-term at-the-money implied volatility.

    ``sigma mu_1/2 T**H + sigma**3 (mu_1/2**3 - mu_3/2) T**(3H+1) / 24``; the
    second coefficient is nonpositive by the power-mean inequality.
    """
    _check_T(T)
    H, sig = coef.hurst, coef.sigma_scale
    mu_h, mu_3h = coef._moments()
    val = sig * mu_h * T**H + sig**3 * (mu_h**3 - mu_3h) / 24.0 * T ** (3 * H + 1)
    return AsymptoticResult(val, math.log(val) if val > 0 else -math.inf, "O(T^(5H+2)) absolute", 5 * H + 2)
