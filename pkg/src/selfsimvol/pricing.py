"""Black-Scholes prices (r = 0) and implied-volatility inversion."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, special

__all__ = [
    "InversionError",
    "IVMethod",
    "IVQuote",
    "bs_call",
    "bs_put",
    "bs_price",
    "bs_atm_call",
    "log_bs_otm",
    "erf_inv",
    "erf_inv_series",
    "implied_vol",
    "atm_iv_series",
]

_SQRT2 = math.sqrt(2.0)
_SQRT_PI_2 = math.sqrt(math.pi / 2.0)


class InversionError(ValueError):
    """Price outside the no-arbitrage band; no implied volatility exists."""


class IVMethod(str, enum.Enum):
    ROOT_FIND = "root_find"
    ATM_SERIES = "atm_series"


@dataclass(frozen=True)
class IVQuote:
    maturity: float
    strike: float
    spot: float
    price: float
    implied_vol: float
    method: IVMethod
    residual: float

    def as_row(self) -> dict:
        return {
            "T": self.maturity,
            "K": self.strike,
            "s0": self.spot,
            "price": self.price,
            "implied_vol": self.implied_vol,
            "method": self.method.value,
            "residual": self.residual,
        }


def _d12(T, K, s0, sigma):
    v = sigma * np.sqrt(T)
    d1 = (np.log(s0 / K) + 0.5 * v * v) / v
    return d1, d1 - v


def bs_call(T, K, s0, sigma):
    """Black-Scholes call with zero rate; broadcasts over arrays."""
    T, K, s0, sigma = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (T, K, s0, sigma)))
    intrinsic = np.maximum(s0 - K, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        d1, d2 = _d12(T, K, s0, sigma)
        price = s0 * special.ndtr(d1) - K * special.ndtr(d2)
    price = np.where(sigma * np.sqrt(T) > 0, price, intrinsic)
    price = np.where(np.isinf(sigma), s0, price)
    return float(price) if price.ndim == 0 else price


def bs_put(T, K, s0, sigma):
    T, K, s0, sigma = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (T, K, s0, sigma)))
    intrinsic = np.maximum(K - s0, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        d1, d2 = _d12(T, K, s0, sigma)
        price = K * special.ndtr(-d2) - s0 * special.ndtr(-d1)
    price = np.where(sigma * np.sqrt(T) > 0, price, intrinsic)
    price = np.where(np.isinf(sigma), K, price)
    return float(price) if price.ndim == 0 else price


def bs_price(T, K, s0, sigma, kind: str = "call"):
    if kind == "call":
        return bs_call(T, K, s0, sigma)
    if kind == "put":
        return bs_put(T, K, s0, sigma)
    raise ValueError(f"option kind must be 'call' or 'put', got {kind!r}")


def bs_atm_call(T, s0, sigma):
    """At-the-money call ``s0 * erf(sigma sqrt(T) / (2 sqrt 2))``."""
    return s0 * special.erf(np.asarray(sigma) * np.sqrt(T) / (2.0 * _SQRT2))


def _mills(x):
    # Phi(-x) / phi(x), accurate for large positive x
    return special.erfcx(np.asarray(x) / _SQRT2) * _SQRT_PI_2


def log_bs_otm(k, v):
    """Log of the normalized out-of-the-money price, ``log(price / s0)``.

    ``k = log(K / s0)`` and ``v`` is the total standard deviation
    ``sigma sqrt(T)``. For ``k > 0`` this is the call, for ``k < 0`` the put
    divided by ``s0``. Stays finite where the price underflows.
    """
    k, v = np.broadcast_arrays(np.asarray(k, dtype=float), np.asarray(v, dtype=float))
    with np.errstate(divide="ignore", invalid="ignore"):
        ak = np.abs(k)
        # for k < 0 the put/s0 equals (K/s0) * call(s0^2/K)/(s0^2/K) ... use symmetry:
        # put(k)/s0 = e^{k} * call(-k)/s0
        x1 = ak / v - 0.5 * v  # -d1 for the call at |k|
        x2 = x1 + v  # -d2
        log_phi = -0.5 * x1 * x1 - 0.5 * math.log(2 * math.pi)
        diff = _mills(x1) - _mills(x2)
        small = x1 < 3.0
        direct = special.ndtr(-x1) - np.exp(ak) * special.ndtr(-x2)
        out = np.where(small, np.log(np.where(small, direct, 1.0)), log_phi + np.log(diff))
        out = np.where(k < 0, out + k, out)
        out = np.where(v > 0, out, -np.inf)
    return float(out) if out.ndim == 0 else out


def erf_inv_series(z, terms: int = 3):
    """Maclaurin series of the inverse error function truncated to ``terms`` terms."""
    coeffs = _erfinv_coefficients(terms)
    z = np.asarray(z, dtype=float)
    u = math.sqrt(math.pi) / 2.0 * z
    total = np.zeros_like(u)
    for k, c in enumerate(coeffs):
        total = total + c / (2 * k + 1) * u ** (2 * k + 1)
    return float(total) if total.ndim == 0 else total


def _erfinv_coefficients(n: int) -> list[float]:
    c = [1.0]
    for k in range(1, n):
        c.append(sum(c[m] * c[k - 1 - m] / ((m + 1) * (2 * m + 1)) for m in range(k)))
    return c


def erf_inv(z):
    """Inverse error function on ``(-1, 1)``, Newton-polished against ``erf``."""
    z = np.asarray(z, dtype=float)
    if np.any(np.abs(z) >= 1.0) or np.any(~np.isfinite(z)):
        raise ValueError("erf_inv requires |z| < 1")
    x = np.where(np.abs(z) < 0.05, erf_inv_series(z, 8), special.erfinv(z))
    for _ in range(2):
        err = special.erf(x) - z
        x = x - err / (2.0 / math.sqrt(math.pi) * np.exp(-x * x))
    return float(x) if x.ndim == 0 else x


def atm_iv_series(price: float, T: float, s0: float, terms: int = 2) -> float:
    """Truncated ATM expansion ``sqrt(2 pi / T) [c + pi c^3 / 12 + ...]`` with ``c = price / s0``."""
    c = price / s0
    return 2.0 * _SQRT2 / math.sqrt(T) * erf_inv_series(c, terms)


def _check_band(price: float, K: float, s0: float) -> None:
    lower = max(s0 - K, 0.0)
    if not price > lower:
        raise InversionError(f"price {price!r} not above intrinsic value {lower!r}")
    if not price < s0:
        raise InversionError(f"price {price!r} not below spot {s0!r}")


def implied_vol(
    price: float,
    T: float,
    K: float,
    s0: float,
    method: IVMethod | str = IVMethod.ROOT_FIND,
    kind: str = "call",
    log_price: float | None = None,
) -> IVQuote:
    """Annualized implied volatility of a call (or put) price.

    ``log_price`` may be supplied instead of an underflowing ``price`` for
    far out-of-the-money quotes; it is the log of the out-of-the-money option
    price (call for ``K > s0``, put for ``K < s0``).
    """
    method = IVMethod(method)
    if T <= 0 or K <= 0 or s0 <= 0:
        raise ValueError("T, K and s0 must be positive")
    if kind == "put" and log_price is None:
        price = price + s0 - K
        kind = "call"
    if log_price is None:
        _check_band(price, K, s0)

    if method is IVMethod.ATM_SERIES:
        if not math.isclose(K, s0, rel_tol=0, abs_tol=1e-15 * s0):
            raise ValueError("atm_series requires K == s0")
        sigma = 2.0 * _SQRT2 / math.sqrt(T) * erf_inv(price / s0)
        return IVQuote(T, K, s0, price, sigma, method, abs(bs_call(T, K, s0, sigma) - price))

    k = math.log(K / s0)
    if log_price is not None:
        target = log_price - math.log(s0)
        if k == 0.0 or not np.isfinite(target):
            raise InversionError("log_price inversion needs K != s0 and a finite log price")
    elif k > 0:
        target = math.log(price / s0)
    elif k < 0:
        target = math.log((price - (s0 - K)) / s0)  # out-of-the-money put
        if not np.isfinite(target):
            raise InversionError("put value underflows; supply log_price")
    else:
        target = None

    if target is None:
        # at the money: the price is monotone in v with no cancellation
        def f(v):
            return float(bs_atm_call(1.0, s0, v)) - price
    else:
        def f(v):
            return float(log_bs_otm(k, v)) - target

    lo, hi = 1e-3, 1.0
    while f(lo) > 0:
        lo *= 0.5
        if lo < 1e-300:
            raise InversionError("implied volatility below representable range")
    while f(hi) < 0:
        hi *= 2.0
        if hi > 1e3:
            raise InversionError("implied volatility above representable range")
    v = optimize.brentq(f, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    sigma = v / math.sqrt(T)
    if log_price is not None:
        residual = abs(math.expm1(float(log_bs_otm(k, v)) - target)) * math.exp(log_price)
        return IVQuote(T, K, s0, math.exp(log_price), sigma, method, residual)
    residual = abs(bs_call(T, K, s0, sigma) - price)
    return IVQuote(T, K, s0, price, sigma, method, residual)
