"""Self-similar Gaussian covariance kernels and mean functions.

All kernels are normalized so that ``K(1, 1) = 1``; the overall volatility
magnitude is carried by a separate scale parameter.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special

__all__ = [
    "KernelKind",
    "CovarianceKernel",
    "kernel_eval",
    "mean_eval",
    "gram_matrix",
    "self_similarity_check",
    "mean_abs_vol",
]

# relative accuracy targeted by the Riemann-Liouville quadrature
RL_QUAD_TOL = 1e-10

_N_JACOBI = 24
_N_LOG_PANEL = 40
_CHUNK = 1 << 15


class KernelKind(str, enum.Enum):
    BROWNIAN = "bm"
    FBM = "fbm"
    RIEMANN_LIOUVILLE = "rl"

    @classmethod
    def parse(cls, value: str | KernelKind) -> KernelKind:
        if isinstance(value, cls):
            return value
        aliases = {
            "bm": cls.BROWNIAN,
            "brownian": cls.BROWNIAN,
            "brownianmotion": cls.BROWNIAN,
            "fbm": cls.FBM,
            "fractionalbm": cls.FBM,
            "rl": cls.RIEMANN_LIOUVILLE,
            "rlfbm": cls.RIEMANN_LIOUVILLE,
            "riemannliouville": cls.RIEMANN_LIOUVILLE,
            "riemannliouvillefbm": cls.RIEMANN_LIOUVILLE,
        }
        key = str(value).lower().replace("-", "").replace("_", "").replace(" ", "")
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown kernel kind {value!r}") from None


@dataclass(frozen=True)
class CovarianceKernel:
    """Covariance and mean of an H-self-similar Gaussian volatility process.

    Parameters
    ----------
    kind : KernelKind
        Brownian motion, fractional Brownian motion or Riemann-Liouville fBm.
    hurst : float
        Self-similarity index in (0, 1). Forced to 1/2 for Brownian motion.
    mean_coeff : float
        Coefficient ``m1 >= 0`` of the mean function ``m(t) = m1 * t**H``.
    """

    kind: KernelKind = KernelKind.FBM
    hurst: float = 0.5
    mean_coeff: float = 0.0

    def __post_init__(self) -> None:
        kind = KernelKind.parse(self.kind)
        object.__setattr__(self, "kind", kind)
        hurst = float(self.hurst)
        if kind is KernelKind.BROWNIAN:
            hurst = 0.5
        if not 0.0 < hurst < 1.0:
            raise ValueError(f"hurst out of (0,1): {self.hurst}")
        if self.mean_coeff < 0.0 or not math.isfinite(self.mean_coeff):
            raise ValueError(f"mean_coeff must be finite and >= 0: {self.mean_coeff}")
        object.__setattr__(self, "hurst", hurst)
        object.__setattr__(self, "mean_coeff", float(self.mean_coeff))

    @property
    def centered(self) -> bool:
        return self.mean_coeff == 0.0

    def __call__(self, t, s):
        return kernel_eval(self, t, s)

    def mean(self, t):
        return mean_eval(self, t)

    def variance_trace(self, T: float = 1.0) -> float:
        """Exact ``int_0^T K(s,s) ds = T**(2H+1) / (2H+1)``."""
        H = self.hurst
        return T ** (2 * H + 1) / (2 * H + 1)

    def describe(self) -> dict:
        return {"kind": self.kind.value, "hurst": self.hurst, "mean_coeff": self.mean_coeff}


def _check_times(*arrays: np.ndarray) -> None:
    for a in arrays:
        if np.any(a < 0) or np.any(~np.isfinite(a)):
            raise ValueError("kernel arguments must be finite non-negative times")


def kernel_eval(kernel: CovarianceKernel, t, s):
    """Evaluate the covariance ``K(t, s)``; broadcasts over array inputs."""
    t_arr = np.asarray(t, dtype=float)
    s_arr = np.asarray(s, dtype=float)
    _check_times(t_arr, s_arr)
    t_arr, s_arr = np.broadcast_arrays(t_arr, s_arr)
    H = kernel.hurst
    if kernel.kind is KernelKind.BROWNIAN:
        out = np.minimum(t_arr, s_arr)
    elif kernel.kind is KernelKind.FBM:
        out = 0.5 * (t_arr ** (2 * H) + s_arr ** (2 * H) - np.abs(t_arr - s_arr) ** (2 * H))
    else:
        out = _rl_covariance(H, t_arr, s_arr)
    if out.ndim == 0:
        return float(out)
    return out


def mean_eval(kernel: CovarianceKernel, t):
    t_arr = np.asarray(t, dtype=float)
    _check_times(t_arr)
    out = kernel.mean_coeff * t_arr ** kernel.hurst
    if out.ndim == 0:
        return float(out)
    return out


def gram_matrix(kernel: CovarianceKernel, grid) -> np.ndarray:
    """Covariance matrix of the process sampled on ``grid``."""
    g = np.asarray(grid, dtype=float)
    if kernel.kind is KernelKind.RIEMANN_LIOUVILLE:
        # evaluate the upper triangle only and mirror it
        n = g.size
        iu = np.triu_indices(n)
        vals = kernel_eval(kernel, g[iu[0]], g[iu[1]])
        out = np.empty((n, n))
        out[iu] = vals
        out[(iu[1], iu[0])] = vals
        return out
    return kernel_eval(kernel, g[:, None], g[None, :])


@lru_cache(maxsize=16)
def _jacobi_rule(alpha: float) -> tuple[np.ndarray, np.ndarray]:
    # nodes/weights for int_0^1 w**alpha f(w) dw
    x, w = special.roots_jacobi(_N_JACOBI, 0.0, alpha)
    return (x + 1.0) / 2.0, w / 2.0 ** (alpha + 1.0)


@lru_cache(maxsize=1)
def _legendre_rule() -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(_N_LOG_PANEL)
    return (x + 1.0) / 2.0, w / 2.0


def _rl_covariance(H: float, t: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Normalized Riemann-Liouville covariance.

    With ``m = min(t, s)`` and ``d = |t - s|`` the raw covariance is
    ``int_0^m v**a (d + v)**a dv`` with ``a = H - 1/2``; normalization by
    ``2H`` gives ``K(1, 1) = 1``.
    """
    flat_t = t.ravel()
    flat_s = s.ravel()
    out = np.empty(flat_t.size)
    for start in range(0, flat_t.size, _CHUNK):
        sl = slice(start, start + _CHUNK)
        out[sl] = _rl_raw(H, flat_t[sl], flat_s[sl])
    return (2.0 * H * out).reshape(t.shape)


def _rl_raw(H: float, t: np.ndarray, s: np.ndarray) -> np.ndarray:
    a = H - 0.5
    m = np.minimum(t, s)
    d = np.abs(t - s)
    out = np.zeros_like(m)

    diag = (d == 0.0) & (m > 0.0)
    out[diag] = m[diag] ** (2 * H) / (2 * H)

    off = (d > 0.0) & (m > 0.0)
    if not np.any(off):
        return out
    mo, do = m[off], d[off]
    # panel [0, min(d, m)]: v = b*w, weight w**a absorbed by Gauss-Jacobi
    b = np.minimum(do, mo)
    xj, wj = _jacobi_rule(a)
    vals = b[:, None] ** (a + 1.0) * ((do[:, None] + b[:, None] * xj) ** a) @ wj
    # panel [d, m] when m > d: v = d * exp(u), smooth in u
    far = mo > do
    if np.any(far):
        dm, mm = do[far], mo[far]
        span = np.log(mm / dm)
        xl, wl = _legendre_rule()
        u = span[:, None] * xl
        v = dm[:, None] * np.exp(u)
        integrand = v ** (a + 1.0) * (dm[:, None] + v) ** a
        vals[far] += span * (integrand @ wl)
    out[off] = vals
    return out


def self_similarity_check(
    kernel: CovarianceKernel, a: float, grid, floor: float = 1e-300
) -> float:
    """Max relative deviation of ``K(a t, a s)`` from ``a**(2H) K(t, s)`` on grid pairs."""
    if a <= 0:
        raise ValueError("scaling factor must be positive")
    g = np.asarray(grid, dtype=float)
    _check_times(g)
    tt, ss = np.meshgrid(g, g, indexing="ij")
    scaled = np.asarray(kernel_eval(kernel, a * tt, a * ss))
    ref = a ** (2 * kernel.hurst) * np.asarray(kernel_eval(kernel, tt, ss))
    dev = np.abs(scaled - ref) / (np.abs(ref) + floor)
    return float(dev.max()) if dev.size else 0.0


def mean_abs_vol(sigma_scale: float, H: float, t: float) -> float:
    """``E[sigma |X_t|] = sigma t**H sqrt(2/pi)`` for a kernel with ``Var X_1 = 1``."""
    if sigma_scale <= 0 or t <= 0:
        raise ValueError("sigma_scale and t must be positive")
    return sigma_scale * t**H * math.sqrt(2.0 / math.pi)
