"""Karhunen-Loeve spectrum by symmetric Nystrom discretization.

The covariance operator on ``[0, T]`` is discretized with the trapezoidal
rule on a uniform grid; the symmetric matrix ``W^1/2 K W^1/2`` is
eigen-decomposed and a ladder of doubling grids is combined by generalized
Richardson extrapolation.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg as sla
from scipy import special

from .kernels import CovarianceKernel, KernelKind, gram_matrix, mean_eval

__all__ = [
    "KernelError",
    "IllConditionedSpectrumError",
    "KLSpectrum",
    "SpectralConstants",
    "trapezoid_grid",
    "nystrom_spectrum",
    "richardson_refine",
    "solve_spectrum",
    "group_multiplicities",
    "delta_projections",
    "spectral_constants",
    "error_exponents",
]

DEFAULT_GROUP_TOL = 1e-7


class KernelError(ValueError):
    """The discretized covariance is not positive semidefinite."""


class IllConditionedSpectrumError(ValueError):
    """The spectral gap between the top eigenvalue and the next one vanishes."""


@dataclass(frozen=True)
class KLSpectrum:
    kernel: CovarianceKernel
    horizon: float
    eigenvalues: np.ndarray
    distinct_values: np.ndarray
    multiplicities: np.ndarray
    grid: np.ndarray
    weights: np.ndarray
    eigvec_samples: np.ndarray
    trace: float
    tail_mass: float
    grid_sizes_used: tuple[int, ...]
    error_estimate: np.ndarray | None = None
    shrunk: bool = False

    @property
    def n_keep(self) -> int:
        return int(self.eigenvalues.size)

    @property
    def lambda1(self) -> float:
        return float(self.eigenvalues[0])

    def to_rows(self) -> list[dict]:
        """One row per retained eigenvalue, with its group index (1-based)."""
        group = np.repeat(np.arange(1, self.multiplicities.size + 1), self.multiplicities)
        rows = []
        for i, lam in enumerate(self.eigenvalues):
            g = int(group[i])
            rows.append(
                {
                    "index": i + 1,
                    "lambda": float(lam),
                    "rho_group": g,
                    "multiplicity": int(self.multiplicities[g - 1]),
                    "error_estimate": (
                        float(self.error_estimate[i]) if self.error_estimate is not None else float("nan")
                    ),
                }
            )
        return rows


@dataclass(frozen=True)
class SpectralConstants:
    """Constants built from the spectrum at ``T = 1`` (optionally sigma-scaled).

    ``product_term`` is the infinite product over the distinct eigenvalues
    ``rho_k, k >= 2`` of ``(lambda1 / (lambda1 - rho_k))**(n_k / 2)``.
    """

    hurst: float
    lambda1: float
    n1: int
    product_term: float
    log_product: float
    product_A_tilde: float
    const_C_centered: float
    delta_n: np.ndarray
    delta: float
    s_mean: float
    const_C_noncentered: float | None
    truncation_index: int
    tail_bound: float
    sigma_scale: float = 1.0
    rho: np.ndarray = field(default_factory=lambda: np.empty(0))
    multiplicities: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=int))

    @property
    def centered(self) -> bool:
        return self.const_C_noncentered is None

    def as_dict(self) -> dict:
        return {
            "hurst": self.hurst,
            "sigma_scale": self.sigma_scale,
            "lambda1": self.lambda1,
            "n1": self.n1,
            "product_term": self.product_term,
            "product_A_tilde": self.product_A_tilde,
            "const_C_centered": self.const_C_centered,
            "delta": self.delta,
            "s_mean": self.s_mean,
            "const_C_noncentered": self.const_C_noncentered,
            "truncation_index": self.truncation_index,
            "tail_bound": self.tail_bound,
        }


def trapezoid_grid(T: float, grid_size: int) -> tuple[np.ndarray, np.ndarray]:
    """Uniform grid ``t_0 = 0, ..., t_N = T`` and trapezoidal weights."""
    t = np.linspace(0.0, T, grid_size + 1)
    w = np.full(grid_size + 1, T / grid_size)
    w[0] *= 0.5
    w[-1] *= 0.5
    return t, w


def error_exponents(kernel: CovarianceKernel, count: int) -> list[float]:
    """Exponents of ``h`` in the trapezoidal Nystrom error expansion.

    The diagonal and ``t = 0`` singularities contribute ``h**(2H+1)``,
    ``h**(2H+2)`` next to the smooth ``h**2, h**4`` terms.
    """
    H = kernel.hurst
    if kernel.kind is KernelKind.BROWNIAN or H == 0.5:
        base = [2.0, 4.0, 6.0, 8.0]
    else:
        base = [2.0, 2 * H + 1, 2 * H + 2, 4.0, 2 * H + 3]
    exps = sorted({round(p, 12) for p in base})
    return exps[:count]


def nystrom_spectrum(
    kernel: CovarianceKernel,
    T: float,
    grid_size: int,
    n_keep: int,
    rel_tol: float = DEFAULT_GROUP_TOL,
) -> KLSpectrum:
    """Top ``n_keep`` eigenpairs of the trapezoidal Nystrom discretization."""
    if T <= 0:
        raise ValueError("horizon T must be positive")
    if n_keep < 1 or grid_size < 2 * n_keep:
        raise ValueError(f"grid_size ({grid_size}) must be >= 2 * n_keep ({n_keep})")
    t, w = trapezoid_grid(T, grid_size)
    sw = np.sqrt(w)
    A = gram_matrix(kernel, t)
    A *= sw[:, None]
    A *= sw[None, :]
    trace = float(np.trace(A))
    _check_psd(A, trace)

    n = A.shape[0]
    vals, vecs = sla.eigh(A, subset_by_index=[n - n_keep, n - 1], overwrite_a=True, driver="evr")
    vals = vals[::-1]
    vecs = vecs[:, ::-1]
    shrunk = False
    positive = vals > trace * 1e-14
    if not np.all(positive):
        keep = int(np.argmin(positive))
        warnings.warn(f"only {keep} positive eigenvalues; n_keep shrunk from {n_keep}", stacklevel=2)
        vals, vecs = vals[:keep], vecs[:, :keep]
        shrunk = True
    # L2-normalized eigenfunction samples: sum_i w_i e_n(t_i) e_m(t_i) = delta_nm
    with np.errstate(divide="ignore", invalid="ignore"):
        efun = vecs / sw[:, None]
    distinct, mult = group_multiplicities(vals, rel_tol)
    return KLSpectrum(
        kernel=kernel,
        horizon=float(T),
        eigenvalues=vals,
        distinct_values=distinct,
        multiplicities=mult,
        grid=t,
        weights=w,
        eigvec_samples=efun,
        trace=trace,
        tail_mass=trace - float(vals.sum()),
        grid_sizes_used=(grid_size,),
        shrunk=shrunk,
    )


def _check_psd(A: np.ndarray, trace: float) -> None:
    n = A.shape[0]
    jitter = n * np.finfo(float).eps * trace
    try:
        sla.cholesky(A + jitter * np.eye(n), lower=True, check_finite=False)
    except sla.LinAlgError:
        raise KernelError("discretized covariance is not positive semidefinite") from None


def richardson_refine(
    spectra: list[KLSpectrum],
    exponents: list[float] | None = None,
    rel_tol: float = DEFAULT_GROUP_TOL,
) -> KLSpectrum:
    """Extrapolate eigenvalues and trace over a ladder of doubling grids.

    Fits ``lam(h) = lam + sum_j c_j h**p_j`` through the ladder levels using
    the first ``levels - 1`` exponents; eigenfunction samples come from the
    finest level.
    """
    if len(spectra) < 2:
        raise ValueError("Richardson extrapolation needs at least two ladder levels")
    first = spectra[0]
    for sp in spectra[1:]:
        if sp.kernel != first.kernel or sp.horizon != first.horizon:
            raise ValueError("ladder levels must share kernel and horizon")
    spectra = sorted(spectra, key=lambda sp: sp.grid_sizes_used[-1])
    sizes = [sp.grid_sizes_used[-1] for sp in spectra]
    ratios = {sizes[i + 1] / sizes[i] for i in range(len(sizes) - 1)}
    if len(ratios) != 1 or min(ratios) <= 1:
        raise ValueError(f"grid sizes must form a geometric progression: {sizes}")
    m = min(sp.eigenvalues.size for sp in spectra)
    if exponents is None:
        exponents = error_exponents(first.kernel, len(spectra) - 1)
    if len(exponents) < len(spectra) - 1:
        raise ValueError("not enough error exponents for the ladder")
    exponents = list(exponents)[: len(spectra) - 1]

    h = np.array([first.horizon / n for n in sizes])
    # scale h so the Vandermonde-type system stays well conditioned
    hs = h / h[0]
    M = np.column_stack([np.ones_like(hs)] + [hs**p for p in exponents])
    vals = np.array([sp.eigenvalues[:m] for sp in spectra])
    traces = np.array([sp.trace for sp in spectra])
    sol = np.linalg.solve(M, np.column_stack([vals, traces]))
    lam = sol[0, :m]
    trace = float(sol[0, m])
    order = np.argsort(-lam, kind="stable")
    lam = lam[order]
    err = np.abs(vals[-1] - vals[-2])[order]

    finest = spectra[-1]
    distinct, mult = group_multiplicities(lam, rel_tol)
    return replace(
        finest,
        eigenvalues=lam,
        distinct_values=distinct,
        multiplicities=mult,
        eigvec_samples=finest.eigvec_samples[:, :m][:, order],
        trace=trace,
        tail_mass=trace - float(lam.sum()),
        grid_sizes_used=tuple(sizes),
        error_estimate=err,
        shrunk=any(sp.shrunk for sp in spectra),
    )


def solve_spectrum(
    kernel: CovarianceKernel,
    T: float = 1.0,
    ladder: tuple[int, ...] = (256, 512, 1024),
    n_keep: int = 64,
    rel_tol: float = DEFAULT_GROUP_TOL,
) -> KLSpectrum:
    """Nystrom ladder followed by Richardson extrapolation."""
    levels = [nystrom_spectrum(kernel, T, n, n_keep, rel_tol) for n in ladder]
    if len(levels) == 1:
        return levels[0]
    return richardson_refine(levels, rel_tol=rel_tol)


def group_multiplicities(eigenvalues, rel_tol: float = DEFAULT_GROUP_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Merge contiguous near-equal eigenvalues into distinct values with multiplicities."""
    lam = np.asarray(eigenvalues, dtype=float)
    if lam.size == 0:
        return np.empty(0), np.empty(0, dtype=int)
    distinct: list[float] = []
    counts: list[int] = []
    members: list[float] = []
    for v in lam:
        if members and abs(members[0] - v) <= rel_tol * abs(members[0]):
            members.append(v)
            continue
        if members:
            distinct.append(float(np.mean(members)))
            counts.append(len(members))
        members = [v]
    distinct.append(float(np.mean(members)))
    counts.append(len(members))
    return np.array(distinct), np.array(counts, dtype=int)


def delta_projections(
    spectrum: KLSpectrum, kernel: CovarianceKernel | None = None
) -> tuple[np.ndarray, float, float]:
    """Projections ``delta_n`` of the mean on the eigenfunctions, ``delta`` and ``s``.

    Returns ``(delta_n, delta, s)`` with ``s = int_0^T m(t)**2 dt`` in closed form.
    """
    kernel = kernel or spectrum.kernel
    if kernel.hurst != spectrum.kernel.hurst:
        raise ValueError("kernel and spectrum disagree on H")
    T = spectrum.horizon
    H = kernel.hurst
    s = kernel.mean_coeff**2 * T ** (2 * H + 1) / (2 * H + 1)
    n_all = spectrum.eigenvalues.size
    if kernel.centered:
        return np.zeros(n_all), 0.0, 0.0
    m = np.asarray(mean_eval(kernel, spectrum.grid))
    efun = np.nan_to_num(spectrum.eigvec_samples)
    d_n = (spectrum.weights * m) @ efun
    n1 = int(spectrum.multiplicities[0])
    delta = float(np.sum(d_n[:n1] ** 2) / spectrum.eigenvalues[0])
    return d_n, delta, float(s)


def spectral_constants(
    spectrum: KLSpectrum,
    deltas: tuple[np.ndarray, float, float] | None = None,
    sigma: float = 1.0,
    gap_tol: float = 1e-6,
) -> SpectralConstants:
    """Asymptotic constants from a ``T = 1`` spectrum.

    The infinite product is truncated at the retained eigenvalues; the
    discarded factors contribute ``-sum (1/2) log(1 - rho_k / lambda1)``,
    which is approximated by ``tail_mass / (2 lambda1)`` and bounded by
    ``tail_mass * rho_next / (2 lambda1 (lambda1 - rho_next))``.
    """
    if spectrum.horizon != 1.0:
        raise ValueError("spectral constants are defined from the T = 1 spectrum")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if deltas is None:
        deltas = delta_projections(spectrum)
    d_n, _, s = deltas
    scale2 = sigma * sigma
    rho = spectrum.distinct_values * scale2
    mult = spectrum.multiplicities
    lam1 = float(rho[0])
    n1 = int(mult[0])
    tail_mass = max(spectrum.tail_mass, 0.0) * scale2
    if rho.size > 1 and (lam1 - rho[1]) <= gap_tol * lam1:
        raise IllConditionedSpectrumError(
            f"lambda1 - rho2 = {lam1 - rho[1]:.3e} below tolerance; multiplicity detection failed?"
        )

    terms = 0.5 * mult[1:] * -np.log1p(-rho[1:] / lam1)
    # partial products are nondecreasing in the truncation index
    log_prod = float(np.sum(terms)) + 0.5 * tail_mass / lam1
    rho_next = float(rho[-1]) if rho.size > 1 else 0.0
    tail_bound = 0.5 * tail_mass * rho_next / (lam1 * (lam1 - rho_next)) if rho_next else 0.0
    product = math.exp(log_prod)

    gamma = special.gamma(n1 / 2)
    C_centered = product / (2 ** (n1 / 2) * gamma * lam1 ** (n1 / 2))
    A_tilde = 2 ** (1 - n1 / 2) / gamma * lam1 ** (-n1 / 2) * product

    d_scaled = np.asarray(d_n, dtype=float) * sigma
    s_scaled = s * scale2
    C_nc = None
    delta = 0.0
    if np.any(d_scaled != 0.0):
        top = float(np.sum(d_scaled[:n1] ** 2))
        delta = top / lam1
        bounds = np.concatenate([[0], np.cumsum(mult)])
        group_sums = np.array(
            [np.sum(d_scaled[bounds[k] : bounds[k + 1]] ** 2) for k in range(1, mult.size)]
        )
        exp_sum = 0.5 * float(np.sum(group_sums / (lam1 - rho[1:])))
        A = product * math.exp(exp_sum)
        total = float(np.sum(d_scaled**2))
        C_nc = (
            A
            / (2 * math.sqrt(2 * math.pi))
            * lam1**-0.5
            * top ** (-(n1 - 1) / 4)
            * math.exp((s_scaled - total - top) / (2 * lam1))
        )
    return SpectralConstants(
        hurst=spectrum.kernel.hurst,
        lambda1=lam1,
        n1=n1,
        product_term=product,
        log_product=log_prod,
        product_A_tilde=A_tilde,
        const_C_centered=C_centered,
        delta_n=d_scaled,
        delta=delta,
        s_mean=s_scaled,
        const_C_noncentered=C_nc,
        truncation_index=int(rho.size),
        tail_bound=tail_bound,
        sigma_scale=sigma,
        rho=rho,
        multiplicities=mult,
    )
