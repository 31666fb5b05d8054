"""INI-style model configuration with strict validation.

Example::

    [model]
    kernel = fbm
    hurst = 0.6
    sigma_scale = 3
    s0 = 1
    r = 0

    [mc]
    n_paths = 100000
    n_steps = 512
    seed = 20240101
"""

from __future__ import annotations

import configparser
import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .kernels import CovarianceKernel, KernelKind

__all__ = ["ConfigError", "ModelConfig", "load_config", "parse_config", "SCHEMA"]


class ConfigError(ValueError):
    """Malformed or invalid configuration."""


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.replace(";", ",").split(",") if x.strip())


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.replace(";", ",").split(",") if x.strip())


# section -> key -> (field name, parser)
SCHEMA = {
    "model": {
        "kernel": ("kernel", str),
        "hurst": ("hurst", float),
        "mean_coeff": ("mean_coeff", float),
        "sigma_scale": ("sigma_scale", float),
        "s0": ("s0", float),
        "r": ("r", float),
    },
    "grid": {
        "maturities": ("maturities", _floats),
        "maturities_days": ("maturities_days", _floats),
        "strikes": ("strikes", _floats),
    },
    "mc": {
        "n_paths": ("n_paths", int),
        "n_steps": ("n_steps", int),
        "seed": ("seed", int),
    },
    "spectrum": {
        "ladder": ("ladder", _ints),
        "n_keep": ("n_keep", int),
        "rel_tol": ("rel_tol", float),
        "horizon": ("horizon", float),
    },
    "calibration": {
        "hursts": ("hursts", _floats),
        "t_days": ("t_days", _floats),
        "tol": ("tol", float),
        "moments": ("moments", str),
        "t0_max_days": ("t0_max_days", float),
        "t0_step_days": ("t0_step_days", float),
    },
    "output": {
        "out_dir": ("out_dir", str),
    },
}


@dataclass(frozen=True)
class ModelConfig:
    kernel: str = "fbm"
    hurst: float = 0.6
    mean_coeff: float = 0.0
    sigma_scale: float = 3.0
    s0: float = 1.0
    r: float = 0.0
    maturities: tuple = ()
    maturities_days: tuple = (1.0, 2.0, 7.0, 14.0)
    strikes: tuple = (1.0,)
    n_paths: int = 100_000
    n_steps: int = 512
    seed: int = 20240101
    ladder: tuple = (256, 512, 1024)
    n_keep: int = 64
    rel_tol: float = 1e-7
    horizon: float = 1.0
    hursts: tuple = (0.50, 0.51, 0.55, 0.60, 0.75, 0.85)
    t_days: tuple = (1.0, 2.0, 7.0, 14.0)
    tol: float = 0.01
    moments: str = "mc"
    t0_max_days: float = 30.0
    t0_step_days: float = 0.25
    out_dir: str = "out"
    source: str | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        try:
            KernelKind.parse(self.kernel)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if not 0.0 < self.hurst < 1.0:
            raise ConfigError(f"hurst out of (0,1): {self.hurst}")
        if self.mean_coeff < 0:
            raise ConfigError("mean_coeff must be >= 0")
        if not self.sigma_scale > 0:
            raise ConfigError("sigma_scale must be positive")
        if not self.s0 > 0:
            raise ConfigError("s0 must be positive")
        for name in ("maturities", "maturities_days", "t_days"):
            vals = getattr(self, name)
            if any(v <= 0 for v in vals):
                raise ConfigError(f"{name} must be positive")
            if any(b <= a for a, b in zip(vals, vals[1:])):
                raise ConfigError(f"{name} must be strictly ascending")
        if any(k <= 0 for k in self.strikes):
            raise ConfigError("strikes must be positive")
        if self.n_paths < 2 or self.n_steps < 2:
            raise ConfigError("n_paths and n_steps must be >= 2")
        if self.n_steps > 4096:
            raise ConfigError("n_steps above 4096 is not supported by the dense sampler")
        if len(self.ladder) < 2 or any(b != 2 * a for a, b in zip(self.ladder, self.ladder[1:])):
            raise ConfigError("spectrum ladder must hold at least two doubling grid sizes")
        if self.n_keep < 1 or 2 * self.n_keep > self.ladder[0]:
            raise ConfigError("n_keep must satisfy 1 <= n_keep <= smallest ladder size / 2")
        if any(not 0 < h < 1 for h in self.hursts):
            raise ConfigError("hurst out of (0,1) in calibration.hursts")
        if self.moments not in ("mc", "exact"):
            raise ConfigError("calibration.moments must be 'mc' or 'exact'")
        if not 0 < self.tol < 1:
            raise ConfigError("calibration.tol must lie in (0, 1)")
        if not (self.t0_step_days > 0 and self.t0_max_days >= self.t0_step_days):
            raise ConfigError("t0 grid settings must be positive")

    @property
    def kernel_obj(self) -> CovarianceKernel:
        return CovarianceKernel(self.kernel, self.hurst, self.mean_coeff)

    def maturity_grid(self) -> tuple[float, ...]:
        """Maturities in years; explicit years win over day counts."""
        if self.maturities:
            return tuple(self.maturities)
        return tuple(d / 365.0 for d in self.maturities_days)

    def t0_grid_days(self) -> list[float]:
        n = int(round(self.t0_max_days / self.t0_step_days))
        return [self.t0_step_days * i for i in range(1, n + 1)]

    def require_asymptotic_regime(self, command: str) -> None:
        """Asymptotic and calibration commands need ``r = 0`` and, except for the mixing density, centered volatility."""
        if self.r != 0.0:
            raise ConfigError(
                f"'{command}' requires r = 0: the small-time asymptotics and H estimators are "
                "established for zero rate and centered volatility"
            )

    def as_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d.pop("source")
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in d.items()}

    def config_hash(self) -> str:
        blob = json.dumps(self.as_dict(), sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def replace(self, **changes) -> ModelConfig:
        return dataclasses.replace(self, **changes)


def parse_config(text: str, source: str = "<string>") -> ModelConfig:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str  # keep keys verbatim so typos are caught
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: parse error: {exc}") from None
    values = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"{source}: unknown section [{section}]")
        for key, raw in parser.items(section):
            if key not in SCHEMA[section]:
                raise ConfigError(f"{source}: unknown key '{key}' in [{section}]")
            name, conv = SCHEMA[section][key]
            try:
                values[name] = conv(raw.strip())
            except ValueError:
                raise ConfigError(f"{source}: bad value for {section}.{key}: {raw!r}") from None
    try:
        return ModelConfig(**values, source=source)
    except ConfigError as exc:
        raise ConfigError(f"{source}: {exc}") from None


def load_config(path) -> ModelConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    return parse_config(p.read_text(), source=str(p))
