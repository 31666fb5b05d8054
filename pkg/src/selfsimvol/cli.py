"""Command-line entry point.

Subcommands: spectrum, simulate, price, iv, asym, calibrate, tables, selftest.
Every output file carries the config hash and package version; CSV floats are
written with 17 significant digits and all files are replaced atomically.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import math
import os
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, ModelConfig, load_config

__all__ = ["main", "run_command", "run_selftest", "write_atomic", "fmt_float"]


# ---------------------------------------------------------------------------
# output helpers


def fmt_float(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def write_atomic(path: Path, data: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(rows: list[dict], meta: dict) -> str:
    buf = io.StringIO()
    if not rows:
        return "config_hash,version\n"
    cols = list(rows[0].keys()) + ["config_hash", "version"]
    w = csv.writer(buf, lineterminator="\n", quoting=csv.QUOTE_MINIMAL)
    w.writerow(cols)
    for row in rows:
        vals = [fmt_float(row.get(c)) for c in cols[:-2]] + [meta["config_hash"], meta["version"]]
        w.writerow(vals)
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _json_text(payload: dict, meta: dict, timestamp: bool) -> str:
    metadata = dict(meta)
    if timestamp:
        metadata["created_utc"] = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    return json.dumps(_jsonable({"metadata": metadata, **payload}), indent=2, sort_keys=False) + "\n"


class _Context:
    def __init__(self, cfg: ModelConfig, out_dir: Path, command: str, timestamp: bool):
        self.cfg = cfg
        self.out_dir = out_dir
        self.command = command
        self.timestamp = timestamp
        self.meta = {"version": __version__, "config_hash": cfg.config_hash(), "command": command}
        self.written: list[str] = []

    def csv(self, name: str, rows: list[dict]) -> None:
        write_atomic(self.out_dir / name, _csv_text(rows, self.meta))
        self.written.append(name)

    def json(self, name: str, payload: dict) -> None:
        write_atomic(self.out_dir / name, _json_text(payload, self.meta, self.timestamp))
        self.written.append(name)


def _read_csv(path: str) -> list[dict]:
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    return list(csv.DictReader(lines))


# ---------------------------------------------------------------------------
# subcommands


def _spectrum_for(cfg: ModelConfig, horizon: float | None = None):
    from .spectrum import solve_spectrum

    return solve_spectrum(cfg.kernel_obj, cfg.horizon if horizon is None else horizon, cfg.ladder, cfg.n_keep, cfg.rel_tol)


def _constants_for(cfg: ModelConfig):
    from .spectrum import spectral_constants

    return spectral_constants(_spectrum_for(cfg, 1.0), sigma=cfg.sigma_scale)


def cmd_spectrum(ctx: _Context, args) -> str:
    from .spectrum import spectral_constants

    cfg = ctx.cfg
    spec = _spectrum_for(cfg)
    ctx.csv("spectrum.csv", spec.to_rows())
    payload = {
        "kernel": cfg.kernel_obj.describe(),
        "horizon": spec.horizon,
        "grid_sizes": list(spec.grid_sizes_used),
        "trace": spec.trace,
        "tail_mass": spec.tail_mass,
        "eigenvalues": spec.eigenvalues,
        "multiplicities": spec.multiplicities,
    }
    if spec.horizon == 1.0:
        payload["constants"] = spectral_constants(spec, sigma=cfg.sigma_scale).as_dict()
        payload["constants_unscaled"] = spectral_constants(spec, sigma=1.0).as_dict()
    ctx.json("spectrum.json", payload)
    return f"lambda1={spec.lambda1:.12g} n1={int(spec.multiplicities[0])} trace={spec.trace:.12g}"


def _samples(cfg: ModelConfig, args):
    from .mc import mixing_samples

    return mixing_samples(cfg.kernel_obj, cfg.n_steps, cfg.n_paths, cfg.seed)


def cmd_simulate(ctx: _Context, args) -> str:
    from .mc import estimate_moments

    s = _samples(ctx.cfg, args)
    mom = estimate_moments(s)
    payload = {"samples": s.describe(), "moments": mom}
    if args.dump_samples:
        raw = ctx.out_dir / "samples_Ytilde1.f64"
        raw.parent.mkdir(parents=True, exist_ok=True)
        tmp = raw.with_suffix(".tmp")
        s.samples_Ytilde1.astype("<f8").tofile(tmp)
        os.replace(tmp, raw)
        ctx.written.append(raw.name)
        payload["sample_file"] = {"name": raw.name, "dtype": "float64 little-endian", "count": s.n_paths,
                                  "quantity": "Ytilde_1"}
    ctx.json("simulate.json", payload)
    return f"mu_half={mom['mu_half']:.6g} mu_3half={mom['mu_3half']:.6g} n_paths={s.n_paths}"


def cmd_price(ctx: _Context, args) -> str:
    cfg = ctx.cfg
    rows = []
    if args.method == "asym":
        from .asymptotics import call_asymptotic, put_asymptotic

        cfg.require_asymptotic_regime("price --method asym")
        const = _constants_for(cfg)
        for T in cfg.maturity_grid():
            for K in cfg.strikes:
                if K > cfg.s0:
                    r = call_asymptotic(T, K, const, cfg.s0)
                    kind = "call"
                elif K < cfg.s0:
                    r = put_asymptotic(T, K, const, cfg.s0)
                    kind = "put"
                else:
                    continue
                rows.append({"T": T, "K": K, "kind": kind, "price": r.value, "log_price": r.log_value,
                             "stderr": None, "n_paths": None, "seed": None})
    elif args.method == "mc-tilted":
        from .mc import mixing_price_tilted, quadratic_form

        qf = quadratic_form(cfg.kernel_obj, cfg.n_steps)
        for T in cfg.maturity_grid():
            for K in cfg.strikes:
                if K == cfg.s0:
                    continue
                tp = mixing_price_tilted(qf, T, K, cfg.s0, cfg.sigma_scale, cfg.n_paths, cfg.seed)
                rows.append({"T": T, "K": K, "kind": "call" if K > cfg.s0 else "put", "price": tp.price,
                             "log_price": tp.log_price, "stderr": tp.stderr, "n_paths": cfg.n_paths, "seed": cfg.seed})
    else:
        from .mc import mixing_price

        s = _samples(cfg, args)
        for T in cfg.maturity_grid():
            for K in cfg.strikes:
                p, se = mixing_price(s, T, K, cfg.s0, cfg.sigma_scale, args.kind)
                rows.append({"T": T, "K": K, "kind": args.kind, "price": p,
                             "log_price": math.log(p) if p > 0 else None, "stderr": se,
                             "n_paths": cfg.n_paths, "seed": cfg.seed})
    ctx.csv("prices.csv", rows)
    return f"{len(rows)} prices ({args.method})"


def cmd_iv(ctx: _Context, args) -> str:
    from .pricing import InversionError, implied_vol

    cfg = ctx.cfg
    if not args.input:
        raise ConfigError("iv needs --input CSV with columns T,K,price")
    rows = []
    failures = 0
    for rec in _read_csv(args.input):
        T, K, price = float(rec["T"]), float(rec["K"]), float(rec["price"])
        s0 = float(rec.get("s0") or cfg.s0)
        kind = (rec.get("type") or "call").strip() or "call"
        method = "atm_series" if (args.atm_series and K == s0) else "root_find"
        try:
            q = implied_vol(price, T, K, s0, method=method, kind=kind)
            rows.append({**q.as_row(), "error": ""})
        except InversionError as exc:
            failures += 1
            rows.append({"T": T, "K": K, "s0": s0, "price": price, "implied_vol": None,
                         "method": method, "residual": None, "error": str(exc).replace(",", ";")})
    ctx.csv("ivs.csv", rows)
    return f"{len(rows)} quotes, {failures} outside the no-arbitrage band"


def cmd_asym(ctx: _Context, args) -> str:
    from . import asymptotics as A
    from .mc import (estimate_moments, mixing_price, mixing_price_tilted, mixing_samples,
                     quadratic_form)
    from .pricing import implied_vol

    cfg = ctx.cfg
    cfg.require_asymptotic_regime("asym")
    const = _constants_for(cfg)
    q = args.quantity
    rows = []

    def rel(a, b):
        return (a - b) / b if b else None

    if q in ("call", "put", "iv_otm"):
        qf = quadratic_form(cfg.kernel_obj, cfg.n_steps)
        for T in cfg.maturity_grid():
            for K in cfg.strikes:
                if K == cfg.s0 or (q == "call" and K < cfg.s0) or (q == "put" and K > cfg.s0):
                    continue
                tp = mixing_price_tilted(qf, T, K, cfg.s0, cfg.sigma_scale, cfg.n_paths, cfg.seed)
                if q == "iv_otm":
                    a = A.iv_asymptotic_otm(T, K, const, cfg.s0).value
                    m = implied_vol(0.0, T, K, cfg.s0, log_price=tp.log_price).implied_vol
                    # first-order propagation of the relative price error to the IV
                    k = abs(math.log(K / cfg.s0))
                    se = m * tp.rel_stderr * (m * m * T) / (2 * k) if k else None
                else:
                    fn = A.call_asymptotic if q == "call" else A.put_asymptotic
                    a, m, se = fn(T, K, const, cfg.s0).value, tp.price, tp.stderr
                rows.append({"T": T, "K": K, "quantity": q, "asymptotic_value": a, "mc_value": m,
                             "mc_stderr": se, "rel_error": rel(a, m)})
    elif q in ("atm_call", "atm_iv", "atm_bounds"):
        s = mixing_samples(cfg.kernel_obj, cfg.n_steps, cfg.n_paths, cfg.seed)
        mom = estimate_moments(s)
        coef = A.AsymptoticCoefficients.from_constants(const, cfg.s0, mom["mu_half"], mom["mu_3half"])
        for T in cfg.maturity_grid():
            p, se = mixing_price(s, T, cfg.s0, cfg.s0, cfg.sigma_scale)
            if q == "atm_call":
                a = A.atm_call_expansion(T, coef).value
                rows.append({"T": T, "K": cfg.s0, "quantity": q, "asymptotic_value": a, "mc_value": p,
                             "mc_stderr": se, "rel_error": rel(a, p)})
            elif q == "atm_iv":
                a = A.atm_iv_expansion(T, coef).value
                m = implied_vol(p, T, cfg.s0, cfg.s0, method="atm_series").implied_vol
                rows.append({"T": T, "K": cfg.s0, "quantity": q, "asymptotic_value": a, "mc_value": m,
                             "mc_stderr": m * se / p, "rel_error": rel(a, m)})
            else:
                b = A.atm_bounds(T, s, cfg.s0, cfg.sigma_scale)
                for name, val in (("U1", b.U1), ("U2", b.U2)):
                    rows.append({"T": T, "K": cfg.s0, "quantity": name, "asymptotic_value": val, "mc_value": p,
                                 "mc_stderr": se, "rel_error": rel(val, p)})
    elif q in ("density", "mixing_density"):
        s = mixing_samples(cfg.kernel_obj, cfg.n_steps, cfg.n_paths, cfg.seed)
        from .mc import estimate_density

        for T in cfg.maturity_grid():
            xs = np.asarray(cfg.strikes, dtype=float)
            if q == "density":
                xs = xs[xs != cfg.s0]
                kde = estimate_density(s, xs, "price", T, cfg.s0, cfg.sigma_scale, cfg.seed)
                asy = [A.density_asymptotic(x, T, const, cfg.s0).value for x in xs]
            else:
                kde = estimate_density(s, xs, "mixing", T)
                asy = [A.mixing_density_asymptotic(x, T, const).value for x in xs]
            for x, a, m in zip(xs, asy, kde):
                rows.append({"T": T, "K": float(x), "quantity": q, "asymptotic_value": a, "mc_value": float(m),
                             "mc_stderr": None, "rel_error": rel(a, float(m))})
    else:
        raise ConfigError(f"unknown quantity {q!r}")
    ctx.csv("asym_vs_mc.csv", rows)
    return f"{len(rows)} rows for {q}"


def cmd_calibrate(ctx: _Context, args) -> str:
    from . import calibration as cal

    cfg = ctx.cfg
    cfg.require_asymptotic_regime("calibrate")
    if cfg.mean_coeff != 0:
        raise ConfigError("'calibrate' requires centered volatility (mean_coeff = 0)")
    results = []
    if args.quotes:
        groups: dict = {}
        for rec in _read_csv(args.quotes):
            key = (rec["type"].strip(), float(rec["K"]))
            groups.setdefault(key, []).append((float(rec["T"]), float(rec["observable"])))
        for (typ, K), pts in sorted(groups.items()):
            for method in cal.Method:
                if method is not cal.Method.PLUG_IN and len(pts) < 2:
                    continue
                if typ == "call":
                    r = cal.h_from_call(pts, K, cfg.s0, method)
                elif typ == "put":
                    r = cal.h_from_put(pts, K, cfg.s0, method)
                elif typ == "iv" and K == cfg.s0:
                    r = cal.h_from_iv_atm(pts, cfg.s0, method)
                elif typ == "iv":
                    r = cal.h_from_iv_otm(pts, K, cfg.s0, method)
                else:
                    raise ConfigError(f"unknown quote type {typ!r}; expected call, put or iv")
                results.append({**r.as_dict(), "K": K})
        rows = [{"H_true": None, "H_hat": r["h_hat"], "T_days": min(p[0] for p in r["inputs"]) * 365.0,
                 "estimator": r["estimator"], "method": r["method"], "stderr_proxy": None} for r in results]
    else:
        from .mc import mixing_samples
        samples = mixing_samples(cfg.kernel_obj, cfg.n_steps, cfg.n_paths, cfg.seed)
        pts = []
        ses = []
        for T in cfg.maturity_grid():
            p, se, iv = cal._atm_iv(samples, T, cfg.s0, cfg.sigma_scale)
            pts.append((T, iv))
            ses.append((se / p) / math.log(1.0 / T))
        rows = []
        for method in cal.Method:
            if method is not cal.Method.PLUG_IN and len(pts) < 2:
                continue
            r = cal.h_from_iv_atm(pts, cfg.s0, method, h_true=cfg.hurst)
            results.append(r.as_dict())
            rows.append({"H_true": cfg.hurst, "H_hat": r.h_hat, "T_days": pts[0][0] * 365.0,
                         "estimator": r.estimator.value, "method": method.value, "stderr_proxy": ses[0]})
    ctx.json("calibration_report.json", {"results": results})
    ctx.csv("calibration_tables.csv", rows)
    return f"{len(results)} estimates"


def cmd_tables(ctx: _Context, args) -> str:
    from .calibration import reproduce_tables

    cfg = ctx.cfg
    cfg.require_asymptotic_regime("tables")
    rep = reproduce_tables(
        hursts=cfg.hursts, T_days=cfg.t_days, sigma=cfg.sigma_scale, s0=cfg.s0, n_paths=cfg.n_paths,
        n_steps=cfg.n_steps, seed=cfg.seed, kind=cfg.kernel, t0_grid_days=cfg.t0_grid_days(),
        tol=cfg.tol, moments=cfg.moments,
    )
    rows = [{"H_true": r["H_true"], "H_hat": r["H_hat"], "T_days": r["T_days"], "estimator": "iv_atm_plug_in",
             "stderr_proxy": r["stderr_proxy"], "H_hat_two_point": r["H_hat_two_point"], "iv_mc": r["iv_mc"],
             "iv_asym": r["iv_asym"], "price": r["price"], "price_stderr": r["price_stderr"], "seed": r["seed"]}
            for r in rep["tables"]]
    ctx.csv("tables_num.csv", rows)
    ctx.csv("tables_t0.csv", rep["t0_table"])
    ctx.json("tables_report.json", rep)
    return f"{len(rows)} table cells, t0 for {len(rep['t0_table'])} H values"


# ---------------------------------------------------------------------------
# self test: exact identities, no Monte Carlo


def run_selftest() -> list[tuple[str, float, bool]]:
    """Exact identities at 1e-12 relative. Returns (name, max deviation, passed)."""
    from scipy import special

    from . import asymptotics as A
    from .kernels import CovarianceKernel
    from .pricing import bs_atm_call, bs_call, bs_put, erf_inv
    from .spectrum import solve_spectrum, spectral_constants

    tol = 1e-12
    out = []

    def rec(name, dev):
        out.append((name, float(dev), bool(dev <= tol)))

    spec = solve_spectrum(CovarianceKernel("fbm", 0.6), 1.0, (64, 128), n_keep=16)
    const = spectral_constants(spec, sigma=0.8)
    s0 = 1.3
    coef = A.AsymptoticCoefficients.from_constants(const, s0=s0)

    dev = 0.0
    for T in (0.01, 0.05, 0.2):
        for x in (0.7, 0.9, 1.2, 1.6, 2.5):
            lhs = A.density_asymptotic(x, T, coef).log_value
            rhs = A.density_asymptotic(s0 * s0 / x, T, coef).log_value + 3 * math.log(s0 / x)
            dev = max(dev, abs(math.expm1(lhs - rhs)))
    rec("density symmetry D(x) = (s0/x)^3 D(s0^2/x)", dev)

    dev = 0.0
    for T in (0.01, 0.05, 0.2):
        for K in (0.6, 0.9, 1.1, 1.25):
            lhs = A.put_asymptotic(T, K, coef).log_value
            rhs = math.log(K / s0) + A.call_asymptotic(T, s0 * s0 / K, coef).log_value
            dev = max(dev, abs(math.expm1(lhs - rhs)))
    rec("put-call transform P(T,K) = (K/s0) C(T,s0^2/K)", dev)

    dev = 0.0
    for T in (0.01, 0.05, 0.2):
        for K in (0.6, 0.9, 1.5, 2.0):
            a = A.iv_asymptotic_otm(T, K, coef).value
            b = A.iv_asymptotic_otm(T, s0 * s0 / K, coef).value
            dev = max(dev, abs(a - b) / abs(b))
    rec("OTM IV strike symmetry K <-> s0^2/K", dev)

    vols = np.linspace(0.05, 3.0, 40)
    dev = 0.0
    for T in (0.01, 0.5, 2.0):
        for K in (0.5, 1.0, 1.3, 2.0):
            c = bs_call(T, K, s0, vols)
            p = bs_put(T, K, s0, vols)
            dev = max(dev, float(np.max(np.abs((c - p) - (s0 - K)))) / s0)
    rec("per-sample put-call parity C - P = s0 - K", dev)

    dev = 0.0
    for T in (0.01, 0.5, 2.0):
        gen = bs_call(T, s0, s0, vols)
        atm = bs_atm_call(T, s0, vols)
        dev = max(dev, float(np.max(np.abs(gen - atm) / atm)))
    rec("Black-Scholes ATM erf form", dev)

    z = np.linspace(0.05, 0.95, 19)
    rec("erf(erf_inv(z)) = z", float(np.max(np.abs(special.erf(erf_inv(z)) - z))))

    lam = 1.7
    T = (4.0 / 3.0 / lam) ** (1.0 / (2 * 0.6 + 1))
    rec("z factor at lambda1 T^(2H+1) = 4/3", abs(A.z_factor(T, lam, 0.6)[0] - 0.5) / 0.5)
    return out


def cmd_selftest(ctx: _Context | None, args) -> str:
    t = time.perf_counter()
    res = run_selftest()
    for name, dev, ok in res:
        print(f"{'PASS' if ok else 'FAIL'}  {name}  max_rel_dev={dev:.3e}")
    elapsed = time.perf_counter() - t
    failed = [r for r in res if not r[2]]
    if failed:
        raise _SelftestFailure(f"{len(failed)} identity checks failed")
    return f"{len(res)} identity checks passed in {elapsed:.3f}s"


class _SelftestFailure(RuntimeError):
    pass


_COMMANDS = {
    "spectrum": cmd_spectrum,
    "simulate": cmd_simulate,
    "price": cmd_price,
    "iv": cmd_iv,
    "asym": cmd_asym,
    "calibrate": cmd_calibrate,
    "tables": cmd_tables,
    "selftest": cmd_selftest,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI configuration file")
    common.add_argument("--seed", type=int, help="override the Monte-Carlo seed")
    common.add_argument("--out-dir", help="output directory (default from config, else ./out)")
    common.add_argument("--no-timestamp", action="store_true", help="omit the creation time from JSON metadata")

    p = argparse.ArgumentParser(prog="selfsimvol", description="Self-similar Gaussian stochastic volatility toolkit")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", metavar="command")
    sub.required = True
    sub.add_parser("spectrum", parents=[common], help="Karhunen-Loeve spectrum and asymptotic constants")
    sp = sub.add_parser("simulate", parents=[common], help="simulate integrated variance and moments")
    sp.add_argument("--dump-samples", action="store_true", help="also write raw Ytilde_1 samples")
    sp = sub.add_parser("price", parents=[common], help="option prices on the configured grid")
    sp.add_argument("--method", choices=("mc", "mc-tilted", "asym"), default="mc")
    sp.add_argument("--kind", choices=("call", "put"), default="call")
    sp = sub.add_parser("iv", parents=[common], help="implied volatilities for a CSV of prices")
    sp.add_argument("--input", help="CSV with columns T,K,price[,s0,type]")
    sp.add_argument("--atm-series", action="store_true", help="use the inverse-erf form at K = s0")
    sp = sub.add_parser("asym", parents=[common], help="compare asymptotic formulas with Monte Carlo")
    sp.add_argument("--quantity", default="atm_iv",
                    choices=("call", "put", "iv_otm", "atm_call", "atm_iv", "atm_bounds", "density", "mixing_density"))
    sp = sub.add_parser("calibrate", parents=[common], help="estimate H from quotes or a simulation")
    sp.add_argument("--quotes", help="CSV with columns T,K,observable,type (type in call, put, iv)")
    sub.add_parser("tables", parents=[common], help="reproduce the small-time H-recovery and t0 tables")
    sub.add_parser("selftest", parents=[common], help="exact identity checks, no Monte Carlo")
    return p


def _error_json(kind: str, message: str) -> None:
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")


def run_command(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # argparse exits 2 on usage errors
    try:
        if args.command == "selftest":
            print(cmd_selftest(None, args))
            return 0
        cfg = load_config(args.config) if args.config else ModelConfig()
        if args.seed is not None:
            cfg = cfg.replace(seed=args.seed)
        out_dir = Path(args.out_dir or cfg.out_dir)
        ctx = _Context(cfg, out_dir, args.command, not args.no_timestamp)
        t = time.perf_counter()
        summary = _COMMANDS[args.command](ctx, args)
        files = ",".join(ctx.written)
        print(f"{args.command}: {summary}; wrote {files} to {out_dir} in {time.perf_counter() - t:.2f}s")
        return 0
    except ConfigError as exc:
        _error_json("config_error", str(exc))
        return 3
    except _SelftestFailure as exc:
        _error_json("selftest_failure", str(exc))
        return 1
    except (ValueError, ArithmeticError, OSError, KeyError) as exc:
        _error_json(type(exc).__name__, str(exc))
        return 1


def main() -> None:
    sys.exit(run_command())


if __name__ == "__main__":
    main()
