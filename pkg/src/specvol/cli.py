"""Command-line interface.

Subcommands: price, sweep, calibrate, group-params, mc-validate, basis-dump.
Numeric output uses 10 significant digits; warnings go to stderr; domain
errors exit 1 with ``error: [<code>] <message>``, usage errors exit 2.
A JSON config file (--config or the SPECVOL_CONFIG environment variable)
overrides quadrature and series defaults.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from .calibration import calibrate, load_quotes
from .core import (Interval, MarketParams, SpectrumCase, classify_spectrum,
                   load_market_params, load_option_spec)
from .errors import InvalidParams, SpecvolError
from .groupparams import group_parameters, load_model
from .montecarlo import SimConfig, epsilon_convergence_study, simulate_price
from .perturbation import matrix_elements
from .pricing import DEFAULT_SERIES, SeriesConfig, price
from .quadrature import DEFAULT_CONFIG, QuadratureConfig
from .spectral import eigenpair


def _fmt(value) -> str:
    return format(float(value), ".10g")


@dataclass(frozen=True)
class GlobalConfig:
    quadrature: QuadratureConfig
    series: SeriesConfig


def _load_global_config(path) -> GlobalConfig:
    if not path:
        return GlobalConfig(quadrature=DEFAULT_CONFIG, series=DEFAULT_SERIES)
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise InvalidParams(f"config file {path} must hold a JSON object")
    unknown = set(data) - {"quadrature", "series"}
    if unknown:
        raise InvalidParams(f"unknown config sections {sorted(unknown)}")
    quad = QuadratureConfig.from_mapping(data.get("quadrature", {}))
    series = SeriesConfig.from_mapping(data.get("series", {}))
    return GlobalConfig(quadrature=quad, series=series)


def _emit_warnings(warnings) -> None:
    for w in warnings:
        print(f"WARN {w}", file=sys.stderr)


def _parse_range(text: str):
    parts = text.split(":")
    if len(parts) != 3:
        raise InvalidParams(
            f"range must be lo:hi:n, got {text!r}")
    lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    if n < 1 or not lo < hi:
        raise InvalidParams(f"range must satisfy lo < hi and n >= 1: {text!r}")
    return np.linspace(lo, hi, n)


def _cmd_price(args, gcfg: GlobalConfig) -> int:
    spec = load_option_spec(args.spec)
    params = load_market_params(args.params)
    x = math.log(args.spot) if args.spot is not None else args.x
    if x is None:
        raise InvalidParams("provide --spot or --x")
    bd = price(spec, params, float(x), discounted=args.discounted,
               eps=args.eps, quad=gcfg.quadrature, series=gcfg.series)
    _emit_warnings(bd.warnings)
    out = {
        "u0": float(bd.u0),
        "u1": float(bd.u1),
        "price": float(bd.price),
        "trunc_error": float(bd.trunc_error),
        "warnings": list(bd.warnings),
    }
    print(json.dumps(
        {k: (float(_fmt(v)) if isinstance(v, float) else v)
         for k, v in out.items()}, indent=2))
    return 0


def _cmd_sweep(args, gcfg: GlobalConfig) -> int:
    spec = load_option_spec(args.spec)
    params = load_market_params(args.params)
    if args.spot_range:
        spots = _parse_range(args.spot_range)
        xs = np.log(spots)
    else:
        xs = _parse_range(args.x_range)
        spots = np.exp(xs)
    bd = price(spec, params, xs, discounted=args.discounted,
               quad=gcfg.quadrature, series=gcfg.series)
    _emit_warnings(bd.warnings)
    lines = ["spot,x,u0,u1,price"]
    for s, x, u0, u1, p in zip(spots, xs, np.atleast_1d(bd.u0),
                               np.atleast_1d(bd.u1),
                               np.atleast_1d(bd.price)):
        lines.append(",".join([_fmt(s), _fmt(x), _fmt(u0), _fmt(u1), _fmt(p)]))
    text = "\n".join(lines)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0


def _cmd_calibrate(args, gcfg: GlobalConfig) -> int:
    quotes = load_quotes(args.quotes)
    result = calibrate(quotes, sigma_sq_hist=args.sigma_hist, mu=args.mu)
    out = {
        "a": float(_fmt(result.a)),
        "b": float(_fmt(result.b)),
        "sigma_star": float(_fmt(result.sigma_star)),
        "v2_eps": float(_fmt(result.v2_eps)),
        "v3_eps": float(_fmt(result.v3_eps)),
        "n_quotes": result.n_quotes,
        "max_abs_residual": float(_fmt(max(abs(r) for r in result.residuals))),
    }
    print(json.dumps(out, indent=2))
    return 0


def _cmd_group_params(args, gcfg: GlobalConfig) -> int:
    prim = load_model(args.model)
    gp = group_parameters(prim, cfg=gcfg.quadrature)
    out = {
        "sigma_sq": float(_fmt(gp.sigma_sq)),
        "sigma": float(_fmt(math.sqrt(gp.sigma_sq))),
        "v2": float(_fmt(gp.v2)),
        "v3": float(_fmt(gp.v3)),
        "v2_eps": float(_fmt(gp.v2_eps)),
        "v3_eps": float(_fmt(gp.v3_eps)),
        "eps": float(_fmt(gp.eps)),
    }
    print(json.dumps(out, indent=2))
    return 0


def _cmd_mc_validate(args, gcfg: GlobalConfig) -> int:
    spec = load_option_spec(args.spec)
    prim = load_model(args.model)
    x0 = math.log(args.spot) if args.spot is not None else args.x
    if x0 is None:
        raise InvalidParams("provide --spot or --x")
    x0 = float(x0)
    cfg = SimConfig(n_paths=args.paths, steps_per_year=args.steps,
                    seed=args.seed, antithetic=not args.no_antithetic,
                    barrier_monitoring=args.monitoring, threads=args.threads)
    if args.eps_list:
        eps_list = [float(e) for e in args.eps_list.split(",")]
        study = epsilon_convergence_study(spec, prim, args.mu, eps_list, cfg,
                                          x0, quad=gcfg.quadrature,
                                          series=gcfg.series)
        print("eps,mc_mean,mc_std_error,asymptotic,abs_error,resolvable")
        for row in study.rows:
            print(",".join([
                _fmt(row.eps), _fmt(row.mc_mean), _fmt(row.mc_std_error),
                _fmt(row.asymptotic), _fmt(row.abs_error),
                str(row.resolvable).lower()]))
        summary = {"slope": float(_fmt(study.slope)),
                   "inconclusive": study.inconclusive}
        print(json.dumps(summary), file=sys.stderr)
        return 0
    gp = group_parameters(prim, cfg=gcfg.quadrature)
    params = MarketParams(mu=args.mu, sigma_sq=gp.sigma_sq,
                          v2_eps=gp.v2_eps, v3_eps=gp.v3_eps)
    bd = price(spec, params, x0, quad=gcfg.quadrature, series=gcfg.series)
    _emit_warnings(bd.warnings)
    est = simulate_price(spec, prim, args.mu, cfg, x0)
    err = abs(est.mean - bd.price)
    out = {
        "mc_mean": float(_fmt(est.mean)),
        "mc_std_error": float(_fmt(est.std_error)),
        "mc_ci95": [float(_fmt(est.ci95[0])), float(_fmt(est.ci95[1]))],
        "asymptotic_u0": float(_fmt(bd.u0)),
        "asymptotic_price": float(_fmt(bd.price)),
        "abs_error": float(_fmt(err)),
        "within_3se": bool(err <= 3.0 * est.std_error),
        "n_samples": est.n_samples,
    }
    print(json.dumps(out, indent=2))
    return 0


def _cmd_basis_dump(args, gcfg: GlobalConfig) -> int:
    params = load_market_params(args.params)
    lo, hi = args.interval.split(":")
    interval = Interval(l=float(lo), r=float(hi))
    case = classify_spectrum(interval)
    if case is not SpectrumCase.DISCRETE:
        raise InvalidParams("basis-dump requires a finite interval l:r")
    me = matrix_elements(case, interval, params, params.v2_eps,
                         params.v3_eps)
    print("n,alpha,lambda0,lambda1")
    for n in range(1, args.n + 1):
        pair = eigenpair(case, interval, params, n)
        lam1 = float(np.real(me.D1(n)))
        print(",".join([str(n), _fmt(pair.alpha),
                        _fmt(float(np.real(pair.lambda0))), _fmt(lam1)]))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="specvol",
        description="Spectral option pricing under fast mean-reverting "
                    "stochastic volatility")
    parser.add_argument("--config", default=None,
                        help="JSON config file (default: $SPECVOL_CONFIG)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("price", help="price one contract at one spot")
    p.add_argument("--spec", required=True, help="option spec JSON")
    p.add_argument("--params", required=True, help="market params JSON")
    p.add_argument("--spot", type=float, default=None, help="spot S (natural)")
    p.add_argument("--x", type=float, default=None, help="log-spot x")
    p.add_argument("--discounted", action="store_true",
                   help="report exp(-mu t) discounted values")
    p.add_argument("--eps", type=float, default=None,
                   help="report u1 unscaled by sqrt(eps)")
    p.set_defaults(func=_cmd_price)

    p = sub.add_parser("sweep", help="price across a range of spots (CSV)")
    p.add_argument("--spec", required=True)
    p.add_argument("--params", required=True)
    p.add_argument("--spot-range", default=None, metavar="LO:HI:N")
    p.add_argument("--x-range", default=None, metavar="LO:HI:N")
    p.add_argument("--discounted", action="store_true")
    p.add_argument("--out", default=None, help="write CSV here instead of stdout")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("calibrate", help="fit smile line and recover params")
    p.add_argument("--quotes", required=True, help="CSV of quotes")
    p.add_argument("--sigma-hist", type=float, required=True,
                   help="historical variance estimate sigma_sq")
    p.add_argument("--mu", type=float, required=True)
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("group-params", help="average a model into group parameters")
    p.add_argument("--model", required=True, help="model JSON")
    p.set_defaults(func=_cmd_group_params)

    p = sub.add_parser("mc-validate",
                       help="compare asymptotic price with Monte Carlo")
    p.add_argument("--spec", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--spot", type=float, default=None)
    p.add_argument("--x", type=float, default=None)
    p.add_argument("--paths", type=int, default=100000)
    p.add_argument("--steps", type=int, default=2000,
                   help="steps per year (step must be <= eps/20)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-antithetic", action="store_true")
    p.add_argument("--monitoring", default="brownian-bridge-corrected",
                   choices=["discrete", "brownian-bridge-corrected"])
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--eps-list", default=None,
                   help="comma-separated decreasing eps values for a "
                        "convergence study")
    p.set_defaults(func=_cmd_mc_validate)

    p = sub.add_parser("basis-dump",
                       help="dump discrete eigenvalues and corrections (CSV)")
    p.add_argument("--params", required=True)
    p.add_argument("--interval", required=True, metavar="L:R")
    p.add_argument("--n", type=int, default=20)
    p.set_defaults(func=_cmd_basis_dump)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config_path = args.config or os.environ.get("SPECVOL_CONFIG")
        gcfg = _load_global_config(config_path)
        if args.command == "sweep" and not (args.spot_range or args.x_range):
            raise InvalidParams("sweep needs --spot-range or --x-range")
        return args.func(args, gcfg)
    except SpecvolError as exc:
        print(f"error: [{exc.code}] {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
