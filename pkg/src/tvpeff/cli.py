"""Command-line interface.

Exit codes: 0 success, 2 validation, 3 numerical, 4 I/O.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .bootstrap import EfficiencyBand, bootstrap_band, detect
from .errors import ConfigError, TvpEffError
from .impute import impute_missing
from .report import (ReportBundle, RunConfig, Stage, band_csv, episodes_csv, parse_lambda,
                     parse_prior, run_pipeline, static_record, to_csv, tvp_csv, tvp_header,
                     unitroot_csv, write_outputs)
from .series import align, describe, fmt, format_month, to_month, write_price_csv
from .static import hansen_lc, ols_fit
from .synthetic import BetaPath, Premium, ScenarioSpec, simulate_market
from .tvp import tvp_fit
from .unitroot import adf_gls

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4


def _const(p, flag, dest, value, help):
    p.add_argument(flag, dest=dest, action="store_const", const=value, default=None, help=help)


def _add_inputs(p):
    g = p.add_argument_group("inputs")
    g.add_argument("--config", help="flat key=value file with RunConfig keys")
    g.add_argument("--spot", dest="spot_file", help="spot price CSV (date,price)")
    g.add_argument("--futures", dest="futures_file", help="futures price CSV (date,price)")
    g.add_argument("--k", type=int, help="contract horizon in months")
    _const(g, "--no-impute", "imputation", False, "fail on gaps instead of imputing")
    _const(g, "--impute", "imputation", True, "fill gaps before alignment (default)")
    g.add_argument("--label", help="market label used in table headers")


def _add_tvp(p):
    p.add_argument("--lambda", dest="lam", help="variance ratio or 'auto' (default)")
    p.add_argument("--prior", help="'ols' (default), 'gls' or a number")


def _add_band(p):
    p.add_argument("--n-boot", dest="n_boot", type=int, help="bootstrap replications (5000)")
    p.add_argument("--level", type=float, help="band coverage (0.95)")
    p.add_argument("--seed", type=int, help="master seed (0)")
    p.add_argument("--lambda-policy", dest="lambda_policy",
                   choices=("fixed", "per-replication"))
    p.add_argument("--jobs", type=int, help="worker threads for replications")


def _add_out(p, default=None):
    p.add_argument("--out", dest="out_dir", default=default, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tvpeff", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write a synthetic spot/futures pair and its true path")
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--beta", default="constant:1",
                   help="constant:c | step:c1,c2,brk | sine:center,amp,period | "
                        "random-walk:sigma_v[,start]")
    p.add_argument("--sigma-u", type=float, default=0.05)
    p.add_argument("--premium", default="ar1:0.6,0.08",
                   help="ar1:rho,sigma[,mean] | file:path.csv (column 'premium')")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--start", default="1900-01")
    _add_out(p, "sim")

    for name, helptext in (("describe", "descriptive statistics of returns and premiums"),
                           ("unitroot", "ADF-GLS test with MBIC lag selection"),
                           ("fit-static", "OLS fit with HAC errors and Hansen L_C")):
        p = sub.add_parser(name, help=helptext)
        _add_inputs(p)
        _add_out(p)
        if name == "unitroot":
            p.add_argument("--mode", dest="ur_mode", choices=("c", "ct"))
            p.add_argument("--kmax")
        if name == "fit-static":
            p.add_argument("--format", dest="fmt", choices=("csv", "json"), default="csv")

    p = sub.add_parser("fit-tvp", help="time-varying slope path")
    _add_inputs(p)
    _add_tvp(p)
    _add_out(p)

    p = sub.add_parser("band", help="bootstrap band under the unbiasedness null")
    _add_inputs(p)
    _add_tvp(p)
    _add_band(p)
    _add_out(p)

    p = sub.add_parser("detect", help="inefficiency episodes from a band CSV")
    p.add_argument("--band", dest="band_file", required=True,
                   help="CSV with date, beta_hat, lower, upper")
    _add_out(p)

    p = sub.add_parser("run", help="full pipeline")
    _add_inputs(p)
    _add_tvp(p)
    _add_band(p)
    p.add_argument("--mode", dest="ur_mode", choices=("c", "ct"))
    p.add_argument("--kmax")
    p.add_argument("--format", dest="formats", help="comma list of csv,json")
    _const(p, "--force-tvp", "force_tvp", True, "run TVP stages even if L_C does not reject")
    p.add_argument("--digits", type=int, default=4, help="decimals in the text tables")
    _add_out(p)
    return parser


CONFIG_KEYS = ("spot_file", "futures_file", "k", "imputation", "label", "lam", "prior",
               "n_boot", "level", "seed", "lambda_policy", "jobs", "ur_mode", "kmax",
               "formats", "force_tvp", "out_dir")


def make_config(args) -> RunConfig:
    overrides = {k: getattr(args, k) for k in CONFIG_KEYS if hasattr(args, k)}
    if getattr(args, "config", None):
        return RunConfig.from_file(args.config, overrides)
    return RunConfig.from_mapping(overrides)


def _sample(config: RunConfig):
    spot, futures = config.validate()
    with Stage("impute"):
        if config.imputation:
            spot, futures = impute_missing(spot), impute_missing(futures)
    with Stage("align"):
        label = config.label or Path(config.futures_file).stem
        return align(spot, futures, config.k, label)


def _emit(text: str, out_dir, name: str):
    if out_dir:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        (Path(out_dir) / name).write_text(text)
    else:
        sys.stdout.write(text)


def _parse_beta(spec: str) -> BetaPath:
    kind, _, rest = spec.partition(":")
    vals = [float(v) for v in rest.split(",") if v.strip()]
    try:
        if kind == "constant":
            return BetaPath.constant(*vals)
        if kind == "step":
            return BetaPath.step(vals[0], vals[1], int(vals[2]))
        if kind == "sine":
            return BetaPath.sine(*vals)
        if kind in ("random-walk", "rw"):
            return BetaPath.random_walk(*vals)
    except (TypeError, IndexError) as exc:
        raise ConfigError(f"bad --beta {spec!r}") from exc
    raise ConfigError(f"unknown beta path {kind!r}")


def _parse_premium(spec: str) -> Premium:
    kind, _, rest = spec.partition(":")
    if kind == "ar1":
        try:
            return Premium.ar1(*[float(v) for v in rest.split(",")])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad --premium {spec!r}") from exc
    if kind == "file":
        with open(rest, newline="") as fh:
            return Premium.from_values(float(r["premium"]) for r in csv.DictReader(fh))
    raise ConfigError(f"unknown premium process {kind!r}")


def cmd_simulate(args):
    spec = ScenarioSpec(n=args.n, k=args.k, alpha_true=args.alpha,
                        beta_path_true=_parse_beta(args.beta), sigma_u=args.sigma_u,
                        premium_process=_parse_premium(args.premium), seed=args.seed,
                        start=args.start)
    m = simulate_market(spec)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_price_csv(m.spot, out / "spot.csv")
    write_price_csv(m.futures, out / "futures.csv")
    with (out / "truth.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "beta_true"])
        for d, b in zip(m.sample().dates, m.beta):
            w.writerow([format_month(d), fmt(b)])
    print(f"wrote {out}/spot.csv, futures.csv, truth.csv (n={spec.n}, k={spec.k})")


def cmd_describe(args):
    config = make_config(args)
    sample = _sample(config)
    d = describe(sample)
    rows = [[name, getattr(d.x, attr), getattr(d.y, attr)]
            for name, attr in (("Mean", "mean"), ("SD", "sd"), ("Min", "min"), ("Max", "max"))]
    rows.append(["N", d.n, d.n])
    _emit(to_csv(["statistic", "SR", "FP"], rows), args.out_dir, "describe.csv")


def cmd_unitroot(args):
    config = make_config(args)
    sample = _sample(config)
    with Stage("unitroot"):
        rows = [("SR", adf_gls(sample.x, config.ur_mode, config.kmax)),
                ("FP", adf_gls(sample.y, config.ur_mode, config.kmax))]
    _emit(unitroot_csv(rows), args.out_dir, "unitroot.csv")


def cmd_fit_static(args):
    config = make_config(args)
    sample = _sample(config)
    with Stage("static"):
        fit = ols_fit(sample)
        bundle = ReportBundle(label=sample.label, k=config.k, static=fit,
                              hansen=hansen_lc(fit, sample))
    rec = static_record(bundle)
    if args.fmt == "json":
        text = json.dumps(rec, indent=2) + "\n"
    else:
        keys = list(rec)
        text = to_csv(["field", "value"], [[k, rec[k]] for k in keys if not isinstance(rec[k], str)])
        text += "".join(f"{k},{rec[k]}\n" for k in keys if isinstance(rec[k], str))
    _emit(text, args.out_dir, "static." + args.fmt)


def cmd_fit_tvp(args):
    config = make_config(args)
    sample = _sample(config)
    with Stage("tvp"):
        fit = tvp_fit(sample, parse_lambda(config.lam), parse_prior(config.prior))
    out = Path(config.out_dir if args.out_dir else "out")
    out.mkdir(parents=True, exist_ok=True)
    (out / "tvp.csv").write_text(tvp_csv(sample, fit))
    header = json.dumps(tvp_header(fit), indent=2) + "\n"
    (out / "tvp.json").write_text(header)
    sys.stdout.write(header)


def cmd_band(args):
    config = make_config(args)
    sample = _sample(config)
    with Stage("tvp"):
        fit = tvp_fit(sample, parse_lambda(config.lam), parse_prior(config.prior))
    with Stage("band"):
        band = bootstrap_band(sample, config.bootstrap(), fit=fit)
        timeline = detect(fit, band)
    out = Path(config.out_dir if args.out_dir else "out")
    out.mkdir(parents=True, exist_ok=True)
    (out / "band.csv").write_text(band_csv(sample, fit.beta_path, band, timeline))
    (out / "episodes.csv").write_text(episodes_csv(timeline))
    (out / "tvp.json").write_text(json.dumps(tvp_header(fit), indent=2) + "\n")
    print(f"{len(timeline.episodes)} inefficiency episodes; "
          f"{timeline.inefficient_share:.1%} of months outside the {band.level:.0%} band")


def read_band_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    need = {"date", "beta_hat", "lower", "upper"}
    if not rows or not need <= set(rows[0]):
        raise ConfigError(f"{path}: expected columns {sorted(need)}")
    start = to_month(rows[0]["date"])
    beta = np.array([float(r["beta_hat"]) for r in rows])
    band = EfficiencyBand(level=float("nan"), lower=np.array([float(r["lower"]) for r in rows]),
                          upper=np.array([float(r["upper"]) for r in rows]), replications=0,
                          seed=0, lam=float("nan"), lambda_policy="", start=start)
    return beta, band


def cmd_detect(args):
    beta, band = read_band_csv(args.band_file)
    timeline = detect(beta, band)
    _emit(episodes_csv(timeline), args.out_dir, "episodes.csv")


def cmd_run(args):
    config = make_config(args)
    inputs = config.validate()
    bundle = run_pipeline(config, inputs)
    write_outputs(bundle, config, args.digits)
    for note in bundle.notes:
        print(note)
    h = bundle.hansen
    print(f"L_C = {h.statistic:.4f} ({'reject' if h.reject else 'no reject'} at 5%, "
          f"cv {h.critical_value})")
    if bundle.timeline is not None:
        print(f"{len(bundle.timeline.episodes)} inefficiency episodes")
    print(f"outputs written to {config.out_dir}")


COMMANDS = {"simulate": cmd_simulate, "describe": cmd_describe, "unitroot": cmd_unitroot,
            "fit-static": cmd_fit_static, "fit-tvp": cmd_fit_tvp, "band": cmd_band,
            "detect": cmd_detect, "run": cmd_run}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        COMMANDS[args.command](args)
    except TvpEffError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code if exc.exit_code in (2, 3) else EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
