"""End-to-end pipeline and table/CSV rendering."""
from __future__ import annotations

import configparser
import csv
import hashlib
import io
import json
import platform
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from .bootstrap import BootstrapConfig, EfficiencyBand, EfficiencyTimeline, bootstrap_band, detect
from .errors import ConfigError, StageError, TvpEffError, ValidationError
from .impute import impute_missing
from .series import AlignedSample, Descriptive, align, describe, fmt, format_month, read_price_csv
from .static import HansenResult, StaticFit, hansen_lc, ols_fit
from .tvp import TvpFit, tvp_fit
from .unitroot import AdfGlsResult, adf_gls

TVP_SKIPPED = "constancy not rejected; TVP stage skipped (override with --force-tvp)"


@dataclass
class RunConfig:
    spot_file: str = ""
    futures_file: str = ""
    k: int = 1
    imputation: bool = True
    ur_mode: str = "ct"
    kmax: int | None = None
    n_boot: int = 5000
    level: float = 0.95
    seed: int = 0
    lambda_policy: str = "fixed"
    lam: str = "auto"
    prior: str = "ols"
    out_dir: str = "out"
    formats: tuple = ("csv", "json")
    force_tvp: bool = False
    jobs: int = 1
    label: str = ""

    # keys that change where or how fast results are produced, not what they are
    NON_SEMANTIC = ("out_dir", "jobs", "formats")

    @classmethod
    def from_mapping(cls, values: dict) -> "RunConfig":
        known = {f.name: f for f in fields(cls)}
        kwargs = {}
        for key, raw in values.items():
            key = key.replace("-", "_")
            if key not in known:
                raise ConfigError(f"unknown configuration key {key!r}")
            if raw is None:
                continue
            kwargs[key] = _coerce(key, raw)
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path, overrides: dict | None = None) -> "RunConfig":
        text = Path(path).read_text()
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        try:
            parser.read_string("[run]\n" + text)
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        values = dict(parser["run"])
        values.update({k: v for k, v in (overrides or {}).items() if v is not None})
        return cls.from_mapping(values)

    def semantic_dict(self) -> dict:
        d = asdict(self)
        for key in self.NON_SEMANTIC:
            d.pop(key)
        # the hash should not depend on where the inputs live
        d["spot_file"] = Path(self.spot_file).name
        d["futures_file"] = Path(self.futures_file).name
        return d

    def config_hash(self) -> str:
        blob = json.dumps(self.semantic_dict(), sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()

    def bootstrap(self) -> BootstrapConfig:
        return BootstrapConfig(n_boot=self.n_boot, level=self.level, seed=self.seed,
                               lambda_policy=self.lambda_policy, prior=parse_prior(self.prior),
                               jobs=self.jobs)

    def validate(self):
        """Fail fast: check values and that both inputs exist and parse."""
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        if self.ur_mode not in ("c", "ct"):
            raise ConfigError("ur_mode must be 'c' or 'ct'")
        self.bootstrap().validate()
        parse_lambda(self.lam)
        parse_prior(self.prior)
        bad = set(self.formats) - {"csv", "json"}
        if bad:
            raise ConfigError(f"unknown output formats {sorted(bad)}")
        for name in ("spot_file", "futures_file"):
            p = Path(getattr(self, name))
            if not getattr(self, name) or not p.is_file():
                raise FileNotFoundError(f"{name}: no such file: {p}")
        return read_price_csv(self.spot_file, "spot"), read_price_csv(self.futures_file, "futures")


def _truthy(v) -> bool:
    if isinstance(v, bool):
        return v
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {v!r}")


def _coerce(key, raw):
    try:
        if key in ("k", "n_boot", "seed", "jobs"):
            return int(raw)
        if key == "kmax":
            return None if str(raw).strip().lower() in ("", "auto", "none") else int(raw)
        if key == "level":
            return float(raw)
        if key in ("imputation", "force_tvp"):
            return _truthy(raw)
        if key == "formats":
            if isinstance(raw, str):
                return tuple(s.strip() for s in raw.split(",") if s.strip())
            return tuple(raw)
        return str(raw).strip() if isinstance(raw, str) else raw
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {key}: {raw!r}") from exc


def parse_lambda(value):
    if isinstance(value, str) and value.strip().lower() == "auto":
        return "auto"
    try:
        lam = float(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"lambda must be 'auto' or a positive number, got {value!r}") from exc
    if not lam > 0:
        raise ConfigError("lambda must be positive")
    return lam


def parse_prior(value):
    if isinstance(value, str) and value.strip().lower() in ("ols", "gls"):
        return value.strip().lower()
    try:
        return float(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"prior must be 'ols', 'gls' or a number, got {value!r}") from exc


@dataclass
class ReportBundle:
    """Results for one market and horizon. Unset stages stay ``None``."""

    label: str = ""
    k: int | None = None
    sample: AlignedSample | None = None
    descriptive: Descriptive | None = None
    adf_x: AdfGlsResult | None = None
    adf_y: AdfGlsResult | None = None
    static: StaticFit | None = None
    hansen: HansenResult | None = None
    tvp: TvpFit | None = None
    band: EfficiencyBand | None = None
    timeline: EfficiencyTimeline | None = None
    notes: list = field(default_factory=list)

    def missing(self, stages) -> list[str]:
        attrs = {"describe": ("descriptive",), "unitroot": ("adf_x", "adf_y"),
                 "static": ("static", "hansen"), "tvp": ("tvp",), "band": ("band", "timeline")}
        return [s for s in stages if any(getattr(self, a) is None for a in attrs[s])]


class Stage:
    def __init__(self, name):
        self.name = name

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is not None and isinstance(exc, (TvpEffError, ArithmeticError, ValueError)) \
                and not isinstance(exc, StageError):
            raise StageError(self.name, exc) from exc
        return False


def run_pipeline(config: RunConfig, inputs=None) -> ReportBundle:
    """ingest -> impute -> align -> Table 1 -> Table 2 -> (gate) -> TVP, band, detect."""
    with Stage("ingest"):
        spot, futures = inputs if inputs is not None else config.validate()
    with Stage("impute"):
        if config.imputation:
            spot, futures = impute_missing(spot), impute_missing(futures)
    with Stage("align"):
        label = config.label or Path(config.futures_file).stem or "market"
        sample = align(spot, futures, config.k, label)
    bundle = ReportBundle(label=label, k=config.k, sample=sample)
    with Stage("describe"):
        bundle.descriptive = describe(sample)
    with Stage("unitroot"):
        bundle.adf_x = adf_gls(sample.x, config.ur_mode, config.kmax)
        bundle.adf_y = adf_gls(sample.y, config.ur_mode, config.kmax)
    with Stage("static"):
        bundle.static = ols_fit(sample)
        bundle.hansen = hansen_lc(bundle.static, sample)
    if not (bundle.hansen.reject or config.force_tvp):
        bundle.notes.append(TVP_SKIPPED)
        return bundle
    with Stage("tvp"):
        bundle.tvp = tvp_fit(sample, parse_lambda(config.lam), parse_prior(config.prior))
    with Stage("band"):
        bundle.band = bootstrap_band(sample, config.bootstrap(), fit=bundle.tvp)
        bundle.timeline = detect(bundle.tvp, bundle.band)
    return bundle


# -- rendering -----------------------------------------------------------------

TABLE1_ROWS = ("Mean", "SD", "Min", "Max", "ADF-GLS", "Lags", "phi_hat", "N")
TABLE2_ROWS = ("alpha", "se_alpha", "beta", "se_beta", "r2_adj", "L_C", "L_C_reject_5pct")


def _as_list(bundles):
    if isinstance(bundles, ReportBundle):
        return [bundles]
    return list(bundles)


def _column_name(b: ReportBundle) -> str:
    return f"{b.label} k={b.k}"


def table1(bundles) -> tuple[list[str], list[list]]:
    header = ["statistic"]
    cols = []
    for b in bundles:
        d = b.descriptive
        for tag, mom, adf in (("SR", d.x, b.adf_x), ("FP", d.y, b.adf_y)):
            header.append(f"{_column_name(b)} {tag}")
            cols.append([mom.mean, mom.sd, mom.min, mom.max, adf.statistic, adf.lags,
                         adf.phi_hat, d.n])
    rows = [[name] + [c[i] for c in cols] for i, name in enumerate(TABLE1_ROWS)]
    return header, rows


def table2(bundles) -> tuple[list[str], list[list]]:
    header = ["statistic"] + [_column_name(b) for b in bundles]
    cols = [[b.static.alpha, b.static.se_alpha, b.static.beta, b.static.se_beta,
             b.static.r2_adj, b.hansen.statistic, int(b.hansen.reject)] for b in bundles]
    rows = [[name] + [c[i] for c in cols] for i, name in enumerate(TABLE2_ROWS)]
    return header, rows


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return fmt(v)


def to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([r[0]] + [_cell(v) for v in r[1:]])
    return buf.getvalue()


def _pretty(header, rows, digits, bracket_rows=()):
    """Fixed-decimal text table; rows in ``bracket_rows`` are shown as ``[se]``."""
    out = []
    for r in rows:
        cells = []
        for v in r[1:]:
            if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
                s = str(int(v))
            else:
                s = f"{float(v):.{digits}f}"
            cells.append(f"[{s}]" if r[0] in bracket_rows else s)
        label = "" if r[0] in bracket_rows else r[0]
        out.append([label] + cells)
    widths = [max(len(str(x)) for x in col) for col in zip(header, *out)]
    lines = ["  ".join(str(x).rjust(w) for x, w in zip(header, widths))]
    lines += ["  ".join(str(x).rjust(w) for x, w in zip(r, widths)) for r in out]
    return "\n".join(lines) + "\n"


def render_tables(bundles, digits: int = 4) -> dict[str, str]:
    """Render Table 1 (descriptives and unit roots) and Table 2 (static fits).

    Returns file name to content: full-precision CSV and JSON plus
    fixed-decimal text versions with bracketed standard errors.
    """
    bundles = _as_list(bundles)
    if not bundles:
        raise ValidationError("nothing to render: missing stages describe, unitroot, static")
    problems = []
    for b in bundles:
        miss = b.missing(("describe", "unitroot", "static"))
        if miss:
            problems.append(f"{_column_name(b)}: missing stages {', '.join(miss)}")
    if problems:
        raise ValidationError("incomplete bundle; " + "; ".join(problems))
    h1, r1 = table1(bundles)
    h2, r2 = table2(bundles)
    t1_json = {col: {row[0]: row[i + 1] for row in r1} for i, col in enumerate(h1[1:])}
    t2_json = {col: {row[0]: row[i + 1] for row in r2} for i, col in enumerate(h2[1:])}
    return {
        "table1.csv": to_csv(h1, r1),
        "table2.csv": to_csv(h2, r2),
        "table1.json": json.dumps(t1_json, indent=2, default=_json_default) + "\n",
        "table2.json": json.dumps(t2_json, indent=2, default=_json_default) + "\n",
        "table1.txt": _pretty(h1, r1, digits),
        "table2.txt": _pretty(h2, r2, digits, bracket_rows=("se_alpha", "se_beta")),
    }


def _json_default(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, np.datetime64):
        return format_month(v)
    raise TypeError(type(v))


def unitroot_csv(rows: list[tuple[str, AdfGlsResult]]) -> str:
    header = ["series", "statistic", "lags", "phi_hat", "phi_raw", "detrending", "k_max", "n"]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for name, r in rows:
        w.writerow([name, fmt(r.statistic), r.lags, fmt(r.phi_hat), fmt(r.phi_raw),
                    r.detrending, r.k_max, r.n])
    return buf.getvalue()


def static_record(b: ReportBundle) -> dict:
    s, h = b.static, b.hansen
    return {"label": b.label, "k": b.k, "n": s.n, "alpha": s.alpha, "se_alpha": s.se_alpha,
            "beta": s.beta, "se_beta": s.se_beta, "r2_adj": s.r2_adj,
            "hac_bandwidth": s.hac_bandwidth, "lc": h.statistic,
            "lc_critical_5pct": h.critical_value,
            "decision": "reject constancy" if h.reject else "constancy not rejected"}


def tvp_csv(sample: AlignedSample, fit: TvpFit) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["date", "beta_hat"])
    for d, b in zip(sample.dates, fit.beta_path):
        w.writerow([format_month(d), fmt(b)])
    return buf.getvalue()


def tvp_header(fit: TvpFit) -> dict:
    return {"alpha": fit.alpha, "lambda": fit.lam, "loglik": fit.loglik, "beta0": fit.beta0,
            "sigma2_u": fit.sigma2_u, "lambda_selected": fit.lambda_selected, "n": fit.n}


def band_csv(sample: AlignedSample, beta, band: EfficiencyBand,
             timeline: EfficiencyTimeline) -> str:
    """Columns: date, beta_hat, lower, upper, flag (1 = outside the band)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["date", "beta_hat", "lower", "upper", "flag"])
    for d, b, lo, up, ok in zip(sample.dates, beta, band.lower, band.upper, timeline.efficient):
        w.writerow([format_month(d), fmt(b), fmt(lo), fmt(up), 0 if ok else 1])
    return buf.getvalue()


def episodes_csv(timeline: EfficiencyTimeline) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["start", "end", "months", "mean_excursion"])
    for e in timeline.episodes:
        w.writerow([e.start, e.end, e.length, fmt(e.mean_excursion)])
    return buf.getvalue()


def bundle_files(bundle: ReportBundle, config: RunConfig, digits: int = 4) -> dict[str, str]:
    files = render_tables(bundle, digits)
    if "json" not in config.formats:
        files = {k: v for k, v in files.items() if not k.endswith(".json")}
    if "csv" not in config.formats:
        files = {k: v for k, v in files.items() if not k.endswith(".csv")}
    ur = unitroot_csv([("SR", bundle.adf_x), ("FP", bundle.adf_y)])
    files["unitroot.csv"] = ur
    files["static.json"] = json.dumps(static_record(bundle), indent=2) + "\n"
    if bundle.tvp is not None:
        files["tvp.csv"] = tvp_csv(bundle.sample, bundle.tvp)
        files["tvp.json"] = json.dumps(tvp_header(bundle.tvp), indent=2) + "\n"
    if bundle.band is not None:
        files["band.csv"] = band_csv(bundle.sample, bundle.tvp.beta_path, bundle.band,
                                     bundle.timeline)
        files["episodes.csv"] = episodes_csv(bundle.timeline)
    return files


def _versions() -> dict:
    import scipy
    import statsmodels
    return {"tvpeff": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__,
            "statsmodels": statsmodels.__version__}


def manifest(bundle: ReportBundle, config: RunConfig, files: dict[str, str]) -> dict:
    return {
        "config_hash": config.config_hash(),
        "seed": config.seed,
        "config": config.semantic_dict(),
        "versions": _versions(),
        "notes": list(bundle.notes),
        "stages_run": [s for s in ("describe", "unitroot", "static", "tvp", "band")
                       if not bundle.missing((s,))],
        "outputs": {name: hashlib.sha256(text.encode()).hexdigest()
                    for name, text in sorted(files.items())},
    }


def write_outputs(bundle: ReportBundle, config: RunConfig, digits: int = 4) -> dict[str, str]:
    files = bundle_files(bundle, config, digits)
    files["manifest.json"] = json.dumps(manifest(bundle, config, files), indent=2,
                                        default=_json_default) + "\n"
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        (out / name).write_text(text)
    return files
