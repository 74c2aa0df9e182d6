"""End-to-end orchestration: data -> NRCA -> screening -> Box-Jenkins -> tables.

Configuration comes from four layers, later ones winning: built-in defaults,
a key-value file, ``TRADECAST_*`` environment variables and explicit
overrides (usually CLI flags).
"""
from __future__ import annotations

import configparser
import dataclasses
import hashlib
import json
import logging
import os
import platform
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib.resources import files
from pathlib import Path
from typing import Mapping

import numpy as np
import scipy
import sklearn

from . import __version__, report
from .arima import (DiagnosticsResult, FittedModel, ForecastResult, forecast, ljung_box,
                    percent_forecast_error, select_best)
from .exceptions import TradecastError, ValidationError, WindowOutOfRange
from .identify import OrderCandidate, tentative_orders
from .ingest import build_panel, parse_trade_csv, validate_panel
from .nrca import NrcaSeries, nrca_series, read_nrca_table, screen_revealed
from .outliers import OutlierEvent, detect
from .stationarity import SURFACE_VERSION, AdfResult, difference_until_stationary
from .ts_core import as_series, difference

logger = logging.getLogger(__name__)

ENV_PREFIX = "TRADECAST_"
BUNDLED_PREFIX = "bundled:"
STAGES = ("nrca", "screen", "adf", "identify", "fit", "forecast", "outliers")


def bundled_path(name: str) -> Path:
    """Filesystem path of a data file shipped with the package."""
    return Path(str(files("tradecast.data") / name))


def resolve_path(value: str, base: Path | None = None) -> Path:
    """``bundled:<name>`` maps to package data; relative paths resolve against ``base``."""
    if value.startswith(BUNDLED_PREFIX):
        return bundled_path(value[len(BUNDLED_PREFIX):])
    p = Path(value)
    if base is not None and not p.is_absolute():
        p = base / p
    return p


@dataclass
class PipelineConfig:
    """Every knob of a run.  Field names double as config-file keys."""

    input_mode: str = "nrca"                  # "nrca" (years x categories) or "trade"
    input_path: str = "bundled:us_nrca.csv"
    country: str = "USA"
    categories: str = ""                      # comma list restricting the analysis
    chapters: str = ""                        # e.g. "50-67" (trade mode)
    hs_level: int = 4
    schema: str = ""                          # e.g. "reporter=rep,year=yr" (trade mode)
    window_start: int = 2010
    window_end: int = 2016
    min_run: int = 3
    threshold: float = 0.0
    train_end: int = 2015
    test_year: int = 2016
    horizon: int = 3
    alpha: float = 0.05
    adf_lag: int = 0
    max_d: int = 2
    p_max: int = 5
    q_max: int = 5
    candidates: str = "auto"                  # "auto" or a commodity,method,p,q CSV
    with_constant: bool = True
    lb_lag: int = 6
    critical: float = 2.6
    max_events: int = 5
    max_share: float = 0.02
    outlier_sigma: str = "regression"
    output_dir: str = "tradecast-out"
    format: str = "csv"
    plots: bool = True
    keep_going: bool = False
    workers: int = 1
    seed: int = 0
    base_dir: str = field(default="", repr=False)  # where relative paths resolve

    def validate(self) -> "PipelineConfig":
        """Check settings that do not need the data; raise ValidationError."""
        if self.input_mode not in ("nrca", "trade"):
            raise ValidationError(f"input_mode must be 'nrca' or 'trade', got {self.input_mode!r}")
        if self.test_year <= self.train_end:
            raise ValidationError(f"test_year ({self.test_year}) must come after train_end "
                                  f"({self.train_end})")
        if self.horizon < self.test_year - self.train_end:
            raise ValidationError("horizon does not reach the test year")
        if self.window_start > self.window_end:
            raise ValidationError("window_start is after window_end")
        if not 0.0 < self.alpha < 1.0:
            raise ValidationError("alpha must lie in (0, 1)")
        if self.critical <= 0:
            raise ValidationError("critical must be positive")
        for name in ("min_run", "max_d", "max_events", "lb_lag", "workers", "hs_level"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name} must be at least 1")
        if self.p_max < 0 or self.q_max < 0 or self.adf_lag < 0:
            raise ValidationError("p_max, q_max and adf_lag must be non-negative")
        if self.format not in ("csv", "txt"):
            raise ValidationError("format must be 'csv' or 'txt'")
        if self.outlier_sigma not in ("regression", "model", "mad"):
            raise ValidationError("outlier_sigma must be regression, model or mad")
        _parse_chapters(self.chapters)
        _parse_schema(self.schema)
        return self

    def path(self, value: str) -> Path:
        return resolve_path(value, Path(self.base_dir) if self.base_dir else None)

    def echo(self) -> dict:
        d = dataclasses.asdict(self)
        d.pop("base_dir")
        for key in ("input_path", "candidates"):
            if d[key] and d[key] != "auto" and not d[key].startswith(BUNDLED_PREFIX):
                d[key] = str(self.path(d[key]).resolve())
        return d


_FIELDS = {f.name: f for f in dataclasses.fields(PipelineConfig) if f.name != "base_dir"}


def _coerce(name: str, raw) -> object:
    kind = type(getattr(PipelineConfig(), name))
    if isinstance(raw, kind) and not (kind is int and isinstance(raw, bool)):
        return raw
    text = str(raw).strip()
    try:
        if kind is bool:
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        return kind(text)
    except ValueError:
        raise ValidationError(f"config key {name!r}: cannot read {text!r} as {kind.__name__}") from None


def _parse_chapters(text: str) -> list[int] | None:
    if not text.strip():
        return None
    out = []
    try:
        for part in text.split(","):
            a, _, b = part.strip().partition("-")
            out.extend(range(int(a), int(b or a) + 1))
    except ValueError:
        raise ValidationError(f"cannot read chapters {text!r}") from None
    return out


def _parse_schema(text: str) -> dict[str, str] | None:
    if not text.strip():
        return None
    out = {}
    for part in text.split(","):
        key, sep, val = part.partition("=")
        if not sep:
            raise ValidationError(f"schema entry {part!r} is not key=value")
        out[key.strip()] = val.strip()
    return out


def read_config_file(path) -> dict[str, str]:
    """Key-value pairs from an INI-style file; a section header is optional."""
    path = resolve_path(str(path))
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from None
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    if not text.lstrip().startswith("["):
        text = "[tradecast]\n" + text
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ValidationError(f"malformed config {path}: {exc}") from None
    out = {}
    for section in parser.sections():
        out.update(parser.items(section))
    return out


def env_overrides(environ: Mapping[str, str] | None = None) -> dict[str, str]:
    environ = os.environ if environ is None else environ
    out = {}
    for key, value in environ.items():
        if key.startswith(ENV_PREFIX):
            name = key[len(ENV_PREFIX):].lower()
            if name in _FIELDS:
                out[name] = value
    return out


def load_config(path=None, overrides: Mapping | None = None,
                environ: Mapping[str, str] | None = None) -> PipelineConfig:
    """Defaults, then ``path``, then environment, then ``overrides``; validated."""
    values: dict[str, object] = {}
    base = ""
    if path is not None:
        values.update(read_config_file(path))
        base = str(resolve_path(str(path)).resolve().parent)
    values.update(env_overrides(environ))
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    unknown = sorted(set(values) - set(_FIELDS))
    if unknown:
        raise ValidationError(f"unknown config keys: {', '.join(unknown)}")
    cfg = PipelineConfig(**{k: _coerce(k, v) for k, v in values.items()}, base_dir=base)
    return cfg.validate()


# ------------------------------------------------------------------ results

class StageError(TradecastError):
    """A module error tagged with the category and stage where it happened."""

    def __init__(self, category: str, stage: str, cause: Exception):
        super().__init__(f"{category}: {stage} failed: {cause}")
        self.category, self.stage, self.cause = category, stage, cause


@dataclass
class CategoryResult:
    commodity: str
    series: NrcaSeries
    test_year: int
    d: int | None = None
    adf_trail: list[AdfResult] = field(default_factory=list)
    candidates: list[OrderCandidate] = field(default_factory=list)
    fits: list[FittedModel] = field(default_factory=list)
    model: FittedModel | None = None
    diagnostics: DiagnosticsResult | None = None
    forecast: ForecastResult | None = None
    actual: float | None = None
    percent_error: float | None = None
    events: list[OutlierEvent] = field(default_factory=list)
    failed: str = ""


@dataclass
class ReportBundle:
    output_dir: Path
    tables: dict[str, Path]
    plots: dict[str, Path]
    manifest: Path | None
    results: list[CategoryResult]
    revealed: list


def load_candidates(path) -> dict[str, list[OrderCandidate]]:
    """Read ``commodity,method,p,q`` rows (``#`` comments allowed)."""
    out: dict[str, list[OrderCandidate]] = {}
    lines = [ln for ln in Path(path).read_text(encoding="utf-8").splitlines()
             if ln.strip() and not ln.startswith("#")]
    if not lines or lines[0].split(",")[:4] != ["commodity", "method", "p", "q"]:
        raise ValidationError(f"{path}: expected header commodity,method,p,q")
    for k, ln in enumerate(lines[1:], start=2):
        parts = [x.strip() for x in ln.split(",")]
        try:
            code, method, p, q = parts[0].removeprefix("HS"), parts[1], int(parts[2]), int(parts[3])
        except (IndexError, ValueError):
            raise ValidationError(f"{path}: bad candidate row {k}") from None
        out.setdefault(code, []).append(OrderCandidate(p, q, method))
    return out


def load_series(cfg: PipelineConfig) -> list[NrcaSeries]:
    path = cfg.path(cfg.input_path)
    if not path.exists():
        raise ValidationError(f"input file {path} does not exist")
    if cfg.input_mode == "nrca":
        series = read_nrca_table(path, country=cfg.country)
    else:
        records = parse_trade_csv(path, schema=_parse_schema(cfg.schema))
        panel = build_panel(records, hs_level=cfg.hs_level)
        problems = validate_panel(panel)
        if problems:
            head = "; ".join(f"{v.kind} {v.year} {v.cell}" for v in problems[:3])
            raise ValidationError(f"trade panel failed validation ({len(problems)} issues): {head}")
        if cfg.country not in panel.countries:
            raise ValidationError(f"country {cfg.country!r} not in the trade data")
        chapters = _parse_chapters(cfg.chapters)
        codes = panel.filter_chapters(chapters) if chapters else list(panel.commodities)
        series = [nrca_series(panel, cfg.country, c) for c in codes]
    if cfg.categories.strip():
        wanted = [c.strip().removeprefix("HS") for c in cfg.categories.split(",") if c.strip()]
        missing = sorted(set(wanted) - {s.commodity for s in series})
        if missing:
            raise ValidationError(f"categories not in the data: {', '.join(missing)}")
        series = [s for s in series if s.commodity in wanted]
    if not series:
        raise ValidationError("no series to analyse")
    first, last = series[0].years[0], series[0].years[-1]
    if not (first <= cfg.window_start and cfg.window_end <= last):
        raise WindowOutOfRange(f"screening window {cfg.window_start}-{cfg.window_end} "
                               f"outside data years {first}-{last}")
    if not first < cfg.train_end < last + 1 or cfg.test_year > last:
        raise WindowOutOfRange(f"train_end {cfg.train_end} / test_year {cfg.test_year} "
                               f"outside data years {first}-{last}")
    return series


def analyse(series: NrcaSeries, cfg: PipelineConfig, candidates=None,
            upto: str = "outliers") -> CategoryResult:
    """Box-Jenkins stages for one category, stopping after ``upto``."""
    last = STAGES.index(upto)
    res = CategoryResult(series.commodity, series, cfg.test_year)
    full = as_series(series)
    train = full.window(full.start_year, cfg.train_end)

    def stage(name, fn):
        try:
            return fn()
        except (TradecastError, ValueError, np.linalg.LinAlgError) as exc:
            raise StageError(series.commodity, name, exc) from exc

    res.d, res.adf_trail = stage("adf", lambda: difference_until_stationary(
        train, alpha=cfg.alpha, max_d=cfg.max_d, lag_order=cfg.adf_lag))
    if last < STAGES.index("identify"):
        return res
    if candidates is not None:
        if series.commodity not in candidates:
            raise StageError(series.commodity, "identify",
                             ValidationError("category missing from the candidates file"))
        res.candidates = candidates[series.commodity]
    else:
        res.candidates = stage("identify", lambda: tentative_orders(
            difference(train, res.d), d=res.d, p_max=cfg.p_max, q_max=cfg.q_max))
    if last < STAGES.index("fit"):
        return res
    res.model, res.fits = stage("fit", lambda: select_best(
        train, res.d, res.candidates, with_constant=cfg.with_constant))
    res.diagnostics = stage("fit", lambda: ljung_box(res.model, to_lag=cfg.lb_lag))
    if last < STAGES.index("forecast"):
        return res
    res.forecast = stage("forecast", lambda: forecast(res.model, cfg.horizon))
    if cfg.test_year in full.years:
        res.actual = float(full.values[cfg.test_year - full.start_year])
        e = res.forecast.at_year(cfg.test_year)
        res.percent_error = stage("forecast", lambda: percent_forecast_error(res.actual, e.point))
    if last < STAGES.index("outliers"):
        return res
    res.events = stage("outliers", lambda: detect(
        res.model, critical=cfg.critical, max_events=cfg.max_events,
        max_share=cfg.max_share, sigma=cfg.outlier_sigma))
    return res


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def versions() -> dict[str, str]:
    return {"tradecast": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__,
            "scikit-learn": sklearn.__version__, "df_surface": SURFACE_VERSION}


def run_pipeline(config: PipelineConfig, upto: str = "outliers",
                 manifest: bool = True) -> ReportBundle:
    """Run every stage up to ``upto`` and write the matching tables.

    Raises StageError naming the category and stage unless ``keep_going`` is
    set, in which case failing categories are logged and dropped.
    """
    if upto not in STAGES:
        raise ValidationError(f"unknown stage {upto!r}")
    cfg = config.validate()
    timings: dict[str, float] = {}
    t0 = time.perf_counter()
    series = load_series(cfg)
    cand = None
    if cfg.candidates.strip() and cfg.candidates.strip() != "auto":
        cpath = cfg.path(cfg.candidates.strip())
        if not cpath.exists():
            raise ValidationError(f"candidates file {cpath} does not exist")
        cand = load_candidates(cpath)
    timings["load"] = time.perf_counter() - t0

    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    tables: dict[str, Path] = {}
    plots: dict[str, Path] = {}

    def emit(table):
        tables[table.name] = table.write(out, cfg.format)

    if upto == "nrca":
        emit(report.nrca_table(series))
        return ReportBundle(out, tables, plots, None, [], [])

    t0 = time.perf_counter()
    revealed = screen_revealed(series, window=(cfg.window_start, cfg.window_end),
                               min_run=cfg.min_run, threshold=cfg.threshold)
    timings["screen"] = time.perf_counter() - t0
    by_code = {s.commodity: s for s in series}
    chosen = [by_code[c.commodity] for c in revealed]
    emit(report.revealed_table(revealed))
    if chosen:
        emit(report.nrca_table(chosen))
    if upto == "screen":
        return ReportBundle(out, tables, plots, None, [], revealed)

    def one(s):
        try:
            return analyse(s, cfg, cand, upto)
        except StageError as exc:
            if not cfg.keep_going:
                raise
            logger.warning("%s", exc)
            return CategoryResult(s.commodity, s, cfg.test_year, failed=f"{exc.stage}: {exc.cause}")

    t0 = time.perf_counter()
    if cfg.workers > 1 and len(chosen) > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(one, chosen))
    else:
        results = [one(s) for s in chosen]
    timings["models"] = time.perf_counter() - t0
    ok = [r for r in results if not r.failed]

    t0 = time.perf_counter()
    for t in report.adf_tables(ok):
        emit(t)
    if upto in ("identify", "fit", "forecast", "outliers"):
        emit(report.candidates_table(ok))
    if upto in ("fit", "forecast", "outliers"):
        emit(report.models_table(ok))
        emit(report.diagnostics_table(ok))
    if upto in ("forecast", "outliers"):
        emit(report.holdout_table(ok))
        emit(report.forecast_table(ok))
    if upto == "outliers":
        emit(report.outliers_table(ok))
        if cfg.plots:
            for r in ok:
                p = out / f"forecast_{r.commodity}.svg"
                report.emit_forecast_plot(r.series, r.model, r.forecast, r.events, p)
                plots[r.commodity] = p
    timings["emit"] = time.perf_counter() - t0

    mpath = None
    if manifest:
        mpath = out / "manifest.json"
        doc = {
            "config": cfg.echo(),
            "versions": versions(),
            "stage": upto,
            "input_sha256": _sha256(cfg.path(cfg.input_path)),
            "revealed": [c.commodity for c in revealed],
            "failed": {r.commodity: r.failed for r in results if r.failed},
            "outputs": {p.name: _sha256(p) for p in [*tables.values(), *plots.values()]},
            "timings_seconds": {k: round(v, 6) for k, v in timings.items()},
        }
        mpath.write_text(json.dumps(doc, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    return ReportBundle(out, tables, plots, mpath, results, revealed)


def config_from_manifest(path, output_dir: str | None = None) -> tuple[PipelineConfig, dict]:
    """Rebuild the config recorded in a run manifest."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        values = dict(doc["config"])
    except (OSError, ValueError, KeyError) as exc:
        raise ValidationError(f"cannot read manifest {path}: {exc}") from None
    if output_dir is not None:
        values["output_dir"] = output_dir
    cfg = PipelineConfig(**{k: _coerce(k, v) for k, v in values.items() if k in _FIELDS})
    return cfg.validate(), doc


def rerun_from_manifest(path, output_dir: str | None = None) -> tuple[ReportBundle, dict[str, bool]]:
    """Re-execute a recorded run and compare each output against its recorded hash."""
    cfg, doc = config_from_manifest(path, output_dir)
    if _sha256(cfg.path(cfg.input_path)) != doc.get("input_sha256"):
        logger.warning("input file differs from the recorded run")
    bundle = run_pipeline(cfg, upto=doc.get("stage", "outliers"))
    recorded = doc.get("outputs", {})
    current = {p.name: _sha256(p) for p in [*bundle.tables.values(), *bundle.plots.values()]}
    same = {name: current.get(name) == digest for name, digest in sorted(recorded.items())}
    return bundle, same
