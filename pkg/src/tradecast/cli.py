"""Command-line entry point.

Exit status is 0 on success, 1 when inputs or settings are invalid and 2 when
a computation fails.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .exceptions import TradecastError, ValidationError
from .pipeline import ENV_PREFIX, StageError, load_config, rerun_from_manifest, run_pipeline

EXIT_OK, EXIT_INVALID, EXIT_FAILED = 0, 1, 2

logger = logging.getLogger("tradecast")


class _Parser(argparse.ArgumentParser):
    """Usage mistakes are validation errors, so they exit with status 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _global_options(parser, suppress: bool):
    default = argparse.SUPPRESS if suppress else None
    g = parser.add_argument_group("global options")
    g.add_argument("--config", default=default, help="key = value settings file "
                   "('bundled:reference.cfg' selects the packaged reference run)")
    g.add_argument("--out", default=default, help="output directory")
    g.add_argument("--seed", type=int, default=default, help="seed for the self-test simulations")
    g.add_argument("--format", choices=("csv", "txt"), default=default, help="table format")
    g.add_argument("--set", action="append", metavar="KEY=VALUE", default=default,
                   help="override any config key (repeatable)")
    g.add_argument("-v", "--verbose", action="count", default=argparse.SUPPRESS if suppress else 0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tradecast", description=__doc__.splitlines()[0],
                     epilog=f"Any config key can also be set with an {ENV_PREFIX}<KEY> "
                            "environment variable.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _global_options(parser, suppress=False)
    common = _Parser(add_help=False)
    _global_options(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ingest", parents=[common], help="parse and validate a raw trade CSV")
    p.add_argument("input", help="trade CSV (reporter,year,hs_code,export_value)")
    p.add_argument("--schema", help="column mapping, e.g. reporter=rep,value=usd")
    p.add_argument("--hs-level", type=int, default=4)

    helps = {
        "nrca": "write the NRCA table for every category",
        "screen": "list revealed categories",
        "adf": "unit-root tests (levels and differences)",
        "identify": "tentative ARMA orders",
        "fit": "select models and check residuals",
        "forecast": "holdout check and forecasts",
        "outliers": "AO/LS detection and plots",
        "run": "full pipeline with a run manifest",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("input", nargs="?", help="input file (overrides input_path)")
        p.add_argument("--mode", choices=("nrca", "trade"), help="input_mode")
        p.add_argument("--country", help="focal reporter")
        p.add_argument("--candidates", help="candidate orders CSV or 'auto'")
        p.add_argument("--critical", type=float, help="outlier critical value")

    p = sub.add_parser("report", parents=[common],
                       help="re-run a recorded run and check its outputs byte for byte")
    p.add_argument("manifest", help="manifest.json written by 'run'")

    p = sub.add_parser("selftest", parents=[common], help="seeded simulation sanity checks")
    p.add_argument("--reps", type=int, default=10)
    return parser


def _overrides(args) -> dict:
    out = {}
    for item in getattr(args, "set", None) or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ValidationError(f"--set expects KEY=VALUE, got {item!r}")
        out[key.strip()] = value.strip()
    mapping = {"out": "output_dir", "format": "format", "seed": "seed", "input": "input_path",
               "mode": "input_mode", "country": "country", "candidates": "candidates",
               "critical": "critical"}
    for attr, key in mapping.items():
        value = getattr(args, attr, None)
        if value is not None:
            out[key] = value
    return out


def _cmd_ingest(args) -> int:
    from .ingest import build_panel, parse_trade_csv, validate_panel, write_panel_csv
    from .pipeline import _parse_schema

    records = parse_trade_csv(args.input, schema=_parse_schema(args.schema or ""))
    panel = build_panel(records, hs_level=args.hs_level)
    out = Path(getattr(args, "out", None) or "tradecast-out")
    out.mkdir(parents=True, exist_ok=True)
    for path in write_panel_csv(panel, out).values():
        print(path)
    problems = validate_panel(panel)
    for v in problems:
        print(f"{v.kind}\t{v.year}\t{v.cell}\t{v.detail}", file=sys.stderr)
    print(f"{len(records)} records, {len(panel.countries)} countries, "
          f"{len(panel.commodities)} categories, {len(panel.years)} years")
    return EXIT_INVALID if problems else EXIT_OK


def _cmd_stage(args) -> int:
    cfg = load_config(getattr(args, "config", None), _overrides(args))
    upto = "outliers" if args.command == "run" else args.command
    bundle = run_pipeline(cfg, upto=upto, manifest=args.command == "run")
    for path in [*bundle.tables.values(), *bundle.plots.values()]:
        print(path)
    if bundle.manifest is not None:
        print(bundle.manifest)
    failed = [r for r in bundle.results if r.failed]
    for r in failed:
        print(f"warning: {r.commodity} skipped ({r.failed})", file=sys.stderr)
    return EXIT_OK


def _cmd_report(args) -> int:
    bundle, same = rerun_from_manifest(args.manifest, getattr(args, "out", None))
    for name, ok in same.items():
        print(f"{'match' if ok else 'DIFFERS'}\t{name}")
    return EXIT_OK if all(same.values()) else EXIT_FAILED


def _cmd_selftest(args) -> int:
    from .arima import ArimaSpec, fit
    from .outliers import detect
    from .stationarity import adf_test

    seed = getattr(args, "seed", None) or 0
    reps = args.reps
    rng = np.random.default_rng(seed)
    walk_reject = stat_reject = hits = 0
    ar2 = []
    for _ in range(reps):
        e = rng.standard_normal(120)
        walk_reject += adf_test(np.cumsum(e)).stationary
        x = np.zeros(120)
        for t in range(1, 120):
            x[t] = 0.5 * x[t - 1] + e[t]
        stat_reject += adf_test(x).stationary
        y = np.zeros(550)
        e2 = rng.standard_normal(550)
        for t in range(2, 550):
            y[t] = 0.5 * y[t - 1] + 0.3 * y[t - 2] + e2[t]
        ar2.append(fit(y[50:], ArimaSpec(2, 0, 0)).ar)
        z = x[20:].copy()
        z[50] += 8.0
        events = detect(fit(z, ArimaSpec(1, 0, 0)), critical=3.0)
        hits += bool(events) and events[0].kind == "AO" and events[0].index == 50
    ar2 = np.mean(ar2, axis=0)
    print(f"seed {seed}, {reps} replications")
    print(f"ADF rejects on random walks:        {walk_reject}/{reps}")
    print(f"ADF rejects on AR(1) phi=0.5:       {stat_reject}/{reps}")
    print(f"mean AR(2) estimate (0.5, 0.3):     ({ar2[0]:.3f}, {ar2[1]:.3f})")
    print(f"8 sigma AO recovered at its index:  {hits}/{reps}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(getattr(args, "verbose", 0) or 0, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    handlers = {"ingest": _cmd_ingest, "report": _cmd_report, "selftest": _cmd_selftest}
    try:
        return handlers.get(args.command, _cmd_stage)(args)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID if isinstance(exc.cause, ValidationError) else EXIT_FAILED
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (TradecastError, OSError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
