"""Table and plot emitters.

Values are kept at full precision until they reach this module; formatting to
two or three decimals happens here only.  Every table has a fixed header so
downstream consumers can rely on column names.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

from .nrca import DISPLAY_SCALE

UP, DOWN, SAME = "▲", "▼", "■"

HEADERS = {
    "nrca": None,  # year followed by one column per category
    "adf_levels": ["category", "tau", "pr_lt_tau", "decision", "differencing_period"],
    "adf_differenced": ["category", "tau", "pr_lt_tau", "decision", "differencing_period"],
    "candidates": ["category", "method", "p", "q", "score"],
    "models": ["category", "p", "d", "q", "aic", "converged"],
    "diagnostics": ["category", "model", "to_lag", "chi_square", "df", "pr_gt_chisq"],
    "holdout": ["category", "year", "actual", "forecast", "std_error",
                             "lower_95", "upper_95", "percent_error"],
    "forecast": ["category", "year", "forecast", "std_error", "lower_95", "upper_95",
                        "direction"],
    "outliers": ["category", "additive_outlier", "level_shift"],
    "revealed": ["category", "run_start", "run_end", "mean_nrca"],
}


@dataclass
class Table:
    name: str
    header: list[str]
    rows: list[list[str]] = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header)
        w.writerows(self.rows)
        return buf.getvalue()

    def to_text(self) -> str:
        cells = [self.header, *self.rows]
        widths = [max(len(r[i]) for r in cells) for i in range(len(self.header))]
        lines = []
        for k, r in enumerate(cells):
            # left-align the first column, right-align the rest
            parts = [r[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(r[1:], widths[1:])]
            lines.append("  ".join(parts).rstrip())
            if k == 0:
                lines.append("  ".join("-" * w for w in widths))
        return "\n".join(lines) + "\n"

    def write(self, out_dir, fmt: str = "csv") -> Path:
        if fmt not in ("csv", "txt"):
            raise ValueError(f"unknown format {fmt!r}")
        path = Path(out_dir) / f"{self.name}.{fmt}"
        text = self.to_csv() if fmt == "csv" else self.to_text()
        path.write_text(text, encoding="utf-8")
        return path


def _f(x: float, decimals: int) -> str:
    if x is None or not np.isfinite(x):
        return "NA"
    s = f"{x:.{decimals}f}"
    # avoid "-0.00"
    return s[1:] if s.startswith("-") and float(s) == 0.0 else s


def direction_glyph(previous: float, current: float, decimals: int = 2) -> str:
    """Up, down or level glyph, compared at display precision."""
    a, b = float(_f(previous, decimals)), float(_f(current, decimals))
    if b > a:
        return UP
    if b < a:
        return DOWN
    return SAME


def nrca_table(series, decimals: int = 2) -> Table:
    years = series[0].years
    rows = [[str(y), *[_f(s.values[k] * DISPLAY_SCALE, decimals) for s in series]]
            for k, y in enumerate(years)]
    return Table("nrca", ["year", *[s.commodity for s in series]], rows)


def revealed_table(categories) -> Table:
    rows = [[c.commodity, str(c.run[0]), str(c.run[1]), _f(c.mean_nrca * DISPLAY_SCALE, 2)]
            for c in categories]
    return Table("revealed", HEADERS["revealed"], rows)


def _adf_rows(results, levels: bool):
    rows = []
    for r in results:
        trail = r.adf_trail[:1] if levels else r.adf_trail[1:]
        for d, a in enumerate(trail, start=0 if levels else 1):
            rows.append([r.commodity, _f(a.tau, 2), _f(a.p_value, 4),
                         "stationary" if a.stationary else "non-stationary", str(d)])
    return rows


def adf_tables(results) -> tuple[Table, Table]:
    return (Table("adf_levels", HEADERS["adf_levels"], _adf_rows(results, True)),
            Table("adf_differenced", HEADERS["adf_differenced"],
                  _adf_rows(results, False)))


def candidates_table(results) -> Table:
    rows = []
    for r in results:
        for c in r.candidates:
            rows.append([r.commodity, c.source, str(c.p), str(c.q), _f(c.score, 4)])
    return Table("candidates", HEADERS["candidates"], rows)


def display_aic(model, scale: float = DISPLAY_SCALE) -> float:
    """AIC of the same fit had the data been expressed in display units."""
    return model.aic + 2.0 * model.nobs * math.log(scale)


def models_table(results, scale: float = DISPLAY_SCALE) -> Table:
    rows = []
    for r in results:
        p, d, q = r.model.spec.order
        rows.append([r.commodity, str(p), str(d), str(q), _f(display_aic(r.model, scale), 2),
                     "yes" if r.model.converged else "no"])
    return Table("models", HEADERS["models"], rows)


def diagnostics_table(results) -> Table:
    rows = []
    for r in results:
        g = r.diagnostics
        rows.append([r.commodity, f"({','.join(map(str, r.model.spec.order))})", str(g.to_lag),
                     _f(g.chi_square, 2), str(g.df), _f(g.p_value, 4)])
    return Table("diagnostics", HEADERS["diagnostics"], rows)


def holdout_table(results, scale: float = DISPLAY_SCALE) -> Table:
    rows = []
    for r in results:
        e = r.forecast.at_year(r.test_year)
        actual = r.actual if r.actual is not None else float("nan")
        rows.append([r.commodity, str(e.year), _f(actual * scale, 3), _f(e.point * scale, 3),
                     _f(e.stderr * scale, 3), _f(e.lo95 * scale, 3), _f(e.hi95 * scale, 3),
                     _f(r.percent_error if r.percent_error is not None else float("nan"), 2)])
    return Table("holdout", HEADERS["holdout"], rows)


def forecast_table(results, scale: float = DISPLAY_SCALE) -> Table:
    """Forecasts beyond the test year with a direction glyph against the prior value.

    The first year is compared with the test-year actual when it is known.
    """
    rows = []
    for r in results:
        prev = r.actual if r.actual is not None else r.forecast.at_year(r.test_year).point
        for e in r.forecast:
            if e.year <= r.test_year:
                continue
            rows.append([r.commodity, str(e.year), _f(e.point * scale, 2), _f(e.stderr * scale, 2),
                         _f(e.lo95 * scale, 2), _f(e.hi95 * scale, 2),
                         direction_glyph(prev * scale, e.point * scale)])
            prev = e.point
    return Table("forecast", HEADERS["forecast"], rows)


def outliers_table(results) -> Table:
    rows = []
    for r in results:
        ao = ";".join(str(e.year) for e in r.events if e.kind == "AO") or "-"
        ls = ";".join(str(e.year) for e in r.events if e.kind == "LS") or "-"
        rows.append([r.commodity, ao, ls])
    return Table("outliers", HEADERS["outliers"], rows)


# ---------------------------------------------------------------- plotting

_W, _H = 640, 360
_M = dict(left=60, right=20, top=36, bottom=40)


def emit_forecast_plot(series, model, forecasts, events: Sequence, path=None,
                       scale: float = DISPLAY_SCALE) -> str:
    """SVG line chart of a series with forecasts, a 95% band and event markers.

    Level shifts are drawn as circles and additive outliers as squares at the
    observed value of the event year.  No other element uses ``circle`` or
    ``rect``, so marker counts can be read straight from the document.
    """
    years = np.asarray(series.years, dtype=int)
    values = np.asarray(series.values, dtype=float) * scale
    f_years = np.array([e.year for e in forecasts], dtype=int)
    f_pts = np.array([e.point for e in forecasts], dtype=float) * scale
    f_lo = np.array([e.lo95 for e in forecasts], dtype=float) * scale
    f_hi = np.array([e.hi95 for e in forecasts], dtype=float) * scale

    x0, x1 = int(min(years.min(), f_years.min())), int(max(years.max(), f_years.max()))
    lo = float(min(values.min(), f_lo.min()))
    hi = float(max(values.max(), f_hi.max()))
    if hi == lo:
        hi, lo = hi + 1.0, lo - 1.0
    pad = 0.05 * (hi - lo)
    lo, hi = lo - pad, hi + pad
    pw = _W - _M["left"] - _M["right"]
    ph = _H - _M["top"] - _M["bottom"]

    def sx(y):
        return _M["left"] + (pw * (y - x0) / (x1 - x0) if x1 > x0 else pw / 2)

    def sy(v):
        return _M["top"] + ph * (hi - v) / (hi - lo)

    def pts(xs, ys):
        return " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(xs, ys))

    origin_year = model.series.end_year
    origin_val = float(model.series.values[-1]) * scale
    band_x = np.r_[origin_year, f_years]
    band = pts(band_x, np.r_[origin_val, f_hi]) + " " + pts(band_x[::-1], np.r_[origin_val, f_lo][::-1])

    name = getattr(series, "commodity", "series")
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="11">',
        f"<title>{escape(str(name))} NRCA forecast</title>",
        f'<text x="{_W / 2:.1f}" y="20" text-anchor="middle" font-size="14">'
        f"HS{escape(str(name))} NRCA (x1e6)</text>",
        f'<path class="axis" d="M{_M["left"]},{_M["top"]} V{_H - _M["bottom"]} '
        f'H{_W - _M["right"]}" fill="none" stroke="#444"/>',
    ]
    for v in np.linspace(lo + pad, hi - pad, 5):
        out.append(f'<text x="{_M["left"] - 6}" y="{sy(v) + 4:.2f}" text-anchor="end">{v:.1f}</text>')
    step = max(1, int(math.ceil((x1 - x0) / 10)))
    for y in range(x0, x1 + 1, step):
        out.append(f'<text x="{sx(y):.2f}" y="{_H - _M["bottom"] + 16}" '
                   f'text-anchor="middle">{y}</text>')
    out.append(f'<polygon class="band" points="{band}" fill="#9ecae1" fill-opacity="0.4" stroke="none"/>')
    out.append(f'<polyline class="history" points="{pts(years, values)}" fill="none" '
               f'stroke="#08519c" stroke-width="1.5"/>')
    out.append(f'<polyline class="forecast" points="{pts(band_x, np.r_[origin_val, f_pts])}" '
               f'fill="none" stroke="#d95f0e" stroke-dasharray="4 3"/>')
    for a, b in zip(f_years, f_pts):
        cx, cy = sx(a), sy(b)
        out.append(f'<path class="forecast-point" d="M{cx:.2f},{cy - 4:.2f} L{cx + 4:.2f},{cy:.2f} '
                   f'L{cx:.2f},{cy + 4:.2f} L{cx - 4:.2f},{cy:.2f} Z" fill="#d95f0e"/>')
    lookup = dict(zip(years.tolist(), values.tolist()))
    for ev in events:
        if ev.year not in lookup:
            continue
        cx, cy = sx(ev.year), sy(lookup[ev.year])
        if ev.kind == "LS":
            out.append(f'<circle class="event-ls" cx="{cx:.2f}" cy="{cy:.2f}" r="7" '
                       f'fill="none" stroke="#cb181d" stroke-width="2"/>')
        else:
            out.append(f'<rect class="event-ao" x="{cx - 6:.2f}" y="{cy - 6:.2f}" width="12" '
                       f'height="12" fill="none" stroke="#cb181d" stroke-width="2"/>')
    out.append("</svg>")
    text = "\n".join(out) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text
