"""Normalized revealed comparative advantage.

    NRCA(i, j) = E_j^i / E  -  E_j * E^i / E**2

The index is zero when a country's share of commodity j equals its share of
total trade, and it sums to zero both across commodities (per country) and
across countries (per commodity).  Values are kept raw; the conventional
display scaling of 1e6 is applied only by the table writers.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .exceptions import (GapInYears, MalformedRow, MissingCell, ValidationError, WindowOutOfRange,
                         ZeroWorldTrade)
from .ingest import TradePanel

DISPLAY_SCALE = 1e6


@dataclass(frozen=True)
class NrcaSeries:
    country: str
    commodity: str
    years: tuple
    values: np.ndarray

    def __post_init__(self):
        years = tuple(int(y) for y in self.years)
        values = np.asarray(self.values, dtype=float)
        if len(years) != values.size:
            raise ValidationError("years and values differ in length")
        if any(b - a != 1 for a, b in zip(years, years[1:])):
            raise ValidationError("years must be consecutive")
        if not np.all(np.isfinite(values)):
            raise ValidationError("NRCA values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "years", years)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return len(self.years)

    @property
    def start_year(self) -> int:
        return self.years[0]

    def value_at(self, year: int) -> float:
        return float(self.values[year - self.years[0]])

    def scaled(self) -> np.ndarray:
        return self.values * DISPLAY_SCALE


def nrca_value(panel: TradePanel, country: str, commodity: str, year: int) -> float:
    total = panel.e.get(year)
    if total is None:
        raise MissingCell(f"no world total for {year}")
    if total <= 0:
        raise ZeroWorldTrade(f"world exports are zero in {year}")
    try:
        e_j = panel.e_j[(year, commodity)]
        e_i = panel.e_i[(year, country)]
    except KeyError as exc:
        raise MissingCell(f"missing aggregate {exc.args[0]}") from None
    e_ij = panel.e_ij.get((year, country, commodity), 0.0)
    return e_ij / total - (e_j / total) * (e_i / total)


def nrca_series(panel: TradePanel, country: str, commodity: str) -> NrcaSeries:
    if len(panel.years) < 2:
        raise ValidationError("panel must cover at least two years")
    years = sorted(panel.years)
    return NrcaSeries(country, commodity, tuple(years),
                      np.array([nrca_value(panel, country, commodity, y) for y in years]))


def nrca_matrix(panel: TradePanel, year: int) -> tuple[list[str], list[str], np.ndarray]:
    """All NRCA values for one year as a countries x commodities array."""
    countries = sorted(panel.countries)
    commodities = sorted(panel.commodities)
    mat = np.array([[nrca_value(panel, c, j, year) for j in commodities] for c in countries])
    return countries, commodities, mat


@dataclass(frozen=True)
class RevealedCategory:
    commodity: str
    run: tuple          # (first_year, last_year) of the longest qualifying run
    mean_nrca: float    # mean over the screening window


def _longest_run(mask: np.ndarray) -> tuple[int, int]:
    best, start, best_span = 0, None, (0, -1)
    for i, flag in enumerate(mask):
        if flag:
            start = i if start is None else start
            if i - start + 1 > best:
                best, best_span = i - start + 1, (start, i)
        else:
            start = None
    return best_span


def screen_revealed(series_set: Iterable[NrcaSeries], window: tuple[int, int] = (2010, 2016),
                    min_run: int = 3, threshold: float = 0.0) -> list[RevealedCategory]:
    """Commodities whose NRCA exceeds ``threshold`` for ``min_run`` consecutive
    years inside ``window``; sorted by window mean, highest first."""
    if min_run < 1:
        raise ValidationError("min_run must be >= 1")
    first, last = window
    out = []
    for s in series_set:
        if first < s.years[0] or last > s.years[-1] or last < first:
            raise WindowOutOfRange(f"window {first}-{last} outside {s.years[0]}-{s.years[-1]} for {s.commodity}")
        vals = s.values[first - s.years[0]:last - s.years[0] + 1]
        lo, hi = _longest_run(vals > threshold)
        if hi - lo + 1 >= min_run:
            out.append(RevealedCategory(s.commodity, (first + lo, first + hi), float(vals.mean())))
    out.sort(key=lambda r: (-r.mean_nrca, r.commodity))
    return out


def read_nrca_table(source, country: str = "USA", scale: float = DISPLAY_SCALE) -> list[NrcaSeries]:
    """Read a years x commodities CSV (first column ``year``) of scaled NRCA.

    Lines starting with ``#`` are ignored.  Values are divided by ``scale``.
    """
    if isinstance(source, (str, Path)):
        text = Path(source).read_text(encoding="utf-8")
    else:
        text = source.read()
        text = text.decode("utf-8") if isinstance(text, bytes) else text
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    rows = list(csv.reader(lines))
    if len(rows) < 2:
        raise ValidationError("NRCA table has no data rows")
    header = [h.strip() for h in rows[0]]
    if header[0].lower() != "year" or len(header) < 2:
        raise ValidationError("an NRCA table needs a 'year' column and at least one category")
    years, data = [], []
    for k, r in enumerate(rows[1:], start=2):
        if len(r) != len(header):
            raise MalformedRow(k, f"expected {len(header)} fields, got {len(r)}")
        try:
            years.append(int(r[0]))
            data.append([float(x) for x in r[1:]])
        except ValueError as exc:
            raise MalformedRow(k, str(exc)) from None
    if np.any(np.diff(years) != 1):
        raise GapInYears(next(a + 1 for a, y in zip(years, years[1:]) if y != a + 1))
    data = np.array(data)
    return [NrcaSeries(country, code.removeprefix("HS"), tuple(years), data[:, k] / scale)
            for k, code in enumerate(header[1:])]


def write_nrca_table(series: Sequence[NrcaSeries], dest=None, decimals: int = 2) -> str:
    """Years x commodities CSV with values scaled by 1e6."""
    years = series[0].years
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["year", *[s.commodity for s in series]])
    for k, y in enumerate(years):
        w.writerow([y, *[f"{s.values[k] * DISPLAY_SCALE:.{decimals}f}" for s in series]])
    text = buf.getvalue()
    if dest is not None:
        Path(dest).write_text(text)
    return text
