"""Product-level export CSV parsing and yearly trade panels.

A :class:`TradePanel` holds the four aggregates the NRCA index needs:
country-by-commodity exports, world exports per commodity, country totals
over all commodities, and the world total.  Aggregates are always built by
summation over the reporters in the file, never read from a "World" row.
"""
from __future__ import annotations

import csv
import io
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from .exceptions import GapInYears, MalformedRow, MissingColumn, NegativeValue, ValidationError

logger = logging.getLogger(__name__)

DEFAULT_SCHEMA = {
    "reporter": "reporter",
    "year": "year",
    "code": "hs_code",
    "value": "export_value",
}

WORLD_REPORTERS = frozenset({"WLD", "World", "WORLD", "W00", "0"})
TAP_CHAPTERS = range(50, 68)


@dataclass(frozen=True)
class TradeRecord:
    reporter: str
    year: int
    hs_code: str
    export_value: float

    def __post_init__(self):
        if not (self.hs_code.isdigit() and len(self.hs_code) in (4, 5, 6)):
            raise ValidationError(f"HS code must be 4-6 digits, got {self.hs_code!r}")
        if not self.export_value >= 0:
            raise NegativeValue(f"negative export value {self.export_value} for {self.reporter}/{self.year}/{self.hs_code}")


@dataclass
class TradePanel:
    years: list[int]
    countries: frozenset
    commodities: frozenset
    e_ij: dict = field(default_factory=dict)   # (year, country, commodity) -> amount
    e_j: dict = field(default_factory=dict)    # (year, commodity) -> world amount
    e_i: dict = field(default_factory=dict)    # (year, country) -> country total
    e: dict = field(default_factory=dict)      # year -> world total
    world_reported: dict = field(default_factory=dict)  # (year, commodity) -> "World" row, if any

    def filter_chapters(self, chapters: Iterable[int] = TAP_CHAPTERS) -> list[str]:
        """Commodity codes whose HS chapter is in ``chapters`` (sorted)."""
        keep = set(chapters)
        return sorted(c for c in self.commodities if int(c[:2]) in keep)


@dataclass(frozen=True)
class Violation:
    kind: str          # AggregateMismatch | NegativeValue | GapInYears | WorldMismatch
    year: int
    cell: tuple
    detail: str


def _resolve_schema(header: list[str], schema: Mapping[str, str]) -> dict[str, int]:
    cols = {}
    for role in ("reporter", "year", "code", "value"):
        name = schema.get(role, DEFAULT_SCHEMA[role])
        if name not in header:
            raise MissingColumn(f"column {name!r} (for {role}) not in header {header}")
        cols[role] = header.index(name)
    return cols


def parse_trade_csv(source, schema: Mapping[str, str] | None = None,
                    year_range: tuple[int, int] = (1900, 2100)) -> list[TradeRecord]:
    """Parse a UTF-8 export CSV into records, preserving row order.

    ``source`` may be a path, raw bytes, or a binary/text stream.  Row numbers
    in errors count the header as row 1.
    """
    schema = dict(DEFAULT_SCHEMA, **(schema or {}))
    if isinstance(source, (str, Path)):
        text = Path(source).read_text(encoding="utf-8-sig")
    elif isinstance(source, bytes):
        text = source.decode("utf-8-sig")
    else:
        data = source.read()
        text = data.decode("utf-8-sig") if isinstance(data, bytes) else data
    reader = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise MissingColumn("empty file: no header row") from None
    cols = _resolve_schema(header, schema)

    records = []
    for rownum, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        try:
            reporter = row[cols["reporter"]].strip()
            year_txt = row[cols["year"]].strip()
            code = row[cols["code"]].strip()
            value_txt = row[cols["value"]].strip()
        except IndexError:
            raise MalformedRow(rownum, "too few fields") from None
        try:
            year = int(year_txt)
        except ValueError:
            raise MalformedRow(rownum, f"bad year {year_txt!r}") from None
        if not year_range[0] <= year <= year_range[1]:
            raise MalformedRow(rownum, f"year {year} outside {year_range[0]}-{year_range[1]}")
        try:
            value = float(value_txt)
        except ValueError:
            raise MalformedRow(rownum, f"non-numeric value {value_txt!r}") from None
        if not math.isfinite(value):
            raise MalformedRow(rownum, f"non-finite value {value_txt!r}")
        if not (code.isdigit() and len(code) in (4, 5, 6)):
            raise MalformedRow(rownum, f"bad HS code {code!r}")
        if value < 0:
            raise NegativeValue(f"row {rownum}: negative export value {value}")
        records.append(TradeRecord(reporter, year, code, value))
    return records


def build_panel(records: Iterable[TradeRecord], hs_level: int = 4) -> TradePanel:
    """Aggregate records to ``hs_level``-digit codes and derive all totals."""
    if hs_level != 4:
        raise ValidationError("only 4-digit aggregation is supported")
    records = list(records)
    if not records:
        raise ValidationError("no trade records")

    cells: dict = defaultdict(list)
    world: dict = defaultdict(list)
    for rec in records:
        if rec.export_value < 0:
            raise NegativeValue(f"negative export value for {rec}")
        key = (rec.year, rec.hs_code[:hs_level])
        if rec.reporter in WORLD_REPORTERS:
            world[key].append(rec.export_value)
        else:
            cells[(rec.year, rec.reporter, rec.hs_code[:hs_level])].append(rec.export_value)

    years_present = {k[0] for k in cells}
    if not years_present:
        raise ValidationError("only World rows present; nothing to aggregate")
    lo, hi = min(years_present), max(years_present)
    for y in range(lo, hi + 1):
        if y not in years_present:
            raise GapInYears(y)

    # fixed summation order keeps the panel bit-identical under record shuffles
    e_ij = {k: math.fsum(sorted(v)) for k, v in sorted(cells.items())}
    acc_j: dict = defaultdict(list)
    acc_i: dict = defaultdict(list)
    acc: dict = defaultdict(list)
    for (y, c, j), v in e_ij.items():
        acc_j[(y, j)].append(v)
        acc_i[(y, c)].append(v)
        acc[y].append(v)
    e_j = {k: math.fsum(v) for k, v in sorted(acc_j.items())}
    e_i = {k: math.fsum(v) for k, v in sorted(acc_i.items())}
    e = {k: math.fsum(v) for k, v in sorted(acc.items())}

    return TradePanel(
        years=list(range(lo, hi + 1)),
        countries=frozenset(c for _, c, _ in e_ij),
        commodities=frozenset(j for _, _, j in e_ij),
        e_ij=e_ij, e_j=e_j, e_i=e_i, e=e,
        world_reported={k: math.fsum(sorted(v)) for k, v in sorted(world.items())},
    )


def _close(a: float, b: float, rtol: float) -> bool:
    return abs(a - b) <= rtol * max(abs(a), abs(b), 1e-300)


def validate_panel(panel: TradePanel, rtol: float = 1e-9) -> list[Violation]:
    """Check every aggregate identity; returns violations, never raises."""
    out: list[Violation] = []
    years = sorted(panel.years)
    for prev, cur in zip(years, years[1:]):
        for missing in range(prev + 1, cur):
            out.append(Violation("GapInYears", missing, (), "year missing from panel"))

    for key, v in sorted(panel.e_ij.items()):
        if v < 0:
            out.append(Violation("NegativeValue", key[0], key, f"e_ij={v}"))
    for key, v in sorted(panel.e_j.items()):
        if v < 0:
            out.append(Violation("NegativeValue", key[0], key, f"e_j={v}"))
    for key, v in sorted(panel.e_i.items()):
        if v < 0:
            out.append(Violation("NegativeValue", key[0], key, f"e_i={v}"))

    sum_j: dict = defaultdict(list)
    sum_i: dict = defaultdict(list)
    sum_all: dict = defaultdict(list)
    for (y, c, j), v in panel.e_ij.items():
        sum_j[(y, j)].append(v)
        sum_i[(y, c)].append(v)
        sum_all[y].append(v)
    for key, v in sorted(panel.e_j.items()):
        if not _close(v, math.fsum(sum_j.get(key, [])), rtol):
            out.append(Violation("AggregateMismatch", key[0], key, "e_j != sum_i e_ij"))
    for key, v in sorted(panel.e_i.items()):
        if not _close(v, math.fsum(sum_i.get(key, [])), rtol):
            out.append(Violation("AggregateMismatch", key[0], key, "e_i != sum_j e_ij"))
    for y in years:
        total = panel.e.get(y)
        if total is None:
            out.append(Violation("AggregateMismatch", y, (y,), "world total missing"))
            continue
        by_j = math.fsum(v for (yy, _), v in panel.e_j.items() if yy == y)
        by_i = math.fsum(v for (yy, _), v in panel.e_i.items() if yy == y)
        by_ij = math.fsum(sum_all.get(y, []))
        if not (_close(total, by_j, rtol) and _close(total, by_i, rtol) and _close(total, by_ij, rtol)):
            out.append(Violation("AggregateMismatch", y, (y,), "e != sum of e_j / e_i / e_ij"))

    for key, v in sorted(panel.world_reported.items()):
        if key in panel.e_j and not _close(v, panel.e_j[key], 1e-6):
            out.append(Violation("WorldMismatch", key[0], key,
                                 f"World row {v} vs reporter sum {panel.e_j[key]}"))
    return out


def write_panel_csv(panel: TradePanel, out_dir) -> dict[str, Path]:
    """Write one CSV per aggregate map; returns name -> path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    specs = {
        "e_ij": (["year", "reporter", "hs_code", "export_value"], panel.e_ij),
        "e_j": (["year", "hs_code", "export_value"], panel.e_j),
        "e_i": (["year", "reporter", "export_value"], panel.e_i),
        "e": (["year", "export_value"], {(k,): v for k, v in panel.e.items()}),
    }
    paths = {}
    for name, (header, data) in specs.items():
        path = out_dir / f"panel_{name}.csv"
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for key, v in sorted(data.items()):
                w.writerow([*key, repr(float(v))])
        paths[name] = path
    return paths
