"""Build the bundled raw-trade fixture ``src/tradecast/data/trade_fixture.csv``.

The world is synthetic: five reporters, six textile categories plus a few
other products, 1996-2016.  US exports of the six categories are solved
from the NRCA definition so that the full ingest -> NRCA path reproduces the
bundled US NRCA table (values x 1e6) to two decimals.  Every category has a
world share of 0.4% and the US a 10% share of world exports, so that

    x_usa_j = E * (nrca_j + 0.004 * 0.10)

US exports outside the six categories go to non-textile codes only.
Some codes are written at six digits and a ``WLD`` row is included for 5201
to exercise truncation and the World cross-check.
"""
from __future__ import annotations

import csv
from importlib import resources
from pathlib import Path

import numpy as np

from tradecast.nrca import read_nrca_table

OUT = Path(__file__).resolve().parents[1] / "src" / "tradecast" / "data" / "trade_fixture.csv"

PARTNERS = ["CHN", "DEU", "IND", "MEX"]
OTHER_CODES = ["5208", "6109", "2709", "8471", "8703"]
US_OTHER_CODES = ["2709", "8471", "8703"]   # no US exports of the extra textile codes
SPLIT_6 = {"5603": ("560311", "560392")}
WORLD_SHARE = 0.004
US_SHARE = 0.10


def main() -> None:
    table = read_nrca_table(resources.files("tradecast.data").joinpath("us_nrca.csv"))
    rng = np.random.default_rng(1996)
    rows = []
    for k, year in enumerate(table[0].years):
        total = 5.0e12 * 1.05 ** k
        us_total = US_SHARE * total
        us_tap = 0.0
        for s in table:
            world_j = WORLD_SHARE * total
            x = total * (s.values[k] + WORLD_SHARE * US_SHARE)
            us_tap += x
            rest = world_j - x
            weights = rng.dirichlet(np.ones(len(PARTNERS)))
            parts = [("USA", x)] + [(c, rest * w) for c, w in zip(PARTNERS, weights)]
            for reporter, value in parts:
                codes = SPLIT_6.get(s.commodity)
                if codes and reporter in ("USA", "CHN"):
                    rows.append((reporter, year, codes[0], 0.6 * value))
                    rows.append((reporter, year, codes[1], 0.4 * value))
                else:
                    rows.append((reporter, year, s.commodity, value))
            if s.commodity == "5201":
                rows.append(("WLD", year, "5201", world_j))
        us_other = us_total - us_tap
        rest_other = total * (1 - WORLD_SHARE * len(table)) - us_other
        for code, w in zip(US_OTHER_CODES, rng.dirichlet(np.ones(len(US_OTHER_CODES)))):
            rows.append(("USA", year, code, us_other * w))
        for c, wc in zip(PARTNERS, rng.dirichlet(np.ones(len(PARTNERS)))):
            for code, w in zip(OTHER_CODES, rng.dirichlet(np.ones(len(OTHER_CODES)))):
                rows.append((c, year, code, rest_other * wc * w))

    with OUT.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["reporter", "year", "hs_code", "export_value"])
        for reporter, year, code, value in rows:
            w.writerow([reporter, year, code, f"{round(value):d}"])
    print(f"wrote {len(rows)} rows to {OUT}")


if __name__ == "__main__":
    main()
