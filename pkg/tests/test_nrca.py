import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from tradecast.exceptions import MissingCell, WindowOutOfRange, ZeroWorldTrade
from tradecast.ingest import TradeRecord, build_panel, parse_trade_csv
from tradecast.nrca import (NrcaSeries, nrca_matrix, nrca_series, nrca_value, read_nrca_table,
                            screen_revealed, write_nrca_table)
from tradecast.pipeline import bundled_path

from oracles import US_NRCA, YEARS, nrca_brute


def random_records(seed, countries=3, commodities=4, years=5, scale=1.0):
    rng = np.random.default_rng(seed)
    out = []
    for y in range(2000, 2000 + years):
        for c in range(countries):
            for j in range(commodities):
                out.append((f"C{c}", y, f"{5201 + j}", float(rng.uniform(1, 1e6)) * scale))
    return out


def panel_of(rows):
    return build_panel([TradeRecord(*r) for r in rows])


def test_identical_share_structure_is_neutral():
    p = panel_of([("A", 2000, "5201", 10.0), ("A", 2000, "5502", 20.0),
                  ("B", 2000, "5201", 20.0), ("B", 2000, "5502", 40.0)])
    _, _, m = nrca_matrix(p, 2000)
    assert_allclose(m, 0.0, atol=1e-15)


def test_matches_brute_force_oracle():
    rows = random_records(42)
    p = panel_of(rows)
    for y in p.years:
        for c in sorted(p.countries):
            for j in sorted(p.commodities):
                assert_allclose(nrca_value(p, c, j, y), nrca_brute(rows, c, j, y), rtol=1e-12)


@pytest.fixture(scope="module")
def fixture_panel():
    return build_panel(parse_trade_csv(bundled_path("trade_fixture.csv")))


def test_fixture_cell_5201_1996(fixture_panel):
    assert_allclose(nrca_value(fixture_panel, "USA", "5201", 1996) * 1e6, 474.32, atol=5e-3)


def test_fixture_series_6309(fixture_panel):
    s = nrca_series(fixture_panel, "USA", "6309")
    assert len(s) == len(fixture_panel.years)
    assert_allclose(s.scaled(), US_NRCA["6309"], atol=5e-3)
    assert s.years[0] == 1996 and s.years[-1] == 2016


def test_fixture_reproduces_us_series(fixture_panel):
    for code, col in US_NRCA.items():
        assert_allclose(nrca_series(fixture_panel, "USA", code).scaled(), col, atol=5e-3)


def test_constant_shares_give_zero_series():
    rows = [(c, y, j, base * (1.1 ** (y - 2000)))
            for y in range(2000, 2005)
            for c, k in (("A", 1.0), ("B", 3.0))
            for j, base in (("5201", 2.0 * k), ("5502", 5.0 * k))]
    s = nrca_series(panel_of(rows), "A", "5201")
    assert len(s) == 5
    assert_allclose(s.values, 0.0, atol=1e-15)


def test_missing_cell_and_zero_world():
    p = panel_of([("A", 2000, "5201", 1.0), ("A", 2001, "5201", 1.0)])
    with pytest.raises(MissingCell):
        nrca_value(p, "Z", "5201", 2000)
    p.e[2000] = 0.0
    with pytest.raises(ZeroWorldTrade):
        nrca_value(p, "A", "5201", 2000)


def _us_series():
    return read_nrca_table(bundled_path("us_nrca.csv"))


def test_screen_us_all_six():
    got = screen_revealed(_us_series(), (2010, 2016), 3, 0.0)
    assert {r.commodity for r in got} == set(US_NRCA)
    means = [r.mean_nrca for r in got]
    assert means == sorted(means, reverse=True)
    assert all(r.run == (2010, 2016) for r in got)


def test_screen_needs_a_run():
    years = tuple(range(2010, 2017))
    vals = np.array([-1, 1, -1, 1, -1, -1, -1], float)
    assert screen_revealed([NrcaSeries("USA", "9999", years, vals)], (2010, 2016), 3) == []


def test_screen_5205_early_window():
    s5205 = [s for s in _us_series() if s.commodity == "5205"]
    assert screen_revealed(s5205, (1996, 2002), 3) == []


def test_screen_threshold_flag():
    s = [s for s in _us_series() if s.commodity == "6309"]
    assert screen_revealed(s, (2010, 2016), 3, threshold=18.0e-6)[0].run == (2011, 2014)


def test_screen_window_out_of_range():
    with pytest.raises(WindowOutOfRange):
        screen_revealed(_us_series(), (2010, 2020), 3)


def test_nrca_table_roundtrip(tmp_path):
    series = _us_series()
    text = write_nrca_table(series, tmp_path / "t1.csv")
    back = read_nrca_table(tmp_path / "t1.csv")
    assert text.splitlines()[0] == "year,5201,5502,5603,5205,5703,6309"
    for a, b in zip(series, back):
        assert_allclose(a.values, b.values, atol=1e-12)
    assert list(back[0].years) == YEARS


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31), st.integers(3, 5), st.integers(4, 6))
def test_zero_sum_over_commodities_and_countries(seed, n_c, n_j):
    p = panel_of(random_records(seed, n_c, n_j, years=2))
    for y in p.years:
        _, _, m = nrca_matrix(p, y)
        assert np.all(np.abs(m.sum(axis=1)) < 1e-10)
        assert np.all(np.abs(m.sum(axis=0)) < 1e-10)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31), st.floats(0.01, 1000))
def test_scale_invariance(seed, c):
    a = panel_of(random_records(seed, years=2))
    b = panel_of(random_records(seed, years=2, scale=c))
    for y in a.years:
        assert_allclose(nrca_matrix(b, y)[2], nrca_matrix(a, y)[2], rtol=1e-12, atol=1e-18)
