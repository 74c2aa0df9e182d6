import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tradecast.exceptions import TooShort
from tradecast.identify import esacf, minic, scan, tentative_orders
from tradecast.ts_core import Series, difference

from oracles import simulate_arma

PROCESSES = {(0, 0): ((), ()), (1, 0): ((0.8,), ()), (0, 1): ((), (0.7,)), (2, 0): ((0.5, 0.3), ())}


def orders(cands):
    return {(c.p, c.q) for c in cands}


def test_white_noise_all_methods():
    x = simulate_arma(n=200, seed=0)
    assert (0, 0) in orders(esacf(x)[1])
    assert (0, 0) in orders(scan(x)[1])
    c = minic(x)[1]
    assert (c.p, c.q) == (0, 0)


def test_esacf_ar1():
    assert (1, 0) in orders(esacf(simulate_arma((0.8,), n=500, seed=0))[1])


def test_scan_ma1():
    assert (0, 1) in orders(scan(simulate_arma(ma=(0.7,), n=500, seed=0))[1])


def test_minic_ar2():
    c = minic(simulate_arma((0.5, 0.3), n=500, seed=0))[1]
    assert (c.p, c.q) == (2, 0)


def test_us_examples(train):
    d5201 = difference(train["5201"], 1)
    assert (0, 0) in orders(esacf(d5201)[1])
    assert (0, 0) in orders(tentative_orders(d5201, d=1))
    assert (1, 0) in orders(scan(train["5703"])[1])
    assert (2, 0) in orders(tentative_orders(train["5502"]))


def test_minic_grid_finite_on_us_series(train):
    for code, s in train.items():
        w = difference(s, 0 if code in ("5502", "5703") else 1)
        table, _ = minic(w)
        assert table.grid.shape == (6, 6)
        assert np.all(np.isfinite(table.grid))


def test_grid_shapes(train):
    for method in (esacf, scan, minic):
        table = method(train["5703"], 3, 2)[0]
        assert table.grid.shape == (4, 3)
        assert table.significant.shape == (4, 3)
        assert not np.any(table.significant & ~table.computable)


def test_too_short():
    with pytest.raises(TooShort):
        tentative_orders(Series(np.arange(14.0)), p_max=5, q_max=5)


@pytest.mark.parametrize("true", sorted(PROCESSES))
def test_true_order_recovered(true):
    ar, ma = PROCESSES[true]
    hits = sum(true in orders(tentative_orders(simulate_arma(ar, ma, n=500, seed=s)))
               for s in range(10))
    assert hits >= 8


def test_deterministic(train):
    a = tentative_orders(train["5502"])
    b = tentative_orders(train["5502"])
    assert a == b


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000), st.integers(0, 4), st.integers(0, 4))
def test_candidates_within_bounds(seed, p_max, q_max):
    x = np.random.default_rng(seed).standard_normal(60)
    cands = tentative_orders(x, p_max=p_max, q_max=q_max)
    assert (0, 0) in orders(cands)
    assert all(0 <= c.p <= p_max and 0 <= c.q <= q_max for c in cands)
    assert len(orders(cands)) == len(cands)
