import numpy as np
import pytest

from tradecast.arima import ArimaSpec, fit, select_best
from tradecast.nrca import DISPLAY_SCALE
from tradecast.pipeline import bundled_path, load_candidates
from tradecast.ts_core import Series

from oracles import US_NRCA

ORDERS = {"5201": (0, 1, 0), "5502": (2, 0, 0), "5603": (0, 1, 0),
          "5205": (0, 1, 0), "5703": (1, 0, 0), "6309": (0, 1, 0)}


@pytest.fixture(scope="session")
def us_series():
    """Raw (unscaled) US NRCA series keyed by category, 1996-2016."""
    return {c: Series(np.array(v) / DISPLAY_SCALE, 1996) for c, v in US_NRCA.items()}


@pytest.fixture(scope="session")
def train(us_series):
    return {c: s.window(1996, 2015) for c, s in us_series.items()}


@pytest.fixture(scope="session")
def ref_candidates():
    return load_candidates(bundled_path("us_candidates.csv"))


@pytest.fixture(scope="session")
def ref_models(train):
    return {c: fit(train[c], ArimaSpec(*o)) for c, o in ORDERS.items()}


@pytest.fixture(scope="session")
def selected_models(train, ref_candidates):
    return {c: select_best(train[c], ORDERS[c][1], ref_candidates[c])[0] for c in ORDERS}
