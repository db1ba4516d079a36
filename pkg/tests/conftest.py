import datetime as dt

import numpy as np
import pytest

from bess_lifecycle import synthetic
from bess_lifecycle.market_data import MarketDay, write_day_to_root


@pytest.fixture
def flat_day():
    return MarketDay(dt.date(2021, 5, 1), np.full(24, 30.0), np.full(24, 10.0), np.full(24, 1.0), np.full(24, 5.0))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_day(rng, date=dt.date(2021, 5, 1)):
    """Prices with an evening peak, random ancillary levels."""
    hours = np.arange(24)
    energy = 25 + 30 * np.exp(-0.5 * ((hours - rng.uniform(16, 20)) / 2) ** 2) + rng.normal(0, 6, 24)
    return MarketDay(
        date,
        energy,
        rng.uniform(0, 40, 24),
        rng.uniform(0, 4, 24),
        rng.uniform(0, 15, 24),
    )


@pytest.fixture(scope="session")
def seasonal_days():
    return synthetic.seasonal_year(2021, 0)


@pytest.fixture(scope="session")
def price_root(tmp_path_factory, seasonal_days):
    root = tmp_path_factory.mktemp("prices")
    for day in seasonal_days:
        write_day_to_root(day, root)
    return root
