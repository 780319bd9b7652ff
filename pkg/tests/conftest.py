import datetime as dt

import numpy as np
import pytest

from ddpg_portfolio.data import AlignedPanel, compute_returns, compute_rsi2

HEADER = "Date,Open,High,Low,Close,Adj Close,Volume\n"


def make_panel(prices, start=dt.date(2020, 1, 1), tickers=None):
    prices = np.asarray(prices, dtype=float)
    if prices.ndim == 1:
        prices = prices[:, None]
    T, M = prices.shape
    dates = [start + dt.timedelta(days=i) for i in range(T)]
    tickers = tickers or [f"A{i}" for i in range(M)]
    panel = AlignedPanel(dates, tickers, prices.copy())
    compute_returns(panel)
    compute_rsi2(panel)
    return panel


def random_walk_panel(T, M, seed=0, vol=0.02, start_price=50.0):
    rng = np.random.default_rng(seed)
    steps = rng.normal(0.0, vol, size=(T, M))
    steps[0] = 0.0
    prices = start_price * rng.uniform(0.5, 2.0, size=M) * np.exp(np.cumsum(steps, axis=0))
    return make_panel(prices)


def drift_panel(T=2000, up=1.001, down=0.999, p0=100.0):
    t = np.arange(T)
    return make_panel(np.column_stack([p0 * up ** t, p0 * down ** t]), tickers=["RISE", "FALL"])


def csv_text(rows):
    return HEADER + "".join(",".join(str(c) for c in r) + "\n" for r in rows)


@pytest.fixture
def rw_panel():
    return random_walk_panel(300, 3, seed=7)


def write_csvs(panel, directory):
    """One OHLCV file per ticker; prices written with repr so they parse back exactly."""
    directory.mkdir(parents=True, exist_ok=True)
    for j, ticker in enumerate(panel.tickers):
        rows = [(d.isoformat(), repr(p), repr(p), repr(p), repr(p), repr(p), 1000)
                for d, p in zip(panel.dates, panel.prices[:, j].tolist())]
        (directory / f"{ticker}.csv").write_text(csv_text(rows))
    return directory


def pytest_terminal_summary(terminalreporter, config):
    lines = getattr(config, "acceptance_lines", None)
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(lines, key=lambda l: int(l.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
