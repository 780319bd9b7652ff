"""Daily bar ingestion: Yahoo-style CSV parsing, date alignment, features."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path

import numpy as np

REQUIRED_COLUMNS = ("Date", "Adj Close")
BAR_COLUMNS = ("Open", "High", "Low", "Close", "Adj Close", "Volume")
RSI_PERIOD = 2
RSI_NEUTRAL = 50.0


class DataError(Exception):
    pass


class SchemaError(DataError):
    pass


class RowError(DataError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class AlignmentError(DataError):
    pass


@dataclass(frozen=True)
class Bar:
    date: date
    open: float
    high: float
    low: float
    close: float
    adj_close: float
    volume: float


@dataclass
class AssetSeries:
    ticker: str
    bars: list[Bar] = field(default_factory=list)
    skipped: int = 0

    @property
    def dates(self) -> list[date]:
        return [b.date for b in self.bars]


@dataclass
class AlignedPanel:
    dates: list[date]
    tickers: list[str]
    prices: np.ndarray
    rsi2: np.ndarray | None = None
    simple_return: np.ndarray | None = None
    log_return: np.ndarray | None = None
    dropped: int = 0

    @property
    def T(self) -> int:
        return len(self.dates)

    @property
    def M(self) -> int:
        return len(self.tickers)

    def slice(self, start: int, stop: int) -> "AlignedPanel":
        """Rows ``start:stop`` with features recomputed on the slice."""
        sub = AlignedPanel(self.dates[start:stop], list(self.tickers), self.prices[start:stop].copy())
        if sub.T >= 2:
            compute_returns(sub)
        if sub.T >= 3:
            compute_rsi2(sub)
        return sub

    def series(self) -> list[AssetSeries]:
        """One AssetSeries per ticker (only adj_close is meaningful)."""
        out = []
        for j, ticker in enumerate(self.tickers):
            bars = [Bar(d, p, p, p, p, p, 0.0) for d, p in zip(self.dates, self.prices[:, j])]
            out.append(AssetSeries(ticker, bars))
        return out


def _parse_float(raw: str, line: int, column: str) -> float:
    try:
        value = float(raw)
    except ValueError:
        raise RowError(line, f"cannot parse {column}={raw!r} as a number") from None
    if not math.isfinite(value):
        raise RowError(line, f"non-finite {column}={raw!r}")
    return value


def parse_csv(text: str, ticker: str = "") -> AssetSeries:
    """Parse Yahoo Finance daily CSV text into an :class:`AssetSeries`.

    Rows with any empty cell (or Yahoo's ``null`` placeholder) are skipped and
    counted on ``AssetSeries.skipped``. Bars come back sorted by date.
    """
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None:
        raise SchemaError("empty CSV: no header row")
    header = [h.strip() for h in header]
    missing = [c for c in REQUIRED_COLUMNS if c not in header]
    if missing:
        raise SchemaError(f"missing required column(s): {', '.join(missing)}")
    col = {name: header.index(name) for name in header}

    bars: list[Bar] = []
    skipped = 0
    seen: set[date] = set()
    for line, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        cells = [cell.strip() for cell in row]
        if len(cells) < len(header) or any(c == "" or c.lower() == "null" for c in cells[: len(header)]):
            skipped += 1
            continue
        try:
            day = date.fromisoformat(cells[col["Date"]])
        except ValueError:
            raise RowError(line, f"cannot parse Date={cells[col['Date']]!r}") from None
        values = {}
        for name in BAR_COLUMNS:
            if name in col:
                values[name] = _parse_float(cells[col[name]], line, name)
        adj = values["Adj Close"]
        if adj <= 0:
            raise RowError(line, f"Adj Close must be positive, got {adj}")
        if day in seen:
            raise RowError(line, f"duplicate date {day}")
        seen.add(day)
        bars.append(
            Bar(
                date=day,
                open=values.get("Open", adj),
                high=values.get("High", adj),
                low=values.get("Low", adj),
                close=values.get("Close", adj),
                adj_close=adj,
                volume=values.get("Volume", 0.0),
            )
        )
    bars.sort(key=lambda b: b.date)
    return AssetSeries(ticker, bars, skipped)


def read_csv(path) -> AssetSeries:
    path = Path(path)
    return parse_csv(path.read_text(encoding="utf-8"), ticker=path.stem)


def align_panel(series: list[AssetSeries]) -> AlignedPanel:
    """Intersect trading dates across assets and build a feature panel.

    A date missing for any asset is dropped for all of them.
    """
    if not series:
        raise AlignmentError("no series to align")
    for s in series:
        if not s.bars:
            raise AlignmentError(f"series {s.ticker!r} has no bars")
    common = set(series[0].dates)
    for s in series[1:]:
        common &= set(s.dates)
    if not common:
        ranges = "; ".join(f"{s.ticker}: {s.bars[0].date}..{s.bars[-1].date}" for s in series)
        raise AlignmentError(f"no common trading dates ({ranges})")
    dates = sorted(common)
    prices = np.empty((len(dates), len(series)))
    for j, s in enumerate(series):
        by_date = {b.date: b.adj_close for b in s.bars}
        prices[:, j] = [by_date[d] for d in dates]
    dropped = len(set().union(*(set(s.dates) for s in series))) - len(dates)
    panel = AlignedPanel(dates, [s.ticker for s in series], prices, dropped=dropped)
    if panel.T >= 2:
        compute_returns(panel)
    if panel.T >= 3:
        compute_rsi2(panel)
    return panel


def compute_returns(panel: AlignedPanel) -> AlignedPanel:
    p = panel.prices
    if p.shape[0] < 2:
        raise DataError("returns need at least two rows")
    ratio = np.ones_like(p)
    ratio[1:] = p[1:] / p[:-1]
    panel.simple_return = ratio - 1.0
    panel.log_return = np.log(ratio)
    return panel


def wilder_rsi(prices: np.ndarray, period: int = RSI_PERIOD) -> np.ndarray:
    """Wilder RSI along axis 0; rows before index ``period`` are neutral (50).

    Seed averages are the plain means of the first ``period`` gains/losses;
    afterwards avg <- (avg*(period-1) + current)/period.
    """
    p = np.asarray(prices, dtype=float)
    squeeze = p.ndim == 1
    if squeeze:
        p = p[:, None]
    T = p.shape[0]
    out = np.full(p.shape, RSI_NEUTRAL)
    if T <= period:
        return out[:, 0] if squeeze else out
    delta = np.diff(p, axis=0)
    gain = np.maximum(delta, 0.0)
    loss = np.maximum(-delta, 0.0)
    avg_gain = gain[:period].mean(axis=0)
    avg_loss = loss[:period].mean(axis=0)
    for t in range(period, T):
        if t > period:
            avg_gain = (avg_gain * (period - 1) + gain[t - 1]) / period
            avg_loss = (avg_loss * (period - 1) + loss[t - 1]) / period
        out[t] = _rsi_from_averages(avg_gain, avg_loss)
    return out[:, 0] if squeeze else out


def _rsi_from_averages(avg_gain, avg_loss):
    rsi = np.empty_like(avg_gain)
    flat = (avg_gain == 0) & (avg_loss == 0)
    no_loss = (avg_loss == 0) & ~flat
    normal = avg_loss > 0
    rsi[flat] = RSI_NEUTRAL
    rsi[no_loss] = 100.0
    rs = avg_gain[normal] / avg_loss[normal]
    rsi[normal] = 100.0 - 100.0 / (1.0 + rs)
    return rsi


def compute_rsi2(panel: AlignedPanel) -> AlignedPanel:
    if panel.prices.shape[0] < 3:
        raise DataError("RSI2 needs at least three rows")
    panel.rsi2 = wilder_rsi(panel.prices, RSI_PERIOD)
    return panel


def load_panel(data_dir, tickers: list[str]) -> AlignedPanel:
    """Read ``<data_dir>/<TICKER>.csv`` for every ticker and align them."""
    data_dir = Path(data_dir)
    series = []
    for ticker in tickers:
        path = data_dir / f"{ticker}.csv"
        if not path.exists():
            raise FileNotFoundError(f"no CSV for ticker {ticker!r} (expected {path})")
        s = read_csv(path)
        s.ticker = ticker
        series.append(s)
    return align_panel(series)
