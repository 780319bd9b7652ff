"""Equity-curve metrics: compound annual return, Sharpe ratio, drawdown."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

TRADING_DAYS = 252


class MetricError(ValueError):
    pass


@dataclass
class EquityCurve:
    dates: list
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if len(self.dates) != self.values.size:
            raise MetricError("dates and values differ in length")
        if np.any(self.values <= 0):
            raise MetricError("equity values must be positive")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["date", "value"])
        for d, v in zip(self.dates, self.values.tolist()):
            w.writerow([str(d), repr(v)])
        return buf.getvalue()


def _values(curve) -> np.ndarray:
    if isinstance(curve, EquityCurve):
        return curve.values
    return np.asarray(curve, dtype=float)


def daily_returns(curve) -> np.ndarray:
    v = _values(curve)
    return v[1:] / v[:-1] - 1.0


def carr(curve, trading_days: int = TRADING_DAYS) -> float:
    """(EV/BV)^(1/n) - 1 with n = (len - 1) / trading_days years."""
    v = _values(curve)
    if v.size < 2:
        raise MetricError("CARR needs at least two points")
    years = (v.size - 1) / trading_days
    return float((v[-1] / v[0]) ** (1.0 / years) - 1.0)


@dataclass(frozen=True)
class SharpeResult:
    daily: float
    annualized: float


def sharpe(curve, risk_free: float = 0.0, annualization: float = math.sqrt(TRADING_DAYS)) -> SharpeResult:
    """Mean over sample std (ddof=1) of daily excess returns.

    ``risk_free`` is a per-day rate. Raises :class:`MetricError` when the
    excess returns have zero variance.
    """
    v = _values(curve)
    if v.size < 3:
        raise MetricError("Sharpe ratio needs at least three points")
    excess = daily_returns(v) - risk_free
    sd = float(np.std(excess, ddof=1))
    if sd == 0.0:
        raise MetricError("Sharpe ratio undefined: zero return variance")
    daily = float(np.mean(excess)) / sd
    return SharpeResult(daily, daily * annualization)


def mdd(curve) -> float:
    """Largest (V_peak - V_later) / V_later over ordered pairs; trough in the denominator.

    Single pass with a running peak: for a fixed later point the ratio is
    maximised by the largest earlier value.
    """
    v = _values(curve)
    if v.size < 1:
        raise MetricError("drawdown needs at least one point")
    peak = -math.inf
    worst = 0.0
    for x in v.tolist():
        if peak > x:
            worst = max(worst, (peak - x) / x)
        peak = max(peak, x)
    return worst


def mdd_peak(curve) -> float:
    """Conventional drawdown, (V_peak - V_later) / V_peak, in [0, 1)."""
    v = _values(curve)
    if v.size < 1:
        raise MetricError("drawdown needs at least one point")
    peak = np.maximum.accumulate(v)
    return float(np.max((peak - v) / peak))


def mdd_bruteforce(curve) -> float:
    """Every ordered pair (i < j) evaluated explicitly; O(n^2) reference for ``mdd``."""
    v = _values(curve)
    ratios = (v[:, None] - v[None, :]) / v[None, :]
    upper = np.triu(np.ones((v.size, v.size), dtype=bool), k=1)
    return float(max(0.0, ratios[upper].max(initial=0.0)))


@dataclass
class MetricsRow:
    name: str
    carr: float | None = None
    sharpe: float | None = None
    sharpe_daily: float | None = None
    mdd: float | None = None
    mdd_peak: float | None = None
    errors: dict[str, str] = field(default_factory=dict)


@dataclass
class MetricsReport:
    rows: list[MetricsRow]

    def row(self, name: str) -> MetricsRow:
        return next(r for r in self.rows if r.name == name)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["strategy", "carr", "sharpe", "sharpe_daily", "mdd", "mdd_peak"])
        for r in self.rows:
            w.writerow([r.name] + [_csv_cell(getattr(r, k), r.errors.get(k)) for k in
                                   ("carr", "sharpe", "sharpe_daily", "mdd", "mdd_peak")])
        return buf.getvalue()

    def to_text(self) -> str:
        header = ["", "CARR", "SR", "MDD", "MDD(peak)"]
        lines = [[r.name, format_pct(r.carr), format_num(r.sharpe), format_num(r.mdd), format_num(r.mdd_peak)]
                 for r in self.rows]
        widths = [max(len(str(x)) for x in col) for col in zip(header, *lines)]
        out = ["  ".join(h.rjust(wd) for h, wd in zip(header, widths))]
        out.append("  ".join("-" * wd for wd in widths))
        for line in lines:
            out.append("  ".join(c.rjust(wd) for c, wd in zip(line, widths)))
        return "\n".join(out) + "\n"


def _csv_cell(value, error):
    if value is None:
        return f"ERR:{error}" if error else ""
    return f"{value:.10g}"


def format_pct(x) -> str:
    return "n/a" if x is None else f"{100.0 * x:.2f}%"


def format_num(x) -> str:
    return "n/a" if x is None else f"{x:.4f}"


def format_row(carr_value, sharpe_value, mdd_value) -> str:
    return f"{format_pct(carr_value)} / {format_num(sharpe_value)} / {format_num(mdd_value)}"


def build_report(curves) -> MetricsReport:
    """One row per named curve, in input order; metric failures become marked cells."""
    items = list(curves.items()) if isinstance(curves, dict) else list(curves)
    if not items:
        raise MetricError("no curves to report")
    rows = []
    for name, curve in items:
        row = MetricsRow(name)
        for key, fn in (("carr", carr), ("mdd", mdd), ("mdd_peak", mdd_peak)):
            try:
                setattr(row, key, fn(curve))
            except (MetricError, ZeroDivisionError, FloatingPointError) as exc:
                row.errors[key] = str(exc)
        try:
            sr = sharpe(curve)
            row.sharpe, row.sharpe_daily = sr.annualized, sr.daily
        except MetricError as exc:
            row.errors["sharpe"] = row.errors["sharpe_daily"] = str(exc)
        rows.append(row)
    return MetricsReport(rows)
