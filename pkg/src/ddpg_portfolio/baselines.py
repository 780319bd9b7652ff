"""Classical online portfolio-selection strategies.

Each strategy is a small stateful object with ``decide(t, prices) ->
weights | None`` where ``prices`` holds the panel's price rows up to and
including day ``t``; ``None`` means hold the current shares. All of them are
run through :class:`~ddpg_portfolio.env.MarketEnv` so floors and costs apply
uniformly.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .data import AlignedPanel
from .env import EnvConfig, run_policy


class StrategyKind(str, enum.Enum):
    ANTICOR = "ANTICOR"
    BAH = "BAH"
    CRP = "CRP"
    EG = "EG"
    OLMAR = "OLMAR"
    PAMR = "PAMR"
    UP = "UP"


@dataclass(frozen=True)
class BaselineParams:
    eg_eta: float = 0.05
    olmar_eps: float = 10.0
    olmar_window: int = 5
    pamr_eps: float = 0.5
    up_samples: int = 100_000
    anticor_window: int = 5


def uniform(m: int) -> np.ndarray:
    return np.full(m, 1.0 / m)


def simplex_project(v) -> np.ndarray:
    """Euclidean projection onto {w >= 0, sum(w) = 1} by sort and threshold."""
    v = np.asarray(v, dtype=float)
    n = v.size
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ks = np.arange(1, n + 1)
    rho = np.nonzero(u - css / ks > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    w = np.maximum(v - theta, 0.0)
    return w / w.sum()


def bah_weights(t: int, m: int):
    """Equal split on the first day, then hold (``None``)."""
    return uniform(m) if t == 0 else None


def crp_weights(t: int, m: int) -> np.ndarray:
    return uniform(m)


def eg_update(w, x, eta: float) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    x = np.asarray(x, dtype=float)
    # shifting the exponent by its max leaves the normalised result unchanged
    z = eta * x / float(w @ x)
    w_new = w * np.exp(z - z.max())
    return w_new / w_new.sum()


def olmar_predict(window_prices: np.ndarray) -> np.ndarray:
    """Predicted relative: moving average over the window divided by today's price."""
    return window_prices.mean(axis=0) / window_prices[-1]


def olmar_update(w, x_pred, eps: float) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    x_pred = np.asarray(x_pred, dtype=float)
    expected = float(w @ x_pred)
    if expected >= eps:
        return w.copy()
    direction = x_pred - x_pred.mean()
    norm2 = float(direction @ direction)
    if norm2 == 0.0:
        return w.copy()
    lam = (eps - expected) / norm2
    return simplex_project(w + lam * direction)


def pamr_update(w, x, eps: float) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    x = np.asarray(x, dtype=float)
    loss = max(0.0, float(w @ x) - eps)
    direction = x - x.mean()
    norm2 = float(direction @ direction)
    if loss == 0.0 or norm2 == 0.0:
        return w.copy()
    return simplex_project(w - (loss / norm2) * direction)


def dirichlet_samples(m: int, n: int, rng: np.random.Generator) -> np.ndarray:
    return rng.dirichlet(np.ones(m), size=n)


def up_weights(relatives, samples: np.ndarray) -> np.ndarray:
    """Wealth-weighted mean of sampled constant-rebalanced portfolios.

    ``relatives`` is a (days, m) array of price relatives (may have zero
    rows). Log wealth is used so long histories do not overflow.
    """
    rel = np.asarray(relatives, dtype=float).reshape(-1, samples.shape[1])
    if rel.shape[0] == 0:
        log_w = np.zeros(samples.shape[0])
    else:
        log_w = np.log(samples @ rel.T).sum(axis=1)
    wts = np.exp(log_w - log_w.max())
    w = wts @ samples
    return w / w.sum()


def _corr_columns(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Cross-correlation matrix between columns of ``a`` and ``b``; zero-variance columns give 0."""
    da = a - a.mean(axis=0)
    db = b - b.mean(axis=0)
    n = a.shape[0]
    sa = np.sqrt((da * da).sum(axis=0) / (n - 1))
    sb = np.sqrt((db * db).sum(axis=0) / (n - 1))
    cov = da.T @ db / (n - 1)
    denom = np.outer(sa, sb)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(denom > 0, cov / np.where(denom > 0, denom, 1.0), 0.0)
    return out


def anticor_claims(log_rel: np.ndarray, window: int) -> np.ndarray:
    """Claim matrix from the last ``2*window`` rows of log price relatives."""
    lx1 = log_rel[-2 * window:-window]
    lx2 = log_rel[-window:]
    mu2 = lx2.mean(axis=0)
    mcor = _corr_columns(lx1, lx2)
    m = log_rel.shape[1]
    claim = np.zeros((m, m))
    diag = np.diag(mcor)
    for i in range(m):
        for j in range(m):
            if i == j or mu2[i] <= mu2[j] or mcor[i, j] <= 0:
                continue
            claim[i, j] = mcor[i, j] - min(diag[i], 0.0) - min(diag[j], 0.0)
    return claim


def anticor_update(w, log_rel: np.ndarray, window: int) -> np.ndarray:
    """Move wealth between assets along anti-correlation claims.

    Returns ``w`` unchanged until ``2*window`` rows of log relatives exist.
    """
    w = np.asarray(w, dtype=float)
    if log_rel.shape[0] < 2 * window:
        return w.copy()
    claim = anticor_claims(log_rel, window)
    totals = claim.sum(axis=1)
    transfer = np.zeros_like(claim)
    nz = totals > 0
    transfer[nz] = w[nz, None] * claim[nz] / totals[nz, None]
    w_new = w - transfer.sum(axis=1) + transfer.sum(axis=0)
    w_new = np.maximum(w_new, 0.0)
    return w_new / w_new.sum()


class Strategy:
    kind: StrategyKind

    def __init__(self, m: int):
        self.m = m
        self.weights = uniform(m)

    def decide(self, t: int, prices: np.ndarray):
        raise NotImplementedError


class BAH(Strategy):
    kind = StrategyKind.BAH

    def decide(self, t, prices):
        return bah_weights(t, self.m)


class CRP(Strategy):
    kind = StrategyKind.CRP

    def decide(self, t, prices):
        return crp_weights(t, self.m)


class EG(Strategy):
    kind = StrategyKind.EG

    def __init__(self, m, eta=0.05):
        super().__init__(m)
        self.eta = eta

    def decide(self, t, prices):
        if t > 0:
            self.weights = eg_update(self.weights, prices[t] / prices[t - 1], self.eta)
        return self.weights


class OLMAR(Strategy):
    kind = StrategyKind.OLMAR

    def __init__(self, m, eps=10.0, window=5):
        super().__init__(m)
        self.eps = eps
        self.window = window

    def decide(self, t, prices):
        if t + 1 >= self.window:
            x_pred = olmar_predict(prices[t + 1 - self.window:t + 1])
            self.weights = olmar_update(self.weights, x_pred, self.eps)
        return self.weights


class PAMR(Strategy):
    kind = StrategyKind.PAMR

    def __init__(self, m, eps=0.5):
        super().__init__(m)
        self.eps = eps

    def decide(self, t, prices):
        if t > 0:
            self.weights = pamr_update(self.weights, prices[t] / prices[t - 1], self.eps)
        return self.weights


class UP(Strategy):
    kind = StrategyKind.UP

    def __init__(self, m, samples=100_000, rng=None):
        super().__init__(m)
        rng = rng if rng is not None else np.random.default_rng(0)
        self.samples = dirichlet_samples(m, samples, rng)
        self.log_wealth = np.zeros(samples)

    def decide(self, t, prices):
        if t > 0:
            self.log_wealth += np.log(self.samples @ (prices[t] / prices[t - 1]))
        wts = np.exp(self.log_wealth - self.log_wealth.max())
        w = wts @ self.samples
        self.weights = w / w.sum()
        return self.weights


class Anticor(Strategy):
    kind = StrategyKind.ANTICOR

    def __init__(self, m, window=5):
        super().__init__(m)
        self.window = window

    def decide(self, t, prices):
        if t >= 2 * self.window:
            log_rel = np.log(prices[t + 1 - 2 * self.window:t + 1] / prices[t - 2 * self.window:t])
            self.weights = anticor_update(self.weights, log_rel, self.window)
        return self.weights


STRATEGY_ORDER = (
    StrategyKind.ANTICOR,
    StrategyKind.BAH,
    StrategyKind.CRP,
    StrategyKind.EG,
    StrategyKind.OLMAR,
    StrategyKind.PAMR,
    StrategyKind.UP,
)


def make_strategy(kind, m: int, params: BaselineParams = BaselineParams(), rng=None) -> Strategy:
    kind = StrategyKind(kind)
    if kind is StrategyKind.BAH:
        return BAH(m)
    if kind is StrategyKind.CRP:
        return CRP(m)
    if kind is StrategyKind.EG:
        return EG(m, params.eg_eta)
    if kind is StrategyKind.OLMAR:
        return OLMAR(m, params.olmar_eps, params.olmar_window)
    if kind is StrategyKind.PAMR:
        return PAMR(m, params.pamr_eps)
    if kind is StrategyKind.UP:
        return UP(m, params.up_samples, rng)
    return Anticor(m, params.anticor_window)


def run_strategy(strategy: Strategy, panel: AlignedPanel, config: EnvConfig, start_t: int = 1, stop_t=None):
    """Simulate ``strategy`` through the market environment.

    The strategy's clock starts at 0 on ``start_t`` and it only sees prices
    from ``start_t`` onward. Returns ``(values, total_cost, weights_log)``.
    """
    prices = panel.prices[start_t:]

    def policy(obs, state, t):
        return strategy.decide(t - start_t, prices)

    return run_policy(panel, policy, config, start_t, stop_t)


def benchmark_curve(panel: AlignedPanel, config: EnvConfig, start_t: int = 1, stop_t=None) -> np.ndarray:
    """Equal money in every asset on the first day, shares held to the end.

    Built directly from the floor/cost rules rather than through a strategy
    object, as the reference for BAH.
    """
    from .env import PortfolioState, mark_to_market, rebalance

    stop_t = panel.T - 1 if stop_t is None else stop_t
    m = panel.M
    start = PortfolioState(np.zeros(m, dtype=np.int64), config.initial_cash, config.initial_cash, start_t)
    held, _ = rebalance(start, uniform(m), panel.prices[start_t], config)
    values = [config.initial_cash]
    for t in range(start_t + 1, stop_t + 1):
        values.append(mark_to_market(held.holdings, panel.prices[t], held.cash))
    return np.array(values)
