"""Daily rebalancing simulator with integer share floors and per-share costs.

Timeline for one step from day t to t+1:

1. ``V_t`` is the mark-to-market value of yesterday's holdings at day-t
   prices (before trading).
2. The action's weights are executed at day-t prices: shares are floored,
   costs are charged in cash.
3. Holdings are revalued at day-t+1 prices, giving ``V_{t+1}``; the reward is
   ``V_{t+1} - V_t``, so trading costs show up in the reward and rewards
   telescope to the episode's wealth change.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .data import AlignedPanel

WEIGHT_TOL = 1e-9


class EnvError(Exception):
    pass


class ActionError(EnvError):
    pass


@dataclass(frozen=True)
class EnvConfig:
    initial_cash: float = 1_000_000.0
    cost_per_share: float = 0.001
    cost_enabled: bool = True
    # divide rewards by initial_cash; off keeps R_t = V_t - V_{t-1} in currency
    scale_rewards: bool = False

    def __post_init__(self):
        if not self.initial_cash > 0:
            raise ValueError("initial_cash must be positive")
        if self.cost_per_share < 0:
            raise ValueError("cost_per_share must be non-negative")

    @property
    def effective_cost(self) -> float:
        return self.cost_per_share if self.cost_enabled else 0.0


@dataclass(frozen=True)
class PortfolioState:
    holdings: np.ndarray
    cash: float
    value: float
    t: int


@dataclass(frozen=True)
class StepResult:
    state: PortfolioState
    next_obs: np.ndarray
    reward: float
    done: bool
    cost_paid: float


def mark_to_market(holdings, prices, cash: float) -> float:
    """Value of integer holdings at ``prices`` plus cash."""
    h = np.asarray(holdings, dtype=np.int64)
    p = np.asarray(prices, dtype=float)
    # fixed left-to-right order so results do not depend on BLAS reductions
    total = 0.0
    for hi, pi in zip(h.tolist(), p.tolist()):
        total += hi * pi
    return total + cash


def validate_weights(weights, m: int) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    if w.shape != (m,):
        raise ActionError(f"expected {m} weights, got shape {w.shape}")
    if not np.all(np.isfinite(w)):
        raise ActionError("weights must be finite")
    if np.any(w < 0) or np.any(w > 1):
        raise ActionError(f"weights must lie in [0, 1], got {w}")
    if abs(w.sum() - 1.0) > WEIGHT_TOL:
        raise ActionError(f"weights must sum to 1 (got {w.sum():.12f})")
    return w


def _floor_shares(investable: float, w: np.ndarray, prices: np.ndarray) -> np.ndarray:
    return np.floor(np.maximum(investable, 0.0) * w / prices).astype(np.int64)


def _trade_cost(new_h: np.ndarray, old_h: np.ndarray, cps: float) -> float:
    return cps * float(np.abs(new_h - old_h).sum())


def rebalance(state: PortfolioState, weights, prices, config: EnvConfig) -> tuple[PortfolioState, float]:
    """Move to the floored target holdings for ``weights`` at ``prices``.

    With costs enabled the target is computed twice: once from the full
    value, then again after reserving the first pass's cost. If rounding
    still leaves cash short, shares are trimmed one at a time (buys first)
    until cash is non-negative.
    """
    prices = np.asarray(prices, dtype=float)
    w = validate_weights(weights, prices.size)
    w = w / w.sum()
    old_h = np.asarray(state.holdings, dtype=np.int64)
    v_pre = mark_to_market(old_h, prices, state.cash)
    cps = config.effective_cost

    h = _floor_shares(v_pre, w, prices)
    if cps > 0:
        h = _floor_shares(v_pre - _trade_cost(h, old_h, cps), w, prices)
    cost = _trade_cost(h, old_h, cps)
    cash = v_pre - mark_to_market(h, prices, 0.0) - cost
    while cash < 0:
        buys = np.flatnonzero(h > old_h)
        pool = buys if buys.size else np.flatnonzero(h > 0)
        if pool.size == 0:
            raise EnvError("cannot restore non-negative cash")
        k = pool[np.argmax(prices[pool])]
        h[k] -= 1
        cost = _trade_cost(h, old_h, cps)
        cash = v_pre - mark_to_market(h, prices, 0.0) - cost
    value = mark_to_market(h, prices, cash)
    return PortfolioState(h, cash, value, state.t), cost


def build_observation(panel: AlignedPanel, t: int, holdings, value: float, cash: float) -> np.ndarray:
    """Flattened state: per asset (p_t, p_{t-1}, log(p_t/p_{t-1}), RSI2_t, h_t), then V_t, c_t."""
    if not 1 <= t < panel.T:
        raise EnvError(f"observation index {t} outside [1, {panel.T - 1}]")
    p = panel.prices
    block = np.column_stack(
        [p[t], p[t - 1], np.log(p[t] / p[t - 1]), panel.rsi2[t], np.asarray(holdings, dtype=float)]
    )
    return np.concatenate([block.reshape(-1), [value, cash]])


def observation_size(m: int) -> int:
    return 5 * m + 2


@dataclass
class MarketEnv:
    """Episode driver over one panel.

    ``step(None)`` holds the current shares without trading.
    """

    panel: AlignedPanel
    config: EnvConfig = field(default_factory=EnvConfig)
    state: PortfolioState | None = None
    total_cost: float = 0.0

    def reset(self, start_t: int = 1) -> tuple[PortfolioState, np.ndarray]:
        T = self.panel.T
        if not 1 <= start_t <= T - 2:
            raise EnvError(f"start_t must lie in [1, {T - 2}], got {start_t}")
        if self.panel.rsi2 is None:
            raise EnvError("panel features missing; build it with align_panel")
        cash = float(self.config.initial_cash)
        self.state = PortfolioState(np.zeros(self.panel.M, dtype=np.int64), cash, cash, start_t)
        self.total_cost = 0.0
        return self.state, self.observe()

    def observe(self) -> np.ndarray:
        s = self.state
        return build_observation(self.panel, s.t, s.holdings, s.value, s.cash)

    def step(self, action) -> StepResult:
        s = self.state
        if s is None:
            raise EnvError("call reset() before step()")
        if s.t + 1 >= self.panel.T:
            raise EnvError("episode already finished")
        prices = self.panel.prices[s.t]
        v_t = mark_to_market(s.holdings, prices, s.cash)
        if action is None:
            traded, cost = replace(s, value=v_t), 0.0
        else:
            traded, cost = rebalance(s, action, prices, self.config)
        t1 = s.t + 1
        v_next = mark_to_market(traded.holdings, self.panel.prices[t1], traded.cash)
        self.state = PortfolioState(traded.holdings, traded.cash, v_next, t1)
        self.total_cost += cost
        reward = v_next - v_t
        if self.config.scale_rewards:
            reward /= self.config.initial_cash
        return StepResult(self.state, self.observe(), reward, t1 == self.panel.T - 1, cost)


def step(state: PortfolioState, action, panel: AlignedPanel, config: EnvConfig) -> StepResult:
    """Functional single step from an explicit state."""
    env = MarketEnv(panel, config, state)
    return env.step(action)


def run_policy(panel: AlignedPanel, policy, config: EnvConfig, start_t: int = 1, stop_t: int | None = None):
    """Roll ``policy(obs, state, t)`` from ``start_t`` to ``stop_t`` (inclusive).

    Returns ``(values, total_cost, weights_log)`` where ``values`` has one
    entry per day: the starting cash, then the post-step value of each day.
    """
    stop_t = panel.T - 1 if stop_t is None else stop_t
    sub = panel if stop_t == panel.T - 1 else _truncate(panel, stop_t + 1)
    env = MarketEnv(sub, config)
    state, obs = env.reset(start_t)
    values = [state.value]
    weights_log = []
    done = False
    while not done:
        action = policy(obs, env.state, env.state.t)
        res = env.step(action)
        obs, done = res.next_obs, res.done
        values.append(res.state.value)
        weights_log.append(None if action is None else np.asarray(action, dtype=float))
    return np.array(values), env.total_cost, weights_log


def _truncate(panel: AlignedPanel, stop: int) -> AlignedPanel:
    return AlignedPanel(
        panel.dates[:stop],
        panel.tickers,
        panel.prices[:stop],
        panel.rsi2[:stop],
        panel.simple_return[:stop],
        panel.log_return[:stop],
        panel.dropped,
    )


def episode_reward_sum(rewards) -> float:
    return math.fsum(rewards)
