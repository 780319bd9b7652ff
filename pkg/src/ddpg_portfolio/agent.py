"""DDPG learner: fully connected actor, LSTM critic, target copies, replay, OU noise."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from .data import AlignedPanel
from .env import EnvConfig, MarketEnv, observation_size
from .nn import (
    LSTM,
    Adam,
    Dense,
    Dropout,
    LastStep,
    Network,
    SumNormalize,
    huber_loss,
    load_networks,
    save_networks,
    soft_update,
)
from .rng import SeedTree

log = logging.getLogger(__name__)

ACTOR_HIDDEN = (256, 128, 64)
CRITIC_LSTM_HIDDEN = 100
CRITIC_FC_HIDDEN = 50
CRITIC_DROPOUT = 0.35

EPSILON_SCHEDULE = ((1000, 0.5), (2000, 0.25), (None, 0.1))


@dataclass(frozen=True)
class TrainConfig:
    gamma: float = 0.99
    tau: float = 0.09
    batch_size: int = 128
    epsilon_schedule: tuple = EPSILON_SCHEDULE
    buffer_capacity: int = 100_000
    actor_lr: float = 1e-4
    critic_lr: float = 1e-3
    epochs: int = 10
    seed: int = 0
    # one gradient update every `update_every` environment steps
    update_every: int = 1
    ou_theta: float = 0.15
    ou_sigma: float = 0.2
    ou_dt: float = 1.0
    huber_delta: float = 1.0
    # applied to rewards before they enter the replay buffer
    reward_scale: float = 1.0
    # "panel": divide observation entries by fixed per-feature scales; "raw": as emitted
    obs_scaling: str = "panel"
    critic_window: int = 1

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must lie in (0, 1]")
        if not 0.0 <= self.tau <= 1.0:
            raise ValueError("tau must lie in [0, 1]")
        if self.batch_size < 1 or self.update_every < 1:
            raise ValueError("batch_size and update_every must be positive")
        if self.obs_scaling not in ("panel", "raw"):
            raise ValueError(f"unknown obs_scaling {self.obs_scaling!r}")
        if self.critic_window != 1:
            raise ValueError("only length-1 critic sequences are supported")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["epsilon_schedule"] = [list(x) for x in self.epsilon_schedule]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d)
        if "epsilon_schedule" in d:
            d["epsilon_schedule"] = tuple(tuple(x) for x in d["epsilon_schedule"])
        return cls(**d)


def epsilon(n_states: int, schedule=EPSILON_SCHEDULE) -> float:
    """Piecewise exploration probability by number of states seen so far."""
    if n_states < 0:
        raise ValueError("state count must be non-negative")
    for bound, value in schedule:
        if bound is None or n_states < bound:
            return value
    return schedule[-1][1]


@dataclass
class OUNoise:
    size: int
    theta: float = 0.15
    mu: np.ndarray | float = 0.0
    sigma: float = 0.2
    dt: float = 1.0
    x: np.ndarray = field(init=False)

    def __post_init__(self):
        self.mu = np.broadcast_to(np.asarray(self.mu, dtype=float), (self.size,)).copy()
        self.reset()

    def reset(self):
        self.x = self.mu.copy()

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        """Euler step x <- x + theta*(mu - x)*dt + sigma*sqrt(dt)*N(0, I)."""
        self.x = self.x + self.theta * (self.mu - self.x) * self.dt + self.sigma * np.sqrt(self.dt) * rng.standard_normal(self.size)
        return self.x.copy()


def ou_sample(noise: OUNoise, rng: np.random.Generator) -> np.ndarray:
    return noise.sample(rng)


class ReplayBuffer:
    """Fixed-capacity ring of transitions, sampled uniformly without replacement."""

    def __init__(self, capacity: int, obs_dim: int, act_dim: int):
        self.capacity = capacity
        self.s = np.zeros((capacity, obs_dim))
        self.a = np.zeros((capacity, act_dim))
        self.r = np.zeros(capacity)
        self.s2 = np.zeros((capacity, obs_dim))
        self.done = np.zeros(capacity, dtype=bool)
        self._next = 0
        self.size = 0

    def __len__(self):
        return self.size

    def push(self, s, a, r, s2, done):
        k = self._next
        self.s[k], self.a[k], self.r[k], self.s2[k], self.done[k] = s, a, r, s2, done
        self._next = (k + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def oldest(self) -> int:
        return self._next if self.size == self.capacity else 0

    def sample(self, batch_size: int, rng: np.random.Generator):
        if batch_size > self.size:
            raise ValueError(f"cannot draw {batch_size} from {self.size} transitions")
        idx = rng.choice(self.size, size=batch_size, replace=False)
        return Batch(self.s[idx], self.a[idx], self.r[idx], self.s2[idx], self.done[idx])


@dataclass
class Batch:
    s: np.ndarray
    a: np.ndarray
    r: np.ndarray
    s2: np.ndarray
    done: np.ndarray

    def __len__(self):
        return self.s.shape[0]


def build_actor(m: int, rng=None, hidden=ACTOR_HIDDEN) -> Network:
    sizes = (observation_size(m),) + tuple(hidden)
    layers = [Dense(a, b, "relu") for a, b in zip(sizes[:-1], sizes[1:])]
    layers += [Dense(sizes[-1], m, "sigmoid"), SumNormalize()]
    return Network(layers, rng)


def build_critic(m: int, rng=None, dropout_rng=None, lstm_hidden=CRITIC_LSTM_HIDDEN,
                 fc_hidden=CRITIC_FC_HIDDEN, dropout=CRITIC_DROPOUT) -> Network:
    n_in = observation_size(m) + m
    layers = [
        LSTM(n_in, lstm_hidden),
        Dropout(dropout, dropout_rng),
        LSTM(lstm_hidden, lstm_hidden),
        LastStep(),
        Dropout(dropout, dropout_rng),
        Dense(lstm_hidden, fc_hidden, "relu"),
        Dense(fc_hidden, 1, "identity"),
    ]
    return Network(layers, rng)


def actor_raw(actor: Network, obs) -> np.ndarray:
    """Sigmoid outputs, before normalisation onto the simplex."""
    out = np.atleast_2d(np.asarray(obs, dtype=float))
    for layer in actor.layers[:-1]:
        out = layer.forward(out)
    return out


def normalize_weights(raw, floor: float = 1e-8) -> np.ndarray:
    raw = np.asarray(raw, dtype=float)
    s = raw.sum()
    if s < floor:
        return np.full(raw.size, 1.0 / raw.size)
    return raw / s


def state_action(s, a) -> np.ndarray:
    """Concatenate states and actions into a (batch, 1, features) critic input."""
    s = np.atleast_2d(s)
    a = np.atleast_2d(a)
    if s.shape[0] != a.shape[0]:
        raise ValueError(f"batch mismatch: {s.shape[0]} states vs {a.shape[0]} actions")
    return np.concatenate([s, a], axis=1)[:, None, :]


class ObservationScaler:
    """Fixed per-feature divisors derived from the panel and starting cash.

    Prices by the panel's first-row price, log returns by 0.01, RSI by 100,
    holdings by the share count of an all-in position at the first price, and
    value/cash by the initial cash.
    """

    def __init__(self, m: int, scale: np.ndarray | None = None):
        self.m = m
        self.scale = np.ones(observation_size(m)) if scale is None else np.asarray(scale, dtype=float)

    @classmethod
    def from_panel(cls, panel: AlignedPanel, initial_cash: float) -> "ObservationScaler":
        p0 = panel.prices[0]
        per_asset = np.column_stack([p0, p0, np.full_like(p0, 0.01), np.full_like(p0, 100.0), initial_cash / p0])
        return cls(panel.M, np.concatenate([per_asset.reshape(-1), [initial_cash, initial_cash]]))

    def __call__(self, obs):
        return np.asarray(obs, dtype=float) / self.scale


class DDPGAgent:
    def __init__(self, m: int, config: TrainConfig = TrainConfig(), scaler: ObservationScaler | None = None):
        self.m = m
        self.config = config
        seeds = SeedTree(config.seed)
        self.rng_init = seeds.generator("init")
        self.rng_noise = seeds.generator("noise")
        self.rng_explore = seeds.generator("explore")
        self.rng_replay = seeds.generator("replay")
        self.rng_dropout = seeds.generator("dropout")
        self.actor = build_actor(m, self.rng_init)
        self.critic = build_critic(m, self.rng_init, self.rng_dropout)
        self.target_actor = build_actor(m)
        self.target_critic = build_critic(m)
        self.target_actor.copy_from(self.actor)
        self.target_critic.copy_from(self.critic)
        self.actor_opt = Adam(self.actor.size, config.actor_lr)
        self.critic_opt = Adam(self.critic.size, config.critic_lr)
        self.noise = OUNoise(m, config.ou_theta, 0.0, config.ou_sigma, config.ou_dt)
        self.scaler = scaler if scaler is not None else ObservationScaler(m)
        self.n_states = 0

    # -- acting

    def act(self, obs, explore: bool = False) -> np.ndarray:
        return act(self.actor, self.scaler(obs), explore, self.noise, self.rng_explore, self.rng_noise,
                   epsilon(self.n_states, self.config.epsilon_schedule))

    def policy(self, obs, state=None, t=None) -> np.ndarray:
        return self.act(obs, explore=False)

    # -- learning

    def learn(self, batch: Batch) -> tuple[float, float]:
        c_loss = update_critic(self.critic, self.target_actor, self.target_critic, batch,
                               self.config.gamma, self.critic_opt, self.config.huber_delta)
        a_loss = update_actor(self.actor, self.critic, batch, self.actor_opt)
        soft_update(self.actor.theta, self.target_actor.theta, self.config.tau)
        soft_update(self.critic.theta, self.target_critic.theta, self.config.tau)
        return c_loss, a_loss

    # -- persistence

    def networks(self) -> dict[str, Network]:
        return {"actor": self.actor, "critic": self.critic,
                "target_actor": self.target_actor, "target_critic": self.target_critic}

    def save(self, path, extra: dict | None = None):
        meta = {"m": self.m, "train_config": self.config.to_dict(),
                "obs_scale": self.scaler.scale.tolist(), "n_states": self.n_states}
        meta.update(extra or {})
        save_networks(path, self.networks(), meta)

    @classmethod
    def load(cls, path) -> "DDPGAgent":
        from .nn import read_checkpoint

        header, _ = read_checkpoint(path)
        meta = header["meta"]
        agent = cls(meta["m"], TrainConfig.from_dict(meta["train_config"]),
                    ObservationScaler(meta["m"], np.array(meta["obs_scale"])))
        load_networks(path, agent.networks())
        agent.n_states = meta.get("n_states", 0)
        agent.meta = meta
        return agent


def act(actor: Network, obs, explore: bool, noise: OUNoise, rng_explore, rng_noise, eps: float) -> np.ndarray:
    """Greedy weights, or with probability ``eps`` (when exploring) OU-perturbed ones.

    Noise is added to the sigmoid outputs, clipped to [0, 1], then the vector
    is normalised to sum to one.
    """
    raw = actor_raw(actor, obs)[0]
    if explore and rng_explore.random() <= eps:
        raw = np.clip(raw + noise.sample(rng_noise), 0.0, 1.0)
    return normalize_weights(raw)


def critic_target(target_actor: Network, target_critic: Network, r, s2, done, gamma: float) -> np.ndarray:
    """r + gamma * Q'(s', A'(s')) with the bootstrap cut at terminal transitions."""
    r = np.asarray(r, dtype=float).reshape(-1, 1)
    done = np.asarray(done, dtype=bool).reshape(-1, 1)
    if gamma == 0.0 or done.all():
        return r.copy()
    a2 = target_actor.forward(s2)
    q2 = target_critic.forward(state_action(s2, a2))
    return np.where(done, r, r + gamma * q2)


def update_critic(critic, target_actor, target_critic, batch: Batch, gamma: float, optimizer: Adam,
                  delta: float = 1.0) -> float:
    y = critic_target(target_actor, target_critic, batch.r, batch.s2, batch.done, gamma)
    critic.zero_grad()
    q = critic.forward(state_action(batch.s, batch.a), training=True)
    loss, dq = huber_loss(y, q, delta)
    critic.backward(dq)
    optimizer.step(critic.theta, critic.grad)
    return loss


def actor_loss_and_grad(actor: Network, critic: Network, s) -> float:
    """loss = -sum_b Q(s_b, A(s_b)); leaves dloss/dtheta in ``actor.grad``.

    The critic runs in evaluation mode and its own gradients are untouched.
    """
    actor.zero_grad()
    a = actor.forward(s)
    q = critic.forward(state_action(s, a), training=False)
    dx = critic.backward(-np.ones_like(q), param_grads=False)
    actor.backward(dx[:, 0, s.shape[1]:])
    return -float(q.sum())


def update_actor(actor, critic, batch: Batch, optimizer: Adam) -> float:
    """One ascent step of the actor on the critic; only actor parameters move."""
    loss = actor_loss_and_grad(actor, critic, batch.s)
    optimizer.step(actor.theta, actor.grad)
    return loss


@dataclass
class EpochLog:
    epoch: int
    steps: int
    reward_sum: float
    critic_loss: float
    actor_loss: float
    epsilon: float
    final_value: float


def train(panel: AlignedPanel, env_config: EnvConfig, config: TrainConfig, start_t: int = 1, stop_t=None,
          agent: DDPGAgent | None = None, progress=None) -> tuple[DDPGAgent, list[EpochLog]]:
    """Run ``config.epochs`` passes over panel rows ``start_t..stop_t``.

    Every environment step is stored in the replay buffer; once it holds a
    full minibatch, an update (critic, actor, both soft updates) runs every
    ``update_every`` steps. Returns the agent and one log row per epoch.
    """
    from .env import _truncate

    stop_t = panel.T - 1 if stop_t is None else stop_t
    if stop_t - start_t < 1 or start_t < 1:
        raise ValueError(f"training range [{start_t}, {stop_t}] holds no complete step")
    sub = panel if stop_t == panel.T - 1 else _truncate(panel, stop_t + 1)
    if agent is None:
        scaler = (ObservationScaler.from_panel(sub, env_config.initial_cash)
                  if config.obs_scaling == "panel" else ObservationScaler(panel.M))
        agent = DDPGAgent(panel.M, config, scaler)
    buffer = ReplayBuffer(config.buffer_capacity, observation_size(panel.M), panel.M)
    env = MarketEnv(sub, env_config)
    logs = []
    total_steps = 0
    for epoch in range(config.epochs):
        _, obs = env.reset(start_t)
        agent.noise.reset()
        s = agent.scaler(obs)
        reward_sum, c_losses, a_losses = 0.0, [], []
        done = False
        steps = 0
        while not done:
            eps = epsilon(agent.n_states, config.epsilon_schedule)
            w = act(agent.actor, s, True, agent.noise, agent.rng_explore, agent.rng_noise, eps)
            agent.n_states += 1
            res = env.step(w)
            s2 = agent.scaler(res.next_obs)
            buffer.push(s, w, res.reward * config.reward_scale, s2, res.done)
            reward_sum += res.reward
            s, done = s2, res.done
            steps += 1
            total_steps += 1
            if len(buffer) >= config.batch_size and total_steps % config.update_every == 0:
                c, a = agent.learn(buffer.sample(config.batch_size, agent.rng_replay))
                c_losses.append(c)
                a_losses.append(a)
        row = EpochLog(epoch, steps, reward_sum,
                       float(np.mean(c_losses)) if c_losses else float("nan"),
                       float(np.mean(a_losses)) if a_losses else float("nan"),
                       epsilon(agent.n_states, config.epsilon_schedule), env.state.value)
        logs.append(row)
        log.info("epoch %d reward_sum %.2f critic %.4g actor %.4g", epoch, reward_sum, row.critic_loss, row.actor_loss)
        if progress is not None:
            progress(row)
    return agent, logs


def logs_to_csv(logs: list[EpochLog]) -> str:
    lines = ["epoch,step,reward_sum,critic_loss,actor_loss,epsilon,final_value"]
    for r in logs:
        lines.append(f"{r.epoch},{r.steps},{r.reward_sum!r},{r.critic_loss!r},{r.actor_loss!r},{r.epsilon!r},{r.final_value!r}")
    return "\n".join(lines) + "\n"
