"""Small numpy network kernel with hand-written backward passes.

Layers cache what they need during ``forward`` and accumulate parameter
gradients during ``backward``. A :class:`Network` owns one flat float64 buffer
for all parameters (and one for their gradients); each layer works on views
into it, so optimiser steps, soft updates and checkpoints are single vector
operations.

Checkpoint container layout (little endian)::

    8 bytes   magic b"DDPGNET1"
    8 bytes   uint64 header length H
    H bytes   UTF-8 JSON header: {"version": 1, "meta": {...},
              "networks": {net: [[block, [shape...], offset], ...]}}
    rest      float64 values, row-major, blocks concatenated in header order
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

ACTIVATIONS = ("relu", "sigmoid", "identity", "tanh")


def sigmoid(z):
    # exp overflow for very negative z yields inf -> 0, which is the right limit
    with np.errstate(over="ignore"):
        e = np.exp(-z)
    e += 1.0
    return np.reciprocal(e, out=e)


def _activate(z, kind):
    if kind == "relu":
        return np.maximum(z, 0.0)
    if kind == "sigmoid":
        return sigmoid(z)
    if kind == "tanh":
        return np.tanh(z)
    return z


def _activation_grad(y, z, kind):
    """Derivative of the activation expressed through its output ``y``."""
    if kind == "relu":
        return (z > 0).astype(z.dtype)
    if kind == "sigmoid":
        return y * (1.0 - y)
    if kind == "tanh":
        return 1.0 - y * y
    return np.ones_like(z)


class Layer:
    """Base class. Subclasses declare parameter shapes and get views bound."""

    def param_shapes(self) -> dict[str, tuple[int, ...]]:
        return {}

    def bind(self, values: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        for name, arr in values.items():
            setattr(self, name, arr)
            setattr(self, "d" + name, grads[name])

    def init(self, rng: np.random.Generator) -> None:
        pass

    def forward(self, x, training=False):
        raise NotImplementedError

    def backward(self, dy, param_grads=True):
        raise NotImplementedError


class Dense(Layer):
    def __init__(self, n_in: int, n_out: int, activation: str = "identity"):
        if activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {activation!r}")
        self.n_in = n_in
        self.n_out = n_out
        self.activation = activation

    def param_shapes(self):
        # stored as in x out so forward is x @ W
        return {"W": (self.n_in, self.n_out), "b": (self.n_out,)}

    def init(self, rng):
        bound = 1.0 / np.sqrt(self.n_in)
        self.W[...] = rng.uniform(-bound, bound, self.W.shape)
        self.b[...] = rng.uniform(-bound, bound, self.b.shape)

    def forward(self, x, training=False):
        if x.shape[-1] != self.n_in:
            raise ValueError(f"Dense expects inner dimension {self.n_in}, got {x.shape[-1]}")
        z = x @ self.W + self.b
        y = _activate(z, self.activation)
        self._cache = (x, z, y)
        return y

    def backward(self, dy, param_grads=True):
        x, z, y = self._cache
        dz = dy * _activation_grad(y, z, self.activation)
        if param_grads:
            x2 = x.reshape(-1, self.n_in)
            dz2 = dz.reshape(-1, self.n_out)
            self.dW += x2.T @ dz2
            self.db += dz2.sum(axis=0)
        return dz @ self.W.T


class LSTM(Layer):
    """Standard LSTM layer over (batch, time, features) input.

    Gate blocks in ``W``/``U``/``b`` are ordered input, forget, output,
    candidate. Only the hidden sequence is propagated to the next layer; the
    final (h, c) are kept on ``last_state``.
    """

    def __init__(self, n_in: int, hidden: int, forget_bias: float = 1.0):
        self.n_in = n_in
        self.hidden = hidden
        self.forget_bias = forget_bias
        self.last_state = None

    def param_shapes(self):
        H = self.hidden
        return {"W": (self.n_in, 4 * H), "U": (H, 4 * H), "b": (4 * H,)}

    def init(self, rng):
        H = self.hidden
        bw = 1.0 / np.sqrt(self.n_in)
        bu = 1.0 / np.sqrt(H)
        self.W[...] = rng.uniform(-bw, bw, self.W.shape)
        self.U[...] = rng.uniform(-bu, bu, self.U.shape)
        self.b[...] = 0.0
        self.b[H:2 * H] = self.forget_bias

    def forward(self, x, training=False, h0=None, c0=None):
        if x.ndim != 3 or x.shape[2] != self.n_in:
            raise ValueError(f"LSTM expects (batch, time, {self.n_in}), got {x.shape}")
        B, T, _ = x.shape
        H = self.hidden
        # a zero initial state lets the first step skip the recurrent product
        zero_init = h0 is None
        h = np.zeros((B, H)) if h0 is None else np.array(h0, dtype=float)
        c = np.zeros((B, H)) if c0 is None else np.array(c0, dtype=float)
        hs = np.empty((B, T, H))
        steps = []
        xw = (x.reshape(B * T, self.n_in) @ self.W + self.b).reshape(B, T, 4 * H)
        for t in range(T):
            a = xw[:, t] if (t == 0 and zero_init) else xw[:, t] + h @ self.U
            ifo = sigmoid(a[:, :3 * H])
            g = np.tanh(a[:, 3 * H:])
            i, f, o = ifo[:, :H], ifo[:, H:2 * H], ifo[:, 2 * H:]
            c_prev, h_prev = c, h
            c = f * c_prev + i * g
            tc = np.tanh(c)
            h = o * tc
            hs[:, t] = h
            steps.append((h_prev, c_prev, i, f, o, g, tc))
        self._cache = (x, steps, zero_init)
        self.last_state = (h, c)
        return hs

    def backward(self, dhs, param_grads=True, dh_last=None, dc_last=None):
        """Backpropagation through time.

        The gradient with respect to (h0, c0) is left on
        ``initial_state_grad``.
        """
        x, steps, zero_init = self._cache
        B, T, _ = x.shape
        H = self.hidden
        dh_next = np.zeros((B, H)) if dh_last is None else dh_last
        dc_next = np.zeros((B, H)) if dc_last is None else dc_last
        das = np.empty((B, T, 4 * H))
        for t in reversed(range(T)):
            h_prev, c_prev, i, f, o, g, tc = steps[t]
            dh = dhs[:, t] + dh_next
            dc = dc_next + dh * o * (1.0 - tc * tc)
            da = das[:, t]
            da[:, :H] = dc * g * i * (1.0 - i)
            da[:, H:2 * H] = dc * c_prev * f * (1.0 - f)
            da[:, 2 * H:3 * H] = dh * tc * o * (1.0 - o)
            da[:, 3 * H:] = dc * i * (1.0 - g * g)
            first = t == 0 and zero_init
            if param_grads and not first:
                self.dU += h_prev.T @ da
            dh_next = np.zeros((B, H)) if first else da @ self.U.T
            dc_next = dc * f
        if param_grads:
            self.dW += x.reshape(B * T, self.n_in).T @ das.reshape(B * T, 4 * H)
            self.db += das.sum(axis=(0, 1))
        self.initial_state_grad = (dh_next, dc_next)
        return (das.reshape(B * T, 4 * H) @ self.W.T).reshape(B, T, self.n_in)


class Dropout(Layer):
    """Inverted dropout; the identity outside training."""

    def __init__(self, rate: float, rng: np.random.Generator | None = None):
        if not 0.0 <= rate < 1.0:
            raise ValueError(f"dropout rate must lie in [0, 1), got {rate}")
        self.rate = rate
        self.rng = rng if rng is not None else np.random.default_rng(0)

    def forward(self, x, training=False):
        if not training or self.rate == 0.0:
            self._mask = None
            return x
        keep = self.rng.random(x.shape) >= self.rate
        self._mask = keep / (1.0 - self.rate)
        return x * self._mask

    def backward(self, dy, param_grads=True):
        return dy if self._mask is None else dy * self._mask


def dropout(x, rate, training, rng):
    """Functional form of :class:`Dropout`."""
    return Dropout(rate, rng).forward(np.asarray(x, dtype=float), training)


class LastStep(Layer):
    """Selects the final timestep of a (batch, time, features) sequence."""

    def forward(self, x, training=False):
        self._shape = x.shape
        return x[:, -1]

    def backward(self, dy, param_grads=True):
        dx = np.zeros(self._shape)
        dx[:, -1] = dy
        return dx


class SumNormalize(Layer):
    """Maps a positive vector to the simplex by dividing by its sum.

    Rows whose sum falls below ``floor`` become uniform (zero gradient).
    """

    def __init__(self, floor: float = 1e-8):
        self.floor = floor

    def forward(self, x, training=False):
        s = x.sum(axis=-1, keepdims=True)
        small = s < self.floor
        y = np.where(small, 1.0 / x.shape[-1], x / np.where(small, 1.0, s))
        self._cache = (s, y, small)
        return y

    def backward(self, dy, param_grads=True):
        s, y, small = self._cache
        dx = (dy - (dy * y).sum(axis=-1, keepdims=True)) / np.where(small, 1.0, s)
        return np.where(small, 0.0, dx)


class Network:
    """Ordered stack of layers sharing one flat parameter buffer."""

    def __init__(self, layers: Iterable[Layer], rng: np.random.Generator | None = None):
        self.layers = list(layers)
        self.blocks: list[tuple[str, tuple[int, ...], int]] = []
        offset = 0
        for k, layer in enumerate(self.layers):
            for pname, shape in layer.param_shapes().items():
                self.blocks.append((f"{k}.{pname}", tuple(shape), offset))
                offset += int(np.prod(shape))
        self.theta = np.zeros(offset)
        self.grad = np.zeros(offset)
        for k, layer in enumerate(self.layers):
            vals, grads = {}, {}
            for pname in layer.param_shapes():
                name = f"{k}.{pname}"
                _, shape, off = next(b for b in self.blocks if b[0] == name)
                n = int(np.prod(shape))
                vals[pname] = self.theta[off:off + n].reshape(shape)
                grads[pname] = self.grad[off:off + n].reshape(shape)
            layer.bind(vals, grads)
        if rng is not None:
            for layer in self.layers:
                layer.init(rng)

    @property
    def size(self) -> int:
        return self.theta.size

    def block_views(self) -> dict[str, tuple[np.ndarray, np.ndarray]]:
        out = {}
        for name, shape, off in self.blocks:
            n = int(np.prod(shape))
            out[name] = (self.theta[off:off + n].reshape(shape), self.grad[off:off + n].reshape(shape))
        return out

    def forward(self, x, training=False):
        out = np.asarray(x, dtype=float)
        for layer in self.layers:
            out = layer.forward(out, training=training)
        return out

    __call__ = forward

    def backward(self, dy, param_grads=True):
        """Backpropagate ``dy``; returns the input gradient.

        ``param_grads=False`` only propagates to the input (parameter
        gradients are left untouched).
        """
        for layer in reversed(self.layers):
            dy = layer.backward(dy, param_grads)
        return dy

    def zero_grad(self):
        self.grad[...] = 0.0

    def copy_from(self, other: "Network"):
        if other.theta.shape != self.theta.shape:
            raise ValueError("network shapes differ")
        self.theta[...] = other.theta


def huber_loss(y, f, delta: float = 1.0):
    """Mean Huber loss and its gradient with respect to the prediction ``f``."""
    y = np.asarray(y, dtype=float)
    f = np.asarray(f, dtype=float)
    if y.shape != f.shape:
        raise ValueError(f"shape mismatch: {y.shape} vs {f.shape}")
    d = f - y
    ad = np.abs(d)
    per = np.where(ad <= delta, 0.5 * d * d, delta * ad - 0.5 * delta * delta)
    n = max(d.size, 1)
    return float(per.sum() / n), np.clip(d, -delta, delta) / n


@dataclass
class Adam:
    size: int
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: np.ndarray = field(init=False)
    v: np.ndarray = field(init=False)

    def __post_init__(self):
        self.m = np.zeros(self.size)
        self.v = np.zeros(self.size)
        self._buf = np.zeros(self.size)

    def step(self, params: np.ndarray, grads: np.ndarray) -> None:
        """In-place bias-corrected update of ``params``.

        Bias corrections are folded into the step size and epsilon, which is
        algebraically the textbook update.
        """
        if params.shape != self.m.shape or grads.shape != self.m.shape:
            raise ValueError("parameter/gradient shape does not match optimiser state")
        self.t += 1
        self.m *= self.beta1
        self.m += (1.0 - self.beta1) * grads
        self.v *= self.beta2
        self.v += (1.0 - self.beta2) * np.square(grads, out=self._buf)
        c1 = 1.0 - self.beta1 ** self.t
        c2 = np.sqrt(1.0 - self.beta2 ** self.t)
        denom = np.sqrt(self.v, out=self._buf)
        denom += self.eps * c2
        np.divide(self.m, denom, out=denom)
        denom *= self.lr * c2 / c1
        params -= denom


def adam_step(state: Adam, params: np.ndarray, grads: np.ndarray) -> np.ndarray:
    state.step(params, grads)
    return params


def soft_update(online: np.ndarray, target: np.ndarray, tau: float) -> np.ndarray:
    """Blend ``target`` toward ``online`` in place: target <- tau*online + (1-tau)*target."""
    if online.shape != target.shape:
        raise ValueError(f"shape mismatch: {online.shape} vs {target.shape}")
    target *= 1.0 - tau
    target += tau * online
    return target


# ---------------------------------------------------------------- grad check


@dataclass
class GradCheckReport:
    tolerance: float
    block_errors: dict[str, float]

    @property
    def max_error(self) -> float:
        return max(self.block_errors.values(), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_error < self.tolerance

    def __str__(self):
        rows = [f"{name:>12s}  {err:.3e}" for name, err in self.block_errors.items()]
        status = "PASS" if self.passed else "FAIL"
        return "\n".join(rows + [f"max rel. error {self.max_error:.3e} ({status})"])


def relative_error(a, n):
    a = np.asarray(a, dtype=float)
    n = np.asarray(n, dtype=float)
    return np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), 1e-8)


def grad_check_blocks(
    blocks: dict[str, tuple[np.ndarray, np.ndarray]],
    loss: Callable[[], float],
    tolerance: float = 1e-4,
    eps: float = 1e-4,
    max_entries: int | None = None,
    rng: np.random.Generator | None = None,
) -> GradCheckReport:
    """Compare analytic gradients already stored in ``blocks`` with central differences.

    ``blocks`` maps a name to ``(values, analytic_grad)``; ``values`` is
    perturbed in place and restored. With ``max_entries`` set, that many
    entries per block are sampled (without replacement) instead of all.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    errors = {}
    for name, (vals, grad) in blocks.items():
        flat = vals.reshape(-1)
        gflat = np.asarray(grad, dtype=float).reshape(-1).copy()
        idx = np.arange(flat.size)
        if max_entries is not None and flat.size > max_entries:
            idx = np.sort(rng.choice(flat.size, size=max_entries, replace=False))
        worst = 0.0
        for j in idx:
            orig = flat[j]
            flat[j] = orig + eps
            lp = loss()
            flat[j] = orig - eps
            lm = loss()
            flat[j] = orig
            num = (lp - lm) / (2.0 * eps)
            worst = max(worst, float(relative_error(gflat[j], num)))
        errors[name] = worst
    return GradCheckReport(tolerance, errors)


def grad_check(
    network: Network,
    loss_fn: Callable[[np.ndarray], tuple[float, np.ndarray]],
    x,
    tolerance: float = 1e-4,
    eps: float = 1e-4,
    max_entries: int | None = None,
    rng: np.random.Generator | None = None,
) -> GradCheckReport:
    """Finite-difference check of every parameter block and of the input.

    ``loss_fn(output)`` returns ``(loss, dloss/doutput)``. Runs in evaluation
    mode, so dropout is off.
    """
    x = np.array(x, dtype=float)
    network.zero_grad()
    out = network.forward(x, training=False)
    _, dout = loss_fn(out)
    dx = network.backward(dout)

    def loss():
        return loss_fn(network.forward(x, training=False))[0]

    blocks = {name: (v, g.copy()) for name, (v, g) in network.block_views().items()}
    blocks["input"] = (x, dx)
    return grad_check_blocks(blocks, loss, tolerance, eps, max_entries, rng)


# ---------------------------------------------------------------- checkpoints

_MAGIC = b"DDPGNET1"


def save_networks(path, networks: dict[str, Network], meta: dict | None = None) -> None:
    header = {"version": 1, "meta": meta or {}, "networks": {}}
    chunks = []
    offset = 0
    for net_name, net in networks.items():
        entries = []
        for block, shape, off in net.blocks:
            entries.append([block, list(shape), offset + off])
        header["networks"][net_name] = entries
        chunks.append(np.ascontiguousarray(net.theta, dtype="<f8").tobytes())
        offset += net.size
    raw = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<Q", len(raw)))
        fh.write(raw)
        for chunk in chunks:
            fh.write(chunk)


def read_checkpoint(path) -> tuple[dict, np.ndarray]:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:8] != _MAGIC:
        raise ValueError(f"{path}: not a network checkpoint")
    (n,) = struct.unpack("<Q", data[8:16])
    header = json.loads(data[16:16 + n].decode("utf-8"))
    if header.get("version") != 1:
        raise ValueError(f"{path}: unsupported checkpoint version {header.get('version')}")
    values = np.frombuffer(data[16 + n:], dtype="<f8").astype(float)
    return header, values


def load_networks(path, networks: dict[str, Network]) -> dict:
    """Fill ``networks`` in place from a checkpoint; returns the stored meta."""
    header, values = read_checkpoint(path)
    for net_name, net in networks.items():
        if net_name not in header["networks"]:
            raise ValueError(f"checkpoint has no network {net_name!r}")
        entries = header["networks"][net_name]
        expected = [(b, list(s)) for b, s, _ in net.blocks]
        if [(e[0], e[1]) for e in entries] != expected:
            raise ValueError(f"checkpoint network {net_name!r} does not match the architecture")
        start = entries[0][2]
        net.theta[...] = values[start:start + net.size]
    return header["meta"]
