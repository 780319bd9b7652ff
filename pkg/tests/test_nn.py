import numpy as np
import pytest

from ddpg_portfolio.nn import (
    LSTM,
    Adam,
    Dense,
    Dropout,
    LastStep,
    Network,
    SumNormalize,
    adam_step,
    dropout,
    grad_check,
    grad_check_blocks,
    huber_loss,
    load_networks,
    read_checkpoint,
    save_networks,
    sigmoid,
    soft_update,
)


def quadratic(out):
    return 0.5 * float((out ** 2).sum()), out


def mixed_loss(out):
    # smooth, non-degenerate in every output coordinate
    c = np.linspace(0.5, 1.5, out.size).reshape(out.shape)
    return float((c * out ** 2).sum() + (np.sin(out)).sum()), 2 * c * out + np.cos(out)


class TestDense:
    def _net(self, n_in, n_out, act, W=None, b=None):
        net = Network([Dense(n_in, n_out, act)])
        layer = net.layers[0]
        if W is not None:
            layer.W[...] = np.asarray(W, dtype=float).T
        if b is not None:
            layer.b[...] = b
        return net

    def test_zero_relu(self):
        net = self._net(3, 2, "relu", np.zeros((2, 3)), [0, 0])
        np.testing.assert_array_equal(net.forward([[1.0, -2.0, 3.0]]), [[0.0, 0.0]])

    def test_identity(self):
        net = self._net(3, 3, "identity", np.eye(3), [0, 0, 0])
        x = np.array([[1.5, -2.0, 0.25]])
        np.testing.assert_array_equal(net.forward(x), x)

    def test_hand_dot(self):
        net = self._net(2, 1, "identity", [[1.0, 2.0]], [1.0])
        np.testing.assert_array_equal(net.forward([[3.0, 4.0]]), [[12.0]])

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            self._net(2, 1, "identity").forward([[1.0, 2.0, 3.0]])

    def test_grad_single_layer(self):
        rng = np.random.default_rng(0)
        net = Network([Dense(4, 3, "sigmoid")], rng)
        report = grad_check(net, quadratic, rng.normal(size=(5, 4)))
        assert report.max_error < 1e-6, str(report)


class TestLSTM:
    def test_zero_weights(self):
        net = Network([LSTM(3, 4)])
        layer = net.layers[0]
        out = net.forward(np.ones((2, 1, 3)))
        # gates 0.5, candidate tanh(0) = 0, cell 0, h 0
        np.testing.assert_array_equal(out, 0.0)
        h, c = layer.last_state
        np.testing.assert_array_equal(h, 0.0)
        np.testing.assert_array_equal(c, 0.0)

    def test_empty_sequence(self):
        layer = LSTM(3, 4)
        Network([layer], np.random.default_rng(0))
        h0 = np.full((2, 4), 0.3)
        c0 = np.full((2, 4), -0.2)
        hs = layer.forward(np.zeros((2, 0, 3)), h0=h0, c0=c0)
        assert hs.shape == (2, 0, 4)
        np.testing.assert_array_equal(layer.last_state[0], h0)
        np.testing.assert_array_equal(layer.last_state[1], c0)

    def test_zero_candidate_gives_zero_h(self):
        layer = LSTM(2, 3)
        Network([layer], np.random.default_rng(1))
        layer.W[:, 9:] = 0.0
        layer.b[9:] = 0.0
        layer.forward(np.random.default_rng(2).normal(size=(4, 1, 2)))
        np.testing.assert_array_equal(layer.last_state[0], 0.0)

    def test_hand_step(self):
        # one step, hidden 1: a = x*W + b with W gates all 1, b = 0
        layer = LSTM(1, 1, forget_bias=0.0)
        Network([layer])
        layer.W[...] = 1.0
        x = 0.7
        i = o = 1 / (1 + np.exp(-x))
        g = np.tanh(x)
        c = i * g
        h = o * np.tanh(c)
        out = layer.forward(np.array([[[x]]]))
        assert out[0, 0, 0] == pytest.approx(h, abs=1e-15)
        assert layer.last_state[1][0, 0] == pytest.approx(c, abs=1e-15)

    def test_hidden_bounded(self):
        rng = np.random.default_rng(3)
        net = Network([LSTM(5, 8)], rng)
        for layer_p in net.block_views().values():
            layer_p[0][...] *= 20
        out = net.forward(rng.normal(size=(6, 12, 5)) * 10)
        assert np.all(np.abs(out) <= 1.0)

    def test_bptt_with_initial_state(self):
        rng = np.random.default_rng(4)
        layer = LSTM(3, 4)
        net = Network([layer, LastStep(), Dense(4, 2, "tanh")], rng)
        x = rng.normal(size=(3, 5, 3))
        h0 = rng.normal(size=(3, 4)) * 0.5
        c0 = rng.normal(size=(3, 4)) * 0.5

        def forward():
            out = layer.forward(x, h0=h0, c0=c0)
            for later in net.layers[1:]:
                out = later.forward(out)
            return out

        net.zero_grad()
        out = forward()
        _, dout = mixed_loss(out)
        dy = dout
        for later in reversed(net.layers[1:]):
            dy = later.backward(dy)
        dx = layer.backward(dy)
        dh0, dc0 = layer.initial_state_grad
        blocks = {k: (v, g.copy()) for k, (v, g) in net.block_views().items()}
        blocks.update({"x": (x, dx), "h0": (h0, dh0), "c0": (c0, dc0)})
        report = grad_check_blocks(blocks, lambda: mixed_loss(forward())[0])
        assert report.max_error < 1e-6, str(report)

    def test_two_layer_stack_grad(self):
        rng = np.random.default_rng(5)
        net = Network([LSTM(6, 7), Dropout(0.35), LSTM(7, 5), LastStep(), Dropout(0.35),
                       Dense(5, 4, "relu"), Dense(4, 1)], rng)
        report = grad_check(net, mixed_loss, rng.normal(size=(4, 3, 6)))
        assert report.max_error < 1e-4, str(report)


class TestDropout:
    def test_rate_zero(self):
        x = np.arange(6.0)
        np.testing.assert_array_equal(dropout(x, 0.0, True, np.random.default_rng(0)), x)

    def test_eval_passthrough(self):
        x = np.arange(6.0)
        assert dropout(x, 0.35, False, np.random.default_rng(0)) is not None
        np.testing.assert_array_equal(dropout(x, 0.35, False, np.random.default_rng(0)), x)

    def test_mean_preserved(self):
        y = dropout(np.ones(1_000_000), 0.35, True, np.random.default_rng(0))
        assert abs(y.mean() - 1.0) < 0.01
        assert set(np.unique(y)) == {0.0, 1 / 0.65}

    def test_rate_range(self):
        with pytest.raises(ValueError):
            Dropout(1.0)
        with pytest.raises(ValueError):
            Dropout(-0.1)


class TestHuber:
    def test_zero(self):
        loss, g = huber_loss([1.0, 2.0], [1.0, 2.0])
        assert loss == 0.0 and not g.any()

    def test_quadratic_branch(self):
        assert huber_loss([0.0], [0.5])[0] == 0.125

    def test_linear_branch(self):
        loss, g = huber_loss([0.0], [2.0], delta=1.0)
        assert loss == 1.5 and g[0] == 1.0

    def test_gradient_fd(self):
        rng = np.random.default_rng(0)
        y = rng.normal(size=8) * 2
        f = rng.normal(size=8) * 2
        _, g = huber_loss(y, f)
        eps = 1e-6
        for j in range(8):
            fp, fm = f.copy(), f.copy()
            fp[j] += eps
            fm[j] -= eps
            num = (huber_loss(y, fp)[0] - huber_loss(y, fm)[0]) / (2 * eps)
            assert g[j] == pytest.approx(num, abs=1e-8)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            huber_loss([1.0, 2.0], [1.0])


class TestAdam:
    def test_zero_gradient(self):
        p = np.array([1.0, -2.0])
        opt = Adam(2, lr=0.1)
        adam_step(opt, p, np.zeros(2))
        np.testing.assert_array_equal(p, [1.0, -2.0])

    def test_first_step(self):
        # m_hat = 1, v_hat = 1 -> step lr * 1 / (1 + 1e-8)
        p = np.array([0.5])
        adam_step(Adam(1, lr=0.001), p, np.array([1.0]))
        assert p[0] == pytest.approx(0.5 - 0.001 / (1 + 1e-8), abs=1e-15)

    def test_textbook_equivalence(self):
        rng = np.random.default_rng(0)
        p = rng.normal(size=5)
        q = p.copy()
        opt = Adam(5, lr=0.01)
        m = np.zeros(5)
        v = np.zeros(5)
        for t in range(1, 30):
            g = rng.normal(size=5)
            opt.step(p, g)
            m = 0.9 * m + 0.1 * g
            v = 0.999 * v + 0.001 * g * g
            q -= 0.01 * (m / (1 - 0.9 ** t)) / (np.sqrt(v / (1 - 0.999 ** t)) + 1e-8)
        np.testing.assert_allclose(p, q, rtol=1e-12, atol=1e-14)

    def test_symmetry(self):
        p = np.array([1.0, 1.0])
        adam_step(Adam(2), p, np.array([0.3, 0.3]))
        assert p[0] == p[1]


def test_sigmoid_values():
    assert sigmoid(np.array([0.0]))[0] == 0.5
    z = np.array([-800.0, -30.0, 30.0, 800.0])
    s = sigmoid(z)
    assert np.all((s >= 0) & (s <= 1)) and s[0] == 0.0 and s[-1] == 1.0


def test_sum_normalize_grad():
    rng = np.random.default_rng(1)
    net = Network([Dense(3, 4, "sigmoid"), SumNormalize()], rng)
    report = grad_check(net, mixed_loss, rng.normal(size=(5, 3)))
    assert report.max_error < 1e-6


def test_constant_loss_zero_grads():
    rng = np.random.default_rng(2)
    net = Network([Dense(3, 2, "relu")], rng)
    report = grad_check(net, lambda out: (3.0, np.zeros_like(out)), rng.normal(size=(2, 3)))
    assert report.max_error == 0.0


def test_soft_update_rule():
    target = np.zeros(3)
    soft_update(np.ones(3), target, 0.09)
    np.testing.assert_array_equal(target, 0.09)
    soft_update(np.full(3, 5.0), target, 1.0)
    np.testing.assert_array_equal(target, 5.0)
    before = target.copy()
    soft_update(np.zeros(3), target, 0.0)
    np.testing.assert_array_equal(target, before)
    with pytest.raises(ValueError):
        soft_update(np.zeros(2), target, 0.5)


def test_determinism():
    def run():
        rng = np.random.default_rng(11)
        net = Network([Dense(4, 8, "relu"), Dropout(0.35, np.random.default_rng(3)), Dense(8, 1)], rng)
        opt = Adam(net.size)
        x = rng.normal(size=(16, 4))
        for _ in range(5):
            net.zero_grad()
            _, g = huber_loss(np.zeros((16, 1)), net.forward(x, training=True))
            net.backward(g)
            opt.step(net.theta, net.grad)
        return net.theta.copy()

    assert run().tobytes() == run().tobytes()


def test_checkpoint_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    a = Network([Dense(3, 4, "relu"), Dense(4, 2)], rng)
    b = Network([LSTM(2, 3)], rng)
    path = tmp_path / "nets.bin"
    save_networks(path, {"a": a, "b": b}, {"note": "x"})
    a2 = Network([Dense(3, 4, "relu"), Dense(4, 2)])
    b2 = Network([LSTM(2, 3)])
    meta = load_networks(path, {"a": a2, "b": b2})
    assert meta == {"note": "x"}
    assert a2.theta.tobytes() == a.theta.tobytes()
    assert b2.theta.tobytes() == b.theta.tobytes()
    header, values = read_checkpoint(path)
    assert header["networks"]["a"][0] == ["0.W", [3, 4], 0]
    assert values.size == a.size + b.size
    with pytest.raises(ValueError):
        load_networks(path, {"a": Network([Dense(3, 5)])})
