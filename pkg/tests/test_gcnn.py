
import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from conftest import central_difference, oracle_worked_example, random_connected_weights, seeds
from gmf_gcnn import worked_example as wx
from gmf_gcnn.errors import ShapeMismatch, TraceMismatch, ZeroProbabilityWarning
from gmf_gcnn.gcnn import (
    GCNNConfig,
    GCNNParams,
    Gradients,
    TrainingSample,
    backward,
    forward,
    init_gaussian,
    init_he_uniform,
    init_xavier_fc,
    loss,
    parameter_count,
    predict,
    sgd_step,
    softmax,
    train,
    train_step,
)
from gmf_gcnn.graph_core import OperatorKind, build_graph, circular_graph, paper8_graph, shift_operator

WN = OperatorKind.NORMALIZED_WEIGHT
FD_REL = 1e-6
KINK = 1e-4


def fd_rel_error(a, n):
    # Entrywise relative error; the unit floor absorbs the ~eps*L/h rounding
    # noise of the central difference where the gradient itself is tiny.
    return np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), 1.0)


@pytest.fixture
def worked():
    cfg = GCNNConfig(n=8, step_w=wx.STEP_W, step_b=wx.STEP_B, step_v=wx.STEP_V, update_order=wx.UPDATE_ORDER)
    return cfg, shift_operator(paper8_graph(), WN), GCNNParams(wx.CONV_WEIGHTS, wx.BIASES, wx.FC_WEIGHTS)


def test_config_validation():
    for bad in (dict(n=0), dict(n=4, step_w=0), dict(n=4, loss="hinge"), dict(n=4, leaky_slope=1.0),
                dict(n=4, pooling="avg"), dict(n=4, update_order="x"), dict(n=4, output_activation="tanh")):
        with pytest.raises(ValueError):
            GCNNConfig(**bad)
    cfg = GCNNConfig(n=8)
    assert cfg.fc_inputs == 16 and cfg.as_dict()["loss"] == "softmax-ce"


@given(st.integers(1, 20), st.integers(1, 5), st.integers(1, 4), st.integers(1, 4))
def test_parameter_count(n, k, m, s):
    cfg = GCNNConfig(n=n, k_channels=k, filter_order=m, s_outputs=s)
    pc = parameter_count(cfg)
    assert pc == {"conv_weights": m * k, "biases": k, "fc_weights": s * k * n}
    assert init_gaussian(cfg, 1).to_vector().size == sum(pc.values())


def test_params_shape_checks():
    cfg = GCNNConfig(n=8)
    with pytest.raises(ShapeMismatch):
        GCNNParams(np.zeros((2, 3)), np.zeros(2), np.zeros((2, 16))).check(cfg)
    with pytest.raises(ValueError):
        GCNNParams(np.full((2, 2), np.nan), np.zeros(2), np.zeros((2, 16))).check(cfg)
    p = init_gaussian(cfg, 3)
    assert GCNNParams.from_vector(p.to_vector(), cfg).equals(p)


def test_init_determinism():
    cfg = GCNNConfig(n=8)
    for init in (init_gaussian, init_he_uniform, init_xavier_fc):
        a, b = init(cfg, 42), init(cfg, 42)
        assert a.to_vector().tobytes() == b.to_vector().tobytes()
        assert not a.equals(init(cfg, 43))
    assert np.all(init_gaussian(cfg, 0).biases == 0)


def test_init_gaussian_conv_variance():
    cfg = GCNNConfig(n=1, k_channels=50_000, filter_order=2, s_outputs=1)
    w = init_gaussian(cfg, 5).conv_weights.ravel()
    assert w.size == 100_000
    assert abs(w.var() - 1.0) < 0.05
    assert abs(w.mean()) < 3 * w.std() / np.sqrt(w.size)


def test_init_gaussian_fc_std():
    cfg = GCNNConfig(n=8, k_channels=2, s_outputs=2)
    v = np.concatenate([init_gaussian(cfg, s).fc_weights.ravel() for s in range(3125)])
    assert v.size == 100_000
    assert abs(v.std() - np.sqrt(2 / 16)) < 0.05 * np.sqrt(2 / 16)


def test_init_he_uniform():
    cfg = GCNNConfig(n=1, k_channels=50_000, filter_order=2, s_outputs=1)
    w = init_he_uniform(cfg, 9).conv_weights.ravel()
    assert np.all(np.abs(w) <= np.sqrt(3))
    assert abs(w.var() - 1.0) < 0.05
    fc = init_he_uniform(GCNNConfig(n=8), 9).fc_weights
    assert np.all(np.abs(fc) <= np.sqrt(6 / 16))


def test_init_xavier_fc():
    cfg = GCNNConfig(n=8, k_channels=2, s_outputs=2)
    v = np.concatenate([init_xavier_fc(cfg, s).fc_weights.ravel() for s in range(3125)])
    sd = np.sqrt(2 / 18)
    assert abs(sd - 0.3333) < 1e-4
    assert abs(v.std() - sd) < 0.05 * sd
    assert abs(v.mean()) < 3 * sd / np.sqrt(v.size)
    base = init_gaussian(cfg, 1)
    mixed = init_xavier_fc(cfg, 2, base)
    assert np.array_equal(mixed.conv_weights, base.conv_weights)


def test_tied_weights_init_and_gradient():
    cfg = GCNNConfig(n=8, filter_order=3, tied_weights=True)
    p = init_gaussian(cfg, 4)
    assert np.all(p.conv_weights == p.conv_weights[:, :1])
    op = shift_operator(paper8_graph(), WN)
    new, _, g = train_step(np.arange(8.0) / 8, [1.0, 0.0], p, cfg, op)
    assert np.all(new.conv_weights == new.conv_weights[:, :1])


def test_forward_worked_convolution(worked):
    cfg, op, p = worked
    tr = forward(wx.INPUT, p, cfg, op, wx.TARGET)
    assert np.max(np.abs(tr.pre_activation[0] - wx.Y1)) <= wx.PRINT_TOL
    assert np.max(np.abs(tr.pre_activation[1] - wx.Y2)) <= wx.PRINT_TOL
    assert np.array_equal(tr.relu_mask.astype(float), wx.RELU_MASK)


def test_forward_worked_output(worked):
    cfg, op, p = worked
    tr = forward(wx.INPUT, p, cfg, op, wx.TARGET)
    ref = oracle_worked_example()
    assert np.allclose(tr.pre_activation, ref["y"], atol=1e-12)
    assert np.allclose(tr.logits, ref["z"], atol=1e-12)
    assert np.allclose(tr.probabilities, ref["P"], atol=1e-12)
    assert np.max(np.abs(tr.logits - wx.LOGITS)) <= wx.ERRATUM_TOL
    assert np.max(np.abs(tr.probabilities - wx.PROBABILITIES)) <= wx.ERRATUM_TOL


def test_zero_params_uniform_probabilities():
    for s in (2, 3, 5):
        cfg = GCNNConfig(n=8, s_outputs=s)
        p = GCNNParams(np.zeros((2, 2)), np.zeros(2), np.zeros((s, 16)))
        tr = forward(np.ones(8), p, cfg, shift_operator(paper8_graph(), WN))
        assert np.all(tr.logits == 0)
        assert np.allclose(tr.probabilities, 1 / s, atol=1e-15)


def test_forward_shape_errors(worked):
    cfg, op, p = worked
    with pytest.raises(ShapeMismatch):
        forward(np.ones(7), p, cfg, op)
    with pytest.raises(ShapeMismatch):
        forward(np.ones(8), p, GCNNConfig(n=5), op)


def _trace_with_logits(z, cfg):
    tr = forward(np.ones(cfg.n), GCNNParams(np.zeros((2, 2)), np.zeros(2), np.zeros((cfg.s_outputs, 2 * cfg.n))),
                 cfg, shift_operator(paper8_graph(), WN))
    tr.logits = tr.outputs = np.asarray(z, dtype=float)
    tr.probabilities = softmax(z) if cfg.loss == "softmax-ce" else None
    return tr


def test_loss_values():
    mse = GCNNConfig(n=8, loss="mse")
    assert loss(_trace_with_logits([0.3, -1.2], mse), [0.3, -1.2], mse) == 0
    assert loss(_trace_with_logits([1.0, 0.0], mse), [0.0, 0.0], mse) == 0.5
    ce = GCNNConfig(n=8)
    tr = _trace_with_logits([0.0, 0.0], ce)
    tr.probabilities = np.array([1.0, 0.0])
    assert loss(tr, [1, 0], ce) == 0
    tr.probabilities = np.array([0.4731, 0.5269])
    assert abs(loss(tr, [1, 0], ce) + np.log(0.4731)) < 1e-15
    # 0.74845 prints as 0.7485 with round-half-up; one unit in the last place
    assert abs(loss(tr, [1, 0], ce) - 0.7485) <= 1e-4
    with pytest.raises(ValueError):
        loss(tr, [0.5, 0.5], ce)


def test_cross_entropy_clamp_warns():
    ce = GCNNConfig(n=8)
    tr = _trace_with_logits([0.0, 1000.0], ce)
    with pytest.warns(ZeroProbabilityWarning):
        val = loss(tr, [1, 0], ce)
    assert np.isfinite(val) and abs(val + np.log(1e-300)) < 1e-9


def test_delta_out_exact(worked):
    cfg, op, p = worked
    x = wx.INPUT
    tr = forward(x, p, cfg, op, wx.TARGET)
    g = backward(tr, wx.TARGET, p, cfg, op, x)
    assert np.array_equal(g.delta_out, tr.probabilities - wx.TARGET)
    assert np.max(np.abs(g.delta_out - wx.DELTA_OUT)) <= wx.PRINT_TOL
    mse = GCNNConfig(n=8, loss="mse")
    t = np.array([0.2, -0.7])
    tr = forward(x, p, mse, op, t)
    assert np.array_equal(backward(tr, t, p, mse, op).delta_out, tr.logits - t)


def test_worked_update(worked):
    cfg, op, p = worked
    new, tr, g = train_step(wx.INPUT, wx.TARGET, p, cfg, op)
    ref = oracle_worked_example()
    for name, val in (("g2", g.grad_fc), ("v_updated", new.fc_weights), ("delta_conv", g.delta_conv),
                      ("g1", g.grad_conv), ("w_updated", new.conv_weights), ("b_updated", new.biases)):
        assert np.allclose(val, ref[name], atol=1e-12), name
    assert np.max(np.abs(new.conv_weights - wx.CONV_UPDATED)) <= wx.PRINT_TOL
    assert np.max(np.abs(new.biases - wx.BIAS_UPDATED)) <= wx.PRINT_TOL
    assert np.max(np.abs(g.grad_conv - wx.GRAD_CONV)) <= wx.ERRATUM_TOL
    assert np.max(np.abs(g.delta_conv - wx.DELTA_CONV)) <= wx.ERRATUM_TOL


def test_trace_mismatch(worked):
    cfg, op, p = worked
    tr = forward(wx.INPUT, p, cfg, op, wx.TARGET)
    with pytest.raises(TraceMismatch):
        backward(tr, wx.TARGET, p, cfg, op, x=wx.INPUT + 1)
    other = p.copy()
    other.biases[0] = 1.0
    with pytest.raises(TraceMismatch):
        backward(tr, wx.TARGET, other, cfg, op)
    with pytest.raises(TraceMismatch):
        backward(tr, wx.TARGET, p, cfg, shift_operator(circular_graph(5), WN))


def test_zero_gradients_leave_params():
    cfg = GCNNConfig(n=8)
    p = init_gaussian(cfg, 2)
    z = Gradients(np.zeros(2), np.zeros((2, 8)), np.zeros((2, 2)), np.zeros(2), np.zeros((2, 16)))
    assert sgd_step(p, z, cfg).equals(p)


@st.composite
def gcnn_cases(draw, pooling="none"):
    seed = draw(seeds)
    rng = np.random.default_rng(seed)
    n = draw(st.integers(3, 8))
    cfg = GCNNConfig(
        n=n,
        k_channels=draw(st.integers(1, 3)),
        filter_order=draw(st.sampled_from([2, 3])),
        s_outputs=draw(st.integers(2, 3)),
        loss=draw(st.sampled_from(["mse", "softmax-ce"])),
        activation=draw(st.sampled_from(["relu", "leaky-relu"])),
        leaky_slope=0.1,
        pooling=pooling,
        tied_weights=draw(st.booleans()) if pooling == "none" else False,
    )
    op = shift_operator(build_graph(random_connected_weights(rng, n)), WN)
    conv = rng.normal(size=(cfg.k_channels, cfg.filter_order))
    if cfg.tied_weights:
        conv[:] = conv[:, :1]
    p = GCNNParams(conv, 0.3 * rng.normal(size=cfg.k_channels), rng.normal(size=(cfg.s_outputs, cfg.fc_inputs)))
    x = rng.normal(size=n)
    if cfg.loss == "mse":
        t = rng.normal(size=cfg.s_outputs)
    else:
        t = np.eye(cfg.s_outputs)[rng.integers(cfg.s_outputs)]
    return cfg, op, p, x, t


def _fd_gradient(cfg, op, p, x, t):
    if cfg.tied_weights:
        # one free parameter per channel, shared across all taps
        k, m = cfg.k_channels, cfg.filter_order

        def f(vec):
            conv = np.repeat(vec[:k, None], m, axis=1)
            q = GCNNParams(conv, vec[k:2 * k], vec[2 * k:].reshape(cfg.s_outputs, cfg.fc_inputs))
            return forward(x, q, cfg, op, t).loss_value

        vec = np.concatenate([p.conv_weights[:, 0], p.biases, p.fc_weights.ravel()])
        num = central_difference(f, vec)
        return np.concatenate([np.repeat(num[:k, None], m, axis=1).ravel(), num[k:]])
    f = lambda vec: forward(x, GCNNParams.from_vector(vec, cfg), cfg, op, t).loss_value
    return central_difference(f, p.to_vector())


def check_gradients(cfg, op, p, x, t):
    tr = forward(x, p, cfg, op, t)
    assume(np.min(np.abs(tr.pre_activation + p.biases[:, None])) >= KINK)
    g = backward(tr, t, p, cfg, op, x)
    a = np.concatenate([g.grad_conv.ravel(), g.grad_bias, g.grad_fc.ravel()])
    num = _fd_gradient(cfg, op, p, x, t)
    err = fd_rel_error(a, num)
    assert err.max() <= FD_REL, (err.max(), cfg)
    return err.max()


@settings(max_examples=120)
@given(gcnn_cases())
def test_gradients_match_finite_differences(case):
    check_gradients(*case)


@settings(max_examples=40)
@given(gcnn_cases(pooling="coarsen-max"))
def test_pooled_gradients_match_finite_differences(case):
    cfg, op, p, x, t = case
    tr = forward(x, p, cfg, op, t)
    # pooling decisions must be stable under the FD step
    a = np.sort(np.maximum(tr.post_activation, 0), axis=1)
    gaps = np.diff(a, axis=1)
    assume(np.all((gaps == 0) | (gaps > 1e-4)))
    assume(np.all((a == 0) | (a > 1e-4)))
    check_gradients(cfg, op, p, x, t)


def test_pooling_mask_repositions_gradient():
    cfg = GCNNConfig(n=8, pooling="coarsen-max")
    op = shift_operator(paper8_graph(), WN)
    p = GCNNParams(wx.CONV_WEIGHTS, wx.BIASES, wx.FC_WEIGHTS)
    tr = forward(wx.INPUT, p, cfg, op, wx.TARGET)
    assert tr.flattened.shape == (16,)
    assert np.all(tr.flattened[tr.pool_mask.ravel() == 0] == 0)
    g = backward(tr, wx.TARGET, p, cfg, op)
    assert np.all(g.delta_conv[tr.pool_mask == 0] == 0)
    assert tr.pool_mask.sum(axis=1).tolist() == [2, 2]


@given(st.lists(st.floats(-50, 50, allow_nan=False), min_size=1, max_size=6), st.floats(-100, 100))
def test_softmax_properties(z, c):
    p = softmax(z)
    assert abs(p.sum() - 1) <= 1e-12
    assert np.all((p >= 0) & (p <= 1))
    assert np.allclose(softmax(np.array(z) + c), p, atol=1e-12)


@settings(max_examples=20)
@given(seeds)
def test_ring_reduction(seed):
    rng = np.random.default_rng(seed)
    n = 8
    cfg = GCNNConfig(n=n, k_channels=2, filter_order=3)
    op = shift_operator(circular_graph(n), WN)
    w = rng.normal(size=(2, 3))
    x = rng.normal(size=n)
    tr = forward(x, GCNNParams(w, np.zeros(2), np.zeros((2, 2 * n))), cfg, op)
    for k in range(2):
        c = w[k, 2] / 2
        for i in range(n):
            expect = ((w[k, 0] + c) * x[i]
                      + w[k, 1] * 0.5 * (x[(i + 1) % n] + x[(i - 1) % n])
                      + w[k, 2] * 0.25 * (x[(i + 2) % n] + x[(i - 2) % n]))
            assert abs(tr.pre_activation[k, i] - expect) <= 1e-12


@given(gcnn_cases())
def test_mask_is_strict_positivity(case):
    cfg, op, p, x, t = case
    tr = forward(x, p, cfg, op)
    assert np.array_equal(tr.relu_mask, tr.pre_activation + p.biases[:, None] > 0)
    if cfg.activation == "relu":
        # zeroing the masked-out positions of o_F leaves z unchanged
        masked = tr.flattened * tr.relu_mask.ravel()
        assert np.array_equal(p.fc_weights @ masked, tr.logits)


def test_mse_descent_monotone():
    cfg = GCNNConfig(n=8, loss="mse", activation="leaky-relu", step_w=0.01, step_b=0.01, step_v=0.01)
    op = shift_operator(paper8_graph(), WN)
    p = init_gaussian(cfg, 11)
    x = np.random.default_rng(11).normal(size=8)
    t = np.array([1.0, -1.0])
    res = train([TrainingSample(x, t)], cfg, p, 50, op)
    losses = res.log.losses()
    assert len(losses) == 50
    assert np.all(np.diff(losses) <= 1e-15)
    assert losses[-1] < losses[0]


def test_train_edge_cases():
    cfg = GCNNConfig(n=8)
    op = shift_operator(paper8_graph(), WN)
    p = init_gaussian(cfg, 0)
    res = train([TrainingSample(np.ones(8), np.array([1.0, 0.0]))], cfg, p, 0, op)
    assert res.params.equals(p) and len(res.log) == 0
    with pytest.raises(ValueError):
        train([], cfg, p, 1, op)


def test_train_log_layout():
    cfg = GCNNConfig(n=8)
    op = shift_operator(paper8_graph(), WN)
    data = [TrainingSample(np.eye(8)[i], np.eye(2)[i % 2], kind=f"k{i % 2}") for i in range(5)]
    res = train(data, cfg, init_gaussian(cfg, 0), 3, op)
    assert len(res.log) == 15
    assert res.log.columns[:5] == ["iteration", "epoch", "sample_kind", "loss", "P1"]
    assert len(res.log.columns) == 5 + 32
    assert [r[1] for r in res.log.rows[4:6]] == [1, 2]
    assert np.array_equal(np.array(res.log.rows[-1][5:]), res.params.fc_weights.ravel())


def test_predict_tie_and_winner():
    cfg = GCNNConfig(n=8)
    op = shift_operator(paper8_graph(), WN)
    zero = GCNNParams(np.zeros((2, 2)), np.zeros(2), np.zeros((2, 16)))
    pr = predict(np.ones(8), zero, cfg, op)
    assert pr.winner == 1 and np.allclose(pr.probabilities, 0.5)
    v = np.zeros((2, 16))
    v[1, :] = 1.0
    assert predict(np.ones(8), GCNNParams(np.eye(2), np.full(2, 1.0), v), cfg, op).winner == 2
