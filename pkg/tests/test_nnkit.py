"""Tests for the differentiable kernel.

Two independent oracles drive this file: a naive per-window convolution
that materializes every window separately (checked bit-for-bit against
the batched implementation), and central finite differences over every
op's inputs (relative error under 1e-4 with a unit floor).
"""

import math
import random

import numpy as np
import pytest

from patchnet.nnkit import (
    AdamState,
    Tensor,
    adam_step,
    backward,
    concat,
    conv3d_hunks,
    conv_text,
    dense,
    dropout,
    embed_lookup,
    loss,
    max_pool,
    sigmoid_score,
    stack,
    tensor,
    uniform_init,
)

REL_TOL = 1e-4
FD_STEP = 1e-5


def weighted_sum(t: Tensor, weights: np.ndarray) -> Tensor:
    """Test-only reduction to a scalar so backward() can run."""
    out_data = (t.data * weights).sum()

    def backward_fn(g: np.ndarray) -> None:
        piece = g * weights
        t.grad = piece if t.grad is None else t.grad + piece

    return Tensor(out_data, (t,), backward_fn)


def central_differences(build, params):
    """Numeric gradients of the scalar build() for each param tensor."""
    grads = []
    for p in params:
        g = np.zeros_like(p.data)
        it = np.nditer(p.data, flags=["multi_index"])
        for _ in it:
            ix = it.multi_index
            saved = p.data[ix]
            p.data[ix] = saved + FD_STEP
            up = float(build().data)
            p.data[ix] = saved - FD_STEP
            down = float(build().data)
            p.data[ix] = saved
            g[ix] = (up - down) / (2.0 * FD_STEP)
        grads.append(g)
    return grads


def assert_grads_match(build, params):
    analytic = backward(build(), params)
    numeric = central_differences(build, params)
    for p, a, n in zip(params, analytic, numeric):
        denom = np.maximum(1.0, np.maximum(np.abs(a), np.abs(n)))
        worst = (np.abs(a - n) / denom).max() if a.size else 0.0
        assert worst < REL_TOL, f"param {p.shape}: rel err {worst:.3g}"


# ---------------------------------------------------------------------------
# Naive convolution oracles (independent route, bit-exact comparison)


def naive_conv_text(M, filters, bias):
    *lead, n, d = M.shape
    F, k, _ = filters.shape
    P = n - k + 1
    out = np.empty((*lead, F, P))
    for li in np.ndindex(*lead):
        for f in range(F):
            for i in range(P):
                window = np.ascontiguousarray(M[li][i : i + k, :])
                pre = (window * filters[f]).sum() + bias[f]
                out[li + (f, i)] = pre if pre > 0.0 else 0.0
    return out


def naive_conv3d(B, filters, bias):
    *lead, H, N, E = B.shape
    F, k, _, _ = filters.shape
    P = H - k + 1
    out = np.empty((*lead, F, P))
    for li in np.ndindex(*lead):
        for f in range(F):
            for i in range(P):
                window = np.ascontiguousarray(B[li][i : i + k])
                pre = (window * filters[f]).sum() + bias[f]
                out[li + (f, i)] = pre if pre > 0.0 else 0.0
    return out


def test_conv_text_matches_naive_bit_exact():
    rng = np.random.default_rng(401)
    for case in range(60):
        lead = tuple(
            int(rng.integers(1, 4)) for _ in range(int(rng.integers(0, 3)))
        )
        k = int(rng.integers(1, 4))
        n = k + int(rng.integers(0, 6))
        d = int(rng.integers(1, 8))
        F = int(rng.integers(1, 6))
        scale = rng.choice((1e-3, 1.0, 1e3))
        M = rng.standard_normal((*lead, n, d)) * scale
        filters = rng.standard_normal((F, k, d))
        bias = rng.standard_normal(F)
        got = conv_text(tensor(M), tensor(filters), tensor(bias))
        want = naive_conv_text(M, filters, bias)
        assert got.data.shape == (*lead, F, n - k + 1)
        assert np.array_equal(got.data, want), f"case {case}"


def test_conv3d_matches_naive_bit_exact():
    rng = np.random.default_rng(402)
    for case in range(60):
        lead = tuple(
            int(rng.integers(1, 4)) for _ in range(int(rng.integers(0, 2)))
        )
        k = int(rng.integers(1, 3))
        H = k + int(rng.integers(0, 5))
        N = int(rng.integers(1, 5))
        E = int(rng.integers(1, 7))
        F = int(rng.integers(1, 5))
        B = rng.standard_normal((*lead, H, N, E))
        filters = rng.standard_normal((F, k, N, E))
        bias = rng.standard_normal(F)
        got = conv3d_hunks(tensor(B), tensor(filters), tensor(bias))
        want = naive_conv3d(B, filters, bias)
        assert got.data.shape == (*lead, F, H - k + 1)
        assert np.array_equal(got.data, want), f"case {case}"


def test_conv_text_chunked_path_bit_exact():
    # Filter size 2880 drops the chunk step below the window count, so
    # the forward runs in several blocks; the result must not change.
    rng = np.random.default_rng(403)
    M = rng.standard_normal((500, 10, 120))
    filters = rng.standard_normal((8, 3, 120))
    bias = rng.standard_normal(8)
    got = conv_text(tensor(M), tensor(filters), tensor(bias))
    want = naive_conv_text(M, filters, bias)
    assert np.array_equal(got.data, want)


def test_conv_batched_equals_per_item():
    rng = np.random.default_rng(404)
    M = rng.standard_normal((6, 9, 5))
    filters = tensor(rng.standard_normal((4, 2, 5)))
    bias = tensor(rng.standard_normal(4))
    batched = conv_text(tensor(M), filters, bias)
    for b in range(6):
        single = conv_text(tensor(M[b]), filters, bias)
        assert np.array_equal(batched.data[b], single.data)


def test_conv_shape_validation():
    with pytest.raises(ValueError, match="input length"):
        conv_text(tensor(np.zeros((1, 4))), tensor(np.zeros((2, 2, 4))), tensor(np.zeros(2)))
    with pytest.raises(ValueError, match="tail"):
        conv_text(tensor(np.zeros((5, 4))), tensor(np.zeros((2, 2, 3))), tensor(np.zeros(2)))
    with pytest.raises(ValueError, match="input length"):
        conv3d_hunks(
            tensor(np.zeros((1, 3, 4))), tensor(np.zeros((2, 2, 3, 4))), tensor(np.zeros(2))
        )


# ---------------------------------------------------------------------------
# Finite-difference gradient checks, op by op


def test_grad_embed_lookup():
    rng = np.random.default_rng(410)
    W = tensor(rng.standard_normal((6, 4)) * 0.5)
    R = rng.standard_normal((2, 3, 4))
    idx = np.array([[0, 1, 1], [5, 0, 2]])
    assert_grads_match(lambda: weighted_sum(embed_lookup(W, idx), R), [W])


def test_grad_conv_text():
    rng = np.random.default_rng(411)
    M = tensor(rng.standard_normal((2, 3, 7, 4)) * 0.7)
    filters = tensor(rng.standard_normal((3, 2, 4)) * 0.7)
    bias = tensor(rng.standard_normal(3) * 0.5)
    R = rng.standard_normal((2, 3, 3, 6))
    assert_grads_match(
        lambda: weighted_sum(conv_text(M, filters, bias), R), [M, filters, bias]
    )


def test_grad_conv3d_hunks():
    rng = np.random.default_rng(412)
    B = tensor(rng.standard_normal((2, 5, 3, 4)) * 0.6)
    filters = tensor(rng.standard_normal((2, 2, 3, 4)) * 0.6)
    bias = tensor(rng.standard_normal(2) * 0.5)
    R = rng.standard_normal((2, 2, 4))
    assert_grads_match(
        lambda: weighted_sum(conv3d_hunks(B, filters, bias), R), [B, filters, bias]
    )


def test_grad_max_pool():
    rng = np.random.default_rng(413)
    t = tensor(rng.standard_normal((3, 4, 5)))
    R = rng.standard_normal((3, 4))
    assert_grads_match(lambda: weighted_sum(max_pool(t), R), [t])


def test_grad_dense():
    rng = np.random.default_rng(414)
    e = tensor(rng.standard_normal((4, 7)) * 0.8)
    w = tensor(rng.standard_normal((3, 7)) * 0.8)
    b = tensor(rng.standard_normal(3) * 0.5)
    R = rng.standard_normal((4, 3))
    assert_grads_match(lambda: weighted_sum(dense(e, w, b), R), [e, w, b])


def test_grad_sigmoid_score():
    rng = np.random.default_rng(415)
    h = tensor(rng.standard_normal((5, 3)))
    w_o = tensor(rng.standard_normal(3))
    R = rng.standard_normal(5)
    assert_grads_match(lambda: weighted_sum(sigmoid_score(h, w_o), R), [h, w_o])


def test_grad_concat_and_stack():
    rng = np.random.default_rng(416)
    a = tensor(rng.standard_normal((2, 3)))
    b = tensor(rng.standard_normal((2, 5)))
    R = rng.standard_normal((2, 8))
    assert_grads_match(lambda: weighted_sum(concat([a, b], axis=-1), R), [a, b])

    c = tensor(rng.standard_normal((2, 2)))
    d = tensor(rng.standard_normal((2, 2)))
    R2 = rng.standard_normal((2, 2, 2))
    assert_grads_match(lambda: weighted_sum(stack([c, d]), R2), [c, d])


def test_grad_dropout_fixed_mask():
    rng = np.random.default_rng(417)
    t = tensor(rng.standard_normal((6, 5)))
    R = rng.standard_normal((6, 5))
    build = lambda: weighted_sum(
        dropout(t, 0.4, np.random.default_rng(99), training=True), R
    )
    assert_grads_match(build, [t])


def test_grad_loss_with_regularization():
    rng = np.random.default_rng(418)
    h = tensor(rng.standard_normal((4, 3)))
    w_o = tensor(rng.standard_normal(3))
    extra = tensor(rng.standard_normal((2, 2)))
    y = np.array([0.0, 1.0, 1.0, 0.0])
    build = lambda: loss(sigmoid_score(h, w_o), y, [h, w_o, extra], lam=0.01)
    assert_grads_match(build, [h, w_o, extra])


def test_grad_composite_graph():
    # embed -> conv -> pool -> concat -> dense -> score -> loss,
    # the same op chain the real model uses.
    rng = np.random.default_rng(419)
    W = tensor(rng.uniform(-0.5, 0.5, (7, 4)))
    f1 = tensor(rng.uniform(-0.5, 0.5, (2, 1, 4)))
    b1 = tensor(rng.uniform(-0.2, 0.2, 2))
    f2 = tensor(rng.uniform(-0.5, 0.5, (2, 2, 4)))
    b2 = tensor(rng.uniform(-0.2, 0.2, 2))
    wh = tensor(rng.uniform(-0.5, 0.5, (3, 4)))
    bh = tensor(rng.uniform(-0.2, 0.2, 3))
    wo = tensor(rng.uniform(-0.5, 0.5, 3))
    idx = np.array([2, 0, 5, 1, 6])
    params = [W, f1, b1, f2, b2, wh, bh, wo]

    def build():
        M = embed_lookup(W, idx)
        parts = [
            max_pool(conv_text(M, f1, b1)),
            max_pool(conv_text(M, f2, b2)),
        ]
        e = concat(parts, axis=-1)
        z = sigmoid_score(dense(e, wh, bh), wo)
        return loss(z, np.asarray(1.0), params, lam=0.02)

    assert_grads_match(build, params)


# ---------------------------------------------------------------------------
# Specific op semantics


def test_embed_lookup_values_and_repeat_accumulation():
    W = tensor(np.arange(12, dtype=np.float64).reshape(4, 3))
    out = embed_lookup(W, [0, 2, 0])
    assert np.array_equal(out.data, W.data[[0, 2, 0]])
    total = weighted_sum(out, np.ones((3, 3)))
    (gW,) = backward(total, [W])
    assert np.array_equal(gW[0], [2.0, 2.0, 2.0])  # looked up twice
    assert np.array_equal(gW[2], [1.0, 1.0, 1.0])
    assert np.array_equal(gW[1], [0.0, 0.0, 0.0])


def test_embed_lookup_range_check():
    W = tensor(np.zeros((4, 3)))
    with pytest.raises(IndexError):
        embed_lookup(W, [4])
    with pytest.raises(IndexError):
        embed_lookup(W, [-1])


def test_max_pool_first_argmax_wins_ties():
    t = tensor(np.array([[3.0, 5.0, 5.0]]))
    out = max_pool(t)
    assert out.data.tolist() == [5.0]
    (gt,) = backward(weighted_sum(out, np.array([2.0])), [t])
    assert gt.tolist() == [[0.0, 2.0, 0.0]]


def test_max_pool_empty_axis_rejected():
    with pytest.raises(ValueError, match="empty"):
        max_pool(tensor(np.zeros((2, 0))))


def test_dense_shape_check_and_relu():
    e = tensor(np.array([1.0, -1.0]))
    w = tensor(np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]))
    b = tensor(np.array([0.0, 0.0, 0.5]))
    out = dense(e, w, b)
    assert out.data.tolist() == [1.0, 0.0, 0.5]
    with pytest.raises(ValueError, match="dense"):
        dense(tensor(np.zeros(3)), w, b)


def test_sigmoid_score_is_overflow_safe():
    w = tensor(np.array([1.0]))
    with np.errstate(over="raise"):
        hi = sigmoid_score(tensor(np.array([[1000.0]])), w)
        lo = sigmoid_score(tensor(np.array([[-1000.0]])), w)
    assert hi.data[0] == 1.0
    assert lo.data[0] == 0.0
    mid = sigmoid_score(tensor(np.array([[0.0]])), w)
    assert mid.data[0] == 0.5


def test_dropout_inference_is_identity_object():
    t = tensor(np.ones((3, 3)))
    assert dropout(t, 0.5, np.random.default_rng(0), training=False) is t
    assert dropout(t, 0.0, np.random.default_rng(0), training=True) is t


def test_dropout_monte_carlo():
    rng = np.random.default_rng(420)
    t = tensor(np.ones(20000))
    out = dropout(t, 0.3, rng, training=True)
    kept = out.data != 0.0
    assert abs(kept.mean() - 0.7) < 0.02
    assert np.allclose(out.data[kept], 1.0 / 0.7)
    assert abs(out.data.mean() - 1.0) < 0.02
    # Gradient respects the same mask.
    (gt,) = backward(weighted_sum(out, np.ones(20000)), [t])
    assert np.array_equal(gt != 0.0, kept)


def test_dropout_rate_validation():
    t = tensor(np.ones(3))
    for bad in (-0.1, 1.0, 1.5):
        with pytest.raises(ValueError):
            dropout(t, bad, np.random.default_rng(0), training=True)


def test_loss_closed_form_and_batch_sum():
    z = Tensor(np.array([0.5, 0.5]))
    out = loss(z, np.array([1.0, 0.0]), [], lam=0.0)
    assert math.isclose(float(out.data), 2.0 * -math.log(0.5), rel_tol=1e-12)

    p = tensor(np.array([2.0, -1.0]))
    reg_only = loss(Tensor(np.array(0.5)), np.asarray(1.0), [p], lam=0.1)
    expected = -math.log(0.5) + 0.05 * 5.0
    assert math.isclose(float(reg_only.data), expected, rel_tol=1e-12)


def test_loss_clamps_extreme_scores_without_gradient():
    z = Tensor(np.array([0.0, 1.0]))
    out = loss(z, np.array([1.0, 0.0]), [], lam=0.0)
    assert np.isfinite(float(out.data))
    assert float(out.data) == pytest.approx(2.0 * -math.log(1e-12), rel=1e-6)
    backward(out, None)
    assert np.array_equal(z.grad, [0.0, 0.0])


def test_loss_regularization_gradient():
    p = tensor(np.array([2.0, -1.0]))
    z = Tensor(np.array(0.5))
    out = loss(z, np.asarray(1.0), [p], lam=0.1)
    (gp,) = backward(out, [p])
    assert np.allclose(gp, [0.2, -0.1])


def test_loss_shape_mismatch():
    with pytest.raises(ValueError, match="shape"):
        loss(Tensor(np.array([0.5])), np.array([[1.0]]), [], lam=0.0)


# ---------------------------------------------------------------------------
# backward() mechanics


def test_backward_rejects_non_scalar():
    with pytest.raises(ValueError, match="scalar"):
        backward(tensor(np.zeros(3)))


def test_backward_zero_for_off_tape_params():
    x = tensor(np.array([1.0, 2.0]))
    unused = tensor(np.array([[5.0]]))
    total = weighted_sum(x, np.array([1.0, 1.0]))
    gx, gu = backward(total, [x, unused])
    assert np.array_equal(gx, [1.0, 1.0])
    assert np.array_equal(gu, [[0.0]])
    assert gu.shape == unused.data.shape


def test_backward_resets_between_calls():
    x = tensor(np.array([3.0]))
    build = lambda: weighted_sum(x, np.array([2.0]))
    (g1,) = backward(build(), [x])
    (g2,) = backward(build(), [x])
    assert np.array_equal(g1, g2)


def test_backward_diamond_graph_accumulates():
    x = tensor(np.array([1.0, 2.0]))
    a = weighted_sum(x, np.array([1.0, 0.0]))
    b = weighted_sum(x, np.array([0.0, 3.0]))
    total = weighted_sum(stack([a, b]), np.array([1.0, 1.0]))
    (gx,) = backward(total, [x])
    assert np.array_equal(gx, [1.0, 3.0])


# ---------------------------------------------------------------------------
# Adam


def test_adam_first_step_matches_hand_calculation():
    p = tensor(np.array([1.0, -2.0]))
    state = AdamState.for_param(p, learning_rate=0.1)
    g = np.array([0.5, -1.0])
    adam_step(p, g, state)
    # After one step m_hat == g and v_hat == g*g exactly.
    expected = [
        1.0 - 0.1 * 0.5 / (math.sqrt(0.25) + 1e-8),
        -2.0 + 0.1 * 1.0 / (math.sqrt(1.0) + 1e-8),
    ]
    assert np.allclose(p.data, expected, rtol=1e-15)
    assert state.step == 1


def test_adam_second_step_matches_hand_calculation():
    p = tensor(np.array([0.0]))
    state = AdamState.for_param(p, learning_rate=0.01)
    g1, g2 = 0.3, -0.2
    adam_step(p, np.array([g1]), state)
    adam_step(p, np.array([g2]), state)

    m1 = 0.1 * g1
    v1 = 0.001 * g1 * g1
    x = 0.0 - 0.01 * (m1 / 0.1) / (math.sqrt(v1 / 0.001) + 1e-8)
    m2 = 0.9 * m1 + 0.1 * g2
    v2 = 0.999 * v1 + 0.001 * g2 * g2
    m_hat = m2 / (1.0 - 0.9**2)
    v_hat = v2 / (1.0 - 0.999**2)
    x -= 0.01 * m_hat / (math.sqrt(v_hat) + 1e-8)
    assert np.allclose(p.data, [x], rtol=1e-14)
    assert state.step == 2


def test_adam_accepts_raw_arrays():
    arr = np.array([1.0])
    state = AdamState.for_param(arr, learning_rate=0.5)
    adam_step(arr, np.array([1.0]), state)
    assert arr[0] == pytest.approx(1.0 - 0.5 * 1.0 / (1.0 + 1e-8), rel=1e-12)


def test_adam_descends_on_quadratic():
    p = tensor(np.array([4.0]))
    state = AdamState.for_param(p, learning_rate=0.2)
    for _ in range(400):
        adam_step(p, 2.0 * p.data, state)
    assert abs(float(p.data[0])) < 1e-3


# ---------------------------------------------------------------------------
# Init


def test_uniform_init_bounds_and_determinism():
    a = uniform_init((50, 20), np.random.default_rng(5), scale=0.1)
    b = uniform_init((50, 20), np.random.default_rng(5), scale=0.1)
    assert np.array_equal(a.data, b.data)
    assert a.data.max() <= 0.1 and a.data.min() >= -0.1
    assert a.data.std() > 0.01


def test_tensor_dtype_is_float64():
    t = tensor([1, 2, 3])
    assert t.data.dtype == np.float64
    assert conv_text(
        tensor(np.zeros((3, 2), dtype=np.float32)),
        tensor(np.zeros((1, 1, 2))),
        tensor(np.zeros(1)),
    ).data.dtype == np.float64
