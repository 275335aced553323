"""Minimal differentiable kernel: embeddings, text and hunk convolutions,
max pooling, dense layers, sigmoid scoring, dropout, regularized
cross-entropy, reverse-mode gradients, and Adam.

Conventions:
  - float64 everywhere; checkpoints downcast to float32 elsewhere.
  - Every op accepts arbitrary leading batch axes on its main input, so
    a whole patch's lines go through one conv call instead of hundreds.
  - Convolution forwards materialize the filter×window products as
    C-contiguous blocks and reduce with a single multi-axis sum, which
    reproduces a naive per-window loop bit-for-bit at float64.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Cap on elements in a materialized product block (8M doubles = 64 MB).
_CHUNK_ELEMS = 1 << 23


class Tensor:
    """A float64 array plus the closure that back-propagates into its parents."""

    __slots__ = ("data", "parents", "_backward_fn", "grad")

    def __init__(self, data, parents=(), backward_fn=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.parents = tuple(parents)
        self._backward_fn = backward_fn
        self.grad = None

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self) -> str:
        return f"Tensor(shape={self.data.shape})"


def tensor(data) -> Tensor:
    return Tensor(data)


def _accumulate(t: Tensor, g: np.ndarray) -> None:
    t.grad = g if t.grad is None else t.grad + g


def uniform_init(shape, rng: np.random.Generator, scale: float = 0.1) -> Tensor:
    """Parameter tensor initialized uniformly in [-scale, scale]."""
    return Tensor(rng.uniform(-scale, scale, size=shape))


# ---------------------------------------------------------------------------
# Ops


def embed_lookup(W: Tensor, indices) -> Tensor:
    """Row lookup: output[..., :] = W[indices[...]].

    Gradients accumulate into looked-up rows (repeats sum).  PAD rows
    participate like any other row.  Out-of-range indices fault.
    """
    idx = np.asarray(indices, dtype=np.int64)
    size = W.data.shape[0]
    if idx.size and (idx.min() < 0 or idx.max() >= size):
        raise IndexError(f"embedding index out of range [0, {size})")
    out_data = W.data[idx]

    def backward_fn(g: np.ndarray) -> None:
        dW = np.zeros_like(W.data)
        np.add.at(dW, idx.ravel(), g.reshape(-1, W.data.shape[1]))
        _accumulate(W, dW)

    return Tensor(out_data, (W,), backward_fn)


def _sliding(xdata: np.ndarray, k: int, extra: int) -> np.ndarray:
    """Windows (..., P, k, *tail) sliding over axis -(extra+1)."""
    swv = np.lib.stride_tricks.sliding_window_view(xdata, k, axis=xdata.ndim - 1 - extra)
    return np.moveaxis(swv, -1, -1 - extra)


def _conv_forward(win: np.ndarray, filters: np.ndarray):
    """Chunked contiguous-product convolution core.

    win: (..., P, k, *tail); filters: (F, k, *tail).
    Returns (pre (..., P, F), flat windows (Q, k, *tail)).
    """
    F = filters.shape[0]
    block = filters.shape[1:]
    lead = win.shape[: win.ndim - len(block)]
    flat = np.ascontiguousarray(win).reshape(-1, *block)
    Q = flat.shape[0]
    step = max(1, _CHUNK_ELEMS // max(1, filters.size))
    out = np.empty((Q, F), dtype=np.float64)
    sum_axes = tuple(range(2, 2 + len(block)))
    for s in range(0, Q, step):
        prod = np.ascontiguousarray(flat[s : s + step, None] * filters[None])
        out[s : s + step] = prod.sum(axis=sum_axes)
    return out.reshape(*lead, F), flat


def _conv_op(x: Tensor, filters: Tensor, bias: Tensor, extra: int, opname: str) -> Tensor:
    k = filters.data.shape[1]
    slide_len = x.data.shape[-1 - extra]
    if slide_len < k:
        raise ValueError(f"{opname}: input length {slide_len} < filter size {k}")
    if filters.data.shape[2:] != x.data.shape[x.data.ndim - extra :]:
        raise ValueError(f"{opname}: filter tail does not match input shape")
    win = _sliding(x.data, k, extra)
    pre, flat = _conv_forward(win, filters.data)  # (..., P, F)
    pre = pre + bias.data  # broadcast over trailing F
    out_data = np.maximum(np.swapaxes(pre, -1, -2), 0.0)  # (..., F, P)
    mask = out_data > 0.0
    P = slide_len - k + 1
    lead = x.data.shape[: x.data.ndim - 1 - extra]

    def backward_fn(g: np.ndarray) -> None:
        gz = g * mask  # (..., F, P)
        gzT = np.swapaxes(gz, -1, -2).reshape(-1, filters.data.shape[0])  # (Q, F)
        _accumulate(bias, gzT.sum(axis=0))
        letters = "abc"[: extra + 1]
        _accumulate(
            filters,
            np.einsum(f"qf,q{letters}->f{letters}", gzT, flat),
        )
        dwin = np.einsum(f"qf,f{letters}->q{letters}", gzT, filters.data)
        dwin = dwin.reshape(*lead, P, *filters.data.shape[1:])
        dx = np.zeros_like(x.data)
        for a in range(k):
            if extra == 1:
                dx[..., a : a + P, :] += dwin[..., :, a, :]
            else:
                dx[..., a : a + P, :, :] += dwin[..., :, a, :, :]
        _accumulate(x, dx)

    return Tensor(out_data, (x, filters, bias), backward_fn)


def conv_text(M: Tensor, filters: Tensor, bias: Tensor) -> Tensor:
    """ReLU(conv) of token windows: (..., n, d) -> (..., F, n-k+1).

    out[..., f, i] = ReLU(sum(M[..., i:i+k, :] * filters[f]) + bias[f]).
    """
    return _conv_op(M, filters, bias, extra=1, opname="conv_text")


def conv3d_hunks(B: Tensor, filters: Tensor, bias: Tensor) -> Tensor:
    """ReLU(conv) of hunk windows: (..., H, N, E) -> (..., F, H-k+1).

    out[..., f, i] = ReLU(sum(B[..., i:i+k, :, :] * filters[f]) + bias[f]).
    """
    return _conv_op(B, filters, bias, extra=2, opname="conv3d_hunks")


def max_pool(t: Tensor) -> Tensor:
    """Maximum over the last axis; gradient flows to the first argmax only."""
    if t.data.shape[-1] == 0:
        raise ValueError("max_pool: empty pooling axis")
    arg = np.argmax(t.data, axis=-1)
    out_data = np.take_along_axis(t.data, arg[..., None], axis=-1)[..., 0]

    def backward_fn(g: np.ndarray) -> None:
        dt = np.zeros_like(t.data)
        np.put_along_axis(dt, arg[..., None], np.asarray(g)[..., None], axis=-1)
        _accumulate(t, dt)

    return Tensor(out_data, (t,), backward_fn)


def dense(e: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """h = ReLU(w · e + b): (..., n) x (m, n) -> (..., m)."""
    if e.data.shape[-1] != w.data.shape[1]:
        raise ValueError(
            f"dense: input dim {e.data.shape[-1]} != weight dim {w.data.shape[1]}"
        )
    pre = e.data @ w.data.T + b.data
    out_data = np.maximum(pre, 0.0)
    mask = pre > 0.0

    def backward_fn(g: np.ndarray) -> None:
        gz = g * mask  # (..., m)
        _accumulate(e, gz @ w.data)
        gz2 = gz.reshape(-1, w.data.shape[0])
        e2 = e.data.reshape(-1, w.data.shape[1])
        _accumulate(w, gz2.T @ e2)
        _accumulate(b, gz2.sum(axis=0))

    return Tensor(out_data, (e, w, b), backward_fn)


def sigmoid_score(h: Tensor, w_o: Tensor) -> Tensor:
    """z = sigmoid(h · w_o): (..., m) -> (...), overflow-safe."""
    s = h.data @ w_o.data
    z = np.empty_like(s)
    pos = s >= 0
    z[pos] = 1.0 / (1.0 + np.exp(-s[pos]))
    ez = np.exp(s[~pos])
    z[~pos] = ez / (1.0 + ez)

    def backward_fn(g: np.ndarray) -> None:
        gs = g * z * (1.0 - z)
        _accumulate(h, gs[..., None] * w_o.data)
        _accumulate(w_o, np.einsum("q,qm->m", gs.reshape(-1), h.data.reshape(-1, w_o.data.shape[0])))

    return Tensor(z, (h, w_o), backward_fn)


def concat(tensors, axis: int = -1) -> Tensor:
    """Concatenate along an axis; gradient splits back to the parents."""
    parts = list(tensors)
    out_data = np.concatenate([t.data for t in parts], axis=axis)
    sizes = [t.data.shape[axis] for t in parts]
    offsets = np.cumsum(sizes)[:-1]

    def backward_fn(g: np.ndarray) -> None:
        for t, piece in zip(parts, np.split(g, offsets, axis=axis)):
            _accumulate(t, piece)

    return Tensor(out_data, tuple(parts), backward_fn)


def stack(tensors) -> Tensor:
    """Stack equal-shape tensors along a new leading axis."""
    parts = list(tensors)
    out_data = np.stack([t.data for t in parts])

    def backward_fn(g: np.ndarray) -> None:
        for i, t in enumerate(parts):
            _accumulate(t, g[i])

    return Tensor(out_data, tuple(parts), backward_fn)


def dropout(t: Tensor, rate: float, rng: np.random.Generator, training: bool) -> Tensor:
    """Zero elements with probability `rate` and rescale survivors.

    Identity in inference mode or at rate 0 (returns the input tensor).
    """
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return t
    keep = rng.random(t.data.shape) >= rate
    scale = 1.0 / (1.0 - rate)
    out_data = t.data * keep * scale

    def backward_fn(g: np.ndarray) -> None:
        _accumulate(t, g * keep * scale)

    return Tensor(out_data, (t,), backward_fn)


_LOSS_EPS = 1e-12


def loss(z: Tensor, y, params, lam: float) -> Tensor:
    """Summed cross-entropy plus one (lam/2)·‖θ‖² regularization term.

    z may be a scalar or a batch vector; y matches its shape with 0/1
    entries.  z values at 0 or 1 exactly are clamped to [eps, 1-eps]
    (no gradient through the clamp).
    """
    y_arr = np.asarray(y, dtype=np.float64)
    if y_arr.shape != z.data.shape:
        raise ValueError(f"loss: y shape {y_arr.shape} != z shape {z.data.shape}")
    params = list(params)
    zc = np.clip(z.data, _LOSS_EPS, 1.0 - _LOSS_EPS)
    data_term = -(y_arr * np.log(zc) + (1.0 - y_arr) * np.log(1.0 - zc)).sum()
    reg = 0.5 * lam * sum(float(np.sum(p.data * p.data)) for p in params)
    in_range = (z.data > _LOSS_EPS) & (z.data < 1.0 - _LOSS_EPS)

    def backward_fn(g: np.ndarray) -> None:
        _accumulate(z, g * in_range * (zc - y_arr) / (zc * (1.0 - zc)))
        for p in params:
            _accumulate(p, g * lam * p.data)

    return Tensor(data_term + reg, (z, *params), backward_fn)


# ---------------------------------------------------------------------------
# Reverse mode


def _topo_order(root: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    visited: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, processed = stack.pop()
        if processed:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            stack.append((p, False))
    return order


def backward(loss_tensor: Tensor, params=None):
    """Reverse-mode gradients of a scalar loss.

    Returns a gradient per entry of `params` when given; parameters that
    never influenced the loss get zero gradients.
    """
    if loss_tensor.data.shape != ():
        raise ValueError("backward expects a scalar loss")
    order = _topo_order(loss_tensor)
    on_tape = {id(t) for t in order}
    for t in order:
        t.grad = None
    loss_tensor.grad = np.ones(())
    for t in reversed(order):
        if t._backward_fn is not None and t.grad is not None:
            t._backward_fn(t.grad)
    if params is None:
        return None
    return [
        p.grad if (id(p) in on_tape and p.grad is not None) else np.zeros_like(p.data)
        for p in params
    ]


# ---------------------------------------------------------------------------
# Adam


@dataclass
class AdamState:
    """Per-parameter Adam accumulator."""

    first_moment: np.ndarray
    second_moment: np.ndarray
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    learning_rate: float = 1e-3

    @classmethod
    def for_param(cls, param, learning_rate: float = 1e-3) -> "AdamState":
        data = param.data if isinstance(param, Tensor) else np.asarray(param)
        return cls(
            first_moment=np.zeros_like(data),
            second_moment=np.zeros_like(data),
            learning_rate=learning_rate,
        )


def adam_step(param, grad: np.ndarray, state: AdamState):
    """Bias-corrected Adam update, in place on param and state."""
    state.step += 1
    state.first_moment = state.beta1 * state.first_moment + (1.0 - state.beta1) * grad
    state.second_moment = state.beta2 * state.second_moment + (1.0 - state.beta2) * (grad * grad)
    m_hat = state.first_moment / (1.0 - state.beta1**state.step)
    v_hat = state.second_moment / (1.0 - state.beta2**state.step)
    update = state.learning_rate * m_hat / (np.sqrt(v_hat) + state.eps)
    data = param.data if isinstance(param, Tensor) else param
    data -= update
    return param, state
