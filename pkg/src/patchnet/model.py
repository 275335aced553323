"""The patch-scoring network: a message CNN and a hierarchical code CNN
feeding a dense layer and a sigmoid output.

Message channel: embed 512 tokens, convolve with 1- and 2-gram filters,
max-pool per filter, concatenate (e_m, 128 dims by default).

Code channel, per file and side: embed every line's 120 tokens, run the
line module (same structure as the message module) to get one vector
per line, arrange them as a hunks × lines × E block, convolve windows
of hunks in 3-D, max-pool, concatenate (e_r / e_a, 128 dims); a file is
e_r ⊕ e_a (256) and the patch code vector e_c concatenates five file
slots (1280).  Classification: dropout(e_m ⊕ e_c) → dense(100, ReLU) →
sigmoid.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .core import Label
from .nnkit import (
    Tensor,
    concat,
    conv3d_hunks,
    conv_text,
    dense,
    dropout,
    embed_lookup,
    max_pool,
    sigmoid_score,
    uniform_init,
)
from .preprocess import PatchDims, PreprocessedPatch

VARIANTS = ("full", "code", "message")


@dataclass(frozen=True)
class HyperParams:
    """Architecture and regularization settings (shipped defaults)."""

    d_msg: int = 50
    d_code: int = 50
    filter_sizes: tuple[int, ...] = (1, 2)
    n_filters: int = 64
    fc_size: int = 100
    msg_len: int = 512
    files: int = 5
    hunks: int = 8
    lines: int = 10
    words: int = 120
    dropout: float = 0.5
    l2_reg_lambda: float = 1e-5
    threshold: float = 0.5
    variant: str = "full"
    share_line_module: bool = True

    def __post_init__(self) -> None:
        for name in (
            "d_msg", "d_code", "n_filters", "fc_size", "msg_len",
            "files", "hunks", "lines", "words",
        ):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if not self.filter_sizes or any(k < 1 for k in self.filter_sizes):
            raise ValueError("filter_sizes must be positive")
        if len(set(self.filter_sizes)) != len(self.filter_sizes):
            raise ValueError("filter_sizes must be distinct")
        if not 0.0 < self.threshold < 1.0:
            raise ValueError("threshold must lie in (0, 1)")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")
        if self.l2_reg_lambda < 0.0:
            raise ValueError("l2_reg_lambda must be non-negative")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        kmax = max(self.filter_sizes)
        if self.msg_len < kmax or self.words < kmax or self.hunks < kmax:
            raise ValueError("sequence dims must be >= the largest filter size")

    @property
    def line_embed_dim(self) -> int:
        """E: one max-pooled value per filter per filter size."""
        return self.n_filters * len(self.filter_sizes)

    @property
    def file_dim(self) -> int:
        return 2 * self.line_embed_dim

    @property
    def code_dim(self) -> int:
        return self.files * self.file_dim

    @property
    def e_dim(self) -> int:
        """Width of the classifier input under the active variant."""
        if self.variant == "message":
            return self.line_embed_dim
        if self.variant == "code":
            return self.code_dim
        return self.line_embed_dim + self.code_dim

    @property
    def dims(self) -> PatchDims:
        return PatchDims(
            msg_len=self.msg_len,
            files=self.files,
            hunks=self.hunks,
            lines=self.lines,
            words=self.words,
        )

    def to_json_obj(self) -> dict:
        return {
            "d_msg": self.d_msg,
            "d_code": self.d_code,
            "filter_sizes": list(self.filter_sizes),
            "n_filters": self.n_filters,
            "fc_size": self.fc_size,
            "msg_len": self.msg_len,
            "files": self.files,
            "hunks": self.hunks,
            "lines": self.lines,
            "words": self.words,
            "dropout": self.dropout,
            "l2_reg_lambda": self.l2_reg_lambda,
            "threshold": self.threshold,
            "variant": self.variant,
            "share_line_module": self.share_line_module,
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "HyperParams":
        obj = dict(obj)
        obj["filter_sizes"] = tuple(obj["filter_sizes"])
        return cls(**obj)


@dataclass(frozen=True)
class Score:
    """A probability of being stable plus its thresholded label."""

    z: float
    label: Label

    @classmethod
    def from_z(cls, z: float, threshold: float = 0.5) -> "Score":
        return cls(z=z, label=Label.STABLE if z >= threshold else Label.NON_STABLE)


def ablation_variant(hp: HyperParams, which: str) -> HyperParams:
    """Wiring for the ablations: C = code only, M = message only.

    NN returns full wiring unchanged: its knob is preprocessing with an
    empty FunctionNameTable so every function name becomes IDENT.
    """
    key = which.upper()
    if key == "C":
        return replace(hp, variant="code")
    if key == "M":
        return replace(hp, variant="message")
    if key == "NN":
        return replace(hp, variant="full")
    raise ValueError(f"unknown ablation {which!r} (expected C, M, or NN)")


def _line_sides(hp: HyperParams) -> tuple[str, ...]:
    return ("shared",) if hp.share_line_module else ("removed", "added")


def param_specs(
    hp: HyperParams, msg_vocab_size: int, code_vocab_size: int
) -> list[tuple[str, tuple[int, ...]]]:
    """Names and shapes of every learnable array, in a fixed order.

    This list is the single ordering authority: initialization walks it
    and checkpoints store arrays in exactly this sequence.
    """
    if msg_vocab_size < 2 or code_vocab_size < 2:
        raise ValueError("vocabulary sizes must be at least 2 (PAD and UNK)")
    specs: list[tuple[str, tuple[int, ...]]] = [
        ("msg_embed", (msg_vocab_size, hp.d_msg)),
        ("code_embed", (code_vocab_size, hp.d_code)),
    ]
    for k in hp.filter_sizes:
        specs.append((f"msg_filters_k{k}", (hp.n_filters, k, hp.d_msg)))
        specs.append((f"msg_bias_k{k}", (hp.n_filters,)))
    for side in _line_sides(hp):
        for k in hp.filter_sizes:
            specs.append((f"line_filters_{side}_k{k}", (hp.n_filters, k, hp.d_code)))
            specs.append((f"line_bias_{side}_k{k}", (hp.n_filters,)))
    for side in ("removed", "added"):
        for k in hp.filter_sizes:
            specs.append(
                (f"hunk_filters_{side}_k{k}", (hp.n_filters, k, hp.lines, hp.line_embed_dim))
            )
            specs.append((f"hunk_bias_{side}_k{k}", (hp.n_filters,)))
    specs.append(("w_hidden", (hp.fc_size, hp.e_dim)))
    specs.append(("b_hidden", (hp.fc_size,)))
    specs.append(("w_out", (hp.fc_size,)))
    return specs


class ModelParams:
    """Every learnable tensor, addressable by name in manifest order."""

    def __init__(self, tensors: "dict[str, Tensor]", hp: HyperParams):
        self._tensors = dict(tensors)
        self._shared_lines = hp.share_line_module
        self.filter_sizes = tuple(hp.filter_sizes)

    def named(self) -> list[tuple[str, Tensor]]:
        return list(self._tensors.items())

    def all(self) -> list[Tensor]:
        return list(self._tensors.values())

    def __getitem__(self, name: str) -> Tensor:
        return self._tensors[name]

    @property
    def msg_embed(self) -> Tensor:
        return self._tensors["msg_embed"]

    @property
    def code_embed(self) -> Tensor:
        return self._tensors["code_embed"]

    def msg_filters(self, k: int) -> tuple[Tensor, Tensor]:
        return self._tensors[f"msg_filters_k{k}"], self._tensors[f"msg_bias_k{k}"]

    def line_filters(self, side: str, k: int) -> tuple[Tensor, Tensor]:
        key = "shared" if self._shared_lines else side
        return (
            self._tensors[f"line_filters_{key}_k{k}"],
            self._tensors[f"line_bias_{key}_k{k}"],
        )

    def hunk_filters(self, side: str, k: int) -> tuple[Tensor, Tensor]:
        return (
            self._tensors[f"hunk_filters_{side}_k{k}"],
            self._tensors[f"hunk_bias_{side}_k{k}"],
        )

    @property
    def w_hidden(self) -> Tensor:
        return self._tensors["w_hidden"]

    @property
    def b_hidden(self) -> Tensor:
        return self._tensors["b_hidden"]

    @property
    def w_out(self) -> Tensor:
        return self._tensors["w_out"]


def init_params(
    hp: HyperParams,
    msg_vocab_size: int,
    code_vocab_size: int,
    rng: np.random.Generator,
    scale: float = 0.1,
) -> ModelParams:
    """Uniform [-scale, scale] initialization in manifest order."""
    tensors = {
        name: uniform_init(shape, rng, scale)
        for name, shape in param_specs(hp, msg_vocab_size, code_vocab_size)
    }
    return ModelParams(tensors, hp)


# ---------------------------------------------------------------------------
# Forward pieces


def message_embedding(tokens, params: ModelParams) -> Tensor:
    """e_m: embed 512 tokens, convolve per filter size, pool, concatenate."""
    emb = embed_lookup(params.msg_embed, np.asarray(tokens))
    parts = []
    for k in params.filter_sizes:
        filters, bias = params.msg_filters(k)
        parts.append(max_pool(conv_text(emb, filters, bias)))
    return concat(parts, axis=-1)


def line_embedding(line_tokens, params: ModelParams, side: str = "removed") -> Tensor:
    """One line's E-dim vector; batches over leading axes of (..., L)."""
    emb = embed_lookup(params.code_embed, np.asarray(line_tokens))
    parts = []
    for k in params.filter_sizes:
        filters, bias = params.line_filters(side, k)
        parts.append(max_pool(conv_text(emb, filters, bias)))
    return concat(parts, axis=-1)


def code_side_embedding(B, params: ModelParams, side: str) -> Tensor:
    """e_r or e_a for one file side: line module then 3-D hunk convolution.

    B is an (H, N, L) index block (leading batch axes allowed); every
    line embeds in one batched call, forming the (H, N, E) block that
    the hunk filters convolve.
    """
    if side not in ("removed", "added"):
        raise ValueError(f"side must be 'removed' or 'added', got {side!r}")
    b_hat = line_embedding(B, params, side)  # (..., H, N, E)
    parts = []
    for k in params.filter_sizes:
        filters, bias = params.hunk_filters(side, k)
        parts.append(max_pool(conv3d_hunks(b_hat, filters, bias)))
    return concat(parts, axis=-1)


def file_embedding(file_tensors, params: ModelParams) -> Tensor:
    """e_f = e_r ⊕ e_a for one file's (removed, added) index blocks."""
    removed_B, added_B = file_tensors
    e_r = code_side_embedding(removed_B, params, "removed")
    e_a = code_side_embedding(added_B, params, "added")
    return concat([e_r, e_a], axis=-1)


def code_embedding(patch_tensors, params: ModelParams) -> Tensor:
    """e_c: concatenation of all file embeddings in slot order."""
    removed, added = patch_tensors
    parts = [
        file_embedding((removed[v], added[v]), params)
        for v in range(removed.shape[0])
    ]
    return concat(parts, axis=-1)


def _check_shapes(p: PreprocessedPatch, hp: HyperParams) -> None:
    dims = hp.dims
    if tuple(p.message_tokens.shape) != (dims.msg_len,):
        raise ValueError(
            f"message shape {p.message_tokens.shape} != ({dims.msg_len},)"
        )
    for name, arr in (("removed", p.removed_code), ("added", p.added_code)):
        if tuple(arr.shape) != dims.code_shape:
            raise ValueError(f"{name} code shape {arr.shape} != {dims.code_shape}")


def forward(
    p: PreprocessedPatch,
    params: ModelParams,
    hp: HyperParams,
    mode: str = "infer",
    rng: "np.random.Generator | None" = None,
) -> Tensor:
    """Differentiable score tensor for one patch (0-d)."""
    if mode not in ("train", "infer"):
        raise ValueError(f"mode must be 'train' or 'infer', got {mode!r}")
    training = mode == "train"
    if training and rng is None:
        raise ValueError("training mode requires an rng for dropout")
    _check_shapes(p, hp)

    parts = []
    if hp.variant in ("full", "message"):
        parts.append(message_embedding(p.message_tokens, params))
    if hp.variant in ("full", "code"):
        parts.append(code_embedding((p.removed_code, p.added_code), params))
    e = concat(parts, axis=-1) if len(parts) > 1 else parts[0]
    e = dropout(e, hp.dropout, rng, training)
    h = dense(e, params.w_hidden, params.b_hidden)
    return sigmoid_score(h, params.w_out)


def predict(
    p: PreprocessedPatch,
    params: ModelParams,
    hp: HyperParams,
    mode: str = "infer",
    rng: "np.random.Generator | None" = None,
) -> Score:
    """Score one patch; the label applies threshold with the >= rule."""
    z = forward(p, params, hp, mode, rng)
    return Score.from_z(float(z.data), hp.threshold)
