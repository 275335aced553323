"""Minibatch training with Adam, early stopping, and binary checkpoints.

A batch's loss is the sum of its items' cross-entropies plus one L2
term; the recorded epoch loss is the sum of batch losses divided by
the number of items seen.  Early stopping keeps the parameters from
the best epoch, not the last one.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .codeprep import FunctionNameTable
from .core import Label
from .model import HyperParams, ModelParams, Score, forward, init_params, param_specs, predict
from .nnkit import AdamState, Tensor, adam_step, backward, loss, stack
from .preprocess import PreprocessedPatch
from .vocab import Vocabulary

CHECKPOINT_MAGIC = b"PNET"
CHECKPOINT_VERSION = 1


class TrainingError(Exception):
    """Raised when optimization cannot continue (for example NaN loss)."""


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 32
    max_epochs: int = 50
    patience: int = 5
    min_delta: float = 1e-9
    learning_rate: float = 1e-3
    seed: int = 0
    shuffle: bool = True
    init_scale: float = 0.1

    def __post_init__(self) -> None:
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be positive")
        if self.patience < 1:
            raise ValueError("patience must be positive")
        if self.min_delta < 0.0:
            raise ValueError("min_delta must be non-negative")
        if self.learning_rate <= 0.0:
            raise ValueError("learning_rate must be positive")
        if self.init_scale <= 0.0:
            raise ValueError("init_scale must be positive")


@dataclass(frozen=True)
class TrainHistory:
    epoch_losses: tuple[float, ...]
    best_epoch: int
    best_loss: float
    epochs_run: int
    stopped_early: bool


@dataclass
class TrainResult:
    params: ModelParams
    history: TrainHistory


def minibatches(items, batch_size: int, rng=None, shuffle: bool = False):
    """Split items into batches; the final short batch is kept."""
    if batch_size < 1:
        raise ValueError("batch_size must be positive")
    items = list(items)
    if shuffle:
        if rng is None:
            raise ValueError("shuffle requires an rng")
        order = rng.permutation(len(items))
        items = [items[i] for i in order]
    return [items[i : i + batch_size] for i in range(0, len(items), batch_size)]


@dataclass
class EarlyStopping:
    """Stop after `patience` consecutive epochs without real improvement.

    An epoch improves only when it beats the best loss by more than
    min_delta; ties and sub-tolerance wiggles count against patience.
    """

    patience: int
    min_delta: float = 1e-9
    best_loss: float = field(default=float("inf"))
    best_epoch: int = 0
    stale_epochs: int = 0

    def update(self, epoch: int, epoch_loss: float) -> bool:
        """Record one epoch; True means training should stop now."""
        if self.best_loss - epoch_loss > self.min_delta:
            self.best_loss = epoch_loss
            self.best_epoch = epoch
            self.stale_epochs = 0
        else:
            self.stale_epochs += 1
        return self.stale_epochs >= self.patience


def _vocab_size(v) -> int:
    if isinstance(v, Vocabulary):
        return len(v)
    return int(v)


def _labels_array(batch) -> np.ndarray:
    return np.array(
        [1.0 if p.label is Label.STABLE else 0.0 for p in batch], dtype=np.float64
    )


def _snapshot(params: ModelParams) -> dict[str, np.ndarray]:
    return {name: t.data.copy() for name, t in params.named()}


def _restore(params: ModelParams, snapshot: dict[str, np.ndarray]) -> None:
    for name, t in params.named():
        t.data[...] = snapshot[name]


def train(
    items,
    hp: HyperParams,
    config: TrainConfig,
    message_vocab,
    code_vocab,
    params: "ModelParams | None" = None,
) -> TrainResult:
    """Fit the model; identical seeds give bit-identical results.

    `message_vocab` and `code_vocab` may be Vocabulary objects or plain
    sizes; they fix the embedding table heights when `params` is None.
    """
    items = list(items)
    if not items:
        raise ValueError("cannot train on an empty dataset")
    for p in items:
        if p.label is None:
            raise ValueError(f"item {p.commit_id!r} has no label")

    rng = np.random.default_rng(config.seed)
    if params is None:
        params = init_params(
            hp, _vocab_size(message_vocab), _vocab_size(code_vocab), rng,
            scale=config.init_scale,
        )
    named = params.named()
    tensors = [t for _, t in named]
    states = [AdamState.for_param(t, learning_rate=config.learning_rate) for t in tensors]

    stopper = EarlyStopping(patience=config.patience, min_delta=config.min_delta)
    best = _snapshot(params)
    epoch_losses: list[float] = []
    stopped_early = False

    for epoch in range(1, config.max_epochs + 1):
        total = 0.0
        for batch_index, batch in enumerate(
            minibatches(items, config.batch_size, rng, config.shuffle), start=1
        ):
            zs = [forward(p, params, hp, mode="train", rng=rng) for p in batch]
            batch_loss = loss(stack(zs), _labels_array(batch), tensors, hp.l2_reg_lambda)
            value = float(batch_loss.data)
            if not np.isfinite(value):
                raise TrainingError(
                    f"non-finite loss {value} at epoch {epoch}, batch {batch_index}"
                )
            grads = backward(batch_loss, tensors)
            for t, g, s in zip(tensors, grads, states):
                adam_step(t, g, s)
            total += value
        epoch_loss = total / len(items)
        epoch_losses.append(epoch_loss)
        should_stop = stopper.update(epoch, epoch_loss)
        if stopper.best_epoch == epoch:
            best = _snapshot(params)
        if should_stop:
            stopped_early = True
            break

    _restore(params, best)
    history = TrainHistory(
        epoch_losses=tuple(epoch_losses),
        best_epoch=stopper.best_epoch,
        best_loss=stopper.best_loss,
        epochs_run=len(epoch_losses),
        stopped_early=stopped_early,
    )
    return TrainResult(params=params, history=history)


def score_items(items, params: ModelParams, hp: HyperParams) -> list[Score]:
    """Inference-mode scores in input order."""
    return [predict(p, params, hp, mode="infer") for p in items]


def dataset_accuracy(items, params: ModelParams, hp: HyperParams) -> float:
    """Fraction of labeled items whose thresholded score matches."""
    labeled = [p for p in items if p.label is not None]
    if not labeled:
        raise ValueError("no labeled items to score")
    scores = score_items(labeled, params, hp)
    hits = sum(1 for p, s in zip(labeled, scores) if s.label is p.label)
    return hits / len(labeled)


# ---------------------------------------------------------------------------
# Checkpoints


@dataclass
class CheckpointBundle:
    """Everything needed to score new patches with a trained model."""

    params: ModelParams
    hp: HyperParams
    message_vocab: Vocabulary
    code_vocab: Vocabulary
    functions: FunctionNameTable


def save_checkpoint(
    path: str,
    params: ModelParams,
    hp: HyperParams,
    message_vocab: Vocabulary,
    code_vocab: Vocabulary,
    functions: "FunctionNameTable | None" = None,
) -> None:
    """Binary checkpoint: magic, version, JSON header, float32 arrays.

    The header embeds both vocabulary word lists and the retained
    function names so a checkpoint alone can preprocess and score raw
    commits.  Arrays follow in header-manifest order, little endian.
    """
    functions = functions if functions is not None else FunctionNameTable.empty()
    named = params.named()
    header = {
        "hyperparams": hp.to_json_obj(),
        "message_vocab": list(message_vocab.words),
        "code_vocab": list(code_vocab.words),
        "retained_functions": sorted(functions.retained),
        "manifest": [
            {"name": name, "shape": list(t.data.shape)} for name, t in named
        ],
        "dtype": "float32",
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<II", CHECKPOINT_VERSION, len(header_bytes)))
        fh.write(header_bytes)
        for _, t in named:
            fh.write(np.ascontiguousarray(t.data, dtype="<f4").tobytes())


def load_checkpoint(path: str) -> CheckpointBundle:
    """Read a checkpoint, refusing anything corrupt or mismatched."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 12 or blob[:4] != CHECKPOINT_MAGIC:
        raise ValueError("not a checkpoint file (bad magic)")
    version, header_len = struct.unpack_from("<II", blob, 4)
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {version}")
    if len(blob) < 12 + header_len:
        raise ValueError("truncated checkpoint file")
    try:
        header = json.loads(blob[12 : 12 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ValueError(f"corrupt checkpoint header: {exc}") from exc

    hp = HyperParams.from_json_obj(header["hyperparams"])
    message_vocab = Vocabulary.from_words("message", header["message_vocab"])
    code_vocab = Vocabulary.from_words("code", header["code_vocab"])
    functions = FunctionNameTable(
        retained=frozenset(header["retained_functions"]), defined_in={}
    )

    expected = param_specs(hp, len(message_vocab), len(code_vocab))
    stored = [(e["name"], tuple(e["shape"])) for e in header["manifest"]]
    if stored != expected:
        raise ValueError(
            "parameter manifest mismatch between header and hyperparameters"
        )

    offset = 12 + header_len
    tensors: dict[str, Tensor] = {}
    for name, shape in expected:
        count = int(np.prod(shape, dtype=np.int64)) if shape else 1
        nbytes = count * 4
        if offset + nbytes > len(blob):
            raise ValueError("truncated checkpoint file")
        arr = np.frombuffer(blob, dtype="<f4", count=count, offset=offset)
        tensors[name] = Tensor(arr.astype(np.float64).reshape(shape))
        offset += nbytes
    if offset != len(blob):
        raise ValueError("trailing data in checkpoint file")

    params = ModelParams(tensors, hp)
    return CheckpointBundle(
        params=params,
        hp=hp,
        message_vocab=message_vocab,
        code_vocab=code_vocab,
        functions=functions,
    )
