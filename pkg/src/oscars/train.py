"""Seeded SGD over quadruplets, plus checkpoint and loss-history files.

Training is logically single-threaded: quadruplet order, batch boundaries
and gradient summation order are all fixed by the seeds, so reruns are
bit-identical.
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass

import numpy as np

from .data import Store
from .errors import DataError, NumericError, ValidationError
from .head import DEFAULT_HIDDEN, DEFAULT_OUT, ProjectionHead, init_head
from .loss import HeadGradients, LossConfig, loss_gradients
from .sampling import Quadruplet
from .util import atomic_write_bytes, atomic_write_text, checksum64

CHECKPOINT_MAGIC = b"OSCH"
CHECKPOINT_VERSION = 1


@dataclass
class TrainConfig:
    learning_rate: float = 0.001
    epochs: int = 50
    batch_size: int = 64
    seed: int = 0
    momentum: float = 0.0

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ValidationError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if self.epochs < 1:
            raise ValidationError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValidationError(f"batch_size must be >= 1, got {self.batch_size}")
        if not 0.0 <= self.momentum < 1.0:
            raise ValidationError(f"momentum must be in [0, 1), got {self.momentum}")


@dataclass
class TrainResult:
    head: ProjectionHead
    history: list[float]  # per-epoch mean quadruplet loss


def train(
    store: Store,
    quadruplets: list[Quadruplet],
    head_init_seed: int,
    loss_cfg: LossConfig,
    train_cfg: TrainConfig,
    *,
    d_hidden: int = DEFAULT_HIDDEN,
    d_out: int = DEFAULT_OUT,
    resample_fn=None,
) -> TrainResult:
    """Run epochs x ceil(n/batch) SGD steps over seeded-shuffled quadruplets.

    resample_fn, when given, is called with the epoch number and must return
    that epoch's quadruplet list (the default keeps one fixed list for the
    whole run). Aborts with NumericError if an epoch's mean loss goes
    non-finite.
    """
    if not quadruplets and resample_fn is None:
        raise ValidationError("no quadruplets to train on")
    head = init_head(store.dimension, d_hidden, d_out, head_init_seed)
    rng = np.random.default_rng(train_cfg.seed)
    velocity = HeadGradients.zeros_like(head) if train_cfg.momentum > 0 else None
    history: list[float] = []

    quads = list(quadruplets)
    for epoch in range(train_cfg.epochs):
        if resample_fn is not None:
            quads = list(resample_fn(epoch))
            if not quads:
                raise DataError(f"resample_fn returned no quadruplets at epoch {epoch}")
        vectors = _resolve_vectors(store, quads)
        order = rng.permutation(len(quads))
        # per-tuple losses keyed by canonical index: the epoch mean must not
        # depend on the shuffle, or a zero-learning-rate run would show
        # roundoff drift across epochs
        losses = np.zeros(len(quads))
        for start in range(0, len(order), train_cfg.batch_size):
            batch = order[start : start + train_cfg.batch_size]
            acc = HeadGradients.zeros_like(head)
            for idx in batch:
                value, grads = loss_gradients(head, *vectors[idx], loss_cfg)
                losses[idx] = value
                acc.add_(grads)
            acc.scale_(1.0 / len(batch))
            if velocity is not None:
                velocity.scale_(train_cfg.momentum)
                velocity.add_(acc)
                step = velocity
            else:
                step = acc
            head.W1 -= train_cfg.learning_rate * step.W1
            head.b1 -= train_cfg.learning_rate * step.b1
            head.W2 -= train_cfg.learning_rate * step.W2
            head.b2 -= train_cfg.learning_rate * step.b2
        epoch_mean = float(np.sum(losses)) / len(quads)
        if not np.isfinite(epoch_mean):
            raise NumericError(f"training diverged: epoch {epoch} mean loss is {epoch_mean}")
        history.append(epoch_mean)
    return TrainResult(head=head, history=history)


def _resolve_vectors(store: Store, quads: list[Quadruplet]):
    out = []
    for q in quads:
        out.append(tuple(store.get(rid).vector for rid in q.ids()))
    return out


# ---------------------------------------------------------------------------
# Checkpoint file: magic OSCH, dims, loss config, f64 parameters, checksum


def save_head(head: ProjectionHead, loss_cfg: LossConfig, path) -> None:
    out = io.BytesIO()
    out.write(CHECKPOINT_MAGIC)
    out.write(struct.pack("<IIII", CHECKPOINT_VERSION, head.d_in, head.d_hidden, head.d_out))
    out.write(struct.pack("<ddd", loss_cfg.lam, loss_cfg.margin_intra, loss_cfg.margin_inter))
    for block in (head.W1, head.b1, head.W2, head.b2):
        out.write(np.ascontiguousarray(block, dtype="<f8").tobytes())
    body = out.getvalue()
    atomic_write_bytes(path, body + checksum64(body))


def load_head(path) -> tuple[ProjectionHead, LossConfig]:
    """Lossless 64-bit round-trip of the trained head and the loss settings
    it was trained with."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 8 or checksum64(raw[:-8]) != raw[-8:]:
        raise DataError(f"{path}: checkpoint checksum mismatch")
    body = raw[:-8]
    if body[:4] != CHECKPOINT_MAGIC:
        raise DataError(f"{path}: bad magic, not a head checkpoint")
    version, d_in, d_hidden, d_out = struct.unpack_from("<IIII", body, 4)
    if version != CHECKPOINT_VERSION:
        raise DataError(f"{path}: unsupported checkpoint version {version}")
    lam, m_intra, m_inter = struct.unpack_from("<ddd", body, 20)
    offset = 44
    expected = 8 * (d_hidden * d_in + d_hidden + d_out * d_hidden + d_out)
    if len(body) - offset != expected:
        raise DataError(f"{path}: checkpoint size does not match header dimensions")

    def take(shape):
        nonlocal offset
        n = int(np.prod(shape))
        arr = np.frombuffer(body, dtype="<f8", count=n, offset=offset).reshape(shape).copy()
        offset += 8 * n
        return arr

    head = ProjectionHead(
        W1=take((d_hidden, d_in)),
        b1=take((d_hidden,)),
        W2=take((d_out, d_hidden)),
        b2=take((d_out,)),
    )
    return head, LossConfig(lam=lam, margin_intra=m_intra, margin_inter=m_inter)


def save_history(history: list[float], path) -> None:
    """Two-column text file: epoch index and that epoch's mean loss."""
    lines = [f"{i}\t{v:.17g}" for i, v in enumerate(history)]
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_history(path) -> list[float]:
    values: list[float] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                values.append(float(line.split("\t")[1]))
    return values
