"""Mini-batch Adam training loop for autoencoder reconstruction.

The regime is deliberately plain: a fixed number of epochs (300 by
default), learning rate 5e-4, mean-squared-error cost with an L2 weight
penalty of 1e-7, no early stopping and no schedule.  Reported MSE never
includes the L2 term.  Chroma (or first-order-difference) augmentation
affects the input only; the target is always the bare 2049-bin frame.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import nn
from .corpus import Corpus
from .errors import ConfigError, TrainingDiverged
from .model import AutoencoderModel


@dataclass
class TrainConfig:
    epochs: int = 300
    lr: float = 5e-4
    l2_lambda: float = 1e-7
    batch_size: int = 64
    seed: int = 0
    drop_silent: bool = False

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.lr <= 0:
            raise ConfigError(f"lr must be positive, got {self.lr}")
        if self.l2_lambda < 0:
            raise ConfigError(f"l2_lambda must be >= 0, got {self.l2_lambda}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")


@dataclass
class TrainHistory:
    """Per-epoch curves plus the best-validation parameter snapshot.

    ``best_params`` lets a caller save both the final and the
    best-validation checkpoint after one run; comparisons default to
    the final model.
    """

    train_mse: list = field(default_factory=list)
    val_mse: list = field(default_factory=list)
    epoch_seconds: list = field(default_factory=list)
    final_test_mse: Optional[float] = None
    best_epoch: int = 0
    best_val_mse: float = float("inf")
    best_params: list = field(default_factory=list, repr=False)


def _training_arrays(model: AutoencoderModel, corpus: Corpus, split: str,
                     drop_silent: bool):
    idx = corpus.split_indices(split, drop_silent)
    if len(idx) == 0:
        return None
    x = corpus.input_matrix(idx).astype(np.float32)
    y = corpus.frames[idx].astype(np.float32)
    c = corpus.chroma_onehot(idx) if model.config.use_chroma_skip else None
    return x, y, c


def _check_compatible(model: AutoencoderModel, corpus: Corpus) -> None:
    cfg = model.config
    if cfg.num_bins != corpus.frames.shape[1]:
        raise ConfigError(
            f"model expects {cfg.num_bins}-bin frames, corpus has "
            f"{corpus.frames.shape[1]}"
        )
    if cfg.augmentation != corpus.augmentation:
        raise ConfigError(
            f"model input augmentation {cfg.augmentation!r} does not match "
            f"corpus augmentation {corpus.augmentation!r}"
        )


def _batched_mse(model: AutoencoderModel, x, y, c, chunk: int = 1024) -> float:
    total = 0.0
    count = 0
    for start in range(0, len(x), chunk):
        xs = x[start:start + chunk]
        cs = None if c is None else c[start:start + chunk]
        out = model.decode_batch(model.encode_batch(xs), cs)
        diff = (out - y[start:start + chunk]).astype(np.float64)
        total += float(np.sum(diff * diff))
        count += diff.size
    return total / count


def train(model: AutoencoderModel, corpus: Corpus, config: TrainConfig,
          progress=None):
    """Train ``model`` in place; returns ``(model, history)``.

    Epoch shuffling is a seeded permutation, so a fixed seed gives an
    identical history.  Train MSE is the running mean over the epoch's
    batches (measured before each update); validation MSE is a full
    pass with no parameter updates.  Raises
    :class:`TrainingDiverged` if the loss goes non-finite.
    """
    _check_compatible(model, corpus)
    drop = config.drop_silent or bool(corpus.metadata.get("drop_silent", False))
    train_set = _training_arrays(model, corpus, "train", drop)
    val_set = _training_arrays(model, corpus, "validation", drop)
    if train_set is None:
        raise ValueError("corpus has no train frames")
    if val_set is None:
        raise ValueError("corpus has no validation frames")
    x_train, y_train, c_train = train_set
    if x_train.shape[1] != model.config.input_dim:
        raise ConfigError(
            f"corpus inputs have {x_train.shape[1]} values, model expects "
            f"{model.config.input_dim}"
        )

    params = model.parameters()
    state = nn.AdamState.init(params, config.lr)
    rng = np.random.default_rng(config.seed)
    history = TrainHistory()
    n = len(x_train)

    for epoch in range(config.epochs):
        tic = time.perf_counter()
        perm = rng.permutation(n)
        sq_sum = 0.0
        for start in range(0, n, config.batch_size):
            batch = perm[start:start + config.batch_size]
            xb, yb = x_train[batch], y_train[batch]
            cb = None if c_train is None else c_train[batch]
            out, caches = model.forward_training(xb, cb)
            loss, grad = nn.mse_and_grad(out, yb)
            if not np.isfinite(loss):
                raise TrainingDiverged(f"non-finite loss at epoch {epoch + 1}")
            sq_sum += loss * len(batch)
            grads = model.backward_training(caches, grad, config.l2_lambda)
            nn.adam_step(params, grads, state)
        history.train_mse.append(sq_sum / n)
        history.val_mse.append(_batched_mse(model, *val_set))
        history.epoch_seconds.append(time.perf_counter() - tic)
        if history.val_mse[-1] < history.best_val_mse:
            history.best_val_mse = history.val_mse[-1]
            history.best_epoch = epoch + 1
            history.best_params = [p.copy() for p in params]
        if progress is not None:
            progress(epoch + 1, history.train_mse[-1], history.val_mse[-1])

    test_set = _training_arrays(model, corpus, "test", drop)
    if test_set is not None:
        history.final_test_mse = _batched_mse(model, *test_set)
    _record_metadata(model, corpus, config, history, drop)
    return model, history


def _record_metadata(model, corpus, config, history, drop):
    latent = _latent_bbox(model, corpus, drop)
    model.metadata.update({
        "epochs": config.epochs,
        "lr": config.lr,
        "l2_lambda": config.l2_lambda,
        "batch_size": config.batch_size,
        "train_seed": config.seed,
        "final_train_mse": history.train_mse[-1],
        "final_val_mse": history.val_mse[-1],
        "final_test_mse": history.final_test_mse,
        "best_epoch": history.best_epoch,
        "best_val_mse": history.best_val_mse,
        "corpus_hash": corpus.content_hash(),
        "sample_rate": corpus.metadata.get("sample_rate"),
        "train_classes": corpus.present_classes("train"),
        "latent_bbox": latent,
    })


def _latent_bbox(model, corpus, drop_silent):
    """Per-dimension [min, max] of the train-split embedding."""
    idx = corpus.split_indices("train", drop_silent=True)
    if len(idx) == 0:
        return None
    x = corpus.input_matrix(idx).astype(np.float32)
    lo = np.full(model.bottleneck_width, np.inf)
    hi = np.full(model.bottleneck_width, -np.inf)
    for start in range(0, len(x), 1024):
        z = model.encode_batch(x[start:start + 1024])
        lo = np.minimum(lo, z.min(axis=0))
        hi = np.maximum(hi, z.max(axis=0))
    return [[float(a), float(b)] for a, b in zip(lo, hi)]


def snapshot_model(model: AutoencoderModel, flat_params) -> AutoencoderModel:
    """Copy of ``model`` carrying the given parameter snapshot
    (e.g. ``history.best_params``)."""
    out = model.copy()
    target = out.parameters()
    if len(flat_params) != len(target):
        raise ValueError("parameter snapshot does not match model layout")
    for dst, src in zip(target, flat_params):
        dst[...] = src
    return out


def evaluate_mse(model: AutoencoderModel, corpus: Corpus, split: str,
                 drop_silent: bool = False) -> float:
    """Mean over frames of per-frame mean squared reconstruction error.

    The L2 penalty is excluded; this is the number the comparison
    tables report.
    """
    _check_compatible(model, corpus)
    arrays = _training_arrays(model, corpus, split, drop_silent)
    if arrays is None:
        raise ValueError(f"split {split!r} is empty")
    return _batched_mse(model, *arrays)


def export_history(history: TrainHistory, path) -> None:
    """Write the per-epoch curves as CSV: epoch, train_mse, val_mse, seconds."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "train_mse", "val_mse", "seconds"])
        for i, (tr, va, sec) in enumerate(
            zip(history.train_mse, history.val_mse, history.epoch_seconds), start=1
        ):
            writer.writerow([i, repr(tr), repr(va), f"{sec:.4f}"])
