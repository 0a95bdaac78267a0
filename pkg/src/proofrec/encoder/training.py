"""Optimization loops for the three encoder tasks.

All randomness flows through generators seeded from TrainConfig, so repeated
runs with the same seed produce bit-identical parameters in double precision.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from proofrec.encoder.model import (
    EncoderParameters,
    classifier_loss,
    mlm_loss,
    pad_batch,
    siamese_loss,
)
from proofrec.tokens import MASK_ID, SPECIAL_TOKENS


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-3
    batch_size: int = 32
    epochs: int = 10
    steps: int = 1000
    mask_rate: float = 0.15
    seed: int = 0
    val_fraction: float = 0.1

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError("learning rate must be positive")
        if not 0.0 <= self.mask_rate < 1.0:
            raise ValueError("mask_rate must lie in [0, 1)")


class Adam:
    """Adaptive-moment stochastic gradient optimizer."""

    def __init__(self, params: EncoderParameters, lr: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = params.zeros_like()
        self.v = params.zeros_like()

    def step(self, grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        b1c = 1.0 - self.beta1 ** self.t
        b2c = 1.0 - self.beta2 ** self.t
        for name, tensor in self.params.tensors.items():
            g = grads[name]
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            tensor -= self.lr * (m / b1c) / (np.sqrt(v / b2c) + self.eps)


# ---------------------------------------------------------------------------
# masked-token pretraining

_N_SPECIAL = len(SPECIAL_TOKENS)


def mask_tokens(ids: np.ndarray, mask_rate: float, vocab_size: int, rng):
    """BERT-style corruption of a padded id batch.

    Special tokens (including padding) are never selected. Of the selected
    positions, 80% become the mask token, 10% a random ordinary token, and
    10% stay unchanged. Returns (corrupted ids, selection mask, targets).
    """
    maskable = ids >= _N_SPECIAL
    selected = (rng.random(ids.shape) < mask_rate) & maskable
    targets = ids[selected]
    corrupted = ids.copy()
    roll = rng.random(ids.shape)
    mask_slot = selected & (roll < 0.8)
    random_slot = selected & (roll >= 0.8) & (roll < 0.9)
    corrupted[mask_slot] = MASK_ID
    n_random = int(random_slot.sum())
    if n_random:
        corrupted[random_slot] = rng.integers(
            _N_SPECIAL, vocab_size, size=n_random)
    return corrupted, selected, targets


def mlm_step(batch_sequences, params: EncoderParameters, cfg: TrainConfig,
             rng, opt: Adam):
    """One masked-token optimization step; returns the loss.

    A zero mask rate (or a batch with no maskable positions) is a documented
    skip: no update is made and None is returned.
    """
    if cfg.mask_rate == 0.0:
        return None
    ids = pad_batch(batch_sequences)
    corrupted, selected, targets = mask_tokens(
        ids, cfg.mask_rate, params.vocab_size, rng)
    if not selected.any():
        return None
    loss, grads = mlm_loss(params, corrupted, selected, targets)
    opt.step(grads)
    return loss


def pretrain_mlm(params: EncoderParameters, sequences,
                 cfg: TrainConfig) -> list[float]:
    """Run ``cfg.steps`` masked-token steps over randomly drawn batches."""
    if not sequences:
        raise ValueError("empty pretraining corpus")
    rng = np.random.default_rng(cfg.seed)
    opt = Adam(params, cfg.lr)
    losses = []
    for _ in range(cfg.steps):
        idx = rng.integers(0, len(sequences), size=min(cfg.batch_size,
                                                       len(sequences)))
        loss = mlm_step([sequences[i] for i in idx], params, cfg, rng, opt)
        if loss is not None:
            losses.append(loss)
    return losses


# ---------------------------------------------------------------------------
# command classification

def train_classifier(params: EncoderParameters, sequences, labels,
                     cfg: TrainConfig):
    """Cross-entropy training with per-epoch metrics and best-checkpoint
    selection on a held-out validation slice.

    Returns (best parameters, metrics), where metrics is a list of
    ``{"epoch", "train_loss", "val_loss"}`` and best means minimal
    validation loss (earliest epoch on ties).
    """
    n = len(sequences)
    if n == 0:
        raise ValueError("empty training set")
    labels = np.asarray(labels)
    rng = np.random.default_rng(cfg.seed)
    perm = rng.permutation(n)
    n_val = max(1, int(round(cfg.val_fraction * n))) if n > 1 else 0
    val_idx = perm[:n_val]
    train_idx = perm[n_val:]
    if train_idx.size == 0:
        train_idx = val_idx
    opt = Adam(params, cfg.lr)
    metrics = []
    best_val = np.inf
    best_params = params.copy()

    def eval_loss(idx) -> float:
        if idx.size == 0:
            return float("nan")
        total = 0.0
        for start in range(0, idx.size, cfg.batch_size):
            part = idx[start : start + cfg.batch_size]
            ids = pad_batch([sequences[i] for i in part])
            loss, _ = classifier_loss(params, ids, labels[part],
                                      compute_grads=False)
            total += loss * part.size
        return total / idx.size

    for epoch in range(cfg.epochs):
        order = rng.permutation(train_idx)
        epoch_loss = 0.0
        for start in range(0, order.size, cfg.batch_size):
            part = order[start : start + cfg.batch_size]
            ids = pad_batch([sequences[i] for i in part])
            loss, grads = classifier_loss(params, ids, labels[part])
            opt.step(grads)
            epoch_loss += loss * part.size
        val_loss = eval_loss(val_idx)
        metrics.append({
            "epoch": epoch,
            "train_loss": epoch_loss / order.size,
            "val_loss": val_loss,
        })
        if n_val and val_loss < best_val:
            best_val = val_loss
            best_params = params.copy()
    if not n_val:
        best_params = params.copy()
    return best_params, metrics


# ---------------------------------------------------------------------------
# siamese pair training

def sample_negatives(positives, lemma_ids, seed: int) -> list[str]:
    """One uniformly drawn negative lemma per positive, never the truth."""
    if len(lemma_ids) < 2:
        raise ValueError("library must contain more than one lemma")
    rng = np.random.default_rng(seed)
    out = []
    for _, truth in positives:
        while True:
            cand = lemma_ids[int(rng.integers(len(lemma_ids)))]
            if cand != truth:
                out.append(cand)
                break
    return out


def siamese_train(params: EncoderParameters, positives, lemma_sequences,
                  cfg: TrainConfig):
    """Fit the shared encoder on {1,0}-labeled (sequent, lemma) pairs.

    ``positives`` is a list of (sequent id sequence, lemma id string);
    ``lemma_sequences`` maps lemma id to its encoded statement. Returns
    (params, per-epoch mean losses, sampled negative lemma ids).
    """
    if not positives:
        raise ValueError("no positive pairs")
    lemma_ids = sorted(lemma_sequences)
    negatives = sample_negatives(positives, lemma_ids, cfg.seed)
    pairs = []
    for (seq, truth), neg in zip(positives, negatives):
        pairs.append((seq, lemma_sequences[truth], 1.0))
        pairs.append((seq, lemma_sequences[neg], 0.0))
    rng = np.random.default_rng(cfg.seed + 1)
    opt = Adam(params, cfg.lr)
    epoch_losses = []
    for _ in range(cfg.epochs):
        order = rng.permutation(len(pairs))
        total = 0.0
        for start in range(0, order.size, cfg.batch_size):
            part = order[start : start + cfg.batch_size]
            seq_ids = pad_batch([pairs[i][0] for i in part])
            lem_ids = pad_batch([pairs[i][1] for i in part])
            y = np.asarray([pairs[i][2] for i in part])
            loss, grads = siamese_loss(params, seq_ids, lem_ids, y)
            opt.step(grads)
            total += loss * part.size
        epoch_losses.append(total / len(pairs))
    return params, epoch_losses, negatives
