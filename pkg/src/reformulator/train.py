"""Training loop: session-grouped batching, early stopping on validation
loss, deterministic epoch shuffling, and best-weights restoration."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import RunConfig
from .corpus import Vocabulary, build_targets
from .errors import NumericError
from .model import ReformulationModel
from .optim import Adam


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float


def _prepare(sessions, regime):
    """Pair each session with its training examples; drop empty sessions."""
    items = []
    for s in sessions:
        examples = build_targets(s, regime)
        if examples:
            items.append((s, examples))
    return items


def _pack_batches(items, order, batch_size):
    """Greedily pack whole sessions until a batch holds >= batch_size examples."""
    batches = []
    cur, count = [], 0
    for idx in order:
        session, examples = items[idx]
        cur.append((session, examples))
        count += len(examples)
        if count >= batch_size:
            batches.append(cur)
            cur, count = [], 0
    if cur:
        batches.append(cur)
    return batches


def _combined_loss(model, gen_sum, n_gen, rank_sum, n_rank) -> float:
    """Per-example reporting loss: alpha-weighted mean generation + ranking."""
    gen = gen_sum / max(1, n_gen)
    if not model.has_ranker:
        return gen
    rank = rank_sum / n_rank if n_rank else 0.0
    alpha = model.config.alpha
    return alpha * gen + (1.0 - alpha) * rank


def dataset_loss(model, items) -> float:
    """Forward-only loss over [(session, examples)] with the reporting metric."""
    gen_sum = rank_sum = 0.0
    n_gen = n_rank = 0
    for session, examples in items:
        _, stats = model.batch_loss([(session, examples)])
        gen_sum += stats.gen_sum
        n_gen += stats.n_gen
        rank_sum += stats.rank_sum
        n_rank += stats.n_rank
    return _combined_loss(model, gen_sum, n_gen, rank_sum, n_rank)


def train_model(config: RunConfig, train_sessions, val_sessions,
                vocab: Vocabulary, log_path=None, pretrained_embeddings=None):
    """Train a model from scratch; returns (model, optimizer, history).

    The model is left holding the weights (and optimizer moments) of the best
    validation epoch. Early stopping tolerates `patience` consecutive
    non-improving epochs. Two runs with the same config and data produce
    identical histories and log files.
    """
    train_items = _prepare(train_sessions, config.regime)
    val_items = _prepare(val_sessions, config.regime)
    if not train_items:
        raise NumericError("no training examples under regime %r" % config.regime)

    model = ReformulationModel(vocab, config,
                               pretrained_embeddings=pretrained_embeddings)
    optimizer = Adam(model.parameters(), lr=config.lr)
    rng = np.random.default_rng(config.seed + 10_000)

    log = open(log_path, "w", encoding="utf-8") if log_path else None
    history: list[EpochRecord] = []
    best_val = float("inf")
    best_params = None
    best_moments = None
    bad_epochs = 0
    try:
        for epoch in range(1, config.max_epochs + 1):
            order = rng.permutation(len(train_items))
            gen_sum = rank_sum = 0.0
            n_gen = n_rank = 0
            for batch in _pack_batches(train_items, order, config.batch_size):
                stats = model.train_step(batch, optimizer)
                gen_sum += stats.gen_sum
                n_gen += stats.n_gen
                rank_sum += stats.rank_sum
                n_rank += stats.n_rank
            train_loss = _combined_loss(model, gen_sum, n_gen, rank_sum, n_rank)
            val_loss = dataset_loss(model, val_items) if val_items else train_loss
            if not (np.isfinite(train_loss) and np.isfinite(val_loss)):
                raise NumericError("non-finite loss at epoch %d" % epoch)
            history.append(EpochRecord(epoch, train_loss, val_loss))
            if log:
                log.write("%d\t%r\t%r\n" % (epoch, train_loss, val_loss))
                log.flush()

            if val_loss < best_val:
                best_val = val_loss
                best_params = {p.name: p.data.copy() for p in model.parameters()}
                best_moments = (optimizer.t,
                                [m.copy() for m in optimizer.m],
                                [v.copy() for v in optimizer.v])
                bad_epochs = 0
            else:
                bad_epochs += 1
                if bad_epochs > config.patience:
                    break
    finally:
        if log:
            log.close()

    if best_params is not None:
        for p in model.parameters():
            p.data[...] = best_params[p.name]
        optimizer.t = best_moments[0]
        optimizer.m = [m.copy() for m in best_moments[1]]
        optimizer.v = [v.copy() for v in best_moments[2]]
    return model, optimizer, history
