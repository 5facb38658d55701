"""Result ranking head and its two training losses.

An impression's image is represented by the mean embedding of its caption's
non-PAD tokens. The query side projects [query_vec ++ session_vec] with a
learned affine map into embedding space; the relevance score is the cosine
between the two (the projection resolves the dimension mismatch between the
concatenated encoder state and the caption representation).

Losses over the score vector of one query's impressions:
- cross-entropy: mean binary cross-entropy of sigmoid(score) against clicks;
- preference pairs: RankNet-style log loss over ordered pairs with exactly
  one click, normalized by 1/m^2 (pairs where both or neither side was
  clicked contribute nothing).
"""

from __future__ import annotations

import numpy as np

from .autodiff import (
    Parameter, Tensor, add, affine, concat, cosine, embedding_lookup, log,
    neg, scale, sigmoid, sub,
)
from .corpus import PAD_ID
from .encoder import uniform_init

RANKER_OFF = "off"
RANKER_CE = "ce"
RANKER_PAIRWISE = "ro"
RANKER_CHOICES = (RANKER_OFF, RANKER_CE, RANKER_PAIRWISE)


def image_repr(caption_tokens, embeddings: Parameter) -> Tensor:
    """Mean embedding over non-PAD caption tokens; zero vector if all PAD."""
    real = [t for t in caption_tokens if t != PAD_ID]
    if not real:
        return Tensor(np.zeros(embeddings.data.shape[1]))
    acc = None
    for t in real:
        row = embedding_lookup(embeddings, t)
        acc = row if acc is None else add(acc, row)
    return scale(acc, 1.0 / len(real))


class Ranker:
    def __init__(self, query_dim: int, session_dim: int, emb_dim: int, rng,
                 name: str = "rank"):
        self.W = Parameter(
            uniform_init(rng, (emb_dim, query_dim + session_dim), emb_dim), name + ".W")
        self.b = Parameter(np.zeros(emb_dim), name + ".b")

    def parameters(self):
        return [self.W, self.b]

    def project(self, query_vec: Tensor, session_vec: Tensor) -> Tensor:
        return affine(concat(query_vec, session_vec), self.W, self.b)

    def score_impressions(self, query_vec: Tensor, session_vec: Tensor,
                          caption_reprs) -> list[Tensor]:
        """Scalar cosine score per impression, in impression order."""
        proj = self.project(query_vec, session_vec)
        return [cosine(proj, rep) for rep in caption_reprs]


def ce_rank_loss(scores, clicked) -> Tensor:
    """Mean BCE of sigmoid(score) against the click labels."""
    if len(scores) != len(clicked) or not scores:
        raise ValueError("scores and labels must align and be non-empty")
    total = None
    for s, r in zip(scores, clicked):
        # -log sigmoid(s) for clicks, -log sigmoid(-s) otherwise
        term = neg(log(sigmoid(s if r else neg(s))))
        total = term if total is None else add(total, term)
    return scale(total, 1.0 / len(scores))


def pairwise_rank_loss(scores, clicked) -> Tensor:
    """Preference log loss over ordered pairs with exactly one click.

    Both orderings of a clicked/unclicked pair contribute the same value
    log sigmoid(s_clicked - s_unclicked), so each unordered pair is computed
    once and counted twice; normalization stays 1/m^2 over all ordered pairs.
    """
    if len(scores) != len(clicked) or not scores:
        raise ValueError("scores and labels must align and be non-empty")
    m = len(scores)
    pos = [j for j, r in enumerate(clicked) if r]
    negs = [j for j, r in enumerate(clicked) if not r]
    if not pos or not negs:
        return Tensor(np.asarray(0.0))
    total = None
    for j in pos:
        for k in negs:
            term = log(sigmoid(sub(scores[j], scores[k])))
            total = term if total is None else add(total, term)
    return scale(total, -2.0 / (m * m))


def multitask_loss(gen_loss: Tensor, rank_loss: Tensor, alpha: float) -> Tensor:
    """alpha * generation loss + (1 - alpha) * ranking loss."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1], got %r" % alpha)
    return add(scale(gen_loss, alpha), scale(rank_loss, 1.0 - alpha))
