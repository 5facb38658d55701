"""Reformulation decoder.

A single-layer LSTM conditioned on the session vector through its initial
hidden state (tanh of a learned affine map; initial cell state is zero).
Each step embeds the previous token, advances the LSTM, and maps the hidden
state through a tanh layer to vocabulary logits.

The training loss is teacher-forced negative log-likelihood per step with an
entropy term on the step distribution. Steps after the target's first PAD are
masked out; the first PAD itself is trained as the stop symbol. The default
entropy mode subtracts lambda * H(P) from the loss (rewarding entropy, which
keeps the distribution from collapsing); mode "literal" adds it instead.
"""

from __future__ import annotations

import numpy as np

from .autodiff import (
    Parameter, Tensor, add, affine, embedding_lookup, exp, log_softmax, mul,
    neg, pick, scale, softmax, sub, sum_all, tanh,
)
from .corpus import BOS_ID, PAD_ID
from .encoder import LSTMCell, uniform_init

ENTROPY_REWARD = "reward"
ENTROPY_LITERAL = "literal"


class Decoder:
    def __init__(self, emb_dim: int, session_dim: int, hidden: int,
                 vocab_size: int, rng, name: str = "dec"):
        self.hidden = hidden
        self.vocab_size = vocab_size
        self.init_W = Parameter(uniform_init(rng, (hidden, session_dim), hidden), name + ".init.W")
        self.init_b = Parameter(np.zeros(hidden), name + ".init.b")
        self.cell = LSTMCell(emb_dim, hidden, rng, name + ".cell")
        self.head_W1 = Parameter(uniform_init(rng, (hidden, hidden), hidden), name + ".head.W1")
        self.head_b1 = Parameter(np.zeros(hidden), name + ".head.b1")
        self.head_W2 = Parameter(uniform_init(rng, (vocab_size, hidden), hidden), name + ".head.W2")
        self.head_b2 = Parameter(np.zeros(vocab_size), name + ".head.b2")

    def parameters(self):
        return ([self.init_W, self.init_b] + self.cell.parameters()
                + [self.head_W1, self.head_b1, self.head_W2, self.head_b2])

    def init_state(self, session_vec: Tensor):
        h0 = tanh(affine(session_vec, self.init_W, self.init_b))
        _, c0 = self.cell.zero_state()
        return h0, c0

    def step_logits(self, prev_token: int, state, embeddings: Parameter):
        x = embedding_lookup(embeddings, prev_token)
        h, c = self.cell.step(x, state[0], state[1])
        z = tanh(affine(h, self.head_W1, self.head_b1))
        logits = affine(z, self.head_W2, self.head_b2)
        return logits, (h, c)

    def step_distribution(self, prev_token: int, state, embeddings: Parameter):
        logits, state = self.step_logits(prev_token, state, embeddings)
        return softmax(logits), state


def active_steps(target_tokens) -> int:
    """Number of supervised steps: through the first PAD, or all of them."""
    for t, tok in enumerate(target_tokens):
        if tok == PAD_ID:
            return t + 1
    return len(target_tokens)


def reform_loss(decoder: Decoder, session_vec: Tensor, target_tokens,
                embeddings: Parameter, entropy_weight: float,
                entropy_mode: str = ENTROPY_REWARD) -> Tensor:
    """Teacher-forced NLL with an entropy term, summed over active steps."""
    if entropy_mode not in (ENTROPY_REWARD, ENTROPY_LITERAL):
        raise ValueError("unknown entropy mode %r" % entropy_mode)
    n = active_steps(target_tokens)
    state = decoder.init_state(session_vec)
    prev = BOS_ID
    loss = None
    for t in range(n):
        logits, state = decoder.step_logits(prev, state, embeddings)
        lp = log_softmax(logits)
        term = neg(pick(lp, target_tokens[t]))
        if entropy_weight != 0.0:
            entropy = neg(sum_all(mul(exp(lp), lp)))
            if entropy_mode == ENTROPY_REWARD:
                term = sub(term, scale(entropy, entropy_weight))
            else:
                term = add(term, scale(entropy, entropy_weight))
        loss = term if loss is None else add(loss, term)
        prev = target_tokens[t]
    return loss


def step_entropies(decoder: Decoder, session_vec: Tensor, target_tokens,
                   embeddings: Parameter) -> list[float]:
    """Teacher-forced per-step distribution entropies (diagnostics)."""
    n = active_steps(target_tokens)
    state = decoder.init_state(session_vec)
    prev = BOS_ID
    out = []
    for t in range(n):
        logits, state = decoder.step_logits(prev, state, embeddings)
        lp = log_softmax(logits).data
        out.append(float(-np.sum(np.exp(lp) * lp)))
        prev = target_tokens[t]
    return out


def sequence_logprob(decoder: Decoder, session_vec: Tensor, tokens,
                     embeddings: Parameter) -> Tensor:
    """Log-probability of emitting exactly `tokens` (teacher-forced)."""
    if not tokens:
        raise ValueError("sequence_logprob needs at least one token")
    state = decoder.init_state(session_vec)
    prev = BOS_ID
    total = None
    for tok in tokens:
        logits, state = decoder.step_logits(prev, state, embeddings)
        term = pick(log_softmax(logits), tok)
        total = term if total is None else add(total, term)
        prev = tok
    return total
