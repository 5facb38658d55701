"""Hierarchical session encoding.

QueryEncoder: bidirectional LSTM over the (padded) query tokens with an
additive attention summary. SessionEncoder: unidirectional LSTM over the
per-query summaries whose running output is a dimension-wise max-pool over
the hidden states emitted so far, so the session vector after query i never
depends on later queries and is monotone per dimension.
"""

from __future__ import annotations

import numpy as np

from .autodiff import (
    Parameter, Tensor, add, affine, concat, dot, embedding_lookup,
    max_over_rows, mul, pick, scale_by, sigmoid, slice1d, softmax,
    stack_rows, stack_scalars, tanh,
)
from .corpus import PAD_ID


def uniform_init(rng, shape, hidden):
    k = 1.0 / np.sqrt(hidden)
    return rng.uniform(-k, k, size=shape)


class LSTMCell:
    """Single LSTM cell; the four gates share one stacked affine [i, f, o, g].

    Initialization: uniform(-k, k) with k = 1/sqrt(hidden); forget-gate bias
    starts at 1.0 so early training does not wipe the cell state.
    """

    def __init__(self, input_size: int, hidden_size: int, rng, name: str):
        self.input_size = input_size
        self.hidden_size = hidden_size
        h = hidden_size
        self.W = Parameter(uniform_init(rng, (4 * h, input_size + h), h), name + ".W")
        b = np.zeros(4 * h)
        b[h:2 * h] = 1.0
        self.b = Parameter(b, name + ".b")

    def parameters(self):
        return [self.W, self.b]

    def zero_state(self):
        z = np.zeros(self.hidden_size)
        return Tensor(z), Tensor(z.copy())

    def step(self, x: Tensor, h: Tensor, c: Tensor):
        hs = self.hidden_size
        z = affine(concat(x, h), self.W, self.b)
        gates = sigmoid(slice1d(z, 0, 3 * hs))
        i = slice1d(gates, 0, hs)
        f = slice1d(gates, hs, 2 * hs)
        o = slice1d(gates, 2 * hs, 3 * hs)
        g = tanh(slice1d(z, 3 * hs, 4 * hs))
        c2 = add(mul(f, c), mul(i, g))
        h2 = mul(o, tanh(c2))
        return h2, c2


class QueryEncoder:
    """BiLSTM + additive attention over one padded query.

    encode() returns (H, query_vec): H is the (T, 2*hidden) matrix of
    concatenated directional states for every position (padding included);
    query_vec is the attention-weighted sum over non-PAD positions only.
    An all-PAD query yields a zero query_vec.
    """

    def __init__(self, emb_dim: int, hidden: int, attn_dim: int, rng, name: str = "qenc"):
        self.hidden = hidden
        self.fwd = LSTMCell(emb_dim, hidden, rng, name + ".fwd")
        self.bwd = LSTMCell(emb_dim, hidden, rng, name + ".bwd")
        d = 2 * hidden
        self.attn_W = Parameter(uniform_init(rng, (attn_dim, d), attn_dim), name + ".attn.W")
        self.attn_b = Parameter(np.zeros(attn_dim), name + ".attn.b")
        self.attn_u = Parameter(uniform_init(rng, (attn_dim,), attn_dim), name + ".attn.u")

    def parameters(self):
        return (self.fwd.parameters() + self.bwd.parameters()
                + [self.attn_W, self.attn_b, self.attn_u])

    @property
    def out_dim(self):
        return 2 * self.hidden

    def encode(self, token_ids, embeddings: Parameter):
        xs = [embedding_lookup(embeddings, t) for t in token_ids]
        T = len(xs)

        h, c = self.fwd.zero_state()
        fstates = []
        for t in range(T):
            h, c = self.fwd.step(xs[t], h, c)
            fstates.append(h)
        h, c = self.bwd.zero_state()
        bstates = [None] * T
        for t in range(T - 1, -1, -1):
            h, c = self.bwd.step(xs[t], h, c)
            bstates[t] = h

        rows = [concat(fstates[t], bstates[t]) for t in range(T)]
        H = stack_rows(rows)

        real = [t for t in range(T) if token_ids[t] != PAD_ID]
        if not real:
            return H, Tensor(np.zeros(self.out_dim))
        scores = [dot(self.attn_u, tanh(affine(rows[t], self.attn_W, self.attn_b)))
                  for t in real]
        alpha = softmax(stack_scalars(scores))
        query_vec = None
        for k, t in enumerate(real):
            term = scale_by(rows[t], pick(alpha, k))
            query_vec = term if query_vec is None else add(query_vec, term)
        return H, query_vec


class SessionState:
    """Running encoder state for one session (immutable per step)."""

    __slots__ = ("session_id", "h", "c", "states")

    def __init__(self, session_id, h, c, states):
        self.session_id = session_id
        self.h = h
        self.c = c
        self.states = states  # hidden states emitted so far


class SessionEncoder:
    """Unidirectional LSTM over query vectors with running max-pool output."""

    def __init__(self, input_dim: int, hidden: int, rng, name: str = "sess"):
        self.hidden = hidden
        self.cell = LSTMCell(input_dim, hidden, rng, name)

    def parameters(self):
        return self.cell.parameters()

    def start(self, session_id) -> SessionState:
        h, c = self.cell.zero_state()
        return SessionState(session_id, h, c, [])

    def step(self, state: SessionState, query_vec: Tensor, session_id):
        """Advance one query; returns (new_state, session_vec)."""
        if session_id != state.session_id:
            raise ValueError(
                "session state for %r used with session %r"
                % (state.session_id, session_id))
        h, c = self.cell.step(query_vec, state.h, state.c)
        states = state.states + [h]
        session_vec = max_over_rows(stack_rows(states))
        return SessionState(session_id, h, c, states), session_vec
