"""Beam search over a step function.

The search is model-agnostic: step_fn(prev_token, state) returns the log
probabilities over the vocabulary for the next token plus the new state.
A hypothesis finishes when it emits PAD (kept, PAD included) or reaches
max_len. Finished hypotheses are held aside and compete at the final
selection, so a short high-score sequence is never lost to longer ones.

Determinism: candidate ties break toward the earlier parent hypothesis and
then the ascending token id, which makes width 1 identical to greedy decoding
with lowest-id tie-breaks.
"""

from __future__ import annotations

import numpy as np

from .corpus import BOS_ID, PAD_ID


class Hypothesis:
    __slots__ = ("tokens", "logprob")

    def __init__(self, tokens, logprob):
        self.tokens = tokens
        self.logprob = logprob

    def __repr__(self):
        return "Hypothesis(%r, %.4f)" % (list(self.tokens), self.logprob)


def beam_search(step_fn, init_state, width: int, max_len: int,
                bos_id: int = BOS_ID, pad_id: int = PAD_ID,
                length_normalize: bool = False) -> list[Hypothesis]:
    """Top `width` distinct sequences, sorted by log probability descending.

    Sequences include the terminating PAD when one was emitted, so a
    hypothesis' logprob always equals the sum of its per-token step log
    probabilities.
    """
    if width < 1:
        raise ValueError("beam width must be >= 1")
    if max_len < 1:
        raise ValueError("max_len must be >= 1")

    live = [((), 0.0, init_state)]
    finished: list[Hypothesis] = []
    for _ in range(max_len):
        if not live:
            break
        expansions = []
        for tokens, lp, state in live:
            prev = tokens[-1] if tokens else bos_id
            logp, new_state = step_fn(prev, state)
            expansions.append((tokens, lp, new_state, np.asarray(logp)))
        scores = np.concatenate([lp + logp for _, lp, _, logp in expansions])
        vocab = expansions[0][3].shape[0]
        take = min(width, scores.shape[0])
        # stable sort on -score: ties fall to earlier parent, then lower token id
        top = np.argsort(-scores, kind="stable")[:take]
        next_live = []
        for flat in top:
            parent = int(flat) // vocab
            tok = int(flat) % vocab
            tokens, lp, new_state, _ = expansions[parent]
            seq = tokens + (tok,)
            score = float(scores[flat])
            if tok == pad_id or len(seq) == max_len:
                finished.append(Hypothesis(seq, score))
            else:
                next_live.append((seq, score, new_state))
        live = next_live

    def sort_key(h: Hypothesis):
        s = h.logprob / len(h.tokens) if length_normalize else h.logprob
        return (-s, h.tokens)

    finished.sort(key=sort_key)
    return finished[:width]


def greedy_decode(step_fn, init_state, max_len: int,
                  bos_id: int = BOS_ID, pad_id: int = PAD_ID) -> Hypothesis:
    """Argmax decoding (lowest token id wins ties); PAD or max_len stops."""
    tokens = ()
    state = init_state
    total = 0.0
    prev = bos_id
    for _ in range(max_len):
        logp, state = step_fn(prev, state)
        tok = int(np.argmax(logp))
        tokens = tokens + (tok,)
        total += float(logp[tok])
        if tok == pad_id:
            break
        prev = tok
    return Hypothesis(tokens, total)
