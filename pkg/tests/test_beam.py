"""Beam search against greedy decoding and exhaustive enumeration."""

import itertools
import math

import numpy as np
import pytest

from reformulator.beam import Hypothesis, beam_search, greedy_decode
from reformulator.corpus import PAD_ID


def random_markov_step(vocab, seed, order_window=3):
    """Step function whose distribution depends on the recent token history.

    State is the token history tuple, so the process is deterministic in the
    sequence alone and can be scored exactly from outside the search.
    """
    def step_fn(prev_token, state):
        history = state + (prev_token,)
        key = abs(hash((seed,) + history[-order_window:])) % (2 ** 32)
        logits = np.random.default_rng(key).standard_normal(vocab)
        logp = logits - math.log(np.sum(np.exp(logits)))
        return logp, history
    return step_fn


def sequence_score(step_fn, tokens, bos_id=1):
    total = 0.0
    state = ()
    prev = bos_id
    for tok in tokens:
        logp, state = step_fn(prev, state)
        total += float(logp[tok])
        prev = tok
    return total


class TestWidthOne:
    @pytest.mark.parametrize("seed", range(10))
    def test_matches_greedy_exactly(self, seed):
        step_fn = random_markov_step(vocab=7, seed=seed)
        greedy = greedy_decode(step_fn, (), max_len=6)
        beam = beam_search(step_fn, (), width=1, max_len=6)
        assert len(beam) == 1
        assert beam[0].tokens == greedy.tokens
        assert beam[0].logprob == greedy.logprob


class TestBeamProperties:
    @pytest.mark.parametrize("seed", range(5))
    def test_ordering_distinctness_and_greedy_bound(self, seed):
        step_fn = random_markov_step(vocab=6, seed=seed)
        hyps = beam_search(step_fn, (), width=4, max_len=5)
        greedy = greedy_decode(step_fn, (), max_len=5)
        lps = [h.logprob for h in hyps]
        assert lps == sorted(lps, reverse=True)
        assert len({h.tokens for h in hyps}) == len(hyps)
        assert hyps[0].logprob >= greedy.logprob - 1e-12

    def test_logprob_is_sum_of_step_terms(self):
        step_fn = random_markov_step(vocab=6, seed=42)
        for h in beam_search(step_fn, (), width=4, max_len=5):
            want = sequence_score(step_fn, h.tokens)
            assert abs(h.logprob - want) < 1e-12

    def test_pad_terminates_and_is_kept(self):
        # rigged step: PAD is near-certain from the start
        def step_fn(prev_token, state):
            logp = np.full(5, -20.0)
            logp[PAD_ID] = math.log(1.0 - 4 * math.exp(-20.0))
            return logp, state
        hyps = beam_search(step_fn, (), width=2, max_len=8)
        assert hyps[0].tokens[-1] == PAD_ID
        assert len(hyps[0].tokens) == 1

    def test_deterministic_across_calls(self):
        step_fn = random_markov_step(vocab=6, seed=9)
        a = beam_search(step_fn, (), width=3, max_len=5)
        b = beam_search(step_fn, (), width=3, max_len=5)
        assert [(h.tokens, h.logprob) for h in a] == \
            [(h.tokens, h.logprob) for h in b]


class TestExhaustive:
    @pytest.mark.parametrize("seed", range(4))
    def test_width_25_recovers_all_length_2_sequences(self, seed):
        """With the beam wide enough to hold every candidate, the search must
        return exactly the enumeration order of all terminated sequences."""
        vocab, max_len = 5, 2
        step_fn = random_markov_step(vocab=vocab, seed=100 + seed)
        hyps = beam_search(step_fn, (), width=25, max_len=max_len)

        complete = []
        for t1 in range(vocab):
            if t1 == PAD_ID:
                complete.append(((t1,), sequence_score(step_fn, (t1,))))
                continue
            for t2 in range(vocab):
                seq = (t1, t2)
                complete.append((seq, sequence_score(step_fn, seq)))
        complete.sort(key=lambda p: (-p[1], p[0]))

        got = [(h.tokens, h.logprob) for h in hyps]
        assert len(got) == len(complete)
        for (gt, gl), (wt, wl) in zip(got, complete):
            assert gt == wt
            assert abs(gl - wl) < 1e-12


class TestValidation:
    def test_bad_width_and_max_len(self):
        step_fn = random_markov_step(vocab=5, seed=0)
        with pytest.raises(ValueError):
            beam_search(step_fn, (), width=0, max_len=3)
        with pytest.raises(ValueError):
            beam_search(step_fn, (), width=2, max_len=0)

    def test_hypothesis_repr(self):
        assert "Hypothesis" in repr(Hypothesis((4, 0), -1.25))
