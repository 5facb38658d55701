"""Shared fixtures: a small synthetic corpus and tiny model configs."""

import pytest

from reformulator.config import desk_config
from reformulator.corpus import build_vocabulary, encode_sessions, iter_token_lists
from reformulator.synth import SynthConfig, synth_generate

# dims small enough that every unit test is instant
TINY_DIMS = dict(emb_dim=5, query_hidden=3, session_hidden=6, decoder_hidden=4,
                 attn_dim=4, vocab_cap=80, seed=3)


def make_tiny_config(**overrides):
    merged = dict(TINY_DIMS)
    merged.update(overrides)
    return desk_config(**merged)


@pytest.fixture(scope="session")
def tiny_config():
    return make_tiny_config


@pytest.fixture(scope="session")
def tiny_corpus():
    """Six encoded synthetic sessions plus their vocabulary. Do not mutate."""
    sessions = synth_generate(SynthConfig(n_sessions=6, seed=11))
    vocab = build_vocabulary(iter_token_lists(sessions), TINY_DIMS["vocab_cap"])
    return encode_sessions(sessions, vocab), vocab
