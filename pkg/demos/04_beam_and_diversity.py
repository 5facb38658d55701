"""How beam width trades relevance against variety.

Trains a small next-query model, then sweeps the beam width: width 1 must
match greedy decoding exactly, and as the width grows the candidate pool's
mean similarity to the reference drops while its internal diversity rises
and flattens.
"""

from reformulator.config import desk_config
from reformulator.corpus import (
    build_vocabulary, encode_sessions, iter_token_lists, split_dataset,
    strip_pads,
)
from reformulator.metrics import evaluate_model
from reformulator.synth import SynthConfig, synth_generate
from reformulator.train import train_model

cfg = desk_config(max_epochs=5, patience=2, seed=1)

raw = synth_generate(SynthConfig(n_sessions=200, seed=7))
train_raw, val_raw, test_raw = split_dataset(raw, cfg.seed)
vocab = build_vocabulary(iter_token_lists(train_raw), cfg.vocab_cap)
model, _, _ = train_model(cfg, encode_sessions(train_raw, vocab),
                          encode_sessions(val_raw, vocab), vocab)
test_s = encode_sessions(test_raw, vocab)

# width 1 is greedy decoding, bit for bit
session = test_s[0]
_, session_vec = model.encode_session(session)[0]
beam1 = model.generate_from_vec(session_vec, 1)[0]
greedy = model.greedy_from_vec(session_vec)
assert beam1.tokens == greedy.tokens and beam1.logprob == greedy.logprob
print("width 1 == greedy: %r (logprob %.3f)" % (beam1.tokens, beam1.logprob))

print("\ntop-3 candidates for the same prefix:")
for h in model.generate_from_vec(session_vec, 3):
    words = " ".join(vocab.word_of(t) for t in strip_pads(h.tokens)) or "<stop>"
    print("  %-32r logprob %.3f" % (words, h.logprob))

print("\nwidth  mean sim_emb  diversity")
for width in (1, 2, 3, 5):
    report = evaluate_model(model, test_s, beam_width=width, candidate_agg="mean")
    div = "%.3f" % report.diversity if report.diversity is not None else "  -  "
    print("  %d      %7.2f     %s" % (width, report.sim_emb_pct, div))
