"""Train a small multitask model end to end and read its evaluation report.

Synthesizes a session log, trains the next-query generator jointly with the
preference-pair ranker for a few epochs, evaluates on the held-out test
split, and prints beam-decoded reformulations for one test session.
"""

from reformulator.config import desk_config
from reformulator.corpus import (
    build_vocabulary, encode_sessions, iter_token_lists, split_dataset,
    strip_pads,
)
from reformulator.metrics import evaluate_model
from reformulator.synth import SynthConfig, synth_generate
from reformulator.train import train_model

cfg = desk_config(ranker="ro", max_epochs=5, patience=2, seed=1)

raw = synth_generate(SynthConfig(n_sessions=200, seed=7))
train_raw, val_raw, test_raw = split_dataset(raw, cfg.seed)
vocab = build_vocabulary(iter_token_lists(train_raw), cfg.vocab_cap)
train_s = encode_sessions(train_raw, vocab)
val_s = encode_sessions(val_raw, vocab)
test_s = encode_sessions(test_raw, vocab)
print("%d train / %d val / %d test sessions, %d-word vocabulary"
      % (len(train_s), len(val_s), len(test_s), len(vocab)))

model, _, history = train_model(cfg, train_s, val_s, vocab)
for rec in history:
    print("epoch %d  train %.3f  val %.3f" % (rec.epoch, rec.train_loss, rec.val_loss))

report = evaluate_model(model, test_s, beam_width=cfg.beam_width)
print("\ntest report:")
print(report.to_text(), end="")

# A model this small mostly bets on the session ending (a third of all
# targets); the deeper beam candidates show the vocabulary it has learned.
print("\nbeam-decoded reformulations for one test session:")
session = test_s[0]
for q, (_, session_vec) in zip(session.queries, model.encode_session(session)):
    print("  after %r:" % q.text)
    for h in model.generate_from_vec(session_vec, cfg.beam_width):
        words = " ".join(vocab.word_of(t) for t in strip_pads(h.tokens))
        print("    %-32r logprob %.2f" % (words or "<stop>", h.logprob))
