"""Aggregate evaluation metrics over independent training seeds.

Single runs of small neural models are noisy, so claims about a variant
should be made on means over seeds. This script is the documented way to do
that with this package: train one model per seed per variant on the same
session log, evaluate each on its test split, and report mean and spread.

The same sweep works through the command line (`reformulator train --seed N`
writes per-seed checkpoints and reports); this script keeps it in one place.
"""

from statistics import mean, stdev

from reformulator.config import desk_config
from reformulator.corpus import (
    build_vocabulary, encode_sessions, iter_token_lists, split_dataset,
)
from reformulator.metrics import evaluate_model
from reformulator.synth import SynthConfig, synth_generate
from reformulator.train import train_model

SEEDS = (1, 2, 3)
VARIANTS = {"pairwise ranker": "ro", "cross-entropy ranker": "ce"}

raw = synth_generate(SynthConfig(n_sessions=200, seed=7))


def run(ranker: str, seed: int):
    cfg = desk_config(ranker=ranker, seed=seed, max_epochs=5, patience=2)
    train_raw, val_raw, test_raw = split_dataset(raw, cfg.seed)
    vocab = build_vocabulary(iter_token_lists(train_raw), cfg.vocab_cap)
    model, _, _ = train_model(cfg, encode_sessions(train_raw, vocab),
                              encode_sessions(val_raw, vocab), vocab)
    return evaluate_model(model, encode_sessions(test_raw, vocab),
                          beam_width=cfg.beam_width)


for label, ranker in VARIANTS.items():
    reports = [run(ranker, seed) for seed in SEEDS]
    mrrs = [r.mrr for r in reports]
    bleus = [r.bleu_pct for r in reports]
    print("%s (seeds %s):" % (label, ", ".join(map(str, SEEDS))))
    print("  test MRR  mean %.4f  sd %.4f  per-seed %s"
          % (mean(mrrs), stdev(mrrs), ["%.4f" % m for m in mrrs]))
    print("  test BLEU mean %.2f   sd %.2f" % (mean(bleus), stdev(bleus)))
