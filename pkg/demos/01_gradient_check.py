"""Verify the analytic gradients of every building block numerically.

Walks up the stack: a single tensor operation, one LSTM cell step, the
bidirectional query encoder with attention, and finally every full training
loss variant the way `reformulator grad-check` exercises them.
"""

import numpy as np

from reformulator.autodiff import Parameter, affine, grad_check, sum_all, tanh
from reformulator.cli import run_grad_checks
from reformulator.config import desk_config
from reformulator.encoder import LSTMCell, QueryEncoder

rng = np.random.default_rng(0)

# 1. one primitive: sum(tanh(W x + b))
W = Parameter(rng.standard_normal((4, 3)), "W")
b = Parameter(rng.standard_normal(4), "b")
x = Parameter(rng.standard_normal(3), "x")
err = grad_check(lambda: sum_all(tanh(affine(x, W, b))), [W, b, x])
print("affine+tanh      max relative error %.2e" % err)

# 2. one LSTM cell step
cell = LSTMCell(3, 4, rng, "cell")
h0, c0 = cell.zero_state()
err = grad_check(lambda: sum_all(cell.step(x, h0, c0)[0]), cell.parameters() + [x])
print("LSTM cell step   max relative error %.2e" % err)

# 3. the query encoder (BiLSTM + attention) over a short token sequence
E = Parameter(rng.standard_normal((10, 3)), "emb")
enc = QueryEncoder(emb_dim=3, hidden=4, attn_dim=3, rng=rng)
err = grad_check(lambda: sum_all(enc.encode([4, 7, 5], E)[1]),
                 enc.parameters() + [E])
print("query encoder    max relative error %.2e" % err)

# 4. all five training-loss variants, exactly as the CLI checks them
print("\nfull losses (tolerance 1e-4):")
cfg = desk_config(emb_dim=5, query_hidden=3, session_hidden=6,
                  decoder_hidden=4, attn_dim=4, vocab_cap=80, seed=3)
for name, err in run_grad_checks(cfg):
    print("  %-14s max relative error %.2e  %s"
          % (name, err, "ok" if err < 1e-4 else "FAIL"))
