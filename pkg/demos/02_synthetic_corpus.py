"""Generate a synthetic session log and look at what is planted in it.

The generator writes themed search sessions: each query refines the previous
one, every query shows ten ranked images, and clicks are biased toward
captions that share the query's theme words. Those captions also carry extra
descriptive words that never appear in queries, so caption-supervised models
have something to pick up.
"""

from statistics import mean

from reformulator.corpus import load_sessions
from reformulator.synth import SynthConfig, summarize, synth_generate

UNIFORM_MRR = sum(1.0 / r for r in range(1, 11)) / 10.0  # random clicker

sessions = synth_generate(SynthConfig(n_sessions=300, seed=7))
summary = summarize(sessions)
for line in summary.lines():
    print(line)

print("\nuniform-click MRR would be %.4f; the planted bias gives %.4f"
      % (UNIFORM_MRR, summary.observed_mrr))

q_len = mean(len(q.text.split()) for s in sessions for q in s.queries)
c_len = mean(len(im.caption.split())
             for s in sessions for q in s.queries for im in q.impressions)
print("mean query length %.2f words, mean caption length %.2f words"
      % (q_len, c_len))

print("\none session, end to end:")
s = sessions[41]
for q in s.queries:
    clicked = [im for im in q.impressions if im.clicked]
    print("  query: %r" % q.text)
    for im in clicked:
        print("    clicked rank %d: %r" % (im.rank, im.caption))
