"""Evaluation metrics and the model evaluation driver.

- bleu: sentence-level BLEU (%), n-grams up to min(4, candidate length),
  add-one smoothing on orders >= 2, multiplicative brevity penalty.
- sim_emb: cosine of vector-extrema phrase embeddings (per dimension, the
  value of largest magnitude across the phrase's words, sign kept), in %.
- mrr: mean reciprocal rank of the first clicked impression.
- diversity: 1 - average pairwise sim_emb across a candidate set.
- descriptiveness: novel/dropped word counts after stopword removal, plus
  the mean cosine between inserted and dropped words.

evaluate_model runs beam decoding per query; with candidate_agg="max" the
per-query score is the best over the K candidates, with "mean" it is the
average over them (the two coincide at K=1).
"""

from __future__ import annotations

import importlib.resources
import json
from collections import Counter
from dataclasses import dataclass
from math import exp

import numpy as np

from .corpus import (
    EOSESS_ID, PAD_ID, REGIME_NEXT_QUERY, build_targets, strip_pads,
)

# ---------------------------------------------------------------------------
# BLEU


def _ngrams(tokens, n):
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def bleu(candidate, reference) -> float:
    """Sentence BLEU in percent. Empty candidate scores 0; empty reference is an error."""
    cand = list(candidate)
    ref = list(reference)
    if not ref:
        raise ValueError("BLEU reference must be non-empty")
    if not cand:
        return 0.0
    max_n = min(4, len(cand))
    log_sum = 0.0
    for n in range(1, max_n + 1):
        cand_counts = _ngrams(cand, n)
        ref_counts = _ngrams(ref, n)
        matches = sum(min(c, ref_counts[g]) for g, c in cand_counts.items())
        total = len(cand) - n + 1
        if n >= 2:  # add-one smoothing on higher orders
            matches += 1
            total += 1
        if matches == 0:
            return 0.0
        log_sum += np.log(matches / total)
    bp = 1.0 if len(cand) > len(ref) else exp(1.0 - len(ref) / len(cand))
    return 100.0 * bp * exp(log_sum / max_n)


# ---------------------------------------------------------------------------
# embedding-based similarity


def vector_extrema(token_ids, embeddings: np.ndarray) -> np.ndarray:
    """Per dimension, the value of largest magnitude across the words."""
    rows = embeddings[list(token_ids)]
    idx = np.argmax(np.abs(rows), axis=0)
    return rows[idx, np.arange(rows.shape[1])]


def _cosine(u, v) -> float:
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(u @ v) / (nu * nv)


def sim_emb(tokens_a, tokens_b, embeddings: np.ndarray) -> float:
    """Vector-extrema cosine similarity in percent; empty phrase scores 0."""
    a = strip_pads(tokens_a)
    b = strip_pads(tokens_b)
    if not a or not b:
        return 0.0
    return 100.0 * _cosine(vector_extrema(a, embeddings), vector_extrema(b, embeddings))


# ---------------------------------------------------------------------------
# ranking / candidate-set metrics


def rank_of_first_click(scores, clicked):
    """1-based rank of the first clicked impression under descending scores.

    Ties keep impression order. Returns None when nothing was clicked.
    """
    order = sorted(range(len(scores)), key=lambda j: (-scores[j], j))
    for pos, j in enumerate(order):
        if clicked[j]:
            return pos + 1
    return None


def mrr(first_click_ranks) -> float:
    ranks = list(first_click_ranks)
    if not ranks:
        raise ValueError("MRR of an empty rank list")
    return float(np.mean([1.0 / r for r in ranks]))


def diversity(candidates, embeddings: np.ndarray) -> float:
    """1 - mean pairwise sim_emb (as a fraction) over ordered candidate pairs."""
    K = len(candidates)
    if K < 2:
        raise ValueError("diversity needs at least 2 candidates")
    total = 0.0
    for i in range(K):
        for j in range(K):
            if i != j:
                total += sim_emb(candidates[i], candidates[j], embeddings) / 100.0
    return 1.0 - total / (K * (K - 1))


# ---------------------------------------------------------------------------
# descriptiveness


def load_stopwords(path=None) -> frozenset:
    if path is None:
        ref = importlib.resources.files("reformulator").joinpath("data/stopwords.txt")
        text = ref.read_text(encoding="utf-8")
    else:
        with open(path, encoding="utf-8") as f:
            text = f.read()
    return frozenset(w for w in text.split() if w)


@dataclass
class Descriptiveness:
    n_generated: int
    n_novel: int
    n_dropped: int
    insert_drop_sim: float | None


def descriptiveness(source_tokens, generated_tokens, stopword_ids,
                    embeddings: np.ndarray) -> Descriptiveness:
    """Content-word turnover between a query and its reformulation.

    Stopwords (given as token ids) and PAD are removed first. Novel words
    appear only in the reformulation, dropped words only in the query.
    insert_drop_sim is the mean cosine over all (novel, dropped) embedding
    pairs, or None when either set is empty.
    """
    src = [t for t in strip_pads(source_tokens) if t not in stopword_ids]
    gen = [t for t in strip_pads(generated_tokens) if t not in stopword_ids]
    novel = sorted(set(gen) - set(src))
    dropped = sorted(set(src) - set(gen))
    sim = None
    if novel and dropped:
        sims = [_cosine(embeddings[a], embeddings[b]) for a in novel for b in dropped]
        sim = float(np.mean(sims))
    return Descriptiveness(
        n_generated=len(gen), n_novel=len(novel), n_dropped=len(dropped),
        insert_drop_sim=sim)


# ---------------------------------------------------------------------------
# evaluation driver


@dataclass
class EvalReport:
    n_queries: int
    bleu_pct: float
    sim_emb_pct: float
    diversity: float | None
    mrr: float | None
    avg_generated_words: float
    avg_novel_words: float
    avg_dropped_words: float
    avg_insert_drop_sim: float | None
    beam_width: int
    candidate_agg: str

    def to_dict(self) -> dict:
        return {
            "n_queries": self.n_queries,
            "bleu_pct": self.bleu_pct,
            "sim_emb_pct": self.sim_emb_pct,
            "diversity": self.diversity,
            "mrr": self.mrr,
            "avg_generated_words": self.avg_generated_words,
            "avg_novel_words": self.avg_novel_words,
            "avg_dropped_words": self.avg_dropped_words,
            "avg_insert_drop_sim": self.avg_insert_drop_sim,
            "beam_width": self.beam_width,
            "candidate_agg": self.candidate_agg,
        }

    def to_text(self) -> str:
        lines = []
        for key, val in self.to_dict().items():
            if isinstance(val, float):
                lines.append("%s %.6f" % (key, val))
            else:
                lines.append("%s %s" % (key, val))
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def evaluate_model(model, sessions, beam_width: int, stopwords=None,
                   embeddings=None, candidate_agg: str = "max") -> EvalReport:
    """Evaluate generation and ranking over encoded sessions.

    The generation reference is always the next query's tokens (the
    end-of-session symbol for a session's final query), whatever regime the
    model was trained under. MRR is reported only for models with a ranking
    head, over queries with at least one click.
    """
    if candidate_agg not in ("max", "mean"):
        raise ValueError("candidate_agg must be 'max' or 'mean'")
    agg = max if candidate_agg == "max" else (lambda xs: sum(xs) / len(xs))
    if embeddings is None:
        embeddings = model.embeddings.data
    if stopwords is None:
        stopwords = load_stopwords()
    stopword_ids = frozenset(
        model.vocab.id_of(w) for w in stopwords if w in model.vocab)

    bleus, sims, divs, rrs = [], [], [], []
    gen_words, novel_words, dropped_words, ins_drop = [], [], [], []
    n_queries = 0
    for session in sessions:
        examples = build_targets(session, REGIME_NEXT_QUERY)
        encoded = model.encode_session(session)
        for ex, (query_vec, session_vec) in zip(examples, encoded):
            n_queries += 1
            reference = strip_pads(ex.target_tokens)
            if not reference:
                reference = [EOSESS_ID]
            hyps = model.generate_from_vec(session_vec, beam_width)
            cands = [strip_pads(h.tokens) for h in hyps]
            bleus.append(agg([bleu(c, reference) for c in cands]))
            sims.append(agg([sim_emb(c, reference, embeddings) for c in cands]))
            if len(cands) >= 2:
                divs.append(diversity(cands, embeddings))
            if model.has_ranker and ex.has_click:
                scores = model.score_example(query_vec, session_vec, ex.impressions)
                rank = rank_of_first_click(scores, [im.clicked for im in ex.impressions])
                rrs.append(1.0 / rank)
            desc = descriptiveness(ex.source_tokens, cands[0], stopword_ids, embeddings)
            gen_words.append(desc.n_generated)
            novel_words.append(desc.n_novel)
            dropped_words.append(desc.n_dropped)
            if desc.insert_drop_sim is not None:
                ins_drop.append(desc.insert_drop_sim)

    def fmean(xs):
        return float(np.mean(xs)) if xs else 0.0

    return EvalReport(
        n_queries=n_queries,
        bleu_pct=fmean(bleus),
        sim_emb_pct=fmean(sims),
        diversity=fmean(divs) if divs else None,
        mrr=fmean(rrs) if rrs else None,
        avg_generated_words=fmean(gen_words),
        avg_novel_words=fmean(novel_words),
        avg_dropped_words=fmean(dropped_words),
        avg_insert_drop_sim=fmean(ins_drop) if ins_drop else None,
        beam_width=beam_width,
        candidate_agg=candidate_agg,
    )
