"""Text-overlap, embedding-similarity, and ranking metrics."""

import math

import numpy as np
import pytest

from reformulator.config import desk_config
from reformulator.metrics import (
    Descriptiveness, bleu, descriptiveness, diversity, evaluate_model,
    load_stopwords, mrr, rank_of_first_click, sim_emb, vector_extrema,
)
from reformulator.model import ReformulationModel

UNIFORM_MRR_BASELINE = sum(1.0 / r for r in range(1, 11)) / 10.0

# candidate one word short of the reference: all precisions 1, brevity
# penalty exp(1 - 4/3)
BLEU_THREE_OF_FOUR = 100.0 * math.exp(-1.0 / 3.0)


def bleu_oracle(cand, ref):
    """List-scan BLEU recomputation, shaped differently from the library."""
    cand, ref = list(cand), list(ref)
    if not cand:
        return 0.0
    max_n = min(4, len(cand))
    log_precisions = []
    for n in range(1, max_n + 1):
        c_ngrams = [tuple(cand[i:i + n]) for i in range(len(cand) - n + 1)]
        r_ngrams = [tuple(ref[i:i + n]) for i in range(len(ref) - n + 1)]
        m = sum(min(c_ngrams.count(g), r_ngrams.count(g))
                for g in set(c_ngrams))
        t = len(c_ngrams)
        if n >= 2:
            m, t = m + 1, t + 1
        if m == 0:
            return 0.0
        log_precisions.append(math.log(m / t))
    geo = math.exp(sum(log_precisions) / max_n)
    bp = 1.0 if len(cand) > len(ref) else math.exp(1.0 - len(ref) / len(cand))
    return 100.0 * bp * geo


class TestBleu:
    def test_identity_is_100(self):
        assert abs(bleu([4, 5, 6, 7, 8], [4, 5, 6, 7, 8]) - 100.0) < 1e-9

    def test_disjoint_is_zero(self):
        assert bleu([4, 5, 6], [7, 8, 9]) == 0.0

    def test_three_word_prefix_of_four(self):
        assert abs(bleu([4, 5, 6], [4, 5, 6, 7]) - BLEU_THREE_OF_FOUR) < 1e-12

    def test_empty_candidate_zero(self):
        assert bleu([], [4, 5]) == 0.0

    def test_empty_reference_rejected(self):
        with pytest.raises(ValueError):
            bleu([4, 5], [])

    def test_longer_candidate_has_no_brevity_penalty(self):
        # same matches, candidate longer than reference: BP stays 1
        score = bleu([4, 5, 6, 7, 9], [4, 5, 6, 7])
        assert score == pytest.approx(bleu_oracle([4, 5, 6, 7, 9], [4, 5, 6, 7]))

    def test_against_oracle_on_random_instances(self):
        rng = np.random.default_rng(12)
        for _ in range(100):
            cand = list(rng.integers(4, 12, rng.integers(1, 9)))
            ref = list(rng.integers(4, 12, rng.integers(1, 9)))
            assert abs(bleu(cand, ref) - bleu_oracle(cand, ref)) < 1e-6


class TestSimEmb:
    @pytest.fixture
    def emb(self):
        return np.random.default_rng(5).standard_normal((10, 6))

    def test_extrema_picks_largest_magnitude_per_dim(self, emb):
        got = vector_extrema([4, 7, 9], emb)
        rows = emb[[4, 7, 9]]
        for d in range(6):
            col = rows[:, d]
            assert got[d] == col[np.argmax(np.abs(col))]

    def test_identical_single_words(self, emb):
        assert abs(sim_emb([5], [5], emb) - 100.0) < 1e-9

    def test_orthogonal_extrema(self):
        emb = np.zeros((6, 2))
        emb[4] = [1.0, 0.0]
        emb[5] = [0.0, 1.0]
        assert sim_emb([4], [5], emb) == 0.0

    def test_symmetry(self, emb):
        a, b = [4, 6], [7, 8, 9]
        assert abs(sim_emb(a, b, emb) - sim_emb(b, a, emb)) < 1e-12

    def test_pads_stripped_and_empty_scores_zero(self, emb):
        assert sim_emb([4, 0, 0], [4], emb) == sim_emb([4], [4], emb)
        assert sim_emb([0, 0], [4], emb) == 0.0

    def test_against_hand_cosine(self, emb):
        a, b = [4, 6, 8], [5, 7]
        va, vb = vector_extrema(a, emb), vector_extrema(b, emb)
        want = 100.0 * float(va @ vb) / (
            math.sqrt(float(va @ va)) * math.sqrt(float(vb @ vb)))
        assert abs(sim_emb(a, b, emb) - want) < 1e-9


class TestRanks:
    def test_rank_of_first_click_basic(self):
        scores = [0.1, 0.9, 0.5]
        assert rank_of_first_click(scores, [False, True, False]) == 1
        assert rank_of_first_click(scores, [True, False, False]) == 3
        assert rank_of_first_click(scores, [False, False, False]) is None

    def test_ties_keep_impression_order(self):
        assert rank_of_first_click([0.5, 0.5, 0.5], [False, True, False]) == 2

    def test_mrr_frozen_values(self):
        assert mrr([1, 1, 1]) == 1.0
        assert mrr([2, 4]) == 0.375

    def test_mrr_uniform_rank_baseline(self):
        ranks = np.random.default_rng(0).integers(1, 11, 100_000)
        assert abs(mrr(ranks) - UNIFORM_MRR_BASELINE) < 0.01

    def test_moving_first_click_up_raises_mrr(self):
        assert mrr([3, 5]) < mrr([2, 5]) < mrr([1, 5])

    def test_mrr_empty_rejected(self):
        with pytest.raises(ValueError):
            mrr([])


class TestDiversity:
    @pytest.fixture
    def emb(self):
        return np.random.default_rng(8).standard_normal((12, 5))

    def test_identical_candidates_score_zero(self, emb):
        assert abs(diversity([[4, 5], [4, 5], [4, 5]], emb)) < 1e-12

    def test_orthogonal_pair_scores_one(self):
        emb = np.zeros((6, 2))
        emb[4] = [1.0, 0.0]
        emb[5] = [0.0, 1.0]
        assert diversity([[4], [5]], emb) == 1.0

    def test_matches_pairwise_oracle(self, emb):
        cands = [[4, 6], [5, 7, 9], [8]]
        total = 0.0
        for i in range(3):
            for j in range(3):
                if i != j:
                    total += sim_emb(cands[i], cands[j], emb) / 100.0
        want = 1.0 - total / 6.0
        assert abs(diversity(cands, emb) - want) < 1e-12

    def test_permutation_invariance(self, emb):
        cands = [[4, 6], [5, 7, 9], [8], [10, 11]]
        a = diversity(cands, emb)
        b = diversity([cands[2], cands[0], cands[3], cands[1]], emb)
        assert abs(a - b) < 1e-12

    def test_fewer_than_two_rejected(self, emb):
        with pytest.raises(ValueError):
            diversity([[4, 5]], emb)


class TestDescriptiveness:
    @pytest.fixture
    def emb(self):
        return np.random.default_rng(3).standard_normal((12, 4))

    def test_identity_has_no_turnover(self, emb):
        d = descriptiveness([4, 5], [4, 5], frozenset(), emb)
        assert (d.n_novel, d.n_dropped) == (0, 0)
        assert d.insert_drop_sim is None

    def test_pure_insertion(self, emb):
        d = descriptiveness([4, 5], [4, 5, 6], frozenset(), emb)
        assert (d.n_generated, d.n_novel, d.n_dropped) == (3, 1, 0)
        assert d.insert_drop_sim is None

    def test_stopwords_removed_before_counting(self, emb):
        d = descriptiveness([4, 5], [7, 5], frozenset({4, 7}), emb)
        assert (d.n_generated, d.n_novel, d.n_dropped) == (1, 0, 0)

    def test_insert_drop_sim_matches_pair_mean(self, emb):
        d = descriptiveness([4, 5, 6], [4, 7, 8], frozenset(), emb)
        assert sorted([5, 6]) == [5, 6] and (d.n_novel, d.n_dropped) == (2, 2)
        sims = []
        for a in [7, 8]:
            for b in [5, 6]:
                u, v = emb[a], emb[b]
                sims.append(float(u @ v) / (np.linalg.norm(u) * np.linalg.norm(v)))
        assert abs(d.insert_drop_sim - np.mean(sims)) < 1e-12

    def test_pads_ignored(self, emb):
        d = descriptiveness([4, 0, 0], [4, 5, 0], frozenset(), emb)
        assert (d.n_generated, d.n_novel, d.n_dropped) == (2, 1, 0)

    def test_dataclass_shape(self):
        d = Descriptiveness(3, 1, 0, None)
        assert d.n_generated == 3


class TestStopwords:
    def test_packaged_list_loads(self):
        words = load_stopwords()
        assert "the" in words and "of" in words
        assert all(w == w.lower() for w in words)

    def test_custom_path(self, tmp_path):
        p = tmp_path / "sw.txt"
        p.write_text("alpha\nbeta\n")
        assert load_stopwords(p) == frozenset({"alpha", "beta"})


class TestEvaluateModel:
    def test_deterministic_and_reference_fields(self, tiny_corpus, tiny_config):
        sessions, vocab = tiny_corpus
        cfg = tiny_config(ranker="ce")
        a = evaluate_model(ReformulationModel(vocab, cfg), sessions, beam_width=2)
        b = evaluate_model(ReformulationModel(vocab, cfg), sessions, beam_width=2)
        assert a.to_json() == b.to_json()
        assert a.n_queries == sum(len(s.queries) for s in sessions)
        assert a.mrr is not None
        assert a.diversity is not None
        assert a.beam_width == 2

    def test_width_one_has_no_diversity(self, tiny_corpus, tiny_config):
        sessions, vocab = tiny_corpus
        model = ReformulationModel(vocab, tiny_config())
        report = evaluate_model(model, sessions, beam_width=1)
        assert report.diversity is None
        assert report.mrr is None  # no ranking head

    def test_agg_mean_at_width_one_equals_max(self, tiny_corpus, tiny_config):
        sessions, vocab = tiny_corpus
        model = ReformulationModel(vocab, tiny_config())
        a = evaluate_model(model, sessions, beam_width=1, candidate_agg="max")
        b = evaluate_model(model, sessions, beam_width=1, candidate_agg="mean")
        assert a.bleu_pct == b.bleu_pct
        assert a.sim_emb_pct == b.sim_emb_pct

    def test_bad_agg_rejected(self, tiny_corpus, tiny_config):
        sessions, vocab = tiny_corpus
        model = ReformulationModel(vocab, tiny_config())
        with pytest.raises(ValueError):
            evaluate_model(model, sessions, beam_width=1, candidate_agg="sum")

    def test_report_serializations(self, tiny_corpus, tiny_config):
        sessions, vocab = tiny_corpus
        model = ReformulationModel(vocab, tiny_config())
        report = evaluate_model(model, sessions, beam_width=2)
        text = report.to_text()
        assert "bleu_pct" in text and text.endswith("\n")
        assert '"candidate_agg"' in report.to_json()
        assert report.to_dict()["beam_width"] == 2
