"""Full reformulation model: shared embeddings, hierarchical encoder,
decoder, and optional ranking head, plus the per-batch training loss.

All six variants (supervision regime x ranker choice) are built from a
RunConfig alone. Query and session encodings are computed once per session
and shared by every example anchored in it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import Parameter, Tensor, add, backward, log_softmax, scale
from .beam import beam_search, greedy_decode
from .config import RunConfig
from .corpus import PAD_ID, TARGET_LEN, SessionRecord, Vocabulary, init_embeddings
from .decoder import Decoder, reform_loss, sequence_logprob, step_entropies
from .encoder import QueryEncoder, SessionEncoder
from .errors import NumericError
from .ranker import (
    RANKER_CE, RANKER_OFF, RANKER_PAIRWISE, Ranker, ce_rank_loss, image_repr,
    multitask_loss, pairwise_rank_loss,
)


@dataclass
class BatchStats:
    n_examples: int = 0
    gen_sum: float = 0.0
    n_gen: int = 0
    rank_sum: float = 0.0
    n_rank: int = 0


class ReformulationModel:
    def __init__(self, vocab: Vocabulary, config: RunConfig,
                 pretrained_embeddings=None):
        self.vocab = vocab
        self.config = config
        E = init_embeddings(vocab, config.emb_dim, config.seed,
                            pretrained_path=pretrained_embeddings)
        self.embeddings = Parameter(E, "emb")
        rng = np.random.default_rng(config.seed + 1)
        self.query_encoder = QueryEncoder(
            config.emb_dim, config.query_hidden, config.attn_dim, rng)
        self.session_encoder = SessionEncoder(
            self.query_encoder.out_dim, config.session_hidden, rng)
        self.decoder = Decoder(
            config.emb_dim, config.session_hidden, config.decoder_hidden,
            len(vocab), rng)
        self.ranker = None
        if config.ranker != RANKER_OFF:
            self.ranker = Ranker(
                self.query_encoder.out_dim, config.session_hidden,
                config.emb_dim, rng)

    # parameters ------------------------------------------------------------

    @property
    def has_ranker(self) -> bool:
        return self.ranker is not None

    def parameters(self) -> list[Parameter]:
        params = [self.embeddings]
        params += self.query_encoder.parameters()
        params += self.session_encoder.parameters()
        params += self.decoder.parameters()
        if self.ranker is not None:
            params += self.ranker.parameters()
        return params

    def named_parameters(self) -> dict[str, Parameter]:
        return {p.name: p for p in self.parameters()}

    def pin_pad_row(self):
        """Zero the PAD embedding row's gradient so the row never trains."""
        self.embeddings.grad[PAD_ID] = 0.0

    # encoding / decoding -----------------------------------------------------

    def encode_session(self, session: SessionRecord):
        """(query_vec, session_vec) for every query position, causally."""
        state = self.session_encoder.start(session.session_id)
        out = []
        for q in session.queries:
            if q.tokens is None:
                raise ValueError("session %s is not encoded" % session.session_id)
            _, query_vec = self.query_encoder.encode(q.tokens, self.embeddings)
            state, session_vec = self.session_encoder.step(
                state, query_vec, session.session_id)
            out.append((query_vec, session_vec))
        return out

    def _step_fn(self):
        def step(prev_token, state):
            logits, new_state = self.decoder.step_logits(
                prev_token, state, self.embeddings)
            return log_softmax(logits).data, new_state
        return step

    def generate_from_vec(self, session_vec: Tensor, width: int):
        return beam_search(
            self._step_fn(), self.decoder.init_state(session_vec),
            width=width, max_len=TARGET_LEN,
            length_normalize=self.config.beam_length_normalize)

    def greedy_from_vec(self, session_vec: Tensor):
        return greedy_decode(
            self._step_fn(), self.decoder.init_state(session_vec),
            max_len=TARGET_LEN)

    def sequence_logprob_from_vec(self, session_vec: Tensor, tokens) -> float:
        return sequence_logprob(
            self.decoder, session_vec, tokens, self.embeddings).item()

    def step_entropies_from_vec(self, session_vec: Tensor, target_tokens):
        return step_entropies(
            self.decoder, session_vec, target_tokens, self.embeddings)

    # losses ------------------------------------------------------------------

    def example_gen_loss(self, session_vec: Tensor, target_tokens) -> Tensor:
        return reform_loss(
            self.decoder, session_vec, target_tokens, self.embeddings,
            self.config.entropy_weight, self.config.entropy_mode)

    def example_rank_loss(self, query_vec: Tensor, session_vec: Tensor,
                          impressions) -> Tensor:
        reps = [image_repr(im.caption_tokens, self.embeddings) for im in impressions]
        scores = self.ranker.score_impressions(query_vec, session_vec, reps)
        clicked = [im.clicked for im in impressions]
        if self.config.ranker == RANKER_CE:
            return ce_rank_loss(scores, clicked)
        if self.config.ranker == RANKER_PAIRWISE:
            return pairwise_rank_loss(scores, clicked)
        raise ValueError("model has no ranking loss configured")

    def score_example(self, query_vec: Tensor, session_vec: Tensor,
                      impressions) -> list[float]:
        """Raw relevance score values per impression (evaluation path)."""
        reps = [image_repr(im.caption_tokens, self.embeddings) for im in impressions]
        scores = self.ranker.score_impressions(query_vec, session_vec, reps)
        return [s.item() for s in scores]

    def batch_loss(self, batch):
        """Combined loss node over [(session, examples)] plus value stats.

        Generation terms are summed over examples (config reform_reduction
        "mean" divides by the example count); ranking terms are averaged over
        the batch's click-bearing examples; the two combine through alpha.
        """
        gen_terms = []
        rank_terms = []
        n_examples = 0
        for session, examples in batch:
            encoded = self.encode_session(session)
            for ex in examples:
                query_vec, session_vec = encoded[ex.index]
                n_examples += 1
                if ex.target_tokens is not None:
                    gen_terms.append(self.example_gen_loss(session_vec, ex.target_tokens))
                if self.ranker is not None and ex.has_click:
                    rank_terms.append(self.example_rank_loss(
                        query_vec, session_vec, ex.impressions))
        if not gen_terms:
            raise ValueError("batch has no generation examples")

        gen = gen_terms[0]
        for t in gen_terms[1:]:
            gen = add(gen, t)
        if self.config.reform_reduction == "mean":
            gen = scale(gen, 1.0 / len(gen_terms))

        stats = BatchStats(
            n_examples=n_examples,
            gen_sum=float(sum(t.item() for t in gen_terms)),
            n_gen=len(gen_terms),
            rank_sum=float(sum(t.item() for t in rank_terms)),
            n_rank=len(rank_terms),
        )

        if self.ranker is None:
            total = gen
        else:
            if rank_terms:
                rank = rank_terms[0]
                for t in rank_terms[1:]:
                    rank = add(rank, t)
                rank = scale(rank, 1.0 / len(rank_terms))
            else:
                rank = Tensor(np.asarray(0.0))
            total = multitask_loss(gen, rank, self.config.alpha)
        if not np.isfinite(total.data):
            raise NumericError("non-finite batch loss")
        return total, stats

    def train_step(self, batch, optimizer):
        """One optimization step; returns the batch stats."""
        optimizer.zero_grad()
        loss, stats = self.batch_loss(batch)
        backward(loss)
        self.pin_pad_row()
        optimizer.step()
        return stats
