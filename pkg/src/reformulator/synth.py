"""Synthetic session-log generator.

Produces themed search sessions with planted, learnable structure:

- each session follows one theme; queries are short theme-word phrases and
  successive queries extend or perturb the previous one (so next-query
  prediction is learnable);
- impression captions are longer phrases; "relevant" captions reuse query
  words plus theme words and caption-only modifier words, "distractor"
  captions come from another theme;
- click probability is a rank-position bias times an overlap boost, so
  clicked impressions are overwhelmingly the ones sharing words with the
  query (ranking by query/caption similarity is learnable), and the observed
  click MRR sits well above the uniform-random baseline.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .corpus import (
    N_IMPRESSIONS, Impression, QueryEvent, SessionRecord, save_sessions,
)

# content words build queries and captions; modifier words appear in captions only
THEMES = [
    ("traffic", ["traffic", "cars", "highway", "jam", "city", "road", "rush", "commute"],
     ["blurred", "aerial", "night", "busy", "crowded", "urban"]),
    ("beach", ["beach", "ocean", "waves", "sand", "palm", "sunset", "surf", "tropical"],
     ["golden", "scenic", "calm", "panoramic", "turquoise", "paradise"]),
    ("baby", ["baby", "sleeping", "infant", "crib", "newborn", "nursery", "blanket", "toddler"],
     ["cute", "peaceful", "soft", "white", "adorable", "tiny"]),
    ("chemistry", ["chemistry", "molecules", "laboratory", "reaction", "flask", "science", "beaker", "atoms"],
     ["colorful", "glowing", "abstract", "microscopic", "blue", "dimensional"]),
    ("mountain", ["mountain", "hiking", "summit", "trail", "peak", "forest", "valley", "alpine"],
     ["snowy", "misty", "majestic", "remote", "rocky", "epic"]),
    ("coffee", ["coffee", "espresso", "barista", "cup", "beans", "cafe", "latte", "brew"],
     ["steaming", "rustic", "morning", "aromatic", "wooden", "dark"]),
    ("office", ["office", "meeting", "business", "team", "desk", "laptop", "workspace", "colleagues"],
     ["modern", "corporate", "bright", "professional", "diverse", "collaborative"]),
    ("garden", ["garden", "flowers", "roses", "spring", "bloom", "botanical", "tulips", "petals"],
     ["vibrant", "fresh", "blooming", "pink", "lush", "dewy"]),
    ("dog", ["dog", "puppy", "retriever", "park", "fetch", "leash", "paws", "bark"],
     ["playful", "happy", "furry", "energetic", "friendly", "wet"]),
    ("food", ["food", "salad", "vegetables", "kitchen", "cooking", "chef", "recipe", "dinner"],
     ["healthy", "organic", "delicious", "gourmet", "homemade", "tasty"]),
    ("winter", ["winter", "snow", "skiing", "frost", "sled", "icicle", "snowman", "mittens"],
     ["frozen", "chilly", "sparkling", "crisp", "icy", "cozy"]),
    ("music", ["music", "guitar", "concert", "stage", "drummer", "piano", "melody", "crowd"],
     ["loud", "acoustic", "vintage", "electric", "live", "dramatic"]),
]

_all_words = [w for _, c, m in THEMES for w in c + m]
assert len(_all_words) == len(set(_all_words)), "theme lexicons must not overlap"

# session length distribution (number of queries)
_LEN_CHOICES = [1, 2, 3, 4, 5]
_LEN_WEIGHTS = [25, 30, 25, 12, 8]

# click model: position bias times word-overlap boost
_POSITION_BIAS = [0.5 * 0.7 ** r for r in range(N_IMPRESSIONS)]
_OVERLAP_BOOST = {0: 0.08, 1: 1.0, 2: 1.9}
_MAX_CLICK_P = 0.9


@dataclass
class SynthConfig:
    n_sessions: int = 200
    seed: int = 1
    n_themes: int = len(THEMES)


@dataclass
class SynthSummary:
    n_sessions: int
    n_queries: int
    n_impressions: int
    n_clicks: int
    queries_with_click: int
    observed_mrr: float
    avg_query_words: float
    avg_caption_words: float

    def lines(self):
        return [
            "sessions %d" % self.n_sessions,
            "queries %d" % self.n_queries,
            "impressions %d" % self.n_impressions,
            "clicks %d" % self.n_clicks,
            "click_rate %.4f" % (self.n_clicks / max(1, self.n_impressions)),
            "queries_with_click %d" % self.queries_with_click,
            "observed_mrr %.4f" % self.observed_mrr,
            "avg_query_words %.2f" % self.avg_query_words,
            "avg_caption_words %.2f" % self.avg_caption_words,
        ]


def _relevant_caption(rng, query_words, content, mods):
    take = min(len(query_words), 1 if (len(query_words) == 1 or rng.random() < 0.5) else 2)
    words = rng.sample(query_words, take)
    others = [w for w in content if w not in words]
    words += rng.sample(others, min(len(others), rng.randint(1, 2)))
    words += rng.sample(mods, rng.randint(2, 3))
    rng.shuffle(words)
    return words[:6]


def _distractor_caption(rng, theme_idx, n_themes):
    other = rng.randrange(n_themes - 1)
    if other >= theme_idx:
        other += 1
    _, content, mods = THEMES[other]
    words = rng.sample(content, rng.randint(2, 3)) + rng.sample(mods, rng.randint(1, 2))
    rng.shuffle(words)
    return words


def _next_query(rng, query_words, content):
    unused = [w for w in content if w not in query_words]
    roll = rng.random()
    if roll < 0.7 and unused and len(query_words) < 4:
        return query_words + [rng.choice(unused)]
    if roll < 0.9 and unused:
        out = list(query_words)
        out[rng.randrange(len(out))] = rng.choice(unused)
        return out
    if len(query_words) > 1:
        out = list(query_words)
        out.pop(rng.randrange(len(out)))
        if unused:
            out.append(rng.choice(unused))
        return out
    return query_words + [rng.choice(unused)] if unused else list(query_words)


def synth_generate(cfg: SynthConfig) -> list[SessionRecord]:
    if cfg.n_sessions < 0:
        raise ValueError("n_sessions must be non-negative")
    n_themes = max(2, min(int(cfg.n_themes), len(THEMES)))
    rng = random.Random(cfg.seed)
    sessions = []
    image_counter = 0
    for k in range(cfg.n_sessions):
        theme_idx = rng.randrange(n_themes)
        _, content, mods = THEMES[theme_idx]
        n_q = rng.choices(_LEN_CHOICES, weights=_LEN_WEIGHTS)[0]
        query_words = rng.sample(content, rng.choice([1, 1, 2]))
        ts = 1_600_000_000 + k * 7200
        queries = []
        for i in range(n_q):
            impressions = []
            for r in range(1, N_IMPRESSIONS + 1):
                p_rel = max(0.25, 0.95 - 0.08 * (r - 1))
                if rng.random() < p_rel:
                    caption_words = _relevant_caption(rng, query_words, content, mods)
                else:
                    caption_words = _distractor_caption(rng, theme_idx, n_themes)
                overlap = min(2, sum(1 for w in caption_words if w in query_words))
                p_click = min(_MAX_CLICK_P, _POSITION_BIAS[r - 1] * _OVERLAP_BOOST[overlap])
                image_counter += 1
                impressions.append(Impression(
                    image_id="img%07d" % image_counter,
                    caption=" ".join(caption_words),
                    clicked=rng.random() < p_click,
                    rank=r,
                ))
            queries.append(QueryEvent(text=" ".join(query_words), ts=float(ts), impressions=impressions))
            ts += rng.randint(30, 600)
            if i + 1 < n_q:
                query_words = _next_query(rng, query_words, content)
        sessions.append(SessionRecord(
            session_id="s%06d" % k, user_id="u%06d" % k, queries=queries))
    return sessions


def summarize(sessions) -> SynthSummary:
    n_queries = n_impressions = n_clicks = with_click = 0
    q_words = c_words = 0
    rr_sum = 0.0
    for s in sessions:
        for q in s.queries:
            n_queries += 1
            q_words += len(q.text.split())
            first = None
            for imp in sorted(q.impressions, key=lambda im: im.rank):
                n_impressions += 1
                c_words += len(imp.caption.split())
                if imp.clicked:
                    n_clicks += 1
                    if first is None:
                        first = imp.rank
            if first is not None:
                with_click += 1
                rr_sum += 1.0 / first
    return SynthSummary(
        n_sessions=len(sessions),
        n_queries=n_queries,
        n_impressions=n_impressions,
        n_clicks=n_clicks,
        queries_with_click=with_click,
        observed_mrr=rr_sum / max(1, with_click),
        avg_query_words=q_words / max(1, n_queries),
        avg_caption_words=c_words / max(1, n_impressions),
    )


def generate_to_file(cfg: SynthConfig, path) -> SynthSummary:
    sessions = synth_generate(cfg)
    save_sessions(sessions, path)
    return summarize(sessions)
