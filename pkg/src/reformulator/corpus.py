"""Session-log data model and preprocessing pipeline.

Covers: text normalization, vocabulary construction, token encoding with
padding, session segmentation of raw event streams, training-target
construction for both supervision regimes, dataset splitting, and embedding
initialization. The on-disk session format is JSONL, one session per line:

    {"session_id": ..., "user_id": ..., "queries": [
        {"text": ..., "ts": ..., "impressions": [
            {"image_id": ..., "caption": ..., "clicked": ..., "rank": ...},
            ... exactly N_IMPRESSIONS of them ...]},
        ...]}
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError

# reserved token ids
PAD_ID = 0
BOS_ID = 1
UNK_ID = 2
EOSESS_ID = 3
PAD_TOKEN = "<p>"
BOS_TOKEN = "<s>"
UNK_TOKEN = "<unk>"
EOSESS_TOKEN = "<eosess>"
SPECIALS = [PAD_TOKEN, BOS_TOKEN, UNK_TOKEN, EOSESS_TOKEN]

# sequence limits
MAX_QUERY_TOKENS = 5
MAX_CAPTION_TOKENS = 10
MAX_SESSION_QUERIES = 5
TARGET_LEN = 10
N_IMPRESSIONS = 10

SESSION_GAP_SECONDS = 1800.0

_KEEP = re.compile(r"[^a-z0-9 ]+")
_WS = re.compile(r"\s+")


def normalize_text(text: str) -> str:
    """Lowercase, strip every char outside [a-z0-9 space], collapse whitespace."""
    text = _WS.sub(" ", text.lower())
    text = _KEEP.sub("", text)
    return _WS.sub(" ", text).strip()


def tokenize(text: str) -> list[str]:
    norm = normalize_text(text)
    return norm.split(" ") if norm else []


class Vocabulary:
    """Word <-> id mapping with four reserved leading ids."""

    def __init__(self, words: list[str]):
        for w in words:
            if w in SPECIALS:
                raise ValueError("reserved token %r cannot be a vocabulary word" % w)
        if len(set(words)) != len(words):
            raise ValueError("duplicate words in vocabulary")
        self._words = SPECIALS + list(words)
        self._ids = {w: i for i, w in enumerate(self._words)}

    def __len__(self):
        return len(self._words)

    def __contains__(self, word):
        return word in self._ids

    def id_of(self, word: str) -> int:
        return self._ids.get(word, UNK_ID)

    def word_of(self, idx: int) -> str:
        return self._words[idx]

    @property
    def words(self) -> list[str]:
        """All words in id order, reserved symbols included."""
        return list(self._words)

    @property
    def corpus_words(self) -> list[str]:
        """Words beyond the reserved symbols, in id order."""
        return self._words[len(SPECIALS):]

    def save(self, path):
        with open(path, "w", encoding="utf-8") as f:
            for w in self.corpus_words:
                f.write(w + "\n")

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as f:
            words = [line.rstrip("\n") for line in f if line.rstrip("\n")]
        return cls(words)


def build_vocabulary(token_lists, max_size: int) -> Vocabulary:
    """Frequency-ranked vocabulary (ties broken lexicographically).

    max_size counts the four reserved symbols, so at most max_size - 4 corpus
    words are kept.
    """
    if max_size <= len(SPECIALS):
        raise ValueError("vocabulary cap %d leaves no room for words" % max_size)
    counts = Counter()
    for toks in token_lists:
        counts.update(toks)
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    keep = [w for w, _ in ranked[: max_size - len(SPECIALS)]]
    return Vocabulary(keep)


def encode_and_pad(words: list[str], max_len: int, vocab: Vocabulary) -> list[int]:
    """Map words to ids, truncate to max_len, right-pad with PAD."""
    ids = [vocab.id_of(w) for w in words[:max_len]]
    return ids + [PAD_ID] * (max_len - len(ids))


def strip_pads(token_ids) -> list[int]:
    """Tokens up to (excluding) the first PAD."""
    out = []
    for t in token_ids:
        if t == PAD_ID:
            break
        out.append(int(t))
    return out


# ---------------------------------------------------------------------------
# data model


@dataclass
class Impression:
    image_id: str
    caption: str
    clicked: bool
    rank: int
    caption_tokens: list[int] | None = None


@dataclass
class QueryEvent:
    text: str
    ts: float
    impressions: list[Impression]
    tokens: list[int] | None = None


@dataclass
class SessionRecord:
    session_id: str
    user_id: str
    queries: list[QueryEvent]


@dataclass
class TrainingExample:
    """One supervised example anchored at query index `index` of a session.

    prefix_tokens covers queries 0..index inclusive (the encoder input);
    target_tokens is the TARGET_LEN generation target, or None when the
    example only participates in ranking; impressions are those of the
    anchor query.
    """
    session_id: str
    index: int
    prefix_tokens: list[list[int]]
    target_tokens: list[int] | None
    impressions: list[Impression]
    has_click: bool

    @property
    def source_tokens(self) -> list[int]:
        return self.prefix_tokens[-1]


# ---------------------------------------------------------------------------
# parsing / serialization


def _bad(msg, line_no=None):
    where = "" if line_no is None else " (line %d)" % line_no
    return DataError("session log%s: %s" % (where, msg))


def parse_session_obj(obj, line_no=None) -> SessionRecord:
    if not isinstance(obj, dict):
        raise _bad("expected an object", line_no)
    try:
        sid = str(obj["session_id"])
        uid = str(obj["user_id"])
        raw_queries = obj["queries"]
    except KeyError as e:
        raise _bad("missing key %s" % e, line_no)
    if not isinstance(raw_queries, list) or not raw_queries:
        raise _bad("queries must be a non-empty list", line_no)
    queries = []
    for q in raw_queries:
        try:
            text = str(q["text"])
            ts = float(q["ts"])
            raw_imps = q["impressions"]
        except (KeyError, TypeError, ValueError) as e:
            raise _bad("bad query record: %s" % e, line_no)
        if not isinstance(raw_imps, list) or len(raw_imps) != N_IMPRESSIONS:
            raise _bad("every query needs exactly %d impressions" % N_IMPRESSIONS, line_no)
        imps = []
        for imp in raw_imps:
            try:
                imps.append(Impression(
                    image_id=str(imp["image_id"]),
                    caption=str(imp["caption"]),
                    clicked=bool(imp["clicked"]),
                    rank=int(imp["rank"]),
                ))
            except (KeyError, TypeError, ValueError) as e:
                raise _bad("bad impression record: %s" % e, line_no)
        if sorted(i.rank for i in imps) != list(range(1, N_IMPRESSIONS + 1)):
            raise _bad("impression ranks must be a permutation of 1..%d" % N_IMPRESSIONS, line_no)
        queries.append(QueryEvent(text=text, ts=ts, impressions=imps))
    return SessionRecord(session_id=sid, user_id=uid, queries=queries)


def load_sessions(path) -> list[SessionRecord]:
    sessions = []
    try:
        f = open(path, encoding="utf-8")
    except OSError as e:
        raise DataError("cannot open session log: %s" % e)
    with f:
        for line_no, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise _bad("invalid JSON: %s" % e, line_no)
            sessions.append(parse_session_obj(obj, line_no))
    if not sessions:
        raise DataError("session log %s is empty" % path)
    return sessions


def session_to_obj(s: SessionRecord) -> dict:
    return {
        "session_id": s.session_id,
        "user_id": s.user_id,
        "queries": [
            {
                "text": q.text,
                "ts": q.ts,
                "impressions": [
                    {"image_id": i.image_id, "caption": i.caption,
                     "clicked": i.clicked, "rank": i.rank}
                    for i in q.impressions
                ],
            }
            for q in s.queries
        ],
    }


def save_sessions(sessions, path):
    with open(path, "w", encoding="utf-8") as f:
        for s in sessions:
            f.write(json.dumps(session_to_obj(s), separators=(",", ":")) + "\n")


# ---------------------------------------------------------------------------
# segmentation of raw per-user event streams


def segment_sessions(events) -> list[SessionRecord]:
    """Cut a time-ordered per-user query stream into sessions.

    events: iterable of dicts with keys user_id, ts, text, impressions (raw
    impression dicts). Events must be sorted by (user_id, ts); a gap longer
    than SESSION_GAP_SECONDS starts a new session.
    """
    events = list(events)
    prev_key = None
    for e in events:
        key = (str(e["user_id"]), float(e["ts"]))
        if prev_key is not None and key < prev_key:
            raise DataError("event stream is not sorted by (user_id, ts)")
        prev_key = key

    sessions: list[SessionRecord] = []
    cur: list[dict] = []

    def flush():
        if not cur:
            return
        uid = str(cur[0]["user_id"])
        sid = "%s-%d" % (uid, sum(1 for s in sessions if s.user_id == uid))
        obj = {"session_id": sid, "user_id": uid,
               "queries": [{"text": e["text"], "ts": e["ts"],
                            "impressions": e["impressions"]} for e in cur]}
        sessions.append(parse_session_obj(obj))

    for e in events:
        if cur and (str(e["user_id"]) != str(cur[-1]["user_id"])
                    or float(e["ts"]) - float(cur[-1]["ts"]) > SESSION_GAP_SECONDS):
            flush()
            cur = []
        cur.append(e)
    flush()
    return sessions


# ---------------------------------------------------------------------------
# encoding, targets, splits


def iter_token_lists(sessions):
    """Token lists of every query and caption (vocabulary counting input)."""
    for s in sessions:
        for q in s.queries[:MAX_SESSION_QUERIES]:
            yield tokenize(q.text)[:MAX_QUERY_TOKENS]
            for imp in q.impressions:
                yield tokenize(imp.caption)[:MAX_CAPTION_TOKENS]


def encode_sessions(sessions, vocab: Vocabulary) -> list[SessionRecord]:
    """Apply truncation limits and token encoding, returning new records."""
    out = []
    for s in sessions:
        queries = []
        for q in s.queries[:MAX_SESSION_QUERIES]:
            imps = [Impression(
                image_id=i.image_id, caption=i.caption, clicked=i.clicked,
                rank=i.rank,
                caption_tokens=encode_and_pad(tokenize(i.caption), MAX_CAPTION_TOKENS, vocab),
            ) for i in q.impressions]
            queries.append(QueryEvent(
                text=q.text, ts=q.ts, impressions=imps,
                tokens=encode_and_pad(tokenize(q.text), MAX_QUERY_TOKENS, vocab),
            ))
        out.append(SessionRecord(session_id=s.session_id, user_id=s.user_id, queries=queries))
    return out


REGIME_NEXT_QUERY = "next_query"
REGIME_CLICKED_CAPTION = "clicked_caption"


def build_targets(session: SessionRecord, regime: str) -> list[TrainingExample]:
    """Training examples for one encoded session under a supervision regime.

    next_query: every query yields an example; the target is the next query's
    tokens padded to TARGET_LEN, or [EOSESS, PAD...] for the final query.
    clicked_caption: only clicked queries yield generation examples; the
    target is the caption of the highest-ranked (lowest rank value) clicked
    impression.
    """
    n = len(session.queries)
    examples = []
    for i, q in enumerate(session.queries):
        if q.tokens is None:
            raise ValueError("session %s is not encoded" % session.session_id)
        has_click = any(imp.clicked for imp in q.impressions)
        if regime == REGIME_NEXT_QUERY:
            if i + 1 < n:
                nxt = strip_pads(session.queries[i + 1].tokens)
                target = nxt + [PAD_ID] * (TARGET_LEN - len(nxt))
            else:
                target = [EOSESS_ID] + [PAD_ID] * (TARGET_LEN - 1)
        elif regime == REGIME_CLICKED_CAPTION:
            if not has_click:
                continue
            best = min((imp for imp in q.impressions if imp.clicked), key=lambda im: im.rank)
            toks = strip_pads(best.caption_tokens)
            target = toks + [PAD_ID] * (TARGET_LEN - len(toks))
        else:
            raise ValueError("unknown regime %r" % regime)
        examples.append(TrainingExample(
            session_id=session.session_id,
            index=i,
            prefix_tokens=[qq.tokens for qq in session.queries[: i + 1]],
            target_tokens=target,
            impressions=q.impressions,
            has_click=has_click,
        ))
    return examples


def split_dataset(sessions, seed: int, ratios=(0.8, 0.1, 0.1)):
    """Deterministic session-granularity split into (train, val, test).

    Validation and test each get at least one session; needs >= 3 sessions.
    """
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError("split ratios must sum to 1")
    n = len(sessions)
    if n < 3:
        raise DataError("need at least 3 sessions to split, got %d" % n)
    order = np.random.default_rng(seed).permutation(n)
    n_val = max(1, int(n * ratios[1]))
    n_test = max(1, int(n * ratios[2]))
    n_train = n - n_val - n_test
    if n_train < 1:
        raise DataError("too few sessions for a non-empty train split")
    train = [sessions[i] for i in order[:n_train]]
    val = [sessions[i] for i in order[n_train:n_train + n_val]]
    test = [sessions[i] for i in order[n_train + n_val:]]
    return train, val, test


# ---------------------------------------------------------------------------
# embeddings


def init_embeddings(vocab: Vocabulary, dim: int, seed: int,
                    pretrained_path=None) -> np.ndarray:
    """Embedding matrix: standard normal rows, file-provided rows verbatim,
    PAD row zero."""
    rng = np.random.default_rng(seed)
    E = rng.standard_normal((len(vocab), dim))
    if pretrained_path is not None:
        for word, vec in read_embedding_file(pretrained_path, dim):
            if word in vocab:
                E[vocab.id_of(word)] = vec
    E[PAD_ID] = 0.0
    return E


def read_embedding_file(path, dim: int):
    """Yield (word, vector) from lines of: word v1 v2 ... vd."""
    try:
        f = open(path, encoding="utf-8")
    except OSError as e:
        raise DataError("cannot open embedding file: %s" % e)
    with f:
        for line_no, line in enumerate(f, start=1):
            parts = line.split()
            if not parts:
                continue
            word, vals = parts[0], parts[1:]
            if len(vals) != dim:
                raise DataError(
                    "embedding file line %d has %d values, expected %d"
                    % (line_no, len(vals), dim))
            try:
                vec = np.array([float(v) for v in vals], dtype=np.float64)
            except ValueError:
                raise DataError("embedding file line %d has non-numeric values" % line_no)
            yield word, vec
