"""Run configuration and the plain-text key=value config file format.

Files contain one `key = value` per line; blank lines and lines starting with
'#' are ignored. `profile = desk|paper` (first, if present) selects the base
preset; every other key must name a RunConfig field, anything else is an
error. The desk profile is sized so the whole pipeline runs in seconds on a
laptop; the paper profile is the full-size preset, with dims and vocabulary
sized for real search logs.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from .errors import UsageError


@dataclass
class RunConfig:
    # supervision and losses
    regime: str = "next_query"            # next_query | clicked_caption
    ranker: str = "off"                   # off | ce | ro
    alpha: float = 0.45                   # generation-vs-ranking weight
    entropy_weight: float = 0.1
    entropy_mode: str = "reward"          # reward | literal
    reform_reduction: str = "sum"         # sum | mean over batch examples

    # optimization
    lr: float = 1e-3
    batch_size: int = 16
    max_epochs: int = 30
    patience: int = 3
    seed: int = 1

    # architecture
    emb_dim: int = 32
    query_hidden: int = 16                # per direction
    session_hidden: int = 64
    decoder_hidden: int = 32
    attn_dim: int = 8
    vocab_cap: int = 500                  # includes the 4 reserved symbols

    # decoding
    beam_width: int = 3
    beam_length_normalize: bool = False

    # data
    embeddings_file: str = ""             # optional pretrained vectors
    synth_sessions: int = 200
    synth_themes: int = 12

    def validate(self):
        if self.regime not in ("next_query", "clicked_caption"):
            raise UsageError("regime must be next_query or clicked_caption")
        if self.ranker not in ("off", "ce", "ro"):
            raise UsageError("ranker must be off, ce or ro")
        if not 0.0 <= self.alpha <= 1.0:
            raise UsageError("alpha must lie in [0, 1]")
        if self.entropy_mode not in ("reward", "literal"):
            raise UsageError("entropy_mode must be reward or literal")
        if self.reform_reduction not in ("sum", "mean"):
            raise UsageError("reform_reduction must be sum or mean")
        for field in ("lr", "batch_size", "max_epochs", "emb_dim", "query_hidden",
                      "session_hidden", "decoder_hidden", "attn_dim", "beam_width",
                      "synth_sessions"):
            if getattr(self, field) <= 0:
                raise UsageError("%s must be positive" % field)
        if self.patience < 0:
            raise UsageError("patience must be >= 0")
        if self.vocab_cap <= 4:
            raise UsageError("vocab_cap must exceed the 4 reserved symbols")
        return self


def desk_config(**overrides) -> RunConfig:
    return dataclasses.replace(RunConfig(), **overrides).validate()


def _paper_base() -> RunConfig:
    return RunConfig(
        emb_dim=300, query_hidden=128, session_hidden=512, decoder_hidden=256,
        attn_dim=64, vocab_cap=37648, batch_size=512, max_epochs=30,
    )


def paper_config(**overrides) -> RunConfig:
    return dataclasses.replace(_paper_base(), **overrides).validate()


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(RunConfig)}


def _parse_value(key: str, raw: str):
    ftype = _FIELD_TYPES[key]
    raw = raw.strip()
    try:
        if ftype == "int":
            return int(raw)
        if ftype == "float":
            return float(raw)
        if ftype == "bool":
            if raw.lower() in ("true", "1", "yes"):
                return True
            if raw.lower() in ("false", "0", "no"):
                return False
            raise ValueError(raw)
        return raw
    except ValueError:
        raise UsageError("config key %s: cannot parse %r as %s" % (key, raw, ftype))


def parse_config_text(text: str) -> RunConfig:
    pairs = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError("config line %d is not key = value: %r" % (line_no, line))
        key, _, raw = line.partition("=")
        pairs.append((key.strip(), raw.strip()))

    profile = "desk"
    fields = {}
    for key, raw in pairs:
        if key == "profile":
            if raw not in ("desk", "paper"):
                raise UsageError("unknown profile %r" % raw)
            profile = raw
        elif key in _FIELD_TYPES:
            fields[key] = _parse_value(key, raw)
        else:
            raise UsageError("unknown config key %r" % key)

    base = RunConfig() if profile == "desk" else _paper_base()
    return dataclasses.replace(base, **fields).validate()


def load_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise UsageError("cannot open config file: %s" % e)
    return parse_config_text(text)


def config_to_dict(cfg: RunConfig) -> dict:
    return dataclasses.asdict(cfg)


def config_from_dict(d: dict) -> RunConfig:
    unknown = set(d) - set(_FIELD_TYPES)
    if unknown:
        raise UsageError("unknown config keys %s" % sorted(unknown))
    return RunConfig(**d).validate()
