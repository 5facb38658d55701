"""Session-aware query reformulation with a jointly trained result ranker,
built on a small reverse-mode autodiff core."""

from .autodiff import Parameter, Tensor, backward, grad_check
from .beam import beam_search, greedy_decode
from .checkpoint import load_checkpoint, save_checkpoint
from .config import RunConfig, desk_config, load_config, paper_config
from .corpus import (
    SessionRecord, TrainingExample, Vocabulary, build_targets,
    build_vocabulary, encode_sessions, init_embeddings, load_sessions,
    save_sessions, segment_sessions, split_dataset,
)
from .metrics import EvalReport, bleu, diversity, evaluate_model, mrr, sim_emb
from .model import ReformulationModel
from .optim import Adam
from .synth import SynthConfig, synth_generate
from .train import train_model

__version__ = "0.1.0"

__all__ = [
    "Adam", "EvalReport", "Parameter", "ReformulationModel", "RunConfig",
    "SessionRecord", "SynthConfig", "Tensor", "TrainingExample", "Vocabulary",
    "backward", "beam_search", "bleu", "build_targets", "build_vocabulary",
    "desk_config", "diversity", "encode_sessions", "evaluate_model",
    "grad_check", "greedy_decode", "init_embeddings", "load_checkpoint",
    "load_config", "load_sessions", "mrr", "paper_config", "save_checkpoint",
    "save_sessions", "segment_sessions", "sim_emb", "split_dataset",
    "synth_generate", "train_model",
]
