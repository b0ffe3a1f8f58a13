"""Dataset handling, splits, training loop, baseline, search and checkpoints."""

from .baseline import LogisticBaseline, mean_mel_vectors, train_baseline
from .checkpoint import load_checkpoint, save_checkpoint
from .config import TrainConfig
from .dataset import (
    BatchSpec,
    Dataset,
    Example,
    example_log_mel,
    fit_corpus_stats,
    iterate_batches,
    load_manifest,
    prepare_featurizer,
)
from .search import LeaderboardRow, SearchResult, SearchSpace, candidate_configs, hyperparam_search, rank_candidates
from .splits import kfold_split, stratified_split
from .trainer import EpochRecord, TrainResult, crop_frames, evaluate_split, train_model

__all__ = [
    "BatchSpec",
    "Dataset",
    "EpochRecord",
    "Example",
    "LeaderboardRow",
    "LogisticBaseline",
    "SearchResult",
    "SearchSpace",
    "TrainConfig",
    "TrainResult",
    "candidate_configs",
    "crop_frames",
    "evaluate_split",
    "example_log_mel",
    "fit_corpus_stats",
    "hyperparam_search",
    "iterate_batches",
    "kfold_split",
    "load_checkpoint",
    "load_manifest",
    "mean_mel_vectors",
    "prepare_featurizer",
    "rank_candidates",
    "save_checkpoint",
    "stratified_split",
    "train_baseline",
    "train_model",
]
