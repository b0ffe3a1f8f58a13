"""Cross-validation against the logistic baseline, and the augmentation ablation."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from chorus.augment.noise import resolve_noise_pool
from chorus.augment.policy import AugmentConfig
from chorus.dsp.features import MelParams
from chorus.nn.model import NetworkConfig
from chorus.training.baseline import train_baseline
from chorus.training.config import TrainConfig
from chorus.training.dataset import Dataset, prepare_featurizer
from chorus.training.splits import kfold_split, stratified_split
from chorus.training.trainer import train_model
from chorus.utils.logger import get_logger

from .metrics import NoiseCorruption, evaluate_model
from .stats import paired_t_test, wilcoxon_signed_rank

logger = get_logger(__name__)


class CrossValConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    k: int = Field(5, ge=2)
    repeats: int = Field(1, ge=1)
    baseline_lr: float = Field(0.5, gt=0.0)
    baseline_epochs: int = Field(300, ge=1)


class AblationConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    noise_snr_db: float = Field(5.0, ge=-10.0, le=60.0)
    noise_source: str = "pink"


@dataclass
class FoldRecord:
    repeat: int
    fold: int
    n_test: int
    cnn_accuracy: float
    cnn_macro_f1: float
    baseline_accuracy: float
    baseline_macro_f1: float


def _summary(values: List[float]) -> dict:
    arr = np.asarray(values, dtype=np.float64)
    return {
        "mean": float(arr.mean()),
        "std": float(arr.std(ddof=1)) if arr.size > 1 else 0.0,
        "min": float(arr.min()),
        "max": float(arr.max()),
    }


@dataclass
class CrossValidationResult:
    folds: List[FoldRecord]
    significance: Dict[str, dict] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "folds": [asdict(f) for f in self.folds],
            "summary": {
                "cnn_accuracy": _summary([f.cnn_accuracy for f in self.folds]),
                "cnn_macro_f1": _summary([f.cnn_macro_f1 for f in self.folds]),
                "baseline_accuracy": _summary([f.baseline_accuracy for f in self.folds]),
                "baseline_macro_f1": _summary([f.baseline_macro_f1 for f in self.folds]),
            },
            "significance": self.significance,
        }


def run_cross_validation(
    dataset: Dataset,
    net_config: NetworkConfig,
    train_config: TrainConfig,
    mel: MelParams,
    normalization: str = "spectrogram",
    config: Optional[CrossValConfig] = None,
    seed: int = 0,
    cache_dir: Optional[Union[str, Path]] = None,
    threads: int = 1,
) -> CrossValidationResult:
    """k folds x repeats; CNN and baseline trained on the same folds, compared pairwise."""
    config = config or CrossValConfig()
    records: List[FoldRecord] = []
    for repeat in range(config.repeats):
        folds = kfold_split(dataset.labels, config.k, seed + repeat)
        for f, test in enumerate(folds):
            held_out = set(test)
            train = [i for i in range(len(dataset)) if i not in held_out]
            featurizer = prepare_featurizer(mel, normalization, dataset, train, cache_dir)
            fold_config = train_config.model_copy(update={"seed": train_config.seed + repeat * config.k + f})
            result = train_model(
                dataset, net_config, fold_config, featurizer,
                train_indices=train, val_indices=[], cache_dir=cache_dir, threads=threads,
            )
            cnn = evaluate_model(result.network, dataset, test, featurizer, cache_dir, threads=threads)
            baseline = train_baseline(
                dataset, featurizer, train,
                lr=config.baseline_lr, epochs=config.baseline_epochs, seed=fold_config.seed, cache_dir=cache_dir,
            )
            base = evaluate_model(baseline, dataset, test, featurizer, cache_dir, threads=threads)
            records.append(
                FoldRecord(repeat, f, len(test), cnn.accuracy, cnn.macro_f1, base.accuracy, base.macro_f1)
            )
            logger.info("fold_complete", **asdict(records[-1]))

    cnn_acc = [r.cnn_accuracy for r in records]
    base_acc = [r.baseline_accuracy for r in records]
    significance = {
        "paired_t": paired_t_test(cnn_acc, base_acc).to_json(),
        "wilcoxon": wilcoxon_signed_rank(cnn_acc, base_acc).to_json(),
    }
    return CrossValidationResult(records, significance)


def run_ablation(
    dataset: Dataset,
    net_config: NetworkConfig,
    train_config: TrainConfig,
    mel: MelParams,
    normalization: str = "spectrogram",
    config: Optional[AblationConfig] = None,
    seed: int = 0,
    cache_dir: Optional[Union[str, Path]] = None,
    threads: int = 1,
) -> dict:
    """Train with and without augmentation on one split; test clean and noise-corrupted."""
    config = config or AblationConfig()
    train, val, test = stratified_split(dataset.labels, train_config.split_ratios, seed)
    featurizer = prepare_featurizer(mel, normalization, dataset, train, cache_dir)
    pool = resolve_noise_pool(config.noise_source, mel.sample_rate_hz)
    corruption = NoiseCorruption(pool=pool, snr_db=config.noise_snr_db, seed=seed)

    variants = {
        "augmented": train_config.model_copy(update={"augment": train_config.augment or AugmentConfig()}),
        "plain": train_config.model_copy(update={"augment": None}),
    }
    results: Dict[str, dict] = {}
    for name, variant in variants.items():
        trained = train_model(
            dataset, net_config, variant, featurizer,
            train_indices=train, val_indices=val, cache_dir=cache_dir, threads=threads,
        )
        clean = evaluate_model(trained.network, dataset, test, featurizer, cache_dir, threads=threads)
        noisy = evaluate_model(trained.network, dataset, test, featurizer, cache_dir, corruption, threads=threads)
        results[name] = {"clean": clean.to_json(), "noisy": noisy.to_json()}
        logger.info("ablation_variant", variant=name, clean_accuracy=clean.accuracy, noisy_accuracy=noisy.accuracy)

    return {
        "split": {"train": len(train), "val": len(val), "test": len(test)},
        "noise_snr_db": config.noise_snr_db,
        "variants": results,
        "gain": {
            cond: results["augmented"][cond]["accuracy"] - results["plain"][cond]["accuracy"]
            for cond in ("clean", "noisy")
        },
    }
