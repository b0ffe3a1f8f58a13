"""Grid and random hyperparameter search scored on the validation split."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from pathlib import Path
from typing import List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from chorus.core.errors import EmptyGrid
from chorus.dsp.features import Featurizer
from chorus.nn.model import NetworkConfig
from chorus.utils.logger import get_logger

from .config import TrainConfig
from .dataset import Dataset
from .splits import stratified_split
from .trainer import train_model

logger = get_logger(__name__)


class SearchSpace(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    mode: Literal["grid", "random"] = "grid"
    lr: List[float] = Field(default_factory=lambda: [3e-4, 1e-3, 3e-3])
    batch_size: List[int] = Field(default_factory=lambda: [16, 32])
    optimizer: List[Literal["adam", "rmsprop"]] = Field(default_factory=lambda: ["adam"])
    epochs: List[int] = Field(default_factory=list)
    n_samples: int = Field(8, ge=1)
    lr_range: Tuple[float, float] = (1e-4, 1e-2)


def candidate_configs(space: SearchSpace, base: TrainConfig, seed: int) -> List[TrainConfig]:
    """Grid: Cartesian product of the lists. Random: n_samples draws, log-uniform lr."""
    epochs = space.epochs or [base.epochs]
    if space.mode == "grid":
        combos = list(itertools.product(space.lr, space.batch_size, space.optimizer, epochs))
    else:
        if not (space.batch_size and space.optimizer):
            combos = []
        else:
            rng = np.random.default_rng(seed)
            lo, hi = np.log(space.lr_range[0]), np.log(space.lr_range[1])
            combos = [
                (
                    float(np.exp(rng.uniform(lo, hi))),
                    space.batch_size[int(rng.integers(len(space.batch_size)))],
                    space.optimizer[int(rng.integers(len(space.optimizer)))],
                    epochs[int(rng.integers(len(epochs)))],
                )
                for _ in range(space.n_samples)
            ]
    if not combos:
        raise EmptyGrid("the search space yields no candidates")
    return [
        base.model_copy(update={"lr": lr, "batch_size": bs, "optimizer": opt, "epochs": ep})
        for lr, bs, opt, ep in combos
    ]


@dataclass
class LeaderboardRow:
    lr: float
    batch_size: int
    optimizer: str
    epochs: int
    val_acc: float
    val_loss: float
    rank: int = 0


def rank_candidates(rows: Sequence[LeaderboardRow]) -> List[LeaderboardRow]:
    """Highest validation accuracy first; ties to lower lr, then smaller batch."""
    ranked = sorted(rows, key=lambda r: (-r.val_acc, r.lr, r.batch_size))
    for i, row in enumerate(ranked, start=1):
        row.rank = i
    return ranked


@dataclass
class SearchResult:
    best: TrainConfig
    leaderboard: List[LeaderboardRow]


def hyperparam_search(
    dataset: Dataset,
    net_config: NetworkConfig,
    base_config: TrainConfig,
    space: SearchSpace,
    featurizer: Featurizer,
    seed: int,
    train_indices: Optional[Sequence[int]] = None,
    val_indices: Optional[Sequence[int]] = None,
    cache_dir: Optional[Union[str, Path]] = None,
    threads: int = 1,
) -> SearchResult:
    candidates = candidate_configs(space, base_config, seed)
    if train_indices is None:
        train_indices, val_indices, _ = stratified_split(dataset.labels, base_config.split_ratios, seed)
    rows: List[LeaderboardRow] = []
    for i, config in enumerate(candidates):
        result = train_model(
            dataset, net_config, config, featurizer,
            train_indices=train_indices, val_indices=val_indices,
            cache_dir=cache_dir, threads=threads,
        )
        last = result.history[-1]
        rows.append(
            LeaderboardRow(
                lr=config.lr,
                batch_size=config.batch_size,
                optimizer=config.optimizer,
                epochs=config.epochs,
                val_acc=float(last.val_acc if last.val_acc is not None else last.train_acc),
                val_loss=float(last.val_loss if last.val_loss is not None else last.train_loss),
            )
        )
        logger.info("search_candidate", index=i, lr=config.lr, batch_size=config.batch_size, val_acc=rows[-1].val_acc)
    ranked = rank_candidates(rows)
    best = ranked[0]
    best_config = base_config.model_copy(
        update={"lr": best.lr, "batch_size": best.batch_size, "optimizer": best.optimizer, "epochs": best.epochs}
    )
    return SearchResult(best=best_config, leaderboard=ranked)
