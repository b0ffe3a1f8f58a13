"""Mini-batch training loop for the MBConv classifier."""

from __future__ import annotations

import json
from collections import OrderedDict
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from chorus.augment.noise import resolve_noise_pool
from chorus.core.errors import InvalidParams, IoFailure, NonFiniteLoss
from chorus.dsp.features import Featurizer, MelParams
from chorus.nn.layers import cross_entropy
from chorus.nn.model import Network, NetworkConfig
from chorus.nn.optim import create_optimizer
from chorus.utils.logger import get_logger
from chorus.utils.seeds import derive_seed

from .checkpoint import save_checkpoint
from .config import TrainConfig
from .dataset import BatchSpec, Dataset, iterate_batches
from .splits import stratified_split

logger = get_logger(__name__)

HISTORY_FILE = "history.jsonl"
BEST_CHECKPOINT = "best.chkp"
FINAL_CHECKPOINT = "final.chkp"


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    train_acc: float
    val_loss: Optional[float]
    val_acc: Optional[float]


@dataclass
class TrainResult:
    network: Network
    history: List[EpochRecord]
    best_epoch: int
    best_val_acc: Optional[float] = None
    best_checkpoint: Optional[Path] = None
    final_checkpoint: Optional[Path] = None
    split: dict = field(default_factory=dict)


def crop_frames(params: MelParams, crop_s: float, minimum: int = 1) -> int:
    return max(minimum, params.n_frames(int(round(crop_s * params.sample_rate_hz))))


def evaluate_split(
    net: Network,
    dataset: Dataset,
    indices: Sequence[int],
    spec: BatchSpec,
    batch_size: int,
    seed: int = 0,
    threads: int = 1,
) -> Tuple[float, float]:
    """Mean cross-entropy and accuracy in infer mode over fixed-length inputs."""
    total_loss, correct = 0.0, 0
    for batch, labels in iterate_batches(dataset, indices, batch_size, spec, seed, epoch=0, threads=threads):
        probs = net.predict_proba(batch)
        total_loss += cross_entropy(probs, labels) * len(labels)
        correct += int(np.sum(np.argmax(probs, axis=1) == np.asarray(labels)))
    n = max(1, len(indices))
    return total_loss / n, correct / n


class _History:
    def __init__(self, out_dir: Optional[Path]) -> None:
        self.records: List[EpochRecord] = []
        self._fh = None
        if out_dir is not None:
            try:
                self._fh = (out_dir / HISTORY_FILE).open("w", encoding="utf-8")
            except OSError as e:
                raise IoFailure(f"could not open history file in {out_dir}: {e}") from e

    def append(self, record: EpochRecord) -> None:
        self.records.append(record)
        if self._fh is not None:
            self._fh.write(json.dumps(asdict(record)) + "\n")
            self._fh.flush()

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()


def train_model(
    dataset: Dataset,
    net_config: NetworkConfig,
    train_config: TrainConfig,
    featurizer: Featurizer,
    train_indices: Optional[Sequence[int]] = None,
    val_indices: Optional[Sequence[int]] = None,
    out_dir: Optional[Union[str, Path]] = None,
    cache_dir: Optional[Union[str, Path]] = None,
    threads: int = 1,
) -> TrainResult:
    """Train from He initialization; deterministic for fixed seeds at a fixed thread count.

    Without explicit indices the dataset is split with train_config.split_ratios
    and the test part is left untouched.
    """
    if len(dataset) == 0:
        raise InvalidParams("cannot train on an empty dataset")
    if net_config.n_classes != dataset.n_classes:
        raise InvalidParams(
            f"network has {net_config.n_classes} outputs but the dataset has {dataset.n_classes} classes"
        )
    if net_config.n_mels != featurizer.params.n_mels:
        raise InvalidParams(f"network expects {net_config.n_mels} mel bins, featurizer makes {featurizer.params.n_mels}")

    tc = train_config
    split = {}
    if train_indices is None:
        train_indices, val_indices, test_indices = stratified_split(dataset.labels, tc.split_ratios, tc.seed)
        split = {"train": len(train_indices), "val": len(val_indices), "test": len(test_indices)}
    train_indices = list(train_indices)
    val_indices = list(val_indices or [])

    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        try:
            out.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise IoFailure(f"could not create {out}: {e}") from e

    n_frames = crop_frames(featurizer.params, tc.crop_s, net_config.total_stride)
    pool = resolve_noise_pool(tc.augment.noise_source, featurizer.params.sample_rate_hz) if tc.augment else None
    train_spec = BatchSpec(featurizer, n_frames, tc.augment, random_crop=True, cache_dir=cache_dir, noise_pool=pool)
    eval_spec = BatchSpec(featurizer, n_frames, None, random_crop=False, cache_dir=cache_dir)

    metadata = {
        "class_names": dataset.class_names,
        "features": featurizer.describe(),
        "train": tc.model_dump(mode="json"),
    }
    net = Network(net_config, seed=tc.seed, metadata=metadata)
    optimizer = create_optimizer(tc.optimizer, tc.lr)
    history = _History(out)
    best_epoch, best_acc, best_path = 0, None, None

    logger.info(
        "training_started",
        examples=len(train_indices),
        val_examples=len(val_indices),
        epochs=tc.epochs,
        optimizer=tc.optimizer,
        lr=tc.lr,
        batch_size=tc.batch_size,
    )
    try:
        for epoch in range(1, tc.epochs + 1):
            order = np.random.default_rng(derive_seed(tc.seed, epoch)).permutation(train_indices)
            net.set_mode("train")
            loss_sum, correct, seen = 0.0, 0, 0
            for step, (batch, labels) in enumerate(
                iterate_batches(dataset, order.tolist(), tc.batch_size, train_spec, tc.seed, epoch, threads)
            ):
                loss, grads, probs = net.loss_and_gradients(batch, labels)
                if not np.isfinite(loss):
                    raise NonFiniteLoss(f"loss became {loss} at epoch {epoch}, step {step} (lr={tc.lr})")
                updated = optimizer.step(net.params, grads)
                net.params = OrderedDict((name, updated[name]) for name in net.params)
                loss_sum += loss * len(labels)
                correct += int(np.sum(np.argmax(probs, axis=1) == np.asarray(labels)))
                seen += len(labels)

            val_loss = val_acc = None
            if val_indices:
                val_loss, val_acc = evaluate_split(net, dataset, val_indices, eval_spec, tc.batch_size, tc.seed, threads)
            record = EpochRecord(epoch, loss_sum / seen, correct / seen, val_loss, val_acc)
            history.append(record)
            logger.info("epoch_complete", **asdict(record))

            if val_acc is not None and (best_acc is None or val_acc > best_acc):
                best_epoch, best_acc = epoch, val_acc
                if out is not None:
                    best_path = out / BEST_CHECKPOINT
                    save_checkpoint(net, best_path)
    finally:
        history.close()

    net.set_mode("infer")
    if best_acc is None:
        best_epoch = tc.epochs
    final_path = None
    if out is not None:
        final_path = out / FINAL_CHECKPOINT
        save_checkpoint(net, final_path)
        if best_path is None:
            best_path = final_path
    return TrainResult(
        network=net,
        history=history.records,
        best_epoch=best_epoch,
        best_val_acc=best_acc,
        best_checkpoint=best_path,
        final_checkpoint=final_path,
        split=split,
    )
