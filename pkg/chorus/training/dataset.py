"""Labeled examples, manifest loading and mini-batch assembly."""

from __future__ import annotations

from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from chorus.audio.resample import resample
from chorus.audio.wav import read_wav
from chorus.augment.noise import NoisePool, resolve_noise_pool
from chorus.augment.policy import AugmentConfig, augment_policy
from chorus.core.errors import InvalidParams, ManifestError
from chorus.core.types import AudioClip
from chorus.dsp.cache import load_cached, save_spectrogram
from chorus.dsp.features import CorpusStats, Featurizer, MelParams, MelSpectrogram
from chorus.utils.logger import get_logger
from chorus.utils.seeds import derive_seed

logger = get_logger(__name__)

REQUIRED_COLUMNS = ("path", "species")
METADATA_COLUMNS = ("species", "location", "date")


@dataclass(frozen=True)
class Example:
    """One labeled recording, referenced by audio path or carried as a log-mel matrix."""

    label: int
    audio_path: Optional[Path] = None
    key: str = ""
    features: Optional[np.ndarray] = field(default=None, repr=False)
    metadata: Dict[str, str] = field(default_factory=dict)


class Dataset:
    def __init__(self, examples: Sequence[Example], class_names: Sequence[str]) -> None:
        names = list(class_names)
        if len(set(names)) != len(names):
            raise ManifestError("class names must be unique")
        for ex in examples:
            if not 0 <= ex.label < len(names):
                raise ManifestError(f"label {ex.label} outside [0, {len(names)})")
        self.examples: List[Example] = list(examples)
        self.class_names = names

    def __len__(self) -> int:
        return len(self.examples)

    def __getitem__(self, index: int) -> Example:
        return self.examples[index]

    @property
    def labels(self) -> List[int]:
        return [ex.label for ex in self.examples]

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    @classmethod
    def from_arrays(
        cls,
        features: Sequence[np.ndarray],
        labels: Sequence[int],
        class_names: Optional[Sequence[str]] = None,
    ) -> "Dataset":
        """In-memory dataset of precomputed n_mels x n_frames log-mel matrices."""
        if len(features) != len(labels):
            raise ManifestError(f"{len(features)} feature arrays but {len(labels)} labels")
        if class_names is None:
            class_names = [str(i) for i in range(max(labels) + 1)] if len(labels) else []
        examples = [
            Example(label=int(y), key=f"array-{i}", features=np.asarray(x, dtype=np.float64))
            for i, (x, y) in enumerate(zip(features, labels))
        ]
        return cls(examples, class_names)


def load_manifest(path: Union[str, Path]) -> Dataset:
    """Read manifest.csv; audio paths are relative to the manifest's directory."""
    manifest = Path(path)
    if not manifest.is_file():
        raise ManifestError(f"manifest not found: {manifest}")
    try:
        frame = pd.read_csv(manifest, dtype=str, keep_default_na=False)
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise ManifestError(f"could not parse {manifest}: {e}") from e
    missing = [c for c in REQUIRED_COLUMNS if c not in frame.columns]
    if missing:
        raise ManifestError(f"{manifest} is missing columns {missing}")
    if frame.empty:
        raise ManifestError(f"{manifest} lists no recordings")

    class_names = sorted(frame["species"].unique())
    index = {name: i for i, name in enumerate(class_names)}
    root = manifest.parent
    examples = [
        Example(
            label=index[row["species"]],
            audio_path=root / row["path"],
            key=row["path"],
            metadata={c: row[c] for c in METADATA_COLUMNS if c in frame.columns},
        )
        for row in frame.to_dict(orient="records")
    ]
    logger.info("manifest_loaded", path=str(manifest), examples=len(examples), classes=len(class_names))
    return Dataset(examples, class_names)


def load_clip(example: Example, sample_rate_hz: int) -> AudioClip:
    if example.audio_path is None:
        raise InvalidParams(f"example {example.key!r} has no audio")
    clip = read_wav(example.audio_path)
    if clip.sample_rate_hz != sample_rate_hz:
        clip = resample(clip, sample_rate_hz)
    return clip


def cache_path(cache_dir: Union[str, Path], example: Example) -> Path:
    return Path(cache_dir) / Path(example.key).with_suffix(".mels")


def example_log_mel(
    example: Example, featurizer: Featurizer, cache_dir: Optional[Union[str, Path]] = None
) -> np.ndarray:
    """Un-normalized log-mel of an example, read from or written to the cache when one is set."""
    if example.features is not None:
        return example.features
    if cache_dir is not None:
        target = cache_path(cache_dir, example)
        cached = load_cached(target, featurizer.params)
        if cached is not None:
            return cached.data
    data = featurizer.log_mel(load_clip(example, featurizer.params.sample_rate_hz))
    if cache_dir is not None:
        save_spectrogram(MelSpectrogram(data=data, params=featurizer.params), target)
        # match what a later cache read returns
        data = data.astype(np.float32).astype(np.float64)
    return data


def fit_corpus_stats(
    dataset: Dataset,
    indices: Sequence[int],
    featurizer: Featurizer,
    cache_dir: Optional[Union[str, Path]] = None,
) -> CorpusStats:
    return CorpusStats.fit(example_log_mel(dataset[i], featurizer, cache_dir) for i in indices)


@dataclass
class BatchSpec:
    """How to turn examples into network input."""

    featurizer: Featurizer
    n_frames: int
    augment: Optional[AugmentConfig] = None
    random_crop: bool = False
    cache_dir: Optional[Union[str, Path]] = None
    noise_pool: Optional[NoisePool] = None


def example_input(dataset: Dataset, index: int, spec: BatchSpec, seed: int) -> np.ndarray:
    """Normalized, fixed-length n_mels x n_frames input for one example.

    Augmentation and the crop offset draw only from ``seed``.
    """
    example = dataset[index]
    fz = spec.featurizer
    if spec.augment is not None and example.audio_path is not None:
        clip = load_clip(example, fz.params.sample_rate_hz)
        pool = spec.noise_pool or resolve_noise_pool(spec.augment.noise_source, clip.sample_rate_hz)
        data = fz.log_mel(augment_policy(clip, spec.augment, derive_seed(seed, 0), pool))
    else:
        data = example_log_mel(example, fz, spec.cache_dir)
    offset = 0
    if spec.random_crop and data.shape[1] > spec.n_frames:
        rng = np.random.default_rng(derive_seed(seed, 1))
        offset = int(rng.integers(0, data.shape[1] - spec.n_frames + 1))
    return fz.normalize(fz.crop(data, spec.n_frames, offset))


def assemble_batch(
    dataset: Dataset,
    indices: Sequence[int],
    spec: BatchSpec,
    seeds: Sequence[int],
    pool: Optional[ThreadPoolExecutor] = None,
) -> Tuple[np.ndarray, List[int]]:
    jobs = list(zip(indices, seeds))

    def _one(job):
        return example_input(dataset, job[0], spec, job[1])

    inputs = list(pool.map(_one, jobs)) if pool is not None else [_one(j) for j in jobs]
    batch = np.stack(inputs)[:, None, :, :]
    return batch, [dataset[i].label for i in indices]


def iterate_batches(
    dataset: Dataset,
    indices: Sequence[int],
    batch_size: int,
    spec: BatchSpec,
    seed: int,
    epoch: int,
    threads: int = 1,
) -> Iterator[Tuple[np.ndarray, List[int]]]:
    """Yield batches in the given index order, assembling the next one on a worker thread.

    Example i of epoch e uses seed derive_seed(seed, e, i), so output does not
    depend on how the work is scheduled.
    """
    chunks = [list(indices[s : s + batch_size]) for s in range(0, len(indices), batch_size)]
    if not chunks:
        return
    workers = ThreadPoolExecutor(max_workers=max(1, threads)) if threads > 1 else None
    prefetch = ThreadPoolExecutor(max_workers=1)
    try:

        def _submit(chunk: List[int]) -> Future:
            seeds = [derive_seed(seed, epoch, i) for i in chunk]
            return prefetch.submit(assemble_batch, dataset, chunk, spec, seeds, workers)

        pending = _submit(chunks[0])
        for k in range(len(chunks)):
            batch = pending.result()
            if k + 1 < len(chunks):
                pending = _submit(chunks[k + 1])
            yield batch
    finally:
        prefetch.shutdown(wait=True, cancel_futures=True)
        if workers is not None:
            workers.shutdown(wait=True)


def prepare_featurizer(
    params: MelParams,
    normalization: str,
    dataset: Dataset,
    indices: Sequence[int],
    cache_dir: Optional[Union[str, Path]] = None,
) -> Featurizer:
    """Featurizer for a training split; corpus statistics come from that split only."""
    stats = None
    if normalization == "corpus":
        stats = fit_corpus_stats(dataset, indices, Featurizer(params), cache_dir)
    return Featurizer(params, normalization, stats)
