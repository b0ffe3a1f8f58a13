"""Command-line entry point for the whole pipeline."""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

from pydantic import ValidationError
from threadpoolctl import threadpool_limits

from chorus import VERSION
from chorus.augment.noise import resolve_noise_pool
from chorus.config import PipelineConfig, load_pipeline_config
from chorus.core.errors import ChorusError, InvalidParams
from chorus.dsp.features import Featurizer
from chorus.evaluation.crossval import run_ablation, run_cross_validation
from chorus.evaluation.metrics import NoiseCorruption, evaluate_model
from chorus.nn.gradcheck import run_gradcheck
from chorus.streaming import JsonLinesSink, classify_stream, create_source
from chorus.synth.soundscape import generate_dataset
from chorus.training.checkpoint import load_checkpoint
from chorus.training.dataset import Dataset, example_log_mel, load_manifest, prepare_featurizer
from chorus.training.search import hyperparam_search
from chorus.training.splits import stratified_split
from chorus.training.trainer import train_model
from chorus.utils.config import load_settings
from chorus.utils.logger import get_logger

logger = get_logger(__name__)

SPLITS = ("train", "val", "test", "all")


@dataclass
class CommandOutcome:
    exit_code: int
    artifacts: List[str] = field(default_factory=list)


def _error_line(code: str, message: str) -> None:
    sys.stderr.write(json.dumps({"error": code, "message": message}) + "\n")
    sys.stderr.flush()


class ChorusArgumentParser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        _error_line("UsageError", message)
        raise SystemExit(2)


def _common() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="random seed (overrides the config file)")
    common.add_argument("--config", default=None, help="pipeline configuration JSON file")
    common.add_argument("--threads", type=int, default=None, help="worker and BLAS thread count (default CHORUS_THREADS or 1)")
    common.add_argument("--out", default=None, help="output file or directory")
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = ChorusArgumentParser(prog="chorus", description="Acoustic species classification toolkit")
    parser.add_argument("--version", action="version", version=f"chorus {VERSION}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)
    common = _common()

    def add(name: str, help_text: str) -> argparse.ArgumentParser:
        return sub.add_parser(name, help=help_text, description=help_text, parents=[common])

    add("synth", "generate a labeled synthetic soundscape dataset (WAV files + manifest.csv)")

    p = add("featurize", "compute and cache log-mel spectrograms for every manifest entry")
    p.add_argument("--manifest", required=True, help="manifest.csv")

    p = add("train", "train the classifier; writes history, checkpoints and a test report")
    p.add_argument("--manifest", required=True, help="manifest.csv")
    p.add_argument("--no-augment", action="store_true", help="disable training-time augmentation")

    p = add("crossval", "stratified k-fold evaluation against the logistic baseline")
    p.add_argument("--manifest", required=True, help="manifest.csv")
    p.add_argument("--k", type=int, default=None, help="number of folds (default 5)")
    p.add_argument("--repeats", type=int, default=None, help="repeat the k folds with this many seeds")
    p.add_argument("--no-augment", action="store_true", help="disable training-time augmentation")

    p = add("search", "grid or random hyperparameter search scored on the validation split")
    p.add_argument("--manifest", required=True, help="manifest.csv")
    p.add_argument("--no-augment", action="store_true", help="disable training-time augmentation")

    p = add("eval", "evaluate a checkpoint on one split of a manifest")
    p.add_argument("--checkpoint", required=True, help="checkpoint file")
    p.add_argument("--manifest", required=True, help="manifest.csv")
    p.add_argument("--split", choices=SPLITS, default="test", help="which split to score (default test)")
    p.add_argument("--noise-snr-db", type=float, default=None, help="corrupt inputs with noise at this SNR")

    p = add("stream", "classify a WAV replay or raw PCM on standard input in sliding windows")
    p.add_argument("source", help="WAV file, or '-' for little-endian PCM-16 mono on standard input")
    p.add_argument("--checkpoint", required=True, help="checkpoint file")
    p.add_argument("--rate", type=int, default=None, help="sample rate of standard-input PCM")
    p.add_argument("--window-s", type=float, default=None, help="window length in seconds (default 5)")
    p.add_argument("--hop-s", type=float, default=None, help="window hop in seconds (default 2.5)")
    p.add_argument("--realtime", action="store_true", help="pace file replay at wall-clock rate")

    add("gradcheck", "finite-difference audit of every layer and a micro-width network")

    p = add("report", "merge JSON outputs into one summary document")
    p.add_argument("inputs", nargs="+", help="JSON files written by other subcommands")

    p = add("ablation", "train with and without augmentation; test clean and noise-corrupted")
    p.add_argument("--manifest", required=True, help="manifest.csv")
    p.add_argument("--noise-snr-db", type=float, default=None, help="SNR of the corrupted test set (default 5)")
    return parser


# helpers


def _dump(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _write_json(path: Path, doc: dict, artifacts: List[str]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(_dump(doc), encoding="utf-8")
    artifacts.append(str(path))


def _emit(args: argparse.Namespace, doc: dict, default_name: str, artifacts: List[str]) -> None:
    """Write to --out (a file, or a directory when it has no .json suffix) or print to stdout."""
    if args.out is None:
        sys.stdout.write(_dump(doc))
        return
    out = Path(args.out)
    target = out if out.suffix == ".json" else out / default_name
    _write_json(target, doc, artifacts)


def _seeded(cfg: PipelineConfig, seed: Optional[int]) -> PipelineConfig:
    return cfg.with_updates("train", seed=seed) if seed is not None else cfg


def _augment_override(cfg: PipelineConfig, args: argparse.Namespace) -> PipelineConfig:
    if getattr(args, "no_augment", False):
        return cfg.model_copy(update={"train": cfg.train.model_copy(update={"augment": None})})
    return cfg


def _cache_dir(cfg: PipelineConfig) -> Optional[str]:
    return cfg.features.cache_dir


# subcommands


def _synth(args, cfg: PipelineConfig, threads: int, artifacts: List[str]) -> int:
    out = Path(args.out or "data")
    seed = args.seed if args.seed is not None else cfg.train.seed
    manifest = generate_dataset(cfg.synth, out, seed, threads=threads)
    artifacts.append(str(manifest))
    sys.stdout.write(_dump({"command": "synth", "manifest": str(manifest), "seed": seed, "config": cfg.synth.model_dump(mode="json")}))
    return 0


def _featurize(args, cfg: PipelineConfig, threads: int, artifacts: List[str]) -> int:
    dataset = load_manifest(args.manifest)
    cache = Path(args.out or cfg.features.cache_dir or Path(args.manifest).parent / "cache")
    featurizer = Featurizer(cfg.mel)
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        frames = list(pool.map(lambda ex: example_log_mel(ex, featurizer, cache).shape[1], dataset.examples))
    artifacts.append(str(cache))
    sys.stdout.write(
        _dump({"command": "featurize", "cache_dir": str(cache), "spectrograms": len(frames), "config": {"mel": cfg.mel.model_dump()}})
    )
    return 0


def _train(args, cfg: PipelineConfig, threads: int, artifacts: List[str]) -> int:
    cfg = _augment_override(_seeded(cfg, args.seed), args)
    dataset = load_manifest(args.manifest)
    out = Path(args.out or "runs/train")
    train, val, test = stratified_split(dataset.labels, cfg.train.split_ratios, cfg.train.seed)
    featurizer = prepare_featurizer(cfg.mel, cfg.features.normalization, dataset, train, _cache_dir(cfg))
    net_config = cfg.network_for(dataset.n_classes)
    result = train_model(
        dataset, net_config, cfg.train, featurizer,
        train_indices=train, val_indices=val, out_dir=out, cache_dir=_cache_dir(cfg), threads=threads,
    )
    artifacts += [str(out / "history.jsonl"), str(result.final_checkpoint), str(result.best_checkpoint)]
    report = evaluate_model(result.network, dataset, test, featurizer, _cache_dir(cfg), threads=threads)
    doc = {
        "command": "train",
        "split": {"train": len(train), "val": len(val), "test": len(test)},
        "history": [asdict(r) for r in result.history],
        "best_epoch": result.best_epoch,
        "best_val_acc": result.best_val_acc,
        "test": report.to_json(),
        "config": {"mel": cfg.mel.model_dump(), "network": net_config.model_dump(), "train": cfg.train.model_dump(mode="json")},
    }
    _write_json(out / "train_report.json", doc, artifacts)
    return 0


def _crossval(args, cfg: PipelineConfig, threads: int, artifacts: List[str]) -> int:
    cfg = _augment_override(_seeded(cfg, args.seed), args)
    cfg = cfg.with_updates("crossval", k=args.k, repeats=args.repeats)
    dataset = load_manifest(args.manifest)
    net_config = cfg.network_for(dataset.n_classes)
    result = run_cross_validation(
        dataset, net_config, cfg.train, cfg.mel, cfg.features.normalization,
        cfg.crossval, seed=cfg.train.seed, cache_dir=_cache_dir(cfg), threads=threads,
    )
    doc = {"command": "crossval", **result.to_json()}
    doc["config"] = {"crossval": cfg.crossval.model_dump(), "train": cfg.train.model_dump(mode="json"), "network": net_config.model_dump()}
    _emit(args, doc, "crossval.json", artifacts)
    return 0


def _search(args, cfg: PipelineConfig, threads: int, artifacts: List[str]) -> int:
    cfg = _augment_override(_seeded(cfg, args.seed), args)
    dataset = load_manifest(args.manifest)
    train, val, _ = stratified_split(dataset.labels, cfg.train.split_ratios, cfg.train.seed)
    featurizer = prepare_featurizer(cfg.mel, cfg.features.normalization, dataset, train, _cache_dir(cfg))
    result = hyperparam_search(
        dataset, cfg.network_for(dataset.n_classes), cfg.train, cfg.search, featurizer, cfg.train.seed,
        train_indices=train, val_indices=val, cache_dir=_cache_dir(cfg), threads=threads,
    )
    doc = {
        "command": "search",
        "best": result.best.model_dump(mode="json"),
        "leaderboard": [asdict(row) for row in result.leaderboard],
        "config": {"search": cfg.search.model_dump(mode="json"), "train": cfg.train.model_dump(mode="json")},
    }
    _emit(args, doc, "search.json", artifacts)
    return 0


def _split_indices(dataset: Dataset, which: str, ratios, seed: int) -> List[int]:
    if which == "all":
        return list(range(len(dataset)))
    train, val, test = stratified_split(dataset.labels, ratios, seed)
    return {"train": train, "val": val, "test": test}[which]


def _eval(args, cfg: PipelineConfig, threads: int, artifacts: List[str]) -> int:
    net = load_checkpoint(args.checkpoint)
    dataset = load_manifest(args.manifest)
    if dataset.class_names != net.class_names:
        raise InvalidParams(f"manifest classes {dataset.class_names} differ from checkpoint classes {net.class_names}")
    trained_with = net.metadata.get("train", {})
    seed = args.seed if args.seed is not None else trained_with.get("seed", cfg.train.seed)
    ratios = tuple(trained_with.get("split_ratios", cfg.train.split_ratios))
    indices = _split_indices(dataset, args.split, ratios, seed)
    featurizer = Featurizer.from_description(net.metadata["features"]) if "features" in net.metadata else Featurizer(cfg.mel)
    corruption = None
    snr = args.noise_snr_db
    if snr is not None:
        pool = resolve_noise_pool(cfg.ablation.noise_source, featurizer.params.sample_rate_hz)
        corruption = NoiseCorruption(pool=pool, snr_db=snr, seed=seed)
    report = evaluate_model(net, dataset, indices, featurizer, _cache_dir(cfg), corruption, threads=threads)
    doc = {
        "command": "eval",
        **report.to_json(),
        "config": {"checkpoint": str(args.checkpoint), "split": args.split, "seed": seed, "noise_snr_db": snr},
    }
    _emit(args, doc, "eval.json", artifacts)
    return 0


def _stream(args, cfg: PipelineConfig, threads: int, artifacts: List[str]) -> int:
    cfg = cfg.with_updates("stream", window_s=args.window_s, hop_s=args.hop_s, realtime_pacing=args.realtime or None)
    net = load_checkpoint(args.checkpoint)
    featurizer = Featurizer.from_description(net.metadata["features"]) if "features" in net.metadata else Featurizer(cfg.mel)
    source = create_source(args.source, sample_rate_hz=args.rate, realtime=cfg.stream.realtime_pacing)
    if args.out is None:
        summary = classify_stream(source, net, cfg.stream, JsonLinesSink(sys.stdout), featurizer, net.class_names)
        logger.info("stream_summary", **summary.to_json())
        return 0
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    events = out / "events.jsonl"
    with events.open("w", encoding="utf-8") as fh:
        summary = classify_stream(source, net, cfg.stream, JsonLinesSink(fh), featurizer, net.class_names)
    artifacts.append(str(events))
    doc = {"command": "stream", **summary.to_json(), "config": {"stream": cfg.stream.model_dump(), "source": args.source}}
    _write_json(out / "stream_summary.json", doc, artifacts)
    return 0


def _gradcheck(args, cfg: PipelineConfig, threads: int, artifacts: List[str]) -> int:
    report = run_gradcheck(seed=args.seed if args.seed is not None else 0)
    doc = {"command": "gradcheck", **report, "config": {"seed": args.seed}}
    _emit(args, doc, "gradcheck.json", artifacts)
    if not report["passed"]:
        _error_line("GradientMismatch", f"max relative error {report['max_rel_error']:.3e} >= {report['tolerance']}")
        return 1
    return 0


def _report(args, cfg: PipelineConfig, threads: int, artifacts: List[str]) -> int:
    sources: Dict[str, dict] = {}
    for name in args.inputs:
        path = Path(name)
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except ValueError as e:
            raise InvalidParams(f"{path} is not valid JSON: {e}") from e
        sources[doc.get("command", path.stem) if isinstance(doc, dict) else path.stem] = doc
    summary = {
        name: {k: doc[k] for k in ("accuracy", "macro", "summary", "significance", "latency", "gain", "max_rel_error") if k in doc}
        for name, doc in sources.items()
        if isinstance(doc, dict)
    }
    merged = {"command": "report", "summary": summary, "sources": sources, "config": {"inputs": list(args.inputs)}}
    _emit(args, merged, "report.json", artifacts)
    return 0


def _ablation(args, cfg: PipelineConfig, threads: int, artifacts: List[str]) -> int:
    cfg = _seeded(cfg, args.seed).with_updates("ablation", noise_snr_db=args.noise_snr_db)
    dataset = load_manifest(args.manifest)
    net_config = cfg.network_for(dataset.n_classes)
    result = run_ablation(
        dataset, net_config, cfg.train, cfg.mel, cfg.features.normalization,
        cfg.ablation, seed=cfg.train.seed, cache_dir=_cache_dir(cfg), threads=threads,
    )
    doc = {"command": "ablation", **result}
    doc["config"] = {"ablation": cfg.ablation.model_dump(), "train": cfg.train.model_dump(mode="json")}
    _emit(args, doc, "ablation.json", artifacts)
    return 0


COMMANDS: Dict[str, Callable[..., int]] = {
    "synth": _synth,
    "featurize": _featurize,
    "train": _train,
    "crossval": _crossval,
    "search": _search,
    "eval": _eval,
    "stream": _stream,
    "gradcheck": _gradcheck,
    "report": _report,
    "ablation": _ablation,
}


def run(argv: Sequence[str]) -> CommandOutcome:
    """Parse argv and run one subcommand; never raises, always returns an exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv))
    except SystemExit as e:
        return CommandOutcome(int(e.code or 0))

    try:
        cfg = load_pipeline_config(args.config)
    except (ValidationError, ValueError) as e:
        parser.print_usage(sys.stderr)
        _error_line("InvalidConfig", str(e).replace("\n", " "))
        return CommandOutcome(2)
    except OSError as e:
        _error_line(getattr(e, "code", "IoFailure"), str(e))
        return CommandOutcome(1)

    threads = args.threads or load_settings().threads
    artifacts: List[str] = []
    logger.info("command_start", command=args.command, threads=threads)
    try:
        with threadpool_limits(limits=threads):
            code = COMMANDS[args.command](args, cfg, threads, artifacts)
    except ValidationError as e:
        parser.print_usage(sys.stderr)
        _error_line("InvalidConfig", str(e).replace("\n", " "))
        return CommandOutcome(2, artifacts)
    except (ChorusError, OSError) as e:
        logger.error("command_failed", command=args.command, error=str(e))
        _error_line(getattr(e, "code", None) or type(e).__name__, str(e))
        return CommandOutcome(1, artifacts)
    logger.info("command_complete", command=args.command, artifacts=artifacts)
    return CommandOutcome(code, artifacts)


def main(argv: Optional[Sequence[str]] = None) -> int:
    return run(sys.argv[1:] if argv is None else argv).exit_code
