import numpy as np
import pytest

from chorus.evaluation import CrossValConfig, run_cross_validation
from chorus.training import TrainConfig


def test_cross_validation_on_toy_set(toy_dataset, toy_mel, micro_config):
    train_config = TrainConfig(lr=0.01, batch_size=8, epochs=2, seed=0, augment=None, crop_s=0.32)
    config = CrossValConfig(k=3, baseline_epochs=50)
    result = run_cross_validation(toy_dataset, micro_config, train_config, toy_mel, config=config, seed=1)
    assert len(result.folds) == 3
    assert sum(f.n_test for f in result.folds) == len(toy_dataset)
    doc = result.to_json()
    assert set(doc["significance"]) == {"paired_t", "wilcoxon"}
    accuracies = [f.baseline_accuracy for f in result.folds]
    assert doc["summary"]["baseline_accuracy"]["mean"] == pytest.approx(np.mean(accuracies))
    assert doc["summary"]["baseline_accuracy"]["std"] == pytest.approx(np.std(accuracies, ddof=1))
    assert all(0.0 <= f.cnn_accuracy <= 1.0 for f in result.folds)


def test_ablation_reports_both_variants(tmp_path):
    from chorus.dsp.features import MelParams
    from chorus.evaluation import AblationConfig, run_ablation
    from chorus.nn import NetworkConfig
    from chorus.synth import SoundscapeConfig, default_benchmark_species, generate_dataset
    from chorus.training import load_manifest

    synth = SoundscapeConfig(species=default_benchmark_species()[:2], clips_per_species=6, clip_duration_s=1.0)
    dataset = load_manifest(generate_dataset(synth, tmp_path, seed=2))
    train_config = TrainConfig(lr=0.01, batch_size=4, epochs=1, seed=0, crop_s=1.0)
    result = run_ablation(
        dataset, NetworkConfig.micro(n_classes=2, n_mels=64), train_config, MelParams(),
        config=AblationConfig(noise_snr_db=0.0), seed=0,
    )
    assert result["split"] == {"train": 8, "val": 2, "test": 2}
    assert set(result["variants"]) == {"augmented", "plain"}
    for variant in result["variants"].values():
        assert set(variant) == {"clean", "noisy"}
    assert result["gain"]["clean"] == pytest.approx(
        result["variants"]["augmented"]["clean"]["accuracy"] - result["variants"]["plain"]["clean"]["accuracy"]
    )
