"""Pipeline configuration: one JSON document with a section per stage."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Optional, Union

from pydantic import BaseModel, ConfigDict, Field

from chorus.core.errors import IoFailure
from chorus.dsp.features import FeatureConfig, MelParams
from chorus.evaluation.crossval import AblationConfig, CrossValConfig
from chorus.nn.model import NetworkConfig
from chorus.streaming.windows import StreamConfig
from chorus.synth.species import SoundscapeConfig
from chorus.training.config import TrainConfig
from chorus.training.search import SearchSpace


class PipelineConfig(BaseModel):
    """Every section is optional in the file; unknown keys are rejected."""

    model_config = ConfigDict(extra="forbid")

    mel: MelParams = Field(default_factory=MelParams)
    features: FeatureConfig = Field(default_factory=FeatureConfig)
    network: Optional[NetworkConfig] = None  # n_classes / n_mels default from the data
    train: TrainConfig = Field(default_factory=TrainConfig)
    synth: SoundscapeConfig = Field(default_factory=SoundscapeConfig)
    stream: StreamConfig = Field(default_factory=StreamConfig)
    search: SearchSpace = Field(default_factory=SearchSpace)
    crossval: CrossValConfig = Field(default_factory=CrossValConfig)
    ablation: AblationConfig = Field(default_factory=AblationConfig)

    def network_for(self, n_classes: int) -> NetworkConfig:
        """Network section with the class count and mel bins taken from the data and mel section."""
        base = self.network or NetworkConfig()
        return base.model_copy(update={"n_classes": n_classes, "n_mels": self.mel.n_mels})

    def with_updates(self, section: str, **values) -> "PipelineConfig":
        """Copy with some fields of one section replaced (command-line overrides)."""
        current = getattr(self, section)
        merged = current.model_dump() | {k: v for k, v in values.items() if v is not None}
        return self.model_copy(update={section: type(current).model_validate(merged)})


def load_pipeline_config(path: Optional[Union[str, Path]] = None) -> PipelineConfig:
    if path is None:
        return PipelineConfig()
    p = Path(path)
    try:
        raw = p.read_text(encoding="utf-8")
    except OSError as e:
        raise IoFailure(f"could not read config {p}: {e}") from e
    return PipelineConfig.model_validate(json.loads(raw))
