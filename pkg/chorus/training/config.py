from __future__ import annotations

from typing import Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from chorus.augment.policy import AugmentConfig


class TrainConfig(BaseModel):
    """Optimization hyperparameters for one training run."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    optimizer: Literal["adam", "rmsprop"] = "adam"
    lr: float = Field(1e-3, gt=0.0)
    batch_size: int = Field(16, ge=1)
    epochs: int = Field(10, ge=1)
    seed: int = 42
    augment: Optional[AugmentConfig] = Field(default_factory=AugmentConfig)
    crop_s: float = Field(4.0, gt=0.0)
    split_ratios: Tuple[float, float, float] = (0.7, 0.15, 0.15)

    @model_validator(mode="after")
    def _check_ratios(self) -> "TrainConfig":
        if any(r <= 0 for r in self.split_ratios):
            raise ValueError(f"split_ratios must be positive, got {self.split_ratios}")
        if abs(sum(self.split_ratios) - 1.0) > 1e-9:
            raise ValueError(f"split_ratios must sum to 1, got {sum(self.split_ratios)}")
        return self
