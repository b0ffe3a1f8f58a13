from .soundscape import (
    MANIFEST_COLUMNS,
    CallPlacement,
    SoundscapeRender,
    generate_dataset,
    render_clip,
    synth_call,
    synth_clip,
)
from .species import SoundscapeConfig, SpeciesModel, default_benchmark_species

__all__ = [
    "MANIFEST_COLUMNS",
    "CallPlacement",
    "SoundscapeConfig",
    "SoundscapeRender",
    "SpeciesModel",
    "default_benchmark_species",
    "generate_dataset",
    "render_clip",
    "synth_call",
    "synth_clip",
]
