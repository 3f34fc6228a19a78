"""Small target motion detection in cluttered image sequences.

Implements the directionally selective STMD detector (DSTMD) and its
non-directional baseline (ESTMD): streaming four-layer visual pipelines
that turn grayscale frame sequences into small-target motion responses,
plus a synthetic stimulus generator and an evaluation harness for tuning
curves, direction-estimation accuracy and ROC sweeps.
"""

from .config import PipelineConfig
from .dstmd import DirectionalResponse, DstmdPipeline, KernelSet, MedullaState
from .estmd import EstmdPipeline, EstmdResponse
from .estimation import (
    Detection,
    UndefinedDirectionError,
    detect,
    estimate_direction,
    population_vector,
    select_target_pixels,
)
from .estimators import DSTMD, ESTMD
from .stimulus import (
    GroundTruth,
    ImageBackground,
    LinearPath,
    SinusoidPath,
    SolidBackground,
    StimulusSpec,
    TargetSpec,
    render_sequence,
    weber_contrast,
)

__version__ = "0.1.0"

__all__ = [
    "PipelineConfig",
    "DstmdPipeline",
    "EstmdPipeline",
    "DirectionalResponse",
    "EstmdResponse",
    "MedullaState",
    "KernelSet",
    "DSTMD",
    "ESTMD",
    "Detection",
    "UndefinedDirectionError",
    "detect",
    "select_target_pixels",
    "population_vector",
    "estimate_direction",
    "StimulusSpec",
    "TargetSpec",
    "LinearPath",
    "SinusoidPath",
    "SolidBackground",
    "ImageBackground",
    "GroundTruth",
    "render_sequence",
    "weber_contrast",
    "__version__",
]
