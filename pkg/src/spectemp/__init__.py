"""Hybrid spectro-temporal features for vibration-based condition monitoring.

The pipeline turns labelled vibration trials into classifier-ready
representations: descriptor-based class-overlap analysis, a data-driven
search for the sampling interval, per-window spectral features, and
cross-validated classification with a stability report.
"""

from .config import PipelineConfig, load_config
from .core_signal import TimeSeries, UniformSeries, WindowSet, resample, trim, windowize
from .descriptors import (
    DescriptorParams,
    DescriptorVector,
    descriptor_vector,
    overlap_omega,
)
from .fusion import Representation, build_base, build_hstf, build_sta
from .spectral import FeatureConfig, ceemdan, stft, window_features
from .synthgen import BeamConfig, generate
from .tau_select import TauParams, common_tau, select_intervals, sweep_tau

__version__ = "0.1.0"

__all__ = [
    "PipelineConfig",
    "load_config",
    "TimeSeries",
    "UniformSeries",
    "WindowSet",
    "resample",
    "trim",
    "windowize",
    "DescriptorParams",
    "DescriptorVector",
    "descriptor_vector",
    "overlap_omega",
    "Representation",
    "build_base",
    "build_sta",
    "build_hstf",
    "FeatureConfig",
    "stft",
    "ceemdan",
    "window_features",
    "BeamConfig",
    "generate",
    "TauParams",
    "select_intervals",
    "sweep_tau",
    "common_tau",
    "__version__",
]
