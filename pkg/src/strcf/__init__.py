"""Spatial-temporal regularized correlation filter tracking."""

from .errors import StrcfError
from .features import FeatureConfig, Region
from .solver import AdmmParams, learn, objective
from .tracker import TrackerConfig, TrackerState, UpdateMode, detect, init, step

__all__ = [
    "AdmmParams",
    "FeatureConfig",
    "Region",
    "StrcfError",
    "TrackerConfig",
    "TrackerState",
    "UpdateMode",
    "detect",
    "init",
    "learn",
    "objective",
    "step",
]
