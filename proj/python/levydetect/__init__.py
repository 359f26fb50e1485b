"""CUSUM detection of a change in the law of a Levy process."""

from ._core import *  # noqa: F401,F403
from ._core import (
    ChangeModel,
    DetectorConfig,
    JumpDensity,
    LevySpec,
    Regime,
    RngStream,
    SimulationSettings,
    build_change_model,
    estimate_arl,
)

__all__ = [
    "ChangeModel",
    "DetectorConfig",
    "JumpDensity",
    "LevySpec",
    "Regime",
    "RngStream",
    "SimulationSettings",
    "build_change_model",
    "estimate_arl",
]
