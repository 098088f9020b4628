"""Markovianity analysis of a spin emitter coupled to an XY spin chain."""

from .model import EnvInitialState, ModeBasis, SystemSpec, diagonalize_environment, occupations
from .channel import ChannelTrajectory, QubitChannelSample, degree, rates_analytic, robustness_trajectory

__all__ = [
    "SystemSpec",
    "EnvInitialState",
    "ModeBasis",
    "diagonalize_environment",
    "occupations",
    "ChannelTrajectory",
    "QubitChannelSample",
    "rates_analytic",
    "robustness_trajectory",
    "degree",
]
