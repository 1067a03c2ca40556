"""Simulator for delegated quantum computation with leaky and compromised resources."""

from ._kernels import BACKEND
from .core import ALL_ANGLES, Angle, Seed
from .sv import StateVector

__version__ = "0.1.0"

__all__ = ["ALL_ANGLES", "Angle", "BACKEND", "Seed", "StateVector", "__version__"]
