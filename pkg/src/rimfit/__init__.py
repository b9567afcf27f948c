"""Ellipse rim estimation for plates and bowls from edges plus detector boxes."""

from rimfit.geometry import Ellipse, DegenerateConfiguration, TooFewPoints
from rimfit.config import Config, HyperParams

__all__ = [
    "Config",
    "DegenerateConfiguration",
    "Ellipse",
    "HyperParams",
    "TooFewPoints",
]
