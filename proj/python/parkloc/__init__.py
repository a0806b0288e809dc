"""Parking spot localization from detection streams.

Thin package around the compiled extension: geometry (rotated-quad IoU,
adjustment triplets), the stationary-vehicle tracker, triplet grid-search
fitting, per-frame occupancy, AR/AP metrics and the synthetic scenario
generator.
"""

from ._core import *  # noqa: F401,F403
from ._core import __doc__ as _core_doc

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
