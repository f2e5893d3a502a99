"""Constrained directional enhancement filter toolkit."""

from .frame import BlockGrid, Frame, Plane, SkipMap, partition
from .direction import DirectionResult, search_direction, search_direction_oracle
from .filter import adjust_primary_strength, constraint, filter_pixel, taps_for

__version__ = "0.1.0"
