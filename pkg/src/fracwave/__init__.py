"""Numerical probe of the well-posedness frontier for fractional-noise wave equations."""

__version__ = "0.1.0"
