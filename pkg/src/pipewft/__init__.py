"""Front tracking for gas flow in pipes with varying cross-section."""

__version__ = "0.1.0"
