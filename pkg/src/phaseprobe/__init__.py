"""Numerics for energy-constrained single-mode phase estimation."""

__version__ = "0.1.0"
