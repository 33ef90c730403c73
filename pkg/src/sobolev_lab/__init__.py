"""Spectral verification toolkit for anisotropic differential-operator equations with operator coefficients."""

__version__ = "0.1.0"
