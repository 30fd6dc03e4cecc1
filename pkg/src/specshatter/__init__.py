"""Spectral stability of randomly perturbed matrices, with Monte Carlo checks."""

__version__ = "0.1.0"
