"""Radiation reaction in the quantum-Langevin framework: baths, response, correlations and dynamics."""

__version__ = "0.1.0"
