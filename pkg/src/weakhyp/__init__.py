"""Frequency-space simulator and estimate verifier for weakly hyperbolic
Cauchy problems with time-dependent coefficients."""

__version__ = "0.1.0"
