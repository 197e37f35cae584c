"""Finite-truncation scattering theory of warped-convolution deformed wedge-local models."""

__version__ = "0.1.0"
