"""Spectral pooling and spectral filter parametrization for CNNs, in numpy."""

__version__ = "0.1.0"
