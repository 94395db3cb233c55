"""Numerical lab for minimum output Renyi entropy of random unitary channels."""

__version__ = "0.1.0"
