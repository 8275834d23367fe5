"""Isospectral magnetic covers built from almost-conjugate subgroups."""

__version__ = "0.1.0"
