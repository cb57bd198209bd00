"""Disentangled link prediction for heterophilic graphs."""

__version__ = "0.1.0"
