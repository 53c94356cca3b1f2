"""Genetic algorithms with deterministic population shrinkage on trap functions."""

__version__ = "0.1.0"
