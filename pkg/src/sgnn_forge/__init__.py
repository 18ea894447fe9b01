"""Deterministic-by-seed generators for mechanistic synthetic datasets."""

__version__ = "0.1.0"
