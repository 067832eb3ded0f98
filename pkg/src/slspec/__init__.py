"""Separation-logic specification generation, checking and refutation."""

__version__ = "0.1.0"
