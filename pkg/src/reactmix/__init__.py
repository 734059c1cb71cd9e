"""Reactive two-character motion synthesis with multi-hot label control."""

__version__ = "0.1.0"
