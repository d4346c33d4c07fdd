"""Weakly supervised one-shot detection with attention similarity networks."""

__version__ = "1.0.0"
