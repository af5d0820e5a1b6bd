"""Flatness-based control of a two-axis platform driven by three pneumatic muscles."""

__version__ = "0.1.0"
