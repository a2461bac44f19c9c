"""Tight-binding magneto-optics on periodic lattices."""
__version__ = "0.1.0"
