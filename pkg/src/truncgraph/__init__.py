"""Graph recovery for Gaussian data zero-inflated by double truncation."""

__version__ = "0.1.0"
