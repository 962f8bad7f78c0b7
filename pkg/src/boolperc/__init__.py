"""Poisson Boolean percolation on Ahlfors-regular metric measure spaces."""

__version__ = "0.1.0"
