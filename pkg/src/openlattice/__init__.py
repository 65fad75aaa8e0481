"""Numerical laboratory for local dissipative quantum lattice systems."""
__version__ = "0.1.0"
