"""Numerical laboratory for harmonic analysis of standard semigroups on tracial matrix algebras."""

__version__ = "0.1.0"
