"""Homogenization of Stokes/Navier-Stokes flow in perforated domains."""

__version__ = "0.1.0"
