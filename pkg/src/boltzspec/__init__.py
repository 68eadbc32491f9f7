"""Spectral solvers for the homogeneous, isotropic relativistic Boltzmann
equation of massless fermions, with a fixed chemical-equilibrium basis and an
adaptive basis that tracks effective temperature and fugacity."""

__version__ = "0.1.0"
