"""Absorbing boundary conditions of type (L, N) for the Helmholtz equation:
closed-form reflection theory, 1D and 3D finite element experiments."""

__version__ = "0.1.0"
