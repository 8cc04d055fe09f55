"""Biharmonic heat equation with dynamic boundary conditions on an annulus."""

__version__ = "0.1.0"
