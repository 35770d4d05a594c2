"""Renyi-2 entanglement entropy dynamics of free lattice bosons via Monte Carlo matrix permanents."""

__version__ = "0.1.0"

from ._kernels import available_backends, backend_name
