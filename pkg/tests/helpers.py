"""Shared test helpers."""

import numpy as np

from permdyn.lattice import (
    LatticeSpec,
    build_hopping_matrix,
    cdw_pattern,
    diagonalize,
    subsystem_cut,
)
from permdyn.quench import assemble_a, correlation_z, propagator


def random_complex(rng, n):
    return rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))


def pipeline_matrix(ns=None, t=0.0, dimension=1, lx=None, ly=1):
    """A(t) for the standard CDW/half-cut pipeline."""
    spec = LatticeSpec(dimension=dimension, lx=lx if lx is not None else ns, ly=ly)
    spectral = diagonalize(build_hopping_matrix(spec))
    prop = propagator(spectral, t)
    z = correlation_z(prop, cdw_pattern(spec), subsystem_cut(spec))
    return assemble_a(z)
