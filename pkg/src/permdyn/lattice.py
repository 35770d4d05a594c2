"""Hopping Hamiltonians for 1D chains and 2D square lattices (open boundaries),
their spectra, the CDW rich-site pattern, and the half-system subsystem cut.

Sites are indexed 0-based row-major: the 1-based lattice coordinate (jx, jy)
maps to (jx - 1) + lx * (jy - 1).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np


class Dimension(IntEnum):
    ONE_D = 1
    TWO_D = 2


@dataclass(frozen=True)
class LatticeSpec:
    """Lattice geometry plus the hopping energy J (units of energy)."""

    dimension: Dimension
    lx: int
    ly: int = 1
    j: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "dimension", Dimension(self.dimension))
        if self.lx < 2:
            raise ValueError(f"lx must be >= 2, got {self.lx}")
        if self.ly < 1:
            raise ValueError(f"ly must be >= 1, got {self.ly}")
        if self.dimension == Dimension.ONE_D and self.ly != 1:
            raise ValueError("1D lattices require ly = 1")
        if self.ns % 2 != 0:
            raise ValueError(f"site count must be even for half filling, got {self.ns}")

    @property
    def ns(self) -> int:
        return self.lx * self.ly


@dataclass(frozen=True)
class SpectralData:
    """Eigenenergies (ascending) and orthonormal eigenvectors of the hopping matrix.

    Column k of `modes` is the k-th eigenvector.
    """

    energies: np.ndarray
    modes: np.ndarray


def site_index(spec: LatticeSpec, jx: int, jy: int = 1) -> int:
    """0-based site index of the 1-based lattice coordinate (jx, jy)."""
    if not (1 <= jx <= spec.lx and 1 <= jy <= spec.ly):
        raise ValueError(f"coordinate ({jx}, {jy}) outside the {spec.lx}x{spec.ly} lattice")
    return (jx - 1) + spec.lx * (jy - 1)


def build_hopping_matrix(spec: LatticeSpec) -> np.ndarray:
    """Real symmetric Ns x Ns matrix with -J on nearest-neighbor bonds."""
    ns = spec.ns
    h = np.zeros((ns, ns))
    for jy in range(1, spec.ly + 1):
        for jx in range(1, spec.lx + 1):
            a = site_index(spec, jx, jy)
            if jx < spec.lx:
                b = site_index(spec, jx + 1, jy)
                h[a, b] = h[b, a] = -spec.j
            if jy < spec.ly:
                b = site_index(spec, jx, jy + 1)
                h[a, b] = h[b, a] = -spec.j
    return h


def diagonalize(h: np.ndarray) -> SpectralData:
    """Dense real-symmetric eigendecomposition, energies in ascending order."""
    h = np.asarray(h, dtype=float)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {h.shape}")
    if not np.allclose(h, h.T, rtol=0.0, atol=1e-12):
        raise ValueError("hopping matrix is not symmetric")
    try:
        energies, modes = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(f"eigendecomposition failed: {exc}") from exc
    return SpectralData(energies=energies, modes=modes)


def cdw_pattern(spec: LatticeSpec) -> np.ndarray:
    """0-based rich-site indices of the alternating CDW state (Ns/2 sites, ascending).

    1D: every second site (1-based positions 2, 4, ...).  2D: the checkerboard
    with (jx + jy) odd; requires even lx and ly.
    """
    if spec.dimension == Dimension.ONE_D:
        return np.arange(1, spec.ns, 2)
    if spec.lx % 2 != 0 or spec.ly % 2 != 0:
        raise ValueError("2D CDW pattern requires even lx and ly")
    rich = [
        site_index(spec, jx, jy)
        for jy in range(1, spec.ly + 1)
        for jx in range(1, spec.lx + 1)
        if (jx + jy) % 2 == 1
    ]
    return np.array(sorted(rich))


def subsystem_cut(spec: LatticeSpec) -> np.ndarray:
    """0-based site indices of the half-system subsystem (Ns/2 sites, ascending).

    1D: the left half.  2D: all sites with jx <= lx/2 (cut perpendicular to x);
    requires even lx.
    """
    if spec.dimension == Dimension.ONE_D:
        return np.arange(spec.ns // 2)
    if spec.lx % 2 != 0:
        raise ValueError("2D half cut requires even lx")
    sites = [
        site_index(spec, jx, jy)
        for jy in range(1, spec.ly + 1)
        for jx in range(1, spec.lx // 2 + 1)
    ]
    return np.array(sorted(sites))
