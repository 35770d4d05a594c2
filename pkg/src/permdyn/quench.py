"""Single-particle propagator, the correlation matrix Z(t), and the Ns x Ns
block matrix A(t) whose permanent equals exp(-S2)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import LatticeSpec, SpectralData, cdw_pattern, subsystem_cut


@dataclass(frozen=True)
class Propagator:
    """Time-evolution matrix Y(t); unitary and symmetric (Y = Y^T)."""

    t: float
    matrix: np.ndarray


def propagator(spectral: SpectralData, t: float) -> Propagator:
    """Y(t) = X exp(-i * eps * t) X^T built from the spectral data."""
    if t == 0.0:
        # exact identity: keeps A(0) a strict 0/1 matrix and S2(0) exactly zero
        return Propagator(t=0.0, matrix=np.eye(len(spectral.energies), dtype=complex))
    phases = np.exp(-1j * spectral.energies * t)
    y = (spectral.modes * phases) @ spectral.modes.T
    return Propagator(t=float(t), matrix=y)


def correlation_z(prop: Propagator, rich_sites: np.ndarray, cut_sites: np.ndarray) -> np.ndarray:
    """Hermitian (Ns/2) x (Ns/2) matrix z_ij = sum_{l in cut} conj(Y[r_i, l]) Y[r_j, l].

    Rows and columns follow the rich-site order of `rich_sites`.
    """
    rich = np.asarray(rich_sites)
    cut = np.asarray(cut_sites)
    ns = prop.matrix.shape[0]
    if len(rich) != ns // 2 or len(cut) != ns // 2:
        raise ValueError(
            f"expected {ns // 2} rich sites and cut sites, got {len(rich)} and {len(cut)}"
        )
    b = prop.matrix[np.ix_(rich, cut)]
    return np.conj(b) @ b.T


def assemble_a(z: np.ndarray) -> np.ndarray:
    """Block matrix A = [[Z, I - Z], [I - Z, Z]]; rows and columns each sum to 1."""
    z = np.asarray(z)
    if z.ndim != 2 or z.shape[0] != z.shape[1]:
        raise ValueError(f"Z must be square, got shape {z.shape}")
    eye = np.eye(z.shape[0])
    return np.block([[z, eye - z], [eye - z, z]])


def entanglement_matrix(spec: LatticeSpec, spectral: SpectralData, t: float) -> np.ndarray:
    """A(t) for the standard CDW pattern and half cut of `spec`."""
    prop = propagator(spectral, t)
    z = correlation_z(prop, cdw_pattern(spec), subsystem_cut(spec))
    return assemble_a(z)
