"""Lattice construction, spectra (with the closed-form open-chain oracle),
CDW pattern, and subsystem cut."""

import numpy as np
import pytest

from permdyn.lattice import (
    Dimension,
    LatticeSpec,
    build_hopping_matrix,
    cdw_pattern,
    diagonalize,
    site_index,
    subsystem_cut,
)


def open_chain_energies(ns, j=1.0):
    """Closed form for the open chain: -2J cos(k pi / (Ns + 1)), k = 1..Ns."""
    k = np.arange(1, ns + 1)
    return np.sort(-2.0 * j * np.cos(k * np.pi / (ns + 1)))


class TestLatticeSpec:
    def test_ns(self):
        assert LatticeSpec(dimension=1, lx=6).ns == 6
        assert LatticeSpec(dimension=2, lx=4, ly=3).ns == 12

    def test_rejects_odd_ns(self):
        with pytest.raises(ValueError, match="even"):
            LatticeSpec(dimension=1, lx=5)
        with pytest.raises(ValueError, match="even"):
            LatticeSpec(dimension=2, lx=3, ly=3)

    def test_rejects_small_lx(self):
        with pytest.raises(ValueError, match="lx"):
            LatticeSpec(dimension=1, lx=1)

    def test_one_d_requires_ly_one(self):
        with pytest.raises(ValueError, match="ly"):
            LatticeSpec(dimension=1, lx=4, ly=2)

    def test_site_index_row_major(self):
        spec = LatticeSpec(dimension=2, lx=4, ly=2)
        assert site_index(spec, 1, 1) == 0
        assert site_index(spec, 4, 1) == 3
        assert site_index(spec, 1, 2) == 4
        with pytest.raises(ValueError):
            site_index(spec, 5, 1)


class TestHoppingMatrix:
    def test_two_sites(self):
        h = build_hopping_matrix(LatticeSpec(dimension=1, lx=2))
        assert np.array_equal(h, [[0.0, -1.0], [-1.0, 0.0]])

    def test_chain_is_tridiagonal(self):
        j = 0.7
        h = build_hopping_matrix(LatticeSpec(dimension=1, lx=4, j=j))
        expected = -j * (np.eye(4, k=1) + np.eye(4, k=-1))
        assert np.array_equal(h, expected)

    def test_square_2x2(self):
        h = build_hopping_matrix(LatticeSpec(dimension=2, lx=2, ly=2))
        assert np.trace(h) == 0.0
        assert np.all(np.count_nonzero(h, axis=1) == 2)  # each site has 2 neighbors
        assert np.count_nonzero(h) == 8  # 4 bonds, counted twice

    def test_entries_and_symmetry(self):
        for spec in (LatticeSpec(dimension=1, lx=10, j=2.5),
                     LatticeSpec(dimension=2, lx=4, ly=3, j=2.5)):
            h = build_hopping_matrix(spec)
            assert np.array_equal(h, h.T)
            assert set(np.unique(h)) <= {0.0, -spec.j}
            assert np.trace(h) == 0.0


class TestDiagonalize:
    def test_three_site_chain(self):
        # odd site count is fine for the bare solver (LatticeSpec gates it upstream)
        h = -1.0 * (np.eye(3, k=1) + np.eye(3, k=-1))
        spectral = diagonalize(h)
        assert np.allclose(spectral.energies, [-np.sqrt(2), 0.0, np.sqrt(2)], atol=1e-12)

    @pytest.mark.parametrize("ns", [4, 16, 50, 200])
    def test_chain_closed_form(self, ns):
        spectral = diagonalize(build_hopping_matrix(LatticeSpec(dimension=1, lx=ns)))
        assert np.allclose(spectral.energies, open_chain_energies(ns), atol=1e-10)

    def test_square_2x2_energies(self):
        spectral = diagonalize(build_hopping_matrix(LatticeSpec(dimension=2, lx=2, ly=2)))
        assert np.allclose(spectral.energies, [-2.0, 0.0, 0.0, 2.0], atol=1e-12)

    @pytest.mark.parametrize("spec", [LatticeSpec(dimension=1, lx=200),
                                      LatticeSpec(dimension=2, lx=10, ly=10)])
    def test_mode_invariants(self, spec):
        h = build_hopping_matrix(spec)
        spectral = diagonalize(h)
        ns = spec.ns
        assert np.max(np.abs(spectral.modes.T @ spectral.modes - np.eye(ns))) < 1e-12
        rebuilt = (spectral.modes * spectral.energies) @ spectral.modes.T
        assert np.max(np.abs(rebuilt - h)) < 1e-12
        assert abs(spectral.energies.sum()) < 1e-10
        assert np.all(np.diff(spectral.energies) >= 0)

    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError, match="symmetric"):
            diagonalize(np.array([[0.0, 1.0], [2.0, 0.0]]))


class TestCdwPattern:
    def test_chain_even_positions(self):
        # 1-based rich sites {2, 4} -> 0-based {1, 3}
        assert np.array_equal(cdw_pattern(LatticeSpec(dimension=1, lx=4)), [1, 3])

    def test_square_2x2(self):
        # 1-based rich coordinates (2,1) and (1,2) -> 0-based indices 1 and 2
        assert np.array_equal(cdw_pattern(LatticeSpec(dimension=2, lx=2, ly=2)), [1, 2])

    def test_square_checkerboard(self):
        spec = LatticeSpec(dimension=2, lx=6, ly=4)
        rich = cdw_pattern(spec)
        for idx in rich:
            jx, jy = idx % spec.lx + 1, idx // spec.lx + 1
            assert (jx + jy) % 2 == 1

    @pytest.mark.parametrize("spec", [LatticeSpec(dimension=1, lx=12),
                                      LatticeSpec(dimension=2, lx=4, ly=4),
                                      LatticeSpec(dimension=2, lx=6, ly=2)])
    def test_half_filling(self, spec):
        rich = cdw_pattern(spec)
        assert len(rich) == spec.ns // 2
        assert np.all(np.diff(rich) > 0)
        assert rich[0] >= 0 and rich[-1] < spec.ns

    def test_rejects_odd_sides_in_2d(self):
        with pytest.raises(ValueError, match="even"):
            cdw_pattern(LatticeSpec(dimension=2, lx=3, ly=4))
        with pytest.raises(ValueError, match="even"):
            cdw_pattern(LatticeSpec(dimension=2, lx=4, ly=3))


class TestSubsystemCut:
    def test_chain_left_half(self):
        assert np.array_equal(subsystem_cut(LatticeSpec(dimension=1, lx=6)), [0, 1, 2])

    def test_square_4x2(self):
        # jx in {1, 2} for every jy
        assert np.array_equal(subsystem_cut(LatticeSpec(dimension=2, lx=4, ly=2)), [0, 1, 4, 5])

    @pytest.mark.parametrize("spec", [LatticeSpec(dimension=1, lx=8),
                                      LatticeSpec(dimension=2, lx=4, ly=4),
                                      LatticeSpec(dimension=2, lx=12, ly=10)])
    def test_half_size_and_complement(self, spec):
        cut = subsystem_cut(spec)
        assert len(cut) == spec.ns // 2
        assert len(set(cut.tolist()) | set(range(spec.ns)) - set(cut.tolist())) == spec.ns

    def test_rejects_odd_lx_in_2d(self):
        with pytest.raises(ValueError, match="even"):
            subsystem_cut(LatticeSpec(dimension=2, lx=3, ly=2))
