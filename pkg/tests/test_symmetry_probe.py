"""
Unit tests for bakerspec symmetry probe
"""

import pytest
import sys
import os

import numpy as np

# Add src directory to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from errors import InvalidSpecError, PreconditionError
from linalg_core import SpectrumData, eigendecompose
from quantizer import build_map, preset_spec
from rmt_ensembles import haar_unitary, poisson_angles
from spectral_stats import mean_gap_ratio
from symmetry_probe import (
    MINUS, PLUS, CommutatorStructure, bv_commutator_structure, classification_operator, classify_eigenvectors,
    fourier_reflection, fourier_reflection_scan, reflection_defect, reflection_operator,
    split_statistics, symmetry_report, tr_defect,
)


def reflection_symmetric_unitary(N, rng):
    """Unitary diagonal in the even/odd combinations of |x⟩ and |N−1−x⟩"""
    basis = np.zeros((N, N), dtype=complex)
    for i in range(N // 2):
        basis[i, 2 * i] = basis[N - 1 - i, 2 * i] = 1 / np.sqrt(2)
        basis[i, 2 * i + 1] = 1 / np.sqrt(2)
        basis[N - 1 - i, 2 * i + 1] = -1 / np.sqrt(2)
    phases = np.exp(1j * np.sort(rng.uniform(0, 2 * np.pi, N)))
    return (basis * phases) @ basis.conj().T


class TestReflections:
    """Test cases for reflection operators and defects"""

    def test_reflection_is_involution(self):
        """Test R_N² = I"""
        R = reflection_operator(7)
        assert np.allclose(R @ R, np.eye(7))
        assert R[0, 6] == 1

    def test_fourier_reflection_offsets(self):
        """Test ω is taken mod 1 and (F^{½,½})² = −R_N"""
        N = 8
        assert np.allclose(fourier_reflection(N, (0.5, 0.5)), -reflection_operator(N), atol=1e-12)
        assert np.allclose(fourier_reflection(N, (1.5, -0.5)), fourier_reflection(N, (0.5, 0.5)))

    @pytest.mark.parametrize('preset', ['BV', 'Sar'])
    def test_tr_defect_vanishes(self, preset):
        """Test the fixed-offset families are time-reversal symmetric"""
        assert tr_defect(preset_spec(preset, 3, 12)) < 1e-10

    def test_tr_defect_generic(self):
        """Test unequal offsets break time reversal while block phases alone do not"""
        assert tr_defect(preset_spec('Gen0.2,0.7', 2, 12)) > 1e-3
        assert tr_defect(preset_spec('BV', 2, 12, alpha=[0.0, 0.3])) < 1e-10

    def test_saraceno_commutes_with_reflection(self):
        """Test the Saraceno map commutes with R_N"""
        spec = preset_spec('Sar', 2, 16)
        assert reflection_defect(build_map(spec), reflection_operator(16)) < 1e-10

    def test_haar_does_not_commute(self):
        """Test a Haar unitary has a large reflection defect"""
        assert reflection_defect(haar_unitary(16, seed=0), reflection_operator(16)) > 0.5

    def test_scan_finds_saraceno_symmetry(self):
        """Test the scan minimum sits at ω = (½, ½) for the Saraceno map"""
        U = build_map(preset_spec('Sar', 2, 12))
        frame = fourier_reflection_scan(U, grid=4, jobs=2)
        assert len(frame) == 16
        assert list(frame.columns) == ['omega1', 'omega2', 'defect']
        best = frame.loc[frame['defect'].idxmin()]
        assert (best['omega1'], best['omega2']) == (0.5, 0.5)
        assert best['defect'] < 1e-10

    def test_explicit_grid(self):
        """Test explicit ω pairs are scanned in order"""
        U = haar_unitary(6, seed=1)
        frame = fourier_reflection_scan(U, grid=[(0.1, 0.2), (0.3, 0.4)])
        assert frame['omega1'].tolist() == [0.1, 0.3]

    def test_empty_grid(self):
        """Test empty grids are rejected"""
        with pytest.raises(PreconditionError):
            fourier_reflection_scan(haar_unitary(4, seed=0), grid=[])


class TestEigenvectorClasses:
    """Test cases for eigenvector classification"""

    def test_exact_symmetry(self, rng):
        """Test a reflection-symmetric unitary splits into two exact halves"""
        N = 10
        U = reflection_symmetric_unitary(N, rng)
        spectrum = eigendecompose(U, with_vectors=True)
        classes = classify_eigenvectors(spectrum, reflection_operator(N))
        assert classes.plus.size == 5
        assert classes.minus.size == 5
        assert classes.mse < 1e-10
        assert classes.max_imaginary < 1e-10
        assert classes.cluster_fraction(0.99) == 1.0

    def test_tie_counts_as_plus(self):
        """Test a zero expectation value lands in S₊"""
        vectors = np.array([[1, 0], [0, 1]], dtype=complex)
        spectrum = SpectrumData(angles=np.array([0.0, 1.0]), eigenvectors=vectors)
        R = np.array([[0, 1], [1, 0]], dtype=complex)
        classes = classify_eigenvectors(spectrum, R)
        assert classes.labels.tolist() == [PLUS, PLUS]
        assert classes.mse == pytest.approx(1.0)

    def test_needs_vectors(self):
        """Test classification without eigenvectors is rejected"""
        with pytest.raises(PreconditionError):
            classify_eigenvectors(poisson_angles(4, seed=0), reflection_operator(4))

    def test_classification_operator(self):
        """Test the natural candidate per family"""
        assert np.allclose(classification_operator(preset_spec('Sar', 2, 8)), reflection_operator(8))
        assert np.allclose(classification_operator(preset_spec('BV', 2, 8)), fourier_reflection(8))

    def test_to_frame(self, rng):
        """Test the per-eigenvector table layout"""
        U = reflection_symmetric_unitary(6, rng)
        classes = classify_eigenvectors(eigendecompose(U, with_vectors=True), reflection_operator(6))
        frame = classes.to_frame()
        assert list(frame.columns) == ['index', 'angle', 'overlap', 'overlap_imag', 'class']
        assert set(frame['class']) == {PLUS, MINUS}


class TestSplitStatistics:
    """Test cases for per-class level statistics"""

    def test_alternating_labels(self):
        """Test each class gets its own spacings and gap ratio"""
        spectrum = poisson_angles(40, seed=2)
        labels = np.tile([PLUS, MINUS], 20)
        stats = split_statistics(spectrum, labels)
        assert set(stats) == {PLUS, MINUS}
        assert stats[PLUS].count == 20
        assert stats[MINUS].spacings.spacings.sum() == pytest.approx(20.0)
        assert 0 < stats[PLUS].mean_gap_ratio < 1
        assert stats[PLUS].sff_slope is None

    def test_small_class(self):
        """Test a class with fewer than 3 levels is rejected"""
        labels = np.array([PLUS] * 8 + [MINUS] * 2)
        with pytest.raises(PreconditionError):
            split_statistics(poisson_angles(10, seed=0), labels)

    def test_label_count(self):
        """Test one label per level is required"""
        with pytest.raises(PreconditionError):
            split_statistics(poisson_angles(10, seed=0), [PLUS] * 9)

    def test_with_sff(self):
        """Test per-class SFF slopes are filled in on request"""
        spectrum = poisson_angles(200, seed=1)
        stats = split_statistics(spectrum, np.tile([PLUS, MINUS], 100), with_sff=True, A=2)
        assert np.isfinite(stats[MINUS].sff_slope)


class TestCommutatorStructure:
    """Test cases for the Balazs-Voros commutator structure"""

    @pytest.mark.parametrize('A,N', [(2, 128), (3, 129)])
    def test_structure(self, A, N):
        """Test vanishing rows and large entries confined to the special columns"""
        structure = bv_commutator_structure(A, N)
        assert structure.zero_row_max < 1e-12
        assert structure.largest_position[1] in structure.special_columns
        assert min(structure.largest_position[0], N - structure.largest_position[0]) < N / 10
        assert structure.large_entry_positions
        assert structure.max_large_row_distance < N / 10
        assert structure.passes()

    def test_far_row_fails(self):
        """Test a large entry away from x ≈ 0, N fails the structure check"""
        near = CommutatorStructure(A=2, N=100, zero_row_max=0.0, max_small_entry=0.01, largest_entry=0.5,
                                   largest_position=(1, 50), large_entry_positions=[(1, 50), (99, 0)])
        far = CommutatorStructure(A=2, N=100, zero_row_max=0.0, max_small_entry=0.01, largest_entry=0.5,
                                  largest_position=(1, 50), large_entry_positions=[(1, 50), (47, 0)])
        assert near.max_large_row_distance == 1
        assert near.passes(bound=10.0)
        assert far.max_large_row_distance == 47
        assert not far.passes(bound=10.0)

    def test_divisibility(self):
        """Test A ∤ N is rejected"""
        with pytest.raises(InvalidSpecError):
            bv_commutator_structure(3, 64)


class TestSymmetryReport:
    """Test cases for the one-map report"""

    def test_saraceno_report(self):
        """Test the summary of a Saraceno map"""
        report = symmetry_report(preset_spec('Sar', 2, 12), grid=2)
        summary = report.summary()
        assert summary['tr_defect'] < 1e-10
        assert summary['min_reflection_omega'] == [0.5, 0.5]
        assert summary['plus'] + summary['minus'] == 12
        assert report.class_labels.size == 12

    def test_without_classes(self):
        """Test classification can be skipped"""
        report = symmetry_report(preset_spec('BV', 2, 8), grid=2, classify=False)
        assert report.classes is None
        assert report.mse is None
        assert 'plus' not in report.summary()


def dims_near(A, count=10, center=1000):
    """count consecutive multiples of A around center"""
    start = center // A - count // 2
    return [A * k for k in range(start, start + count)]


class TestSymmetryAtDeskScale:
    """Test cases for the symmetry results at N near 100 and 1000"""

    def test_generic_half_offset_commutes_with_fourier_square(self):
        """Test Gen^{½,0} commutes with (F^{0,0})²"""
        U = build_map(preset_spec('Gen0.5,0', 2, 100))
        assert reflection_defect(U, fourier_reflection(100)) < 1e-10 * 100

    @pytest.mark.slow
    @pytest.mark.parametrize('preset', ['BV', 'Gen0.2,0.7', 'Shor'])
    def test_scan_finds_no_hidden_reflection(self, preset):
        """Test the 50×50 scan minimum stays above 0.05·√N at N = 100"""
        frame = fourier_reflection_scan(build_map(preset_spec(preset, 2, 100)), grid=50, jobs=2)
        assert len(frame) == 2500
        assert frame['defect'].min() > 0.05 * np.sqrt(100)

    @pytest.mark.slow
    @pytest.mark.parametrize('A', [2, 3, 5, 10])
    def test_saraceno_gap_ratio(self, A):
        """Test the Saraceno gap ratio averaged over ten N sits at the 2-block COE value"""
        ratios = [mean_gap_ratio(eigendecompose(build_map(preset_spec('Sar', A, N))))
                  for N in dims_near(A)]
        assert np.mean(ratios) == pytest.approx(0.4234, abs=0.015)

    @pytest.mark.slow
    def test_saraceno_sectors(self):
        """Test exact R_N symmetry and COE statistics inside each reflection class"""
        plus, minus = [], []
        for N in (1000, 1002, 1004):
            spec = preset_spec('Sar', 2, N)
            U = build_map(spec)
            assert reflection_defect(U, reflection_operator(N)) < 1e-10 * N
            spectrum = eigendecompose(U, with_vectors=True)
            stats = split_statistics(spectrum, classify_eigenvectors(spectrum, classification_operator(spec)))
            plus.append(stats[PLUS].mean_gap_ratio)
            minus.append(stats[MINUS].mean_gap_ratio)
        assert np.mean(plus) == pytest.approx(0.5359, abs=0.02)
        assert np.mean(minus) == pytest.approx(0.5359, abs=0.02)

    @pytest.mark.slow
    def test_bv_eigenvectors_cluster(self):
        """Test A = 2 BV eigenvectors cluster near ±1 under (F^{0,0})², unlike A = 16 or Haar ones"""
        fractions = []
        for N in (1000, 1008):
            spec = preset_spec('BV', 2, N)
            spectrum = eigendecompose(build_map(spec), with_vectors=True)
            fractions.append(classify_eigenvectors(spectrum, classification_operator(spec)).cluster_fraction(0.8))
        wide = preset_spec('BV', 16, 1008)
        wide_spectrum = eigendecompose(build_map(wide), with_vectors=True)
        haar = eigendecompose(haar_unitary(1000, seed=0), with_vectors=True)
        assert min(fractions) > 0.6
        assert classify_eigenvectors(wide_spectrum, classification_operator(wide)).cluster_fraction(0.8) < 0.5
        assert classify_eigenvectors(haar, fourier_reflection(1000)).cluster_fraction(0.8) < 0.1
