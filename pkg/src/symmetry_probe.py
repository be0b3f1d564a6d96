"""
bakerspec symmetry probe
Time-reversal and reflection defects, Fourier-reflection scans, approximate
symmetry classes of eigenvectors and per-class level statistics
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from loguru import logger

from config import config
from errors import InvalidDimensionError, InvalidSpecError, PreconditionError
from linalg_core import SpectrumData, UnitaryMatrix, commutator, eigendecompose, frobenius_norm, gdft_entries
from quantizer import QuantizationSpec, build_map
from sff_analysis import analyze_spectrum
from spectral_stats import SpacingData, mean_gap_ratio, spacings

Grid = Union[int, Sequence[Tuple[float, float]]]

PLUS = 1
MINUS = -1


def _entries(matrix: Union[UnitaryMatrix, np.ndarray]) -> np.ndarray:
    return matrix.entries if isinstance(matrix, UnitaryMatrix) else np.asarray(matrix, dtype=np.complex128)


def reflection_operator(N: int) -> np.ndarray:
    """Permutation R_N: |x⟩ → |N−1−x⟩

    (F_N^{½,½})² equals −R_N, so both commute with the same matrices.
    """
    if N < 1:
        raise InvalidDimensionError(f"N must be positive, got {N}")
    return np.eye(N, dtype=np.complex128)[::-1].copy()


def fourier_reflection(N: int, omega: Tuple[float, float] = (0.0, 0.0)) -> np.ndarray:
    """(F_N^ω)² with ω reduced mod 1; ω = (0,0) sends |x⟩ → |−x mod N⟩"""
    F = gdft_entries(N, omega[0] % 1.0, omega[1] % 1.0)
    return F @ F


def reflection_defect(U: Union[UnitaryMatrix, np.ndarray], R: np.ndarray) -> float:
    """‖[U, R]‖_F"""
    return frobenius_norm(commutator(_entries(U), R))


def tr_defect(spec: QuantizationSpec, U: Optional[Union[UnitaryMatrix, np.ndarray]] = None) -> float:
    """‖F^θ·U·(F^θ)⁻¹ − (U⁻¹)*‖_F at the spec's own θ

    (U⁻¹)* of a unitary is Uᵀ.
    """
    entries = _entries(U) if U is not None else build_map(spec).entries
    if entries.shape[0] != spec.N:
        raise InvalidDimensionError(f"Matrix dimension {entries.shape[0]} does not match N={spec.N}")
    F = gdft_entries(spec.N, *spec.theta)
    return frobenius_norm(F @ entries @ F.conj().T - entries.T)


def _grid_points(grid: Optional[Grid]) -> List[Tuple[float, float]]:
    if grid is None:
        grid = config.get('symmetry.scan_grid')
    if isinstance(grid, int):
        if grid < 1:
            raise PreconditionError(f"Scan grid must be positive, got {grid}")
        axis = np.arange(grid) / grid
        return [(float(w1), float(w2)) for w1 in axis for w2 in axis]
    points = [(float(w1), float(w2)) for w1, w2 in grid]
    if not points:
        raise PreconditionError("Scan grid is empty")
    return points


def _scan_chunk(entries: np.ndarray, points: List[Tuple[float, float]]) -> List[float]:
    N = entries.shape[0]
    return [reflection_defect(entries, fourier_reflection(N, omega)) for omega in points]


def fourier_reflection_scan(U: Union[UnitaryMatrix, np.ndarray], grid: Optional[Grid] = None,
                            jobs: int = 1) -> pd.DataFrame:
    """‖[U, (F^ω)²]‖_F over a grid of boundary pairs ω

    Args:
        U: Matrix under test
        grid: g for the uniform g×g grid on [0,1)², or explicit (ω1, ω2) pairs
        jobs: Worker count

    Returns:
        DataFrame with columns omega1, omega2, defect in grid order
    """
    entries = _entries(U)
    points = _grid_points(grid)
    chunk = max(1, len(points) // max(1, 4 * abs(jobs)))
    chunks = [points[i:i + chunk] for i in range(0, len(points), chunk)]
    results = Parallel(n_jobs=jobs, prefer='threads')(delayed(_scan_chunk)(entries, c) for c in chunks)
    defects = [d for part in results for d in part]
    frame = pd.DataFrame({'omega1': [p[0] for p in points],
                          'omega2': [p[1] for p in points],
                          'defect': defects})
    best = frame.loc[frame['defect'].idxmin()]
    logger.debug(f"Reflection scan N={entries.shape[0]}: {len(frame)} points, "
                 f"minimum {best['defect']:.3e} at ({best['omega1']:.3f}, {best['omega2']:.3f})")
    return frame


@dataclass(frozen=True)
class EigenvectorClasses:
    """Split of eigenvectors by the sign of Re⟨φ|R̃|φ⟩"""
    labels: np.ndarray
    overlaps: np.ndarray
    mse: float
    angles: np.ndarray

    @property
    def plus(self) -> np.ndarray:
        return np.flatnonzero(self.labels == PLUS)

    @property
    def minus(self) -> np.ndarray:
        return np.flatnonzero(self.labels == MINUS)

    @property
    def max_imaginary(self) -> float:
        return float(np.max(np.abs(self.overlaps.imag)))

    def cluster_fraction(self, level: Optional[float] = None) -> float:
        """Share of eigenvectors with |⟨φ|R̃|φ⟩| above level"""
        level = config.get('symmetry.cluster_level') if level is None else level
        return float(np.mean(np.abs(self.overlaps) > level))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            'index': np.arange(self.labels.size),
            'angle': self.angles,
            'overlap': self.overlaps.real,
            'overlap_imag': self.overlaps.imag,
            'class': self.labels,
        })


def classify_eigenvectors(spectrum: SpectrumData, R: Union[UnitaryMatrix, np.ndarray],
                          tie_tolerance: Optional[float] = None) -> EigenvectorClasses:
    """Classify eigenvectors by the expectation value of a reflection candidate

    Real parts within tie_tolerance of zero count as S₊. The mean square error is
    that of |⟨φ|R̃|φ⟩| from 1.

    Raises:
        PreconditionError: spectrum carries no eigenvectors
    """
    if not spectrum.has_vectors:
        raise PreconditionError("Eigenvector classification needs eigenvectors")
    R = _entries(R)
    if R.shape[0] != spectrum.dim:
        raise InvalidDimensionError(f"Reflection dimension {R.shape[0]} does not match N={spectrum.dim}")
    tie_tolerance = config.get('symmetry.tie_tolerance') if tie_tolerance is None else tie_tolerance

    V = spectrum.eigenvectors
    overlaps = np.einsum('ij,ij->j', V.conj(), R @ V)
    labels = np.where(overlaps.real > -tie_tolerance, PLUS, MINUS)
    mse = float(np.mean((np.abs(overlaps) - 1.0) ** 2))
    classes = EigenvectorClasses(labels=labels, overlaps=overlaps, mse=mse, angles=spectrum.angles)
    logger.debug(f"Classified N={spectrum.dim}: |S+|={classes.plus.size}, |S-|={classes.minus.size}, "
                 f"mse={mse:.3e}, max imag {classes.max_imaginary:.2e}")
    return classes


def classification_operator(spec: QuantizationSpec) -> np.ndarray:
    """Natural reflection candidate: R_N for Saraceno, (F^θ)² otherwise"""
    if spec.family == 'Saraceno':
        return reflection_operator(spec.N)
    return fourier_reflection(spec.N, spec.theta)


@dataclass(frozen=True)
class CommutatorStructure:
    """Entry pattern of [B̂, R̃] for the Balazs–Voros map with R̃ = (F^{0,0})²"""
    A: int
    N: int
    zero_row_max: float
    max_small_entry: float
    largest_entry: float
    largest_position: Tuple[int, int]
    large_entry_positions: List[Tuple[int, int]] = field(default_factory=list)

    @property
    def special_columns(self) -> np.ndarray:
        return np.arange(self.A) * (self.N // self.A)

    @property
    def max_large_row_distance(self) -> int:
        """Largest d(x, NZ) over the large entries; 0 when there are none"""
        return max((min(x, self.N - x) for x, _ in self.large_entry_positions), default=0)

    def passes(self, bound: Optional[float] = None, zero_tolerance: float = 1e-12) -> bool:
        """Zero rows, small off-column entries, and large entries at y ∈ (N/A)Z with x near 0 or N

        Entries on a special column are at most √A/d(x, NZ), so an entry above
        bound·√A/N needs d(x, NZ) < N/bound.
        """
        bound = config.get('symmetry.commutator_bound') if bound is None else bound
        special = set(self.special_columns.tolist())
        return (self.zero_row_max < zero_tolerance
                and self.max_small_entry <= bound * np.sqrt(self.A) / self.N
                and all(y in special for _, y in self.large_entry_positions)
                and self.max_large_row_distance < self.N / bound)


def bv_commutator_structure(A: int, N: int, bound: Optional[float] = None) -> CommutatorStructure:
    """Locate the non-decaying entries of [B̂_{N,A}, R̃_N]

    Rows x ∈ AZ vanish; columns y ∉ (N/A)Z stay O(√A/N); only the A special columns
    can hold entries of order √A/d(x, NZ).
    """
    if N % A:
        raise InvalidSpecError(f"A={A} does not divide N={N}")
    bound = config.get('symmetry.commutator_bound') if bound is None else bound
    B = build_map(QuantizationSpec('BalazsVoros', A, N)).entries
    C = np.abs(commutator(B, fourier_reflection(N)))

    rows = np.arange(N)
    special = np.zeros(N, dtype=bool)
    special[::N // A] = True

    zero_row_max = float(C[rows % A == 0].max())
    max_small = float(C[:, ~special].max()) if (~special).any() else 0.0
    x, y = np.unravel_index(int(np.argmax(C)), C.shape)
    large = np.argwhere(C > bound * np.sqrt(A) / N)
    structure = CommutatorStructure(
        A=A, N=N, zero_row_max=zero_row_max, max_small_entry=max_small,
        largest_entry=float(C[x, y]), largest_position=(int(x), int(y)),
        large_entry_positions=[(int(i), int(j)) for i, j in large],
    )
    logger.debug(f"BV commutator A={A} N={N}: zero rows {zero_row_max:.1e}, "
                 f"off-column max {max_small:.3e}, largest at {structure.largest_position}")
    return structure


@dataclass(frozen=True)
class ClassStatistics:
    label: int
    count: int
    spacings: SpacingData
    mean_gap_ratio: float
    sff_slope: Optional[float] = None


def split_statistics(spectrum: SpectrumData, classes: Union[EigenvectorClasses, Sequence[int]],
                     with_sff: bool = False, A: Optional[int] = None) -> Dict[int, ClassStatistics]:
    """Level statistics recomputed inside each symmetry class

    Spacings are normalized by each class's own level count.

    Args:
        spectrum: Full spectrum
        classes: Classification or one label per level
        with_sff: Also fit the early-time SFF slope of each class
        A: Base of the map, for the outlier threshold of the slope fits

    Raises:
        PreconditionError: a class holds fewer than 3 levels
    """
    labels = classes.labels if isinstance(classes, EigenvectorClasses) else np.asarray(classes)
    if labels.size != spectrum.dim:
        raise PreconditionError(f"{labels.size} labels for {spectrum.dim} levels")

    stats = {}
    for label in sorted(np.unique(labels).tolist()):
        members = np.sort(spectrum.angles[labels == label])
        if members.size < 3:
            raise PreconditionError(f"Class {label} holds {members.size} levels; need at least 3")
        sector = SpectrumData(angles=members)
        gaps = spacings(sector)
        slope = None
        if with_sff:
            _, fit = analyze_spectrum(sector, A=A)
            slope = fit.slope
        stats[int(label)] = ClassStatistics(label=int(label), count=members.size, spacings=gaps,
                                            mean_gap_ratio=mean_gap_ratio(gaps), sff_slope=slope)
    return stats


@dataclass(frozen=True)
class SymmetryReport:
    spec: QuantizationSpec
    tr_defect: float
    reflection_defects: pd.DataFrame
    classes: Optional[EigenvectorClasses] = None

    @property
    def class_labels(self) -> Optional[np.ndarray]:
        return None if self.classes is None else self.classes.labels

    @property
    def mse(self) -> Optional[float]:
        return None if self.classes is None else self.classes.mse

    def summary(self) -> Dict:
        frame = self.reflection_defects
        best = frame.loc[frame['defect'].idxmin()]
        record = {
            'spec': self.spec.to_record(),
            'tr_defect': self.tr_defect,
            'min_reflection_defect': float(best['defect']),
            'min_reflection_omega': [float(best['omega1']), float(best['omega2'])],
        }
        if self.classes is not None:
            record.update({
                'plus': int(self.classes.plus.size),
                'minus': int(self.classes.minus.size),
                'mse': self.classes.mse,
                'cluster_fraction': self.classes.cluster_fraction(),
                'max_imaginary': self.classes.max_imaginary,
            })
        return record


def symmetry_report(spec: QuantizationSpec, grid: Optional[Grid] = None, classify: bool = True,
                    jobs: int = 1) -> SymmetryReport:
    """TR defect, Fourier-reflection scan and eigenvector classes for one map"""
    U = build_map(spec)
    classes = None
    if classify:
        spectrum = eigendecompose(U, with_vectors=True)
        classes = classify_eigenvectors(spectrum, classification_operator(spec))
    return SymmetryReport(spec=spec, tr_defect=tr_defect(spec, U),
                          reflection_defects=fourier_reflection_scan(U, grid, jobs=jobs),
                          classes=classes)
