"""
bakerspec dense linear algebra core
Generalized DFT matrices, direct sums, norms, the unitary eigendecomposition
contract and the binary matrix container used by the cache
"""

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
import pandas as pd
import scipy.linalg
from loguru import logger

from config import config
from errors import ConvergenceError, InvalidDimensionError

TWO_PI = 2.0 * np.pi

_HEADER = struct.Struct('<q')


@dataclass(frozen=True)
class UnitaryMatrix:
    """Dense N×N complex matrix with its unitarity defect"""
    entries: np.ndarray
    unitarity_defect: float = field(default=float('nan'))

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=np.complex128)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1] or entries.shape[0] < 1:
            raise InvalidDimensionError(f"Expected a non-empty square matrix, got shape {entries.shape}")
        entries.setflags(write=False)
        object.__setattr__(self, 'entries', entries)
        if np.isnan(self.unitarity_defect):
            object.__setattr__(self, 'unitarity_defect', unitarity_defect(entries))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def is_unitary(self, tolerance: Optional[float] = None) -> bool:
        """Check the defect against tolerance·N (config linalg.unitarity_tolerance)"""
        tolerance = config.get('linalg.unitarity_tolerance') if tolerance is None else tolerance
        return self.unitarity_defect <= tolerance * self.dim

    def dagger(self) -> np.ndarray:
        return self.entries.conj().T

    def __matmul__(self, other):
        other_entries = other.entries if isinstance(other, UnitaryMatrix) else other
        return self.entries @ other_entries


@dataclass(frozen=True)
class SpectrumData:
    """Sorted eigenangles in [0, 2π), optionally with paired eigenvector columns"""
    angles: np.ndarray
    eigenvectors: Optional[np.ndarray] = None

    def __post_init__(self):
        angles = np.asarray(self.angles, dtype=np.float64)
        if angles.ndim != 1 or angles.size < 1:
            raise InvalidDimensionError("Spectrum needs at least one eigenangle")
        if np.any(angles < 0) or np.any(angles >= TWO_PI):
            raise ValueError("Eigenangles must lie in [0, 2π)")
        if np.any(np.diff(angles) < 0):
            raise ValueError("Eigenangles must be sorted ascending")
        angles.setflags(write=False)
        object.__setattr__(self, 'angles', angles)
        if self.eigenvectors is not None:
            vectors = np.asarray(self.eigenvectors, dtype=np.complex128)
            if vectors.shape != (angles.size, angles.size):
                raise InvalidDimensionError(
                    f"Eigenvector matrix shape {vectors.shape} does not match N={angles.size}")
            vectors.setflags(write=False)
            object.__setattr__(self, 'eigenvectors', vectors)

    @property
    def dim(self) -> int:
        return self.angles.size

    @property
    def has_vectors(self) -> bool:
        return self.eigenvectors is not None

    def eigenvalues(self) -> np.ndarray:
        return np.exp(1j * self.angles)

    def to_frame(self) -> pd.DataFrame:
        """CSV layout (index, angle)"""
        return pd.DataFrame({'index': np.arange(self.dim), 'angle': self.angles})


def frobenius_norm(matrix: Union[np.ndarray, UnitaryMatrix]) -> float:
    """√(Σ|m_jk|²)"""
    entries = matrix.entries if isinstance(matrix, UnitaryMatrix) else np.asarray(matrix)
    return float(np.linalg.norm(entries, 'fro')) if entries.size else 0.0


def unitarity_defect(entries: np.ndarray) -> float:
    """Frobenius norm of U·U† − I"""
    return frobenius_norm(entries @ entries.conj().T - np.eye(entries.shape[0]))


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def gdft_entries(N: int, theta1: float = 0.0, theta2: float = 0.0) -> np.ndarray:
    """Raw entries N^{-1/2}·exp(−2πi(j+θ1)(k+θ2)/N) of the generalized DFT"""
    if N < 1:
        raise InvalidDimensionError(f"DFT dimension must be positive, got {N}")
    rows = np.arange(N, dtype=np.float64) + theta1
    cols = np.arange(N, dtype=np.float64) + theta2
    # (j+θ1)(k+θ2) reduced mod N before exponentiation keeps phases accurate at large N
    phase = np.mod(np.outer(rows, cols), N) / N
    return np.exp(-1j * TWO_PI * phase) / np.sqrt(N)


def build_gdft(N: int, theta1: float = 0.0, theta2: float = 0.0) -> UnitaryMatrix:
    """Generalized DFT matrix F_N^{θ1,θ2}

    Args:
        N: Dimension (≥ 1)
        theta1: Row (momentum) offset
        theta2: Column (position) offset

    Returns:
        UnitaryMatrix with entry (j,k) = N^{-1/2}·exp(−2πi(j+θ1)(k+θ2)/N)
    """
    return UnitaryMatrix(gdft_entries(N, theta1, theta2))


def direct_sum(blocks: Sequence[np.ndarray]) -> np.ndarray:
    """Block-diagonal matrix ⊕_j blocks[j]"""
    if not blocks:
        raise InvalidDimensionError("Direct sum needs at least one block")
    return scipy.linalg.block_diag(*[np.asarray(b, dtype=np.complex128) for b in blocks])


def principal_angles(values: np.ndarray) -> np.ndarray:
    """Map unit-circle values to angles in [0, 2π)"""
    angles = np.mod(np.angle(values), TWO_PI)
    # mod can round up to exactly 2π for tiny negative arguments
    angles[angles >= TWO_PI] = 0.0
    return angles


def eigendecompose(matrix: Union[UnitaryMatrix, np.ndarray], with_vectors: bool = False) -> SpectrumData:
    """Full spectrum of a unitary matrix

    Eigenvectors come from the complex Schur form, which is diagonal for normal
    matrices and therefore yields an orthonormal basis even for degenerate spectra.

    Args:
        matrix: Unitary input
        with_vectors: Also return eigenvectors (columns paired with angles)

    Returns:
        SpectrumData with ascending angles

    Raises:
        ConvergenceError: Solver failure or residual above tolerance
    """
    entries = matrix.entries if isinstance(matrix, UnitaryMatrix) else np.asarray(matrix, dtype=np.complex128)
    N = entries.shape[0]
    tolerance = config.get('linalg.residual_tolerance') * N

    try:
        if with_vectors:
            schur_form, basis = scipy.linalg.schur(entries, output='complex')
            values = np.diag(schur_form).copy()
        else:
            values = scipy.linalg.eigvals(entries)
            basis = None
    except (np.linalg.LinAlgError, ValueError) as e:
        logger.error(f"Eigensolver failed for N={N}: {e}")
        raise ConvergenceError(f"Eigensolver did not converge for N={N}: {e}") from e

    modulus_residual = float(np.max(np.abs(np.abs(values) - 1.0)))
    if modulus_residual > tolerance:
        raise ConvergenceError("Eigenvalues left the unit circle", residual=modulus_residual)

    angles = principal_angles(values)
    order = np.argsort(angles, kind='stable')
    angles = angles[order]

    vectors = None
    if basis is not None:
        vectors = basis[:, order]
        residual = np.linalg.norm(entries @ vectors - vectors * np.exp(1j * angles), axis=0)
        worst = float(np.max(residual))
        if worst > tolerance:
            raise ConvergenceError("Eigenvector residual above tolerance", residual=worst)
        logger.debug(f"Schur decomposition N={N}: worst column residual {worst:.2e}")

    return SpectrumData(angles=angles, eigenvectors=vectors)


def reassemble(spectrum: SpectrumData) -> np.ndarray:
    """V·diag(e^{iθ})·V† from a spectrum with vectors"""
    if not spectrum.has_vectors:
        raise ValueError("Reassembly needs eigenvectors")
    vectors = spectrum.eigenvectors
    return (vectors * spectrum.eigenvalues()) @ vectors.conj().T


def save_matrix(matrix: Union[UnitaryMatrix, np.ndarray], file_path: Union[str, Path]) -> Path:
    """Write the binary container: int64 dimension header, then row-major complex128"""
    entries = matrix.entries if isinstance(matrix, UnitaryMatrix) else np.asarray(matrix)
    path = Path(file_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'wb') as f:
        f.write(_HEADER.pack(entries.shape[0]))
        f.write(np.ascontiguousarray(entries, dtype='<c16').tobytes())
    logger.debug(f"Saved {entries.shape[0]}x{entries.shape[0]} matrix to {path}")
    return path


def load_matrix(file_path: Union[str, Path]) -> UnitaryMatrix:
    """Read a matrix written by save_matrix"""
    with open(file_path, 'rb') as f:
        raw = f.read()
    if len(raw) < _HEADER.size:
        raise InvalidDimensionError(f"Truncated matrix container: {file_path}")
    (N,) = _HEADER.unpack_from(raw)
    body = raw[_HEADER.size:]
    if N < 1 or len(body) != N * N * 16:
        raise InvalidDimensionError(f"Matrix container {file_path} does not hold a {N}x{N} matrix")
    entries = np.frombuffer(body, dtype='<c16').reshape(N, N).copy()
    return UnitaryMatrix(entries)
