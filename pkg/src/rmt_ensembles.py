"""
bakerspec random-matrix ensembles
Haar (CUE) and COE samplers, 2-block variants and geodesic interpolations
between them
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg
from loguru import logger

from errors import InvalidSpecError
from linalg_core import SpectrumData, UnitaryMatrix, direct_sum

KINDS = ('CUE', 'COE', 'TwoBlockCOE', 'TwoBlockCUE',
         'InterpCOEtoCUE', 'Interp2COEtoCOE', 'Interp2COEtoCUE')
TWO_BLOCK_KINDS = ('TwoBlockCOE', 'TwoBlockCUE', 'Interp2COEtoCOE', 'Interp2COEtoCUE')

NEAR_MINUS_ONE = 1e-12
BRANCH_NUDGE = 1e-9


@dataclass(frozen=True)
class EnsembleSpec:
    """One draw from a circular ensemble or an interpolation between two"""
    kind: str
    N: int
    t_interp: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidSpecError(f"Unknown ensemble kind {self.kind!r}; expected one of {KINDS}")
        if self.N < 1:
            raise InvalidSpecError(f"N must be positive, got {self.N}")
        if self.kind in TWO_BLOCK_KINDS and self.N % 2:
            raise InvalidSpecError(f"{self.kind} needs even N, got {self.N}")
        if not 0.0 <= self.t_interp <= 1.0:
            raise InvalidSpecError(f"t_interp must lie in [0,1], got {self.t_interp}")

    def to_record(self):
        return {'kind': self.kind, 'N': self.N, 't_interp': self.t_interp, 'seed': self.seed}

    @classmethod
    def from_record(cls, record) -> 'EnsembleSpec':
        return cls(kind=record['kind'], N=int(record['N']),
                   t_interp=float(record.get('t_interp', 0.0)), seed=int(record.get('seed', 0)))


def standard_normal_complex(shape, rng: np.random.Generator) -> np.ndarray:
    """Complex Gaussian with unit variance per entry"""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def _haar_entries(N: int, rng: np.random.Generator) -> np.ndarray:
    Q, R = np.linalg.qr(standard_normal_complex((N, N), rng))
    # QR is unique only up to diagonal phases; fixing them makes Q exactly Haar
    L = np.diagonal(R)
    return Q * (L / np.abs(L))


def haar_unitary(N: int, seed: Optional[int] = None,
                 rng: Optional[np.random.Generator] = None) -> UnitaryMatrix:
    """Haar-distributed N×N unitary

    Args:
        N: Dimension
        seed: Seed for a fresh generator (ignored when rng is given)
        rng: Generator to draw from

    Returns:
        UnitaryMatrix
    """
    if N < 1:
        raise InvalidSpecError(f"N must be positive, got {N}")
    rng = rng if rng is not None else np.random.default_rng(seed)
    return UnitaryMatrix(_haar_entries(N, rng))


def _coe_entries(N: int, rng: np.random.Generator) -> np.ndarray:
    W = _haar_entries(N, rng)
    return W.T @ W


def geodesic(U0: np.ndarray, U1: np.ndarray, t: float) -> np.ndarray:
    """U0·exp(t·log(U0†U1)) on the principal branch"""
    schur_form, basis = scipy.linalg.schur(U0.conj().T @ U1, output='complex')
    angles = np.angle(np.diag(schur_form))
    near = np.abs(np.abs(angles) - np.pi) < NEAR_MINUS_ONE
    if np.any(near):
        logger.debug(f"Nudging {int(near.sum())} eigenangles off the branch cut")
        angles[near] = -np.pi + BRANCH_NUDGE
    return U0 @ (basis * np.exp(1j * t * angles)) @ basis.conj().T


def sample(spec: EnsembleSpec) -> UnitaryMatrix:
    """Draw one matrix described by spec"""
    rng = np.random.default_rng(spec.seed)
    N, half = spec.N, spec.N // 2

    if spec.kind == 'CUE':
        entries = _haar_entries(N, rng)
    elif spec.kind == 'COE':
        entries = _coe_entries(N, rng)
    elif spec.kind == 'TwoBlockCOE':
        entries = direct_sum([_coe_entries(half, rng), _coe_entries(half, rng)])
    elif spec.kind == 'TwoBlockCUE':
        entries = direct_sum([_haar_entries(half, rng), _haar_entries(half, rng)])
    elif spec.kind == 'InterpCOEtoCUE':
        U0 = _coe_entries(N, rng)
        entries = geodesic(U0, _haar_entries(N, rng), spec.t_interp)
    elif spec.kind == 'Interp2COEtoCUE':
        U0 = direct_sum([_coe_entries(half, rng), _coe_entries(half, rng)])
        entries = geodesic(U0, _haar_entries(N, rng), spec.t_interp)
    else:
        # endpoints VᵀV (2-block COE) and WᵀW (COE); fᵀf stays symmetric along the path
        V = direct_sum([_haar_entries(half, rng), _haar_entries(half, rng)])
        W = _haar_entries(N, rng)
        f = geodesic(V, W, spec.t_interp)
        entries = f.T @ f

    logger.debug(f"Sampled {spec.kind} N={N} seed={spec.seed} t={spec.t_interp}")
    return UnitaryMatrix(entries)


def poisson_angles(N: int, seed: Optional[int] = None) -> SpectrumData:
    """Uncorrelated spectrum: N i.i.d. uniform angles"""
    rng = np.random.default_rng(seed)
    return SpectrumData(angles=np.sort(rng.uniform(0.0, 2 * np.pi, N)))
