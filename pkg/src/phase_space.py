"""
bakerspec phase-space tools
Quasiperiodic torus coherent states and Husimi grids
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np
import pandas as pd
from loguru import logger

from config import config
from errors import InvalidDimensionError

Resolution = Union[int, Tuple[int, int]]


def _images(images: Optional[int]) -> np.ndarray:
    count = config.get('phase_space.images') if images is None else images
    return np.arange(-count, count + 1)


def lattice_positions(N: int, theta2: float = 0.0) -> np.ndarray:
    """q_n = (n + θ2)/N"""
    return (np.arange(N) + theta2) / N


def coherent_state(q0: float, p0: float, N: int,
                   theta: Tuple[float, float] = (0.0, 0.0),
                   sigma: Optional[float] = None,
                   images: Optional[int] = None) -> np.ndarray:
    """Periodized Gaussian centred at (q0, p0) on the N-point position lattice

    ψ_n ∝ Σ_m exp(−πNσ(q_n − q0 + m)² + 2πiNp0(q_n − q0 + m) − 2πiθ1·m).
    Larger σ squeezes the state in position.

    Args:
        q0: Position centre
        p0: Momentum centre
        N: Dimension (≥ 2)
        theta: Quasiperiodicity offsets (θ1, θ2)
        sigma: Squeezing, config phase_space.sigma when omitted
        images: Lattice images kept on each side in the periodization

    Returns:
        Unit vector of length N
    """
    if N < 2:
        raise InvalidDimensionError(f"Coherent states need N ≥ 2, got {N}")
    sigma = config.get('phase_space.sigma') if sigma is None else sigma
    m = _images(images)
    x = lattice_positions(N, theta[1])[None, :] - q0 + m[:, None]
    terms = np.exp(-np.pi * N * sigma * x ** 2 + 2j * np.pi * (N * p0 * x - theta[0] * m[:, None]))
    psi = terms.sum(axis=0)
    return psi / np.linalg.norm(psi)


@dataclass(frozen=True)
class HusimiGrid:
    """|⟨Ψ_(q,p)|v⟩|² sampled on q_i = i/gq, p_j = j/gp; values indexed [i, j]"""
    q: np.ndarray
    p: np.ndarray
    values: np.ndarray

    @property
    def resolution(self) -> Tuple[int, int]:
        return self.values.shape

    def argmax_point(self) -> Tuple[float, float]:
        i, j = np.unravel_index(int(np.argmax(self.values)), self.values.shape)
        return float(self.q[i]), float(self.p[j])

    def point_reflected(self) -> np.ndarray:
        """Grid resampled at (1 − q, 1 − p)"""
        return np.roll(self.values[::-1, ::-1], 1, axis=(0, 1))

    def to_frame(self) -> pd.DataFrame:
        qq, pp = np.meshgrid(self.q, self.p, indexing='ij')
        return pd.DataFrame({'q': qq.ravel(), 'p': pp.ravel(), 'value': self.values.ravel()})

    def save_raster(self, file_path: Union[str, Path]) -> Path:
        path = Path(file_path)
        path.parent.mkdir(parents=True, exist_ok=True)
        np.save(path, self.values)
        return path


def _resolution(resolution: Optional[Resolution]) -> Tuple[int, int]:
    if resolution is None:
        size = config.get('phase_space.grid')
        return size, size
    if isinstance(resolution, int):
        return resolution, resolution
    return int(resolution[0]), int(resolution[1])


def _coherent_row(q0: float, p_grid: np.ndarray, N: int, theta: Tuple[float, float],
                  sigma: float, m: np.ndarray) -> np.ndarray:
    """Normalized coherent states at (q0, p) for every p, as rows"""
    x0 = lattice_positions(N, theta[1]) - q0
    gauss = np.exp(-np.pi * N * sigma * (x0[None, :] + m[:, None]) ** 2 - 2j * np.pi * theta[0] * m[:, None])
    shifts = np.exp(2j * np.pi * N * np.outer(p_grid, m))
    carrier = np.exp(2j * np.pi * N * np.outer(p_grid, x0))
    states = carrier * (shifts @ gauss)
    return states / np.linalg.norm(states, axis=1, keepdims=True)


def _overlap_grid(vectors: np.ndarray, resolution: Optional[Resolution],
                  theta: Tuple[float, float], sigma: Optional[float]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    gq, gp = _resolution(resolution)
    sigma = config.get('phase_space.sigma') if sigma is None else sigma
    N = vectors.shape[0]
    m = _images(None)
    q_grid = np.arange(gq) / gq
    p_grid = np.arange(gp) / gp
    values = np.empty((gq, gp))
    for i, q0 in enumerate(q_grid):
        states = _coherent_row(q0, p_grid, N, theta, sigma, m)
        overlaps = states.conj() @ vectors
        values[i] = np.mean(np.abs(overlaps) ** 2, axis=1)
    return q_grid, p_grid, values


def husimi(vector: np.ndarray, resolution: Optional[Resolution] = None,
           theta: Tuple[float, float] = (0.0, 0.0),
           sigma: Optional[float] = None) -> HusimiGrid:
    """Husimi density of one state

    Args:
        vector: Position-basis state of dimension N
        resolution: Grid size, int or (gq, gp); config phase_space.grid by default
        theta: Quasiperiodicity of the coherent states
        sigma: Coherent-state squeezing

    Returns:
        HusimiGrid
    """
    vector = np.asarray(vector, dtype=np.complex128)
    if vector.ndim != 1 or vector.size < 2:
        raise InvalidDimensionError(f"Expected a state vector of length ≥ 2, got shape {vector.shape}")
    norm = np.linalg.norm(vector)
    if abs(norm - 1.0) > 1e-8:
        logger.warning(f"Husimi input has norm {norm:.6f}; normalizing")
        vector = vector / norm
    q, p, values = _overlap_grid(vector[:, None], resolution, theta, sigma)
    return HusimiGrid(q=q, p=p, values=values)


def husimi_average(vectors: np.ndarray, resolution: Optional[Resolution] = None,
                   theta: Tuple[float, float] = (0.0, 0.0),
                   sigma: Optional[float] = None) -> HusimiGrid:
    """Mean Husimi density over the columns of `vectors`"""
    vectors = np.asarray(vectors, dtype=np.complex128)
    if vectors.ndim != 2:
        raise InvalidDimensionError("Expected an N×K matrix of column states")
    q, p, values = _overlap_grid(vectors, resolution, theta, sigma)
    return HusimiGrid(q=q, p=p, values=values)
