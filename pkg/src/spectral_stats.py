"""
bakerspec spectral statistics
Cyclic level spacings, gap ratios, spacing histograms and reference densities
"""

from dataclasses import dataclass
from types import MappingProxyType
from typing import Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.special import erfc

from config import config
from errors import PreconditionError
from linalg_core import TWO_PI, SpectrumData, eigendecompose
from rmt_ensembles import EnsembleSpec, sample

RMT_GAP_RATIOS = MappingProxyType({
    'GOE': 0.53590,
    'TwoBlockGOE': 0.423415,
    'GUE': 0.60266,
    'TwoBlockGUE': 0.422085,
    'Poisson': 0.38629,
})

REFERENCE_KINDS = ('Poisson', 'GOE', 'GUE', 'TwoBlockGOE', 'TwoBlockGOESurmise')


@dataclass(frozen=True)
class SpacingData:
    """Cyclic nearest-neighbour gaps; normalized gaps are scaled by N/2π"""
    spacings: np.ndarray
    normalized: bool

    @property
    def count(self) -> int:
        return self.spacings.size


def _angles(spectrum: Union[SpectrumData, Sequence[float]]) -> np.ndarray:
    if isinstance(spectrum, SpectrumData):
        return spectrum.angles
    return np.sort(np.mod(np.asarray(spectrum, dtype=np.float64), TWO_PI))


def spacings(spectrum: Union[SpectrumData, Sequence[float]], normalize: bool = True) -> SpacingData:
    """Gaps θ_{i+1} − θ_i with the wraparound gap 2π − (θ_N − θ_1)

    Args:
        spectrum: Spectrum or raw angles
        normalize: Multiply by N/2π so the mean gap is 1

    Returns:
        SpacingData of length N
    """
    angles = _angles(spectrum)
    if angles.size < 2:
        raise PreconditionError(f"Spacings need N ≥ 2 levels, got {angles.size}")
    gaps = np.diff(np.append(angles, angles[0] + TWO_PI))
    gaps = np.maximum(gaps, 0.0)
    if normalize:
        gaps = gaps * angles.size / TWO_PI
    return SpacingData(spacings=gaps, normalized=normalize)


def gap_ratios(data: SpacingData) -> np.ndarray:
    """min(s_{i+1}/s_i, s_i/s_{i+1}) over cyclic i"""
    s = data.spacings
    if s.size < 3:
        raise PreconditionError(f"Gap ratios need N ≥ 3, got {s.size}")
    if not np.any(s > 0):
        raise PreconditionError("All spacings are zero")
    nxt = np.roll(s, -1)
    small = np.minimum(s, nxt)
    large = np.maximum(s, nxt)
    ratios = np.ones_like(s)
    positive = large > 0
    ratios[positive] = small[positive] / large[positive]
    return ratios


def mean_gap_ratio(data: Union[SpacingData, SpectrumData]) -> float:
    """Mean adjacent gap ratio ⟨r̃⟩"""
    if isinstance(data, SpectrumData):
        data = spacings(data)
    return float(np.mean(gap_ratios(data)))


def histogram(data: SpacingData, bins: Optional[int] = None,
              value_range: Optional[Tuple[float, float]] = None) -> pd.DataFrame:
    """Density-normalized spacing histogram as (bin_center, density) rows"""
    if data.count == 0:
        raise PreconditionError("Histogram of an empty spacing set")
    bins = bins or config.get('rmt.histogram_bins')
    if bins < 1:
        raise PreconditionError(f"bins must be ≥ 1, got {bins}")
    value_range = tuple(value_range or config.get('rmt.histogram_range'))
    density, edges = np.histogram(data.spacings, bins=bins, range=value_range, density=True)
    centers = 0.5 * (edges[:-1] + edges[1:])
    return pd.DataFrame({'bin_center': centers, 'density': density})


class Poisson:
    @staticmethod
    def spacing_distribution(s: np.ndarray) -> np.ndarray:
        return np.exp(-s)


class GOE:
    @staticmethod
    def spacing_distribution(s: np.ndarray) -> np.ndarray:
        p = np.pi
        return ((p * s) / 2) * np.exp(-(p / 4) * s * s)

    @staticmethod
    def survival(s: np.ndarray) -> np.ndarray:
        return np.exp(-(np.pi / 4) * s * s)

    @staticmethod
    def gap_probability(s: np.ndarray) -> np.ndarray:
        return erfc(np.sqrt(np.pi) * s / 2)


class GUE:
    @staticmethod
    def spacing_distribution(s: np.ndarray) -> np.ndarray:
        p = np.pi
        return (32 / p ** 2) * (s * s) * np.exp(-(4 * s * s) / p)


class TwoBlockGOESurmise:
    """Superposition of two independent half-density GOE-surmise sequences"""

    @staticmethod
    def spacing_distribution(s: np.ndarray) -> np.ndarray:
        u = s / 2
        return 0.5 * (GOE.survival(u) ** 2 + GOE.gap_probability(u) * GOE.spacing_distribution(u))


def two_block_goe_overlay(grid: np.ndarray, samples: Optional[int] = None,
                          dim: Optional[int] = None, seed: int = 0) -> np.ndarray:
    """Monte-Carlo spacing density of the 2-block COE, interpolated onto grid"""
    samples = samples or config.get('rmt.overlay_samples')
    dim = dim or config.get('rmt.overlay_dim')
    pooled = []
    for k in range(samples):
        spectrum = eigendecompose(sample(EnsembleSpec('TwoBlockCOE', dim, seed=seed + k)))
        pooled.append(spacings(spectrum).spacings)
    table = histogram(SpacingData(np.concatenate(pooled), True))
    return np.interp(grid, table['bin_center'], table['density'])


def reference_curves(kind: str, grid: Sequence[float], **overlay_options) -> pd.DataFrame:
    """Reference spacing density on grid as (s, density) rows"""
    s = np.asarray(grid, dtype=np.float64)
    if kind == 'Poisson':
        density = Poisson.spacing_distribution(s)
    elif kind == 'GOE':
        density = GOE.spacing_distribution(s)
    elif kind == 'GUE':
        density = GUE.spacing_distribution(s)
    elif kind == 'TwoBlockGOESurmise':
        density = TwoBlockGOESurmise.spacing_distribution(s)
    elif kind == 'TwoBlockGOE':
        density = two_block_goe_overlay(s, **overlay_options)
    else:
        raise PreconditionError(f"Unknown reference kind {kind!r}; expected one of {REFERENCE_KINDS}")
    return pd.DataFrame({'s': s, 'density': density})
