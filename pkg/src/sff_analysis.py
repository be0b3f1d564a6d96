"""
bakerspec spectral form factor analysis
Raw SFF from eigenangles, the neighbour moving average, early-time slope fits with
outlier rejection, N-neighbour smoothing and the COE reference curves
"""

from dataclasses import dataclass, replace
from typing import Callable, Dict, Optional, Sequence

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from loguru import logger

from config import config
from errors import PreconditionError
from linalg_core import SpectrumData, eigendecompose
from quantizer import QuantizationSpec, build_map

SpectrumSource = Callable[[QuantizationSpec], SpectrumData]

_TIME_CHUNK = 256


@dataclass(frozen=True)
class SffSeries:
    """SFF(t) = |Σ_j e^{itθ_j}|²/N over t = 1..T, plus the windowed average"""
    N: int
    times: np.ndarray
    raw: np.ndarray
    averaged: Optional[np.ndarray] = None
    ell: Optional[int] = None

    @property
    def T(self) -> int:
        return int(self.times[-1])

    @property
    def tau(self) -> np.ndarray:
        return self.times / self.N

    def to_frame(self) -> pd.DataFrame:
        averaged = self.averaged if self.averaged is not None else np.full(self.raw.size, np.nan)
        return pd.DataFrame({'t': self.times, 'tau': self.tau, 'raw': self.raw, 'averaged': averaged})


@dataclass(frozen=True)
class SlopeFit:
    """Least-squares line through the origin of the averaged SFF against τ"""
    slope: float
    scaled_residual: float
    f: int
    is_outlier: bool
    threshold: float


def sff(spectrum: SpectrumData, T: int) -> SffSeries:
    """Raw SFF for t = 1..T evaluated from the eigenangles"""
    if T < 1:
        raise PreconditionError(f"T must be ≥ 1, got {T}")
    angles = spectrum.angles
    times = np.arange(1, T + 1)
    raw = np.empty(T)
    for start in range(0, T, _TIME_CHUNK):
        block = times[start:start + _TIME_CHUNK]
        traces = np.exp(1j * np.outer(block, angles)).sum(axis=1)
        raw[start:start + block.size] = np.abs(traces) ** 2 / angles.size
    return SffSeries(N=angles.size, times=times, raw=raw)


def average_sff(series: SffSeries, ell: int) -> SffSeries:
    """Mean of raw over [t−ℓ, t+ℓ] when t > ℓ, else over [1, 2t−1]

    Windows running past T are truncated at T.
    """
    if ell < 1:
        raise PreconditionError(f"ell must be ≥ 1, got {ell}")
    T = series.raw.size
    cumulative = np.concatenate([[0.0], np.cumsum(series.raw)])
    t = series.times
    lo = np.where(t > ell, t - ell, 1)
    hi = np.minimum(np.where(t > ell, t + ell, 2 * t - 1), T)
    averaged = (cumulative[hi] - cumulative[lo - 1]) / (hi - lo + 1)
    return replace(series, averaged=averaged, ell=ell)


def default_ell(N: int) -> int:
    return config.get('sff.ell_small') if N < config.get('sff.ell_switch_n') else config.get('sff.ell_large')


def default_fit_points(N: int) -> int:
    points = config.get_section('sff')['fit_points']
    if N < points['medium_n']:
        return points['small']
    if N < points['large_n']:
        return points['medium']
    return points['large']


def default_threshold(A: Optional[int]) -> float:
    if A == 15:
        return config.get('sff.residual_threshold_a15')
    return config.get('sff.residual_threshold')


def outlier_threshold(threshold: float, f: int, residual_norm: str) -> float:
    """Cut-off on the scaled residual for a threshold stated per fitted point

    Thresholds are read as a bound on the root-mean-square residual of y = N·SFF,
    so the sum-of-squares norm compares against threshold²·f.
    """
    if residual_norm == 'sse':
        return float(threshold) ** 2 * f
    if residual_norm == 'rms':
        return float(threshold)
    raise PreconditionError(f"Unknown residual norm {residual_norm!r}")


def fit_slope(series: SffSeries, f: Optional[int] = None, threshold: Optional[float] = None,
              A: Optional[int] = None, residual_norm: Optional[str] = None) -> SlopeFit:
    """Fit averaged SFF ≈ slope·τ over t = 1..f

    Args:
        series: Series with averaged values
        f: Number of fitted points (N-dependent default)
        threshold: Outlier threshold per fitted point (A-dependent default)
        A: Base of the map, selects the default threshold
        residual_norm: 'sse' or 'rms' on y = N·SFF(t) against slope·t

    Returns:
        SlopeFit whose threshold is the cut-off in the units of scaled_residual
    """
    if series.averaged is None:
        raise PreconditionError("fit_slope needs an averaged series")
    f = f or default_fit_points(series.N)
    if f > series.raw.size:
        raise PreconditionError(f"Cannot fit {f} points from a series of length {series.raw.size}")
    residual_norm = residual_norm or config.get('sff.residual_norm')
    cutoff = outlier_threshold(default_threshold(A) if threshold is None else threshold, f, residual_norm)

    tau = series.tau[:f]
    y = series.averaged[:f]
    slope = float(np.dot(tau, y) / np.dot(tau, tau))

    residuals = series.N * y - slope * series.times[:f]
    if residual_norm == 'sse':
        scaled = float(np.sum(residuals ** 2))
    else:
        scaled = float(np.sqrt(np.mean(residuals ** 2)))

    outlier = scaled > cutoff
    if outlier:
        logger.debug(f"Slope fit N={series.N} flagged as outlier (residual {scaled:.3g} > {cutoff:.3g})")
    return SlopeFit(slope=slope, scaled_residual=scaled, f=f, is_outlier=outlier, threshold=cutoff)


def analyze_spectrum(spectrum: SpectrumData, A: Optional[int] = None, ell: Optional[int] = None,
                     f: Optional[int] = None, threshold: Optional[float] = None):
    """Raw SFF, moving average and slope fit with the size-dependent defaults"""
    N = spectrum.dim
    ell = ell or default_ell(N)
    f = f or default_fit_points(N)
    series = average_sff(sff(spectrum, f + ell), ell)
    return series, fit_slope(series, f=f, threshold=threshold, A=A)


def coe_reference(tau: Sequence[float]) -> np.ndarray:
    """Ensemble-averaged COE form factor"""
    tau = np.asarray(tau, dtype=np.float64)
    if np.any(tau <= 0):
        raise PreconditionError("COE reference is defined for τ > 0")
    early = 2 * tau - tau * np.log1p(2 * tau)
    with np.errstate(divide='ignore', invalid='ignore'):
        late = 2 - tau * np.log((2 * tau + 1) / (2 * tau - 1))
    return np.where(tau <= 1, early, late)


def two_block_reference(tau: Sequence[float]) -> np.ndarray:
    return coe_reference(2 * np.asarray(tau, dtype=np.float64))


def smooth_slopes(table: pd.DataFrame, radius: Optional[int] = None) -> pd.Series:
    """Mean slope over non-outlier rows with |N' − N| ≤ radius; NaN on outlier rows"""
    radius = config.get('sff.smoothing_radius') if radius is None else radius
    good = table.loc[~table['outlier'], ['N', 'slope']]
    n_good = good['N'].to_numpy()
    s_good = good['slope'].to_numpy()
    smoothed = []
    for n, outlier in zip(table['N'], table['outlier']):
        if outlier:
            smoothed.append(np.nan)
            continue
        near = np.abs(n_good - n) <= radius
        smoothed.append(float(np.mean(s_good[near])))
    return pd.Series(smoothed, index=table.index, name='smoothed')


def _direct_spectrum(spec: QuantizationSpec) -> SpectrumData:
    return eigendecompose(build_map(spec))


def _scan_row(spec: QuantizationSpec, source: SpectrumSource, params: Dict) -> Dict:
    try:
        series, fit = analyze_spectrum(source(spec), A=spec.A, ell=params.get('ell'),
                                       f=params.get('fit_points'), threshold=params.get('residual_threshold'))
    except Exception as e:
        logger.error(f"Slope fit failed for {spec.family} A={spec.A} N={spec.N}: {e}")
        return {'N': spec.N, 'slope': np.nan, 'residual': np.nan, 'f': 0, 'ell': 0,
                'outlier': True, 'error': str(e)}
    return {'N': spec.N, 'slope': fit.slope, 'residual': fit.scaled_residual,
            'f': fit.f, 'ell': series.ell, 'outlier': fit.is_outlier, 'error': ''}


def slope_scan(specs: Sequence[QuantizationSpec], params: Optional[Dict] = None,
               source: Optional[SpectrumSource] = None, jobs: int = 1) -> pd.DataFrame:
    """Per-N slope fits with outlier removal and N-neighbour smoothing

    Args:
        specs: Specs sharing family and A
        params: Optional ell, fit_points, residual_threshold, smoothing_radius
        source: Spectrum provider (a cache lookup in the runner)
        jobs: Worker count for the per-spec fan-out

    Returns:
        DataFrame with columns N, slope, residual, f, ell, outlier, error, smoothed
        (sorted by N); a failed spec yields an outlier row carrying its error message
    """
    if not specs:
        raise PreconditionError("slope_scan needs at least one spec")
    if len({(s.family, s.A) for s in specs}) != 1:
        raise PreconditionError("slope_scan specs must share family and A")
    params = params or {}
    source = source or _direct_spectrum

    rows = Parallel(n_jobs=jobs, prefer='threads')(delayed(_scan_row)(spec, source, params) for spec in specs)
    table = pd.DataFrame(rows).sort_values('N', kind='stable').reset_index(drop=True)
    table['smoothed'] = smooth_slopes(table, params.get('smoothing_radius'))
    outliers = int(table['outlier'].sum())
    logger.info(f"Slope scan {specs[0].family} A={specs[0].A}: {len(table)} N values, {outliers} outliers")
    return table
