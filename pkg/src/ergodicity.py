"""
bakerspec cyclic ergodicity diagnostics
Persistence z²(t) in the DFT-of-eigenbasis, its COE reference, the Δ² fluctuation
sum and the cutoff criterion
"""

from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from loguru import logger

from config import config
from errors import InvalidDimensionError, PreconditionError
from linalg_core import TWO_PI, SpectrumData, UnitaryMatrix
from sff_analysis import SffSeries


def z2_coe(t: Union[float, np.ndarray], N: int) -> np.ndarray:
    """exp(−4t²·ln N/N²)"""
    t = np.asarray(t, dtype=np.float64)
    return np.exp(-4.0 * t ** 2 * np.log(N) / N ** 2)


def cutoff(N: int, c: Optional[float] = None) -> float:
    """η²(N) = c/N"""
    c = config.get('ergodicity.c') if c is None else c
    return c / N


@dataclass(frozen=True)
class PersistenceSeries:
    N: int
    times: np.ndarray
    z2: np.ndarray
    z2_coe_ref: np.ndarray
    eta2: float

    @property
    def tau(self) -> np.ndarray:
        return self.times / self.N

    @property
    def ratio(self) -> np.ndarray:
        return self.z2 / self.z2_coe_ref

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({'t': self.times, 'z2': self.z2, 'z2_coe': self.z2_coe_ref,
                             'eta2': np.full(self.times.size, self.eta2)})


def persistence(spectrum: SpectrumData, T: Optional[int] = None, c: Optional[float] = None) -> PersistenceSeries:
    """z²(t) = |N⁻¹ Σ_n e^{i(E_n − 2πn/N)t}|² for t = 0..T

    Args:
        spectrum: Spectrum with ascending eigenangles
        T: Last time (N/2 by default)
        c: Cutoff parameter of η² = c/N

    Returns:
        PersistenceSeries
    """
    N = spectrum.dim
    if N < 2:
        raise InvalidDimensionError(f"Persistence needs N ≥ 2, got {N}")
    T = N // 2 if T is None else T
    if T < 0:
        raise PreconditionError(f"T must be ≥ 0, got {T}")
    detuning = spectrum.angles - TWO_PI * np.arange(N) / N
    times = np.arange(T + 1)
    z2 = np.abs(np.exp(1j * np.outer(times, detuning)).mean(axis=1)) ** 2
    z2 = np.clip(z2, 0.0, 1.0)
    return PersistenceSeries(N=N, times=times, z2=z2, z2_coe_ref=z2_coe(times, N), eta2=cutoff(N, c))


def cyclic_overlaps(spectrum: SpectrumData, U: Union[UnitaryMatrix, np.ndarray], t: int) -> np.ndarray:
    """|⟨C_{k+t}|Û^t|C_k⟩|² for every k, with |C_k⟩ = N^{-1/2} Σ_n e^{2πikn/N}|E_n⟩"""
    if not spectrum.has_vectors:
        raise PreconditionError("Cyclic overlaps need eigenvectors")
    entries = U.entries if isinstance(U, UnitaryMatrix) else np.asarray(U)
    N = spectrum.dim
    n = np.arange(N)
    basis = spectrum.eigenvectors @ (np.exp(2j * np.pi * np.outer(n, n) / N) / np.sqrt(N))
    evolved = np.linalg.matrix_power(entries, t) @ basis
    shifted = np.roll(basis, -t, axis=1)
    return np.abs(np.einsum('ij,ij->j', shifted.conj(), evolved)) ** 2


def delta_squared(series: SffSeries) -> float:
    """Δ² = 2·Σ_{t=1}^{N/2} SFF(t)/(N·t²)

    Odd N sums to ⌊N/2⌋.
    """
    half = series.N // 2
    if series.raw.size < half:
        raise PreconditionError(f"Δ² needs the raw SFF up to t={half}, got {series.raw.size}")
    t = series.times[:half].astype(np.float64)
    return float(2.0 * np.sum(series.raw[:half] / (series.N * t ** 2)))


def two_regime_delta_squared(N: int, c: float, a: float, b: float) -> Tuple[float, float]:
    """Early and late Δ² contributions of SFF = a·t on [1, cN] and b·t on (cN, N/2]"""
    if not 0 < c <= 0.5:
        raise PreconditionError(f"c must lie in (0, 1/2], got {c}")
    split = int(np.floor(c * N))
    t = np.arange(1, N // 2 + 1, dtype=np.float64)
    terms = 2.0 / (N * t)
    return float(a * terms[:split].sum()), float(b * terms[split:].sum())


def _window_mask(tau: np.ndarray, window: Optional[Sequence[float]]) -> np.ndarray:
    lo, hi = config.get('ergodicity.ratio_window') if window is None else window
    return (tau >= lo) & (tau <= hi)


def mean_coe_ratio(tau: np.ndarray, z2: np.ndarray, reference: np.ndarray,
                   window: Optional[Sequence[float]] = None) -> float:
    """Mean of z²/z²_COE over τ in the ratio window"""
    mask = _window_mask(tau, window)
    if not mask.any():
        raise PreconditionError("No persistence samples inside the ratio window")
    return float(np.mean(z2[mask] / reference[mask]))


@dataclass(frozen=True)
class ErgodicityVerdict:
    N: int
    cutoff_pass: bool
    coe_pass: bool
    cutoff_failures: int
    coe_failures: int
    mean_coe_ratio: float
    c: float
    epsilon: float
    kappa: float

    def to_record(self) -> Dict:
        return {
            'N': self.N, 'cutoff_pass': self.cutoff_pass, 'coe_pass': self.coe_pass,
            'cutoff_failures': self.cutoff_failures, 'coe_failures': self.coe_failures,
            'mean_coe_ratio': self.mean_coe_ratio,
            'c': self.c, 'epsilon': self.epsilon, 'kappa': self.kappa,
        }


def cyc_ergodicity_check(series: PersistenceSeries, c: Optional[float] = None,
                         epsilon: Optional[float] = None, kappa: Optional[float] = None,
                         window: Optional[Sequence[float]] = None) -> ErgodicityVerdict:
    """Cutoff criterion and COE comparison for one persistence curve

    Checks z²(t) ≥ c/N and z²(t) ≥ z²_COE(t) − κ/N for 0 ≤ t ≤ N(1−ε)/2.
    """
    c = config.get('ergodicity.c') if c is None else c
    epsilon = config.get('ergodicity.epsilon') if epsilon is None else epsilon
    kappa = config.get('ergodicity.kappa') if kappa is None else kappa

    N = series.N
    inside = series.times <= N * (1.0 - epsilon) / 2.0
    z2 = series.z2[inside]
    cutoff_failures = int(np.sum(z2 < c / N))
    coe_failures = int(np.sum(z2 < series.z2_coe_ref[inside] - kappa / N))
    ratio = mean_coe_ratio(series.tau, series.z2, series.z2_coe_ref, window)

    verdict = ErgodicityVerdict(
        N=N, cutoff_pass=cutoff_failures == 0, coe_pass=coe_failures == 0,
        cutoff_failures=cutoff_failures, coe_failures=coe_failures,
        mean_coe_ratio=ratio, c=c, epsilon=epsilon, kappa=kappa,
    )
    logger.debug(f"Ergodicity N={N}: cutoff {'pass' if verdict.cutoff_pass else 'fail'}, "
                 f"COE {'pass' if verdict.coe_pass else 'fail'}, mean ratio {ratio:.3f}")
    return verdict


@dataclass(frozen=True)
class AveragedPersistence:
    """Pointwise mean of several persistence curves on a shared τ grid"""
    tau: np.ndarray
    z2: np.ndarray
    z2_coe_ref: np.ndarray
    members: Tuple[int, ...]

    @property
    def ratio(self) -> np.ndarray:
        return self.z2 / self.z2_coe_ref

    def mean_coe_ratio(self, window: Optional[Sequence[float]] = None) -> float:
        return mean_coe_ratio(self.tau, self.z2, self.z2_coe_ref, window)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({'tau': self.tau, 'z2': self.z2, 'z2_coe': self.z2_coe_ref,
                             'ratio': self.ratio})


def persistence_average(series: Sequence[PersistenceSeries]) -> AveragedPersistence:
    """Resample each curve to the τ grid of the smallest N and average pointwise"""
    if not series:
        raise PreconditionError("persistence_average needs at least one series")
    Ns = [s.N for s in series]
    if max(Ns) > 1.1 * min(Ns):
        logger.warning(f"Averaging persistence over widely spread N: {min(Ns)}..{max(Ns)}")
    base = min(series, key=lambda s: s.N)
    tau = base.tau[base.tau <= min(s.tau[-1] for s in series)]
    z2 = np.mean([np.interp(tau, s.tau, s.z2) for s in series], axis=0)
    reference = np.mean([np.interp(tau, s.tau, s.z2_coe_ref) for s in series], axis=0)
    return AveragedPersistence(tau=tau, z2=z2, z2_coe_ref=reference, members=tuple(Ns))
