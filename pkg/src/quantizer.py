"""
bakerspec quantizer
Builds the quantum A-baker's maps (generic boundary-offset families and the Shor
baker), their mixed-basis t-step propagators and the coherent-state one-step check
"""

from dataclasses import dataclass, field, replace
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from errors import InvalidSpecError, PreconditionError
from linalg_core import UnitaryMatrix, direct_sum, gdft_entries
from orbit_theory import (
    FAMILIES, GENERIC_FAMILIES, SHOR_BAKER,
    digit_matrix, phi_numerators, reverse_values,
)
from phase_space import coherent_state

FIXED_THETA = {
    'BalazsVoros': (0.0, 0.0),
    'Saraceno': (0.5, 0.5),
    'ShorBaker': (0.0, 0.0),
}

PRESETS = {
    'BV': ('BalazsVoros', (0.0, 0.0)),
    'Sar': ('Saraceno', (0.5, 0.5)),
    'Shor': ('ShorBaker', (0.0, 0.0)),
    'Gen0.2,0.7': ('Generic', (0.2, 0.7)),
    'Gen0,0.5': ('Generic', (0.0, 0.5)),
    'Gen0.5,0': ('Generic', (0.5, 0.0)),
}


@dataclass(frozen=True)
class QuantizationSpec:
    """Declarative recipe for one quantized baker's map

    alpha=None with seed=None gives the standard phases (zeros, or j²/A for the
    Shor baker); alpha=None with a seed draws i.i.d. uniform phases from the seed.
    """
    family: str
    A: int
    N: int
    theta: Optional[Tuple[float, float]] = None
    alpha: Optional[Tuple[float, ...]] = None
    seed: Optional[int] = None
    # seed drawn per spec by the runner; kept out of equality and the cache key
    random_alpha: bool = field(default=False, compare=False)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidSpecError(f"Unknown family {self.family!r}; expected one of {FAMILIES}")
        if int(self.A) != self.A or self.A < 2:
            raise InvalidSpecError(f"A must be an integer ≥ 2, got {self.A}")
        if int(self.N) != self.N or self.N < 1:
            raise InvalidSpecError(f"N must be a positive integer, got {self.N}")
        if self.N % self.A:
            raise InvalidSpecError(f"A={self.A} does not divide N={self.N}")

        fixed = FIXED_THETA.get(self.family)
        theta = self.theta
        if theta is None:
            theta = fixed if fixed is not None else (0.0, 0.0)
        theta = (float(theta[0]), float(theta[1]))
        if fixed is not None and theta != fixed:
            raise InvalidSpecError(f"{self.family} fixes θ={fixed}, got {theta}")
        if not all(0.0 <= x < 1.0 for x in theta):
            raise InvalidSpecError(f"θ must lie in [0,1)², got {theta}")
        object.__setattr__(self, 'theta', theta)

        if self.alpha is not None:
            alpha = tuple(float(a) % 1.0 for a in self.alpha)
            if len(alpha) != self.A:
                raise InvalidSpecError(f"Need {self.A} block phases, got {len(alpha)}")
            object.__setattr__(self, 'alpha', alpha)

    @property
    def is_shor(self) -> bool:
        return self.family == SHOR_BAKER

    def resolved_alpha(self) -> np.ndarray:
        """Block phases α_j in [0,1) actually used by the builders"""
        if self.alpha is not None:
            return np.asarray(self.alpha)
        if self.seed is not None:
            return np.random.default_rng(self.seed).random(self.A)
        return standard_alpha(self.family, self.A)

    def with_N(self, N: int) -> 'QuantizationSpec':
        return replace(self, N=N)

    def with_alpha(self, alpha: Optional[Sequence[float]]) -> 'QuantizationSpec':
        return replace(self, alpha=None if alpha is None else tuple(alpha), seed=None, random_alpha=False)

    def to_record(self) -> Dict[str, Any]:
        record = {'family': self.family, 'A': self.A, 'N': self.N, 'theta': list(self.theta)}
        if self.alpha is not None:
            record['alpha'] = list(self.alpha)
        if self.seed is not None:
            record['alpha_seed'] = self.seed
        return record

    @classmethod
    def from_record(cls, record: Dict[str, Any]) -> 'QuantizationSpec':
        if 'preset' in record:
            return preset_spec(record['preset'], record['A'], record['N'],
                               alpha=record.get('alpha'), seed=record.get('alpha_seed'))
        theta = record.get('theta')
        alpha = record.get('alpha')
        return cls(
            family=record['family'],
            A=int(record['A']),
            N=int(record['N']),
            theta=None if theta is None else tuple(theta),
            alpha=None if alpha is None else tuple(alpha),
            seed=record.get('alpha_seed', record.get('seed')),
        )


def standard_alpha(family: str, A: int) -> np.ndarray:
    if family == SHOR_BAKER:
        j = np.arange(A)
        return np.mod(j ** 2, A) / A
    return np.zeros(A)


def preset_spec(name: str, A: int, N: int, alpha: Optional[Sequence[float]] = None,
                seed: Optional[int] = None) -> QuantizationSpec:
    """Spec for a named quantization (BV, Sar, Shor, Gen0.2,0.7, Gen0,0.5, Gen0.5,0)"""
    if name not in PRESETS:
        raise InvalidSpecError(f"Unknown preset {name!r}; expected one of {sorted(PRESETS)}")
    family, theta = PRESETS[name]
    return QuantizationSpec(family=family, A=A, N=N, theta=theta,
                            alpha=None if alpha is None else tuple(alpha), seed=seed)


def block_factors(spec: QuantizationSpec) -> np.ndarray:
    """⊕_j e^{2πiα_j}·(block DFT): the mixed-basis one-step map"""
    M = spec.N // spec.A
    alpha = spec.resolved_alpha()
    blocks = []
    for j in range(spec.A):
        if spec.is_shor:
            block = gdft_entries(M, 0.0, -j / spec.A)
        else:
            block = gdft_entries(M, *spec.theta)
        blocks.append(np.exp(2j * np.pi * alpha[j]) * block)
    return direct_sum(blocks)


def build_map(spec: QuantizationSpec) -> UnitaryMatrix:
    """Position-basis unitary (F_N^θ)⁻¹·⊕_j e^{2πiα_j}·F_{N/A}^{…}"""
    outer = gdft_entries(spec.N, *spec.theta)
    entries = outer.conj().T @ block_factors(spec)
    logger.debug(f"Built {spec.family} map A={spec.A} N={spec.N}")
    return UnitaryMatrix(entries)


@dataclass(frozen=True)
class MixedPropagator:
    """t-step propagator in the mixed momentum–position basis"""
    t: int
    A: int
    N: int
    entries: np.ndarray
    block_index: Dict[int, int] = field(default_factory=dict)

    @property
    def block_size(self) -> int:
        return self.N // self.A ** self.t

    def block(self, nu: int) -> np.ndarray:
        """The nonzero block in column block nu"""
        M = self.block_size
        row = self.block_index[nu]
        return self.entries[row * M:(row + 1) * M, nu * M:(nu + 1) * M]

    def support_mask(self) -> np.ndarray:
        M = self.block_size
        mask = np.zeros((self.N, self.N), dtype=bool)
        for nu, row in self.block_index.items():
            mask[row * M:(row + 1) * M, nu * M:(nu + 1) * M] = True
        return mask


def _tstep(spec: QuantizationSpec, t: int, shor: bool) -> MixedPropagator:
    if t < 1:
        raise PreconditionError(f"t must be positive, got {t}")
    count = spec.A ** t
    if spec.N % count:
        raise InvalidSpecError(f"A^t = {count} does not divide N={spec.N}")
    M = spec.N // count
    alpha = spec.resolved_alpha()
    nus = np.arange(count, dtype=np.int64)
    digits = digit_matrix(nus, spec.A, t)
    nubars = reverse_values(digits, spec.A)
    counts = np.stack([(digits == j).sum(axis=1) for j in range(spec.A)], axis=1)
    phases = np.exp(2j * np.pi * (counts @ alpha))
    if shor:
        phases = phases * np.exp(-2j * np.pi * phi_numerators(digits, spec.A) / count)

    entries = np.zeros((spec.N, spec.N), dtype=np.complex128)
    base = None if shor else gdft_entries(M, *spec.theta)
    for nu, nubar, phase in zip(nus, nubars, phases):
        block = gdft_entries(M, 0.0, -nu / count) if shor else base
        entries[nubar * M:(nubar + 1) * M, nu * M:(nu + 1) * M] = phase * block
    return MixedPropagator(t=t, A=spec.A, N=spec.N, entries=entries,
                           block_index={int(n): int(b) for n, b in zip(nus, nubars)})


def build_tstep_generic(spec: QuantizationSpec, t: int) -> MixedPropagator:
    """Blocks F_{N/A^t}^θ at (ν̄, ν), each times exp(2πi Σ_j α_j η_j(ν))"""
    if spec.family not in GENERIC_FAMILIES:
        raise InvalidSpecError(f"build_tstep_generic does not handle {spec.family}")
    return _tstep(spec, t, shor=False)


def build_tstep_shor(spec: QuantizationSpec, t: int) -> MixedPropagator:
    """Blocks F_{N/A^t}^{0,−ν/A^t}·e^{−2πiφ(ν)/A}·exp(2πi Σ_j α_j η_j(ν)) at (ν̄, ν)"""
    if not spec.is_shor:
        raise InvalidSpecError(f"build_tstep_shor needs the ShorBaker family, got {spec.family}")
    return _tstep(spec, t, shor=True)


def build_tstep(spec: QuantizationSpec, t: int) -> MixedPropagator:
    return build_tstep_shor(spec, t) if spec.is_shor else build_tstep_generic(spec, t)


def compare_with_power(spec: QuantizationSpec, t: int) -> Dict[str, float]:
    """How well the t-step propagator describes F_N^θ·Û^t

    Returns:
        mass_fraction: share of ‖F·Û^t‖² inside the propagator's blocks
        mean_block_overlap: mean normalized |⟨P_b, (F·Û^t)_b⟩| over blocks
    """
    propagator = build_tstep(spec, t)
    mixed = gdft_entries(spec.N, *spec.theta) @ np.linalg.matrix_power(build_map(spec).entries, t)
    mask = propagator.support_mask()
    total = float(np.sum(np.abs(mixed) ** 2))
    inside = float(np.sum(np.abs(mixed[mask]) ** 2))

    M = propagator.block_size
    overlaps = []
    for nu, row in propagator.block_index.items():
        exact = mixed[row * M:(row + 1) * M, nu * M:(nu + 1) * M]
        model = propagator.block(nu)
        denom = np.linalg.norm(exact) * np.linalg.norm(model)
        overlaps.append(abs(np.vdot(model, exact)) / denom if denom > 0 else 0.0)
    return {'mass_fraction': inside / total, 'mean_block_overlap': float(np.mean(overlaps))}


@dataclass(frozen=True)
class CoherentStep:
    """Result of moving a coherent state one step"""
    source: Tuple[float, float]
    target: Tuple[float, float]
    block: int
    overlap: float
    phase: float
    block_phase: complex


def coherent_state_step(spec: QuantizationSpec, point: Tuple[float, float],
                        sigma: float = 1.0) -> CoherentStep:
    """Apply Û to the coherent state at (q0, p0) and compare with the classical image

    Args:
        spec: Quantization
        point: (q0, p0) on the torus
        sigma: Source squeezing; the target uses σ/A²

    Returns:
        CoherentStep with the overlap magnitude and its phase

    Raises:
        PreconditionError: q0 within 3·(A·N)^{-1/2} of a cell boundary j/A
    """
    q0, p0 = float(point[0]) % 1.0, float(point[1]) % 1.0
    A, N = spec.A, spec.N
    j = min(int(np.floor(A * q0)), A - 1)
    margin = 3.0 / np.sqrt(A * N)
    gap = min(q0 - j / A, (j + 1) / A - q0)
    if gap < margin:
        raise PreconditionError(
            f"q0={q0} lies {gap:.4g} from a cell boundary; need at least {margin:.4g}")

    target = (A * q0 - j, (p0 + j) / A)
    source_state = coherent_state(q0, p0, N, spec.theta, sigma)
    evolved = build_map(spec).entries @ source_state
    target_state = coherent_state(target[0], target[1], N, spec.theta, sigma / A ** 2)
    amplitude = np.vdot(target_state, evolved)

    # Shor blocks carry e^{−2πiβ_j p0} with β_j = −j/A
    block_phase = np.exp(2j * np.pi * j * p0 / A) if spec.is_shor else 1.0 + 0j
    return CoherentStep(source=(q0, p0), target=target, block=j,
                        overlap=float(abs(amplitude)), phase=float(np.angle(amplitude)),
                        block_phase=complex(block_phase))
