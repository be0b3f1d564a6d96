"""
bakerspec periodic-orbit machinery
Symbolic dynamics of the A-ary shift, exact actions, periodic-orbit trace sums,
diagonal-approximation SFF predictions and the slope-phase classifier
"""

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from config import config
from errors import OrbitBudgetError, PreconditionError

FAMILIES = ('BalazsVoros', 'Saraceno', 'Generic', 'ShorBaker')
SHOR_BAKER = 'ShorBaker'
GENERIC_FAMILIES = ('BalazsVoros', 'Saraceno', 'Generic')

FOUR = 'Four'
TWO = 'Two'

CLASS_TOLERANCE = 1e-9


def to_digits(nu: int, A: int, t: int) -> Tuple[int, ...]:
    """Base-A expansion a₁…a_t of nu, most significant first"""
    digits = []
    for _ in range(t):
        nu, a = divmod(nu, A)
        digits.append(a)
    return tuple(reversed(digits))


def from_digits(digits: Sequence[int], A: int) -> int:
    value = 0
    for a in digits:
        value = value * A + int(a)
    return value


@dataclass(frozen=True)
class OrbitCode:
    """Length-t periodic orbit of the A-ary shift, labelled by nu ∈ [0, A^t)"""
    nu: int
    A: int
    t: int

    def __post_init__(self):
        if self.A < 2 or self.t < 1:
            raise PreconditionError(f"Need A ≥ 2 and t ≥ 1, got A={self.A}, t={self.t}")
        if not 0 <= self.nu < self.A ** self.t:
            raise PreconditionError(f"nu={self.nu} outside [0, {self.A}^{self.t})")

    @classmethod
    def from_digits(cls, digits: Sequence[int], A: int) -> 'OrbitCode':
        return cls(from_digits(digits, A), A, len(digits))

    @property
    def digits(self) -> Tuple[int, ...]:
        return to_digits(self.nu, self.A, self.t)

    @property
    def period(self) -> int:
        return self.A ** self.t - 1


def reversal(code: OrbitCode) -> OrbitCode:
    """ν̄: digit string read backwards"""
    return OrbitCode.from_digits(code.digits[::-1], code.A)


def reflect(code: OrbitCode) -> OrbitCode:
    """R(ν) = A^t − 1 − ν, i.e. every digit a ↦ A − 1 − a"""
    return OrbitCode(code.period - code.nu, code.A, code.t)


def rotate(code: OrbitCode, shift: int = 1) -> OrbitCode:
    """Cyclic shift a₁a₂…a_t ↦ a₂…a_t a₁ applied `shift` times"""
    digits = code.digits
    shift %= code.t
    return OrbitCode.from_digits(digits[shift:] + digits[:shift], code.A)


def digit_counts(code: OrbitCode) -> Tuple[int, ...]:
    """η_0 … η_{A−1}"""
    counts = [0] * code.A
    for a in code.digits:
        counts[a] += 1
    return tuple(counts)


def action(code: OrbitCode) -> Fraction:
    """S_ν = ν·ν̄/(A^t − 1), exact"""
    if code.period == 0:
        return Fraction(0)
    return Fraction(code.nu * reversal(code).nu, code.period)


def phi(code: OrbitCode) -> Fraction:
    """φ(ν) = −Σ_{j=2}^t a_j Σ_{i=1}^{j−1} a_i A^{−j+i}, exact"""
    a = code.digits
    total = Fraction(0)
    for j in range(1, code.t):
        inner = sum(Fraction(a[i] * code.A ** i, code.A ** j) for i in range(j))
        total += a[j] * inner
    return -total


def periodic_point(code: OrbitCode) -> Tuple[Fraction, Fraction]:
    """(q, p) = (ν/(A^t−1), ν̄/(A^t−1)) for the orbit through the fixed point of the t-step map"""
    period = code.period
    if period == 0:
        return Fraction(0), Fraction(0)
    return Fraction(code.nu, period), Fraction(reversal(code).nu, period)


def classical_map(q: float, p: float, A: int) -> Tuple[float, float]:
    """One step of the stretch-cut-stack map: (Aq − ⌊Aq⌋, (p + ⌊Aq⌋)/A)"""
    j = int(np.floor(A * q))
    j = min(max(j, 0), A - 1)
    return A * q - j, (p + j) / A


def is_primitive(code: OrbitCode) -> bool:
    """False when the digit string repeats a shorter block"""
    digits = code.digits
    for d in range(1, code.t):
        if code.t % d == 0 and digits == digits[:d] * (code.t // d):
            return False
    return True


def degenerate_orbit_count(A: int, t: int) -> int:
    """Orbits whose quadruple {ν, ν̄, R(ν), R(ν̄)} collapses or which are repetitions"""
    _check_budget(A, t)
    count = 0
    for nu in range(A ** t):
        code = OrbitCode(nu, A, t)
        quad = {code.nu, reversal(code).nu, reflect(code).nu, reflect(reversal(code)).nu}
        if len(quad) < 4 or not is_primitive(code):
            count += 1
    return count


# --- vectorized enumeration -------------------------------------------------

def _check_budget(A: int, t: int) -> int:
    size = A ** t
    budget = config.get('orbit.max_orbits')
    if size > budget:
        raise OrbitBudgetError(f"A^t = {A}^{t} = {size} exceeds the enumeration budget {budget}")
    return size


def digit_matrix(nus: np.ndarray, A: int, t: int) -> np.ndarray:
    """Digits of each ν as rows, most significant first"""
    nus = np.asarray(nus, dtype=np.int64).copy()
    out = np.empty((nus.size, t), dtype=np.int64)
    for col in range(t - 1, -1, -1):
        nus, out[:, col] = np.divmod(nus, A)
    return out


def reverse_values(digits: np.ndarray, A: int) -> np.ndarray:
    """ν̄ for each digit row"""
    value = np.zeros(digits.shape[0], dtype=np.int64)
    for col in range(digits.shape[1] - 1, -1, -1):
        value = value * A + digits[:, col]
    return value


def phi_numerators(digits: np.ndarray, A: int) -> np.ndarray:
    """A^t·φ(ν)/A reduced mod A^t, so φ(ν)/A ≡ result / A^t (mod 1)"""
    t = digits.shape[1]
    modulus = A ** t
    total = np.zeros(digits.shape[0], dtype=np.int64)
    # prefix_j = Σ_{i<j} a_i A^{i} with 0-based i, j
    prefix = np.zeros(digits.shape[0], dtype=np.int64)
    for j in range(1, t):
        prefix = (prefix + digits[:, j - 1] * A ** (j - 1)) % modulus
        # A^{t−1}·a_j Σ_{i<j} a_i A^{i−j} = a_j·prefix·A^{t−1−j}
        term = (digits[:, j] * ((prefix * A ** (t - 1 - j)) % modulus)) % modulus
        total = (total + term) % modulus
    return (-total) % modulus


def enumerate_orbits(A: int, t: int, chunk_size: Optional[int] = None) -> Iterator[Tuple[np.ndarray, np.ndarray]]:
    """Stream (ν, digits) chunks over [0, A^t) in fixed-stride order"""
    size = _check_budget(A, t)
    chunk_size = chunk_size or config.get('orbit.chunk_size')
    for start in range(0, size, chunk_size):
        nus = np.arange(start, min(start + chunk_size, size), dtype=np.int64)
        yield nus, digit_matrix(nus, A, t)


@dataclass(frozen=True)
class TraceApproximation:
    """Periodic-orbit approximation to tr Û^t"""
    t: int
    value: complex
    family: str
    A: int
    N: int
    alpha: Tuple[float, ...]
    theta: Tuple[float, float]
    prefactor: str = 'asymptotic'


def _normalize_alpha(alpha: Sequence[float], A: int) -> np.ndarray:
    alpha = np.mod(np.asarray(alpha, dtype=np.float64), 1.0)
    if alpha.size != A:
        raise PreconditionError(f"Need {A} block phases, got {alpha.size}")
    return alpha


def trace_po(family: str, A: int, t: int, N: int,
             theta: Tuple[float, float] = (0.0, 0.0),
             alpha: Optional[Sequence[float]] = None,
             prefactor: str = 'asymptotic') -> TraceApproximation:
    """Periodic-orbit sum for tr Û^t

    Every ν carries the same weight. The orbits ν = 0 and ν = A^t − 1 sit on the
    corners of the unit square, where the Balazs-Voros and Shor matrices are
    discontinuous; their exact traces pick up diffractive corrections (growing
    like log N at t = 1) that this sum leaves out. The Saraceno family keeps
    those orbits off the discontinuity and is the one the sum tracks.

    Args:
        family: Quantization family
        A: Base
        t: Time (orbit length)
        N: Hilbert-space dimension
        theta: Boundary offsets, recorded only
        alpha: Block phases (defaults to zeros)
        prefactor: 'asymptotic' uses A^{−t/2}; 'stationary' uses A^{t/2}/(A^t − 1)

    Returns:
        TraceApproximation
    """
    if family not in FAMILIES:
        raise PreconditionError(f"Unknown family {family!r}")
    alpha = _normalize_alpha(np.zeros(A) if alpha is None else alpha, A)
    size = _check_budget(A, t)
    period = size - 1

    if prefactor == 'asymptotic':
        weight = A ** (-t / 2)
    elif prefactor == 'stationary':
        if period == 0:
            raise PreconditionError("Stationary prefactor undefined for A^t = 1")
        weight = A ** (t / 2) / period
    else:
        raise PreconditionError(f"Unknown prefactor {prefactor!r}")

    total = 0j
    shor = family == SHOR_BAKER
    for nus, digits in enumerate_orbits(A, t):
        nubar = reverse_values(digits, A)
        if period > 0:
            action_mod = ((N % period) * ((nus * nubar) % period)) % period
            phase = action_mod / period
        else:
            phase = np.zeros(nus.size)
        counts = np.stack([(digits == j).sum(axis=1) for j in range(A)], axis=1)
        phase = phase + counts @ alpha
        if shor:
            big = size * period
            phase = phase + ((nus * nubar) % big) / big
            phase = phase - phi_numerators(digits, A) / size
        total += np.exp(2j * np.pi * np.mod(phase, 1.0)).sum()

    value = complex(weight * total)
    logger.debug(f"trace_po {family} A={A} t={t} N={N}: {value:.6g}")
    return TraceApproximation(t=t, value=value, family=family, A=A, N=N,
                              alpha=tuple(float(a) for a in alpha),
                              theta=(float(theta[0]), float(theta[1])), prefactor=prefactor)


def diagonal_phase_sum(family: str, A: int, alpha: Sequence[float]) -> complex:
    """Σ_j e^{2πi(α_j − α_{A−1−j} [+ 2j/A for Shor])} / A"""
    alpha = _normalize_alpha(alpha, A)
    j = np.arange(A)
    exponent = alpha - alpha[::-1]
    if family == SHOR_BAKER:
        exponent = exponent + 2 * j / A
    return complex(np.exp(2j * np.pi * exponent).sum() / A)


def second_term_ratio(family: str, A: int, alpha: Sequence[float], t: int) -> float:
    """Real part of the diagonal second term divided by 2t/N"""
    value = diagonal_phase_sum(family, A, alpha) ** t
    if family == SHOR_BAKER:
        value *= np.exp(2j * np.pi * t / A)
    return float(value.real)


def diag_sff_prediction(family: str, A: int, t: int, N: int, alpha: Sequence[float]) -> float:
    """Diagonal-approximation SFF at integer time t"""
    if family not in FAMILIES:
        raise PreconditionError(f"Unknown family {family!r}")
    base = 2.0 * t / N
    return base + base * second_term_ratio(family, A, alpha, t)


def diag_time_average(family: str, A: int, alpha: Sequence[float], t_max: int = 40) -> float:
    """Mean of second_term_ratio over t = 1..t_max"""
    return float(np.mean([second_term_ratio(family, A, alpha, t) for t in range(1, t_max + 1)]))


def _congruent(x: np.ndarray, tol: float = CLASS_TOLERANCE) -> np.ndarray:
    r = np.mod(x, 1.0)
    return np.minimum(r, 1.0 - r) < tol


def slope_class(family: str, A: int, alpha: Sequence[float]) -> str:
    """Four when the diagonal second term never decays, else Two"""
    alpha = _normalize_alpha(alpha, A)
    j = np.arange(A)
    if family == SHOR_BAKER:
        ok = _congruent(alpha[::-1] - alpha - (2 * j + 1) / A)
    else:
        ok = _congruent(alpha - alpha[::-1])
    return FOUR if bool(np.all(ok)) else TWO
