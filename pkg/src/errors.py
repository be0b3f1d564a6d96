"""
bakerspec error types
Raised by the library; the runner and CLI turn them into log lines and error rows
"""

from typing import Optional


class BakerSpecError(Exception):
    """Base class for all bakerspec errors"""


class InvalidDimensionError(BakerSpecError, ValueError):
    """Matrix or lattice dimension is not usable (e.g. N = 0)"""


class InvalidSpecError(BakerSpecError, ValueError):
    """QuantizationSpec / EnsembleSpec violates its invariants"""


class PreconditionError(BakerSpecError, ValueError):
    """An operation was called outside its documented domain"""


class ManifestError(BakerSpecError, ValueError):
    """Experiment manifest failed validation"""


class OrbitBudgetError(BakerSpecError, ValueError):
    """Orbit enumeration would exceed the configured budget"""


class ConvergenceError(BakerSpecError, RuntimeError):
    """Eigensolver failed or returned a spectrum with a large residual"""

    def __init__(self, message: str, residual: Optional[float] = None):
        super().__init__(message)
        self.residual = residual

    def __str__(self) -> str:
        base = super().__str__()
        if self.residual is None:
            return base
        return f"{base} (residual={self.residual:.3e})"
