"""
Exception hierarchy for the toolkit
"""
from typing import Optional, Tuple


class FputError(Exception):
    """Base class for all toolkit errors"""


class ConfigurationError(FputError, ValueError):
    """Invalid parameters, dimension mismatch or violated precondition"""


class ConsistencyError(FputError):
    """An internal numerical consistency check failed"""


class BlowUpError(FputError):
    """The integrated state stopped being finite"""

    def __init__(self, t: float, max_abs_q: float):
        self.t = t
        self.max_abs_q = max_abs_q
        super().__init__(f"Non-finite state at t={t:.6g} (max|q|={max_abs_q:.6g})")


class NonResonanceError(FputError):
    """A normal-form denominator vanished"""

    def __init__(self, quartet: Tuple[int, int, int, int], branch: str, denominator: float):
        self.quartet = quartet
        self.branch = branch
        self.denominator = denominator
        super().__init__(
            f"Denominator {denominator:.3e} on branch {branch} for quartet {quartet} "
            f"is below the non-resonance threshold"
        )


class DegenerateDenominatorError(FputError, ZeroDivisionError):
    """Averaged resonant sum S2 vanishes, so the ratio r is undefined"""


class ObserverError(FputError):
    """An observer callback failed during evolution"""

    def __init__(self, name: str, t: float, cause: Optional[BaseException] = None):
        self.name = name
        self.t = t
        super().__init__(f"Observer '{name}' failed at t={t:.6g}: {cause}")


class OutputExistsError(FputError, FileExistsError):
    """Refusing to overwrite an existing output without --force"""
