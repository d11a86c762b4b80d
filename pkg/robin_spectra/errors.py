"""
Exception hierarchy for robin_spectra.

Two families:
1. InputError - the caller asked for something outside a declared domain.
   Subclasses ValueError so existing ``except ValueError`` handlers keep working.
2. NumericalError - a well-posed request that the numerics could not honour
   (pole hit, eigensolver cap, divergent tail, ...). Subclasses ArithmeticError.

The CLI maps InputError to exit code 2 and NumericalError to exit code 3.
"""

from typing import Any, Optional


class RobinSpectraError(Exception):
    """Base class for every error raised by robin_spectra."""


class InputError(RobinSpectraError, ValueError):
    """Invalid argument, configuration, or input file."""


class NumericalError(RobinSpectraError, ArithmeticError):
    """Numerical failure on otherwise valid input."""


class DomainError(InputError):
    """Argument outside the mathematical domain of an operation."""


class SizeError(InputError):
    """Truncation or grid size out of range."""


class ParamError(InputError):
    """Hardy/stability parameter (q, c, a) outside its admissible range."""


class PotentialFormatError(InputError):
    """Malformed potential description (bad JSON, duplicate or invalid site)."""


class NotOnBoundary(InputError):
    """Witness target does not lie on the enclosure boundary."""


class RealTarget(InputError):
    """Witness target lies on the real axis, where optimality is not asserted."""


class PoleError(NumericalError):
    """Spectral point coincides with the eigenvalue a + 1/a of J_a."""


class EmptyCurve(NumericalError):
    """Enclosure indicator has constant sign on the sampled grid."""


class ContourTooClose(NumericalError):
    """Argument-principle contour passes too close to an eigenvalue."""


class DivergentTail(NumericalError):
    """Declared decay class cannot certify a tail sum."""


class SuperharmonicityViolation(NumericalError):
    """Generator sequence fails (-Delta_0 g)_n >= 0 at some site."""


class ConvergenceFailure(NumericalError):
    """Iteration cap reached; ``partial`` holds whatever was computed."""

    def __init__(self, message: str, partial: Optional[Any] = None):
        super().__init__(message)
        self.partial = partial
