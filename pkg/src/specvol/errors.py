"""Exception hierarchy with stable machine-readable codes.

The CLI maps any SpecvolError to exit code 1 and prints ``error: [<code>] <msg>``
on stderr; everything else is a usage error (exit 2) or a crash.
"""

from __future__ import annotations

from typing import Any


class SpecvolError(Exception):
    """Base class for domain errors raised by this package."""

    code = "error"

    def __init__(self, message: str, **context: Any):
        super().__init__(message)
        self.context = context


class InvalidParams(SpecvolError):
    code = "invalid-params"


class InvalidInterval(SpecvolError):
    code = "invalid-interval"


class InvalidIndex(SpecvolError):
    code = "invalid-index"


class InvalidGrid(SpecvolError):
    code = "invalid-grid"


class UnsupportedCase(SpecvolError):
    code = "unsupported-case"


class IntegrationFailure(SpecvolError):
    """Adaptive quadrature did not reach tolerance; best estimate attached."""

    code = "integration-failure"

    def __init__(self, message: str, best_estimate=None, error_estimate=None,
                 **context: Any):
        super().__init__(message, **context)
        self.best_estimate = best_estimate
        self.error_estimate = error_estimate


class TruncationFailure(SpecvolError):
    """Series truncation error still above tolerance at the term cap."""

    code = "truncation-failure"

    def __init__(self, message: str, best_estimate=None, error_estimate=None,
                 **context: Any):
        super().__init__(message, **context)
        self.best_estimate = best_estimate
        self.error_estimate = error_estimate


class ConvergenceViolation(SpecvolError):
    code = "convergence-violation"


class ContractViolation(SpecvolError):
    code = "contract-violation"


class CenteringViolation(SpecvolError):
    code = "centering-violation"


class Degeneracy(SpecvolError):
    code = "degeneracy"


class NoSolution(SpecvolError):
    code = "no-solution"


class DegenerateFit(SpecvolError):
    code = "degenerate-fit"


class CalibrationFailure(SpecvolError):
    code = "calibration-failure"
