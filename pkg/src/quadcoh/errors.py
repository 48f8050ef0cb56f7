"""Exception hierarchy shared by every quadcoh module."""


class QuadcohError(Exception):
    """Base class for library errors."""


class CapacityError(QuadcohError):
    """A size limit (Hermite order, Fock truncation) was exceeded."""


class NumericError(QuadcohError, ArithmeticError):
    """An integrand produced a non-finite value."""


class ContractError(QuadcohError, ValueError):
    """An input violated a documented precondition (e.g. normalization)."""


class PositivityError(ContractError):
    """A density matrix has an eigenvalue below the clamp threshold."""


class CoverageError(ContractError):
    """A discretization does not cover enough of the probability mass."""


class ConvergenceError(QuadcohError):
    """A numerical integral did not reach the requested tolerance."""

    def __init__(self, message, value=None, error_estimate=None):
        super().__init__(message)
        self.value = value
        self.error_estimate = error_estimate


class UnsupportedStateError(QuadcohError, TypeError):
    """The requested operation is not available for this state family."""
