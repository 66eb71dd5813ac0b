"""Exception and warning classes raised by eigkrylov."""


class MatrixMarketError(ValueError):
    """Raised when a Matrix Market or EIGB1 file cannot be parsed."""


class SingularMatrixError(ArithmeticError):
    """Raised when a dense factorization meets an exactly zero pivot."""


class PivotBreakdownError(ArithmeticError):
    """Raised by the incomplete LU factorization on a (near) zero pivot.

    The offending row is available as ``row``.
    """

    def __init__(self, msg, row):
        super().__init__(msg)
        self.row = row


class TuningSingularError(ArithmeticError):
    """Raised when the rank-one (or rank-u) tuning update has a vanishing denominator."""


class SpectrumStraddlesOriginError(ValueError):
    """Raised when a polynomial preconditioner is requested for a spectrum enclosing 0."""


class DegreeTooHighError(ArithmeticError):
    """Raised when the contour least-squares system is numerically singular."""


class InvalidEnvelopeError(ValueError):
    """Raised when a disk envelope does not certify convergence (C <= 1)."""


class BreakdownError(ArithmeticError):
    """Raised when an outer iteration cannot continue (zero inner solution, rank collapse)."""


class ConvergenceWarning(UserWarning):
    """Issued when an iterative kernel stops at its iteration cap."""


class ShiftEqualsEigenvalueError(ArithmeticError):
    """Raised when the targeted eigenvalue of the shifted operator is exactly zero."""
