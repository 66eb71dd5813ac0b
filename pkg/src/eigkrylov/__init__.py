"""Inexact inverse and subspace iteration with GMRES inner solves.

The package pairs the outer eigensolvers with the inner-solver diagnostics
that explain their cost: the eigenvector weights of each right-hand side,
the weighted GMRES residual bounds, and the preconditioners (incomplete LU,
tuned, polynomial) whose effect those weights expose.
"""

from .dense import EigenBasis, constrained_poly_ls, read_eigb, spectral_norm2, write_eigb
from .diagnostics import (
    block_bound,
    block_bound_history,
    block_weight_split,
    block_weights,
    bound_25,
    bound_26a,
    bound_26k1,
    bound_histories,
    bound_report,
    compute_weights,
    disk_bound,
    disk_envelope,
    initial_decrease_constants,
    iter_lower_bound,
    operator_basis,
    poly_ls_min,
)
from .eigsolvers import (
    InverseIteration,
    LuPreconditioner,
    ProblemSpec,
    SubspaceIteration,
    inverse_iteration,
    rayleigh_quotient,
    subspace_iteration,
)
from .exceptions import (
    BreakdownError,
    ConvergenceWarning,
    DegreeTooHighError,
    InvalidEnvelopeError,
    MatrixMarketError,
    PivotBreakdownError,
    ShiftEqualsEigenvalueError,
    SingularMatrixError,
    SpectrumStraddlesOriginError,
    TuningSingularError,
)
from .krylov import arnoldi, arnoldi_ritz, block_gmres, gmres, hessenberg_eigvals, small_eigvals
from .preconditioners import (
    IdentityPreconditioner,
    IluPreconditioner,
    PolynomialPreconditioner,
    TunedPreconditioner,
    cheb_nu,
    contour_ls_mu,
    ilu_apply_inverse,
    ilu_factor,
    interval_guard,
    leja_order,
    nu_from_mu,
    nu_to_mu,
    poly_apply_inverse,
    poly_apply_roots,
    tuned_apply_inverse,
    tuned_make,
    tuned_make_block,
)
from .sparse import gen_convdiff, gen_tridiag, mm_read, mm_write, spmv

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
