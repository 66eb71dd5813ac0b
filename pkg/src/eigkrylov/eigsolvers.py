"""Inexact inverse iteration and inverse subspace iteration with GMRES inner solves.

Both drivers keep the shift fixed, solve the inner systems to the tolerance
``tau_i = min(delta, delta * ||rho_{i-1}||)`` and optionally record the
eigenvector weights of every right-hand side together with the GMRES bounds
of :mod:`eigkrylov.diagnostics`.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu
from sklearn.base import BaseEstimator, clone

from . import diagnostics as dg
from ._validation import check_block, check_square_matrix, check_vector
from .dense import EigenBasis
from .exceptions import BreakdownError, ConvergenceWarning
from .krylov import block_gmres, gmres, small_eigvals
from .preconditioners import (
    IdentityPreconditioner,
    PolynomialPreconditioner,
    TunedPreconditioner,
    _ApplyMixin,
)


class LuPreconditioner(_ApplyMixin, BaseEstimator):
    """Exact sparse LU of the shifted operator (``P = B``), for exact inner solves."""

    def fit(self, B, y=None):
        self.lu_ = splu(sp.csc_matrix(B))
        return self

    def apply_inverse(self, V):
        return self.lu_.solve(np.asarray(V))


@dataclass
class ProblemSpec:
    """Eigenproblem ``A x = gamma M x`` (``M = I`` when absent) and outer-loop settings.

    ``precond`` is an unfitted preconditioner estimator (``None`` means no
    preconditioning); it is cloned and fitted on ``A - sigma M``.
    """

    A: object
    M: object = None
    sigma: complex = 0.0
    y0: np.ndarray = None
    delta: float = 0.1
    max_outer: int = 50
    outer_tol: float = 1e-10
    precond: object = None
    inner_max_it: int = None
    inner_relative: bool = False

    def __post_init__(self):
        self.A = check_square_matrix(self.A, "A")
        if self.M is not None:
            self.M = check_square_matrix(self.M, "M")
            if self.M.shape != self.A.shape:
                raise ValueError(f"M has shape {self.M.shape}, A has shape {self.A.shape}")
        if not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        if self.max_outer < 1:
            raise ValueError(f"max_outer must be >= 1, got {self.max_outer}")

    @property
    def n(self):
        return self.A.shape[0]

    def shifted_operator(self):
        n = self.n
        Mop = sp.identity(n, format="csr") if self.M is None else self.M
        sigma = self.sigma
        if np.iscomplexobj(sigma) and np.imag(sigma) == 0:
            sigma = float(np.real(sigma))
        B = (self.A - sigma * Mop).tocsr()
        B.sort_indices()
        return B


@dataclass
class OuterStep:
    """One outer iteration.

    ``eigenvalue`` and ``rho_norm`` belong to the iterate used as right-hand
    side (``lambda^(i-1)`` and ``||rho_{i-1}||``); ``new_eigenvalue`` and
    ``new_rho_norm`` to the iterate produced by the step.
    """

    i: int
    eigenvalue: complex
    rho_norm: float
    tau: float
    inner_iterations: int
    inner_converged: bool
    residual_history: object
    new_eigenvalue: complex
    new_rho_norm: float
    iterate: np.ndarray = field(repr=False, default=None)
    ritz_values: np.ndarray = field(repr=False, default=None)
    weights: object = field(repr=False, default=None)
    block_weights: np.ndarray = field(repr=False, default=None)
    W1_norm: float = None
    W2_norm: float = None
    z_norm2: float = None
    bound25: np.ndarray = field(repr=False, default=None)
    bound26a: np.ndarray = field(repr=False, default=None)
    C1: float = None
    C2: float = None
    disk: object = None
    iter_lower: float = None
    preconditioner: object = field(repr=False, default=None)


@dataclass
class OuterTrace:
    steps: list
    converged: bool
    eigenvalue: complex
    eigenvector: np.ndarray = field(repr=False)
    rho_norm: float
    block: bool = False

    @property
    def n_outer(self):
        return len(self.steps)

    @property
    def inner_total(self):
        return sum(s.inner_iterations for s in self.steps)

    @property
    def inner_counts(self):
        return [s.inner_iterations for s in self.steps]


def rayleigh_quotient(A, M, x):
    """``x^H A x / x^H x``, or ``(M x)^H A x / ||M x||^2`` for a pencil."""
    x = check_vector(x, name="x", allow_zero=False)
    Ax = A @ x
    if M is None:
        return np.vdot(x, Ax) / np.vdot(x, x).real
    Mx = M @ x
    nrm2 = np.vdot(Mx, Mx).real
    if nrm2 == 0:
        raise ValueError("M x = 0: generalized Rayleigh quotient undefined")
    return np.vdot(Mx, Ax) / nrm2


def _align_phase(x):
    """Scale ``x`` so its largest-magnitude component is real and positive."""
    j = int(np.argmax(np.abs(x)))
    if np.iscomplexobj(x):
        return x * (np.conj(x[j]) / abs(x[j]))
    return x if x[j] > 0 else -x


def _normalize(x, M):
    nrm = np.linalg.norm(x if M is None else M @ x)
    if nrm == 0:
        raise BreakdownError("inner solution is zero; cannot normalize the next iterate")
    return _align_phase(x / nrm)


def _fit_preconditioner(spec, B):
    if spec.precond is None:
        return None
    P = clone(spec.precond)
    if isinstance(P, TunedPreconditioner):
        P.fit(B, A=spec.A, M=spec.M, sigma=spec.sigma)
    else:
        P.fit(B)
    return P


class _Diagnostics:
    """Chooses and caches the eigenbasis in which the weights are measured.

    Modes: ``'auto'`` measures in the eigenbasis of the operator GMRES
    actually sees (the supplied basis without preconditioning, its image
    ``lam p(lam)`` for a polynomial preconditioner, the densely formed
    preconditioned operator otherwise); ``'operator'`` always forms the
    preconditioned operator; ``'fixed'`` always uses the supplied basis, in
    which case the bounds are only recorded when that basis is the
    operator's.
    """

    def __init__(self, spec, B, P, diag, mode):
        if mode not in ("auto", "operator", "fixed"):
            raise ValueError(f"unknown diagnostics mode {mode!r}")
        self.spec, self.B, self.P = spec, B, P
        self.mode = mode
        self.fixed = None
        self.cached_operator = None
        self.bounds_valid = True
        if diag is None and mode != "operator":
            self.enabled = False
            return
        if mode == "fixed" and not isinstance(diag, EigenBasis):
            raise ValueError("diagnostics mode 'fixed' needs an EigenBasis")
        self.enabled = True
        if mode == "operator":
            return
        if spec.M is None and diag.shift != spec.sigma:
            diag = diag.shifted(spec.sigma - diag.shift)
        if P is None or isinstance(P, IdentityPreconditioner):
            self.fixed = diag
        elif isinstance(P, PolynomialPreconditioner):
            mu_poly = P.poly_
            self.fixed = diag.mapped(lambda lam: lam * mu_poly.poly(lam)) if mode == "auto" else diag
            self.bounds_valid = mode == "auto"
        elif mode == "fixed":
            self.fixed = diag
            self.bounds_valid = False

    def basis(self, rhs):
        if self.fixed is not None:
            return self.fixed
        tuned = isinstance(self.P, TunedPreconditioner)
        if self.cached_operator is not None and not tuned:
            return self.cached_operator
        Pinv = (lambda X: X) if self.P is None else self.P.apply_inverse
        B = self.B
        basis = dg.operator_basis(lambda E: B @ Pinv(E), self.spec.n, rhs=rhs)
        if not tuned:
            self.cached_operator = basis
        return basis


def _record_single(step, dgx, x, rhs, tau, kmax):
    basis = dgx.basis(rhs)
    w = dg.compute_weights(basis, x, dgx.spec.M)
    step.weights = w
    step.z_norm2 = basis.z_norm2
    if not dgx.bounds_valid:
        return
    step.bound25, step.bound26a = dg.bound_histories(basis, w, kmax)
    step.C1, step.C2 = dg.initial_decrease_constants(basis)
    if basis.n > 1:
        env = dg.disk_envelope(basis.eigenvalues[1:])
        step.disk = env
        if env.valid and w.rhs_tilde_norm > 0:
            step.iter_lower = dg.iter_lower_bound(env.C, env.S, basis.z_norm2, w.rhs_tilde_norm, tau)


def inverse_iteration(spec, diag=None, *, diag_mode="auto", callback=None):
    """Inexact inverse iteration with a fixed shift.

    Each step solves ``(A - sigma M) y = M x_i`` by right-preconditioned GMRES
    to ``tau_i = min(delta, delta ||rho_{i-1}||)``, normalizes
    (``||x||`` or ``||M x|| = 1``), updates the Rayleigh quotient and the
    eigenvalue residual ``rho = A x - lambda M x``.

    Parameters
    ----------
    spec : ProblemSpec
    diag : EigenBasis, optional
        Eigenbasis of ``A`` (shifted internally) or, for a pencil, of
        ``A - sigma M``.  When given, weights and bounds are recorded each step.
    diag_mode : {'auto', 'operator', 'fixed'}
        Which eigenbasis the weights are measured in (see ``_Diagnostics``);
        ``'operator'`` needs no ``diag``.
    callback : callable, optional
        Called as ``callback(step)`` after every outer iteration.

    Returns
    -------
    OuterTrace
    """
    A, M, n = spec.A, spec.M, spec.n
    B = spec.shifted_operator()
    P = _fit_preconditioner(spec, B)
    dgx = _Diagnostics(spec, B, P, diag, diag_mode)

    y0 = np.full(n, 1.0 / n) if spec.y0 is None else check_vector(spec.y0, n, "y0", allow_zero=False)
    x = _normalize(y0.astype(np.result_type(y0.dtype, B.dtype)), M)
    lam = rayleigh_quotient(A, M, x)
    rho = A @ x - lam * (x if M is None else M @ x)
    rho_norm = float(np.linalg.norm(rho))

    steps = []
    converged = False
    for i in range(1, spec.max_outer + 1):
        tau = min(spec.delta, spec.delta * rho_norm)
        if isinstance(P, TunedPreconditioner):
            P.tune(x, eigenvalue=lam)
        rhs = x if M is None else M @ x
        trace = gmres(
            B, None if P is None else P.apply_inverse, rhs, tol=tau,
            max_it=spec.inner_max_it, relative=spec.inner_relative,
        )
        if not trace.converged:
            warnings.warn(
                f"outer step {i}: GMRES stopped after {trace.iterations} iterations "
                f"with residual {trace.residual_norms[-1]:.3e} > tau = {tau:.3e}",
                ConvergenceWarning,
                stacklevel=2,
            )
        step = OuterStep(
            i=i, eigenvalue=lam, rho_norm=rho_norm, tau=tau,
            inner_iterations=trace.iterations, inner_converged=trace.converged,
            residual_history=trace, new_eigenvalue=None, new_rho_norm=None, iterate=x,
            preconditioner=getattr(P, "current_", None),
        )
        if dgx.enabled:
            _record_single(step, dgx, x, rhs, tau, trace.iterations)

        x = _normalize(trace.solution, M)
        lam = rayleigh_quotient(A, M, x)
        rho = A @ x - lam * (x if M is None else M @ x)
        rho_norm = float(np.linalg.norm(rho))
        step.new_eigenvalue, step.new_rho_norm = lam, rho_norm
        steps.append(step)
        if callback is not None:
            callback(step)
        if rho_norm <= spec.outer_tol:
            converged = True
            break
    return OuterTrace(steps, converged, lam, x, rho_norm)


def orthonormalize(Y):
    """Gram-Schmidt (two passes) with phase alignment of each column.

    Raises
    ------
    BreakdownError
        Naming the first column that is numerically dependent on the previous ones.
    """
    Y = np.array(Y, copy=True)
    Q = np.zeros_like(Y)
    for c in range(Y.shape[1]):
        v = Y[:, c]
        ref = np.linalg.norm(v)
        for _ in range(2):
            v = v - Q[:, :c] @ (Q[:, :c].conj().T @ v)
        nrm = np.linalg.norm(v)
        if ref == 0 or nrm <= 1e-12 * ref:
            raise BreakdownError(f"iterate block lost rank: column {c} is dependent on columns 0..{c - 1}")
        Q[:, c] = _align_phase(v / nrm)
    return Q


def default_block_start(n, u):
    """Columns ``cos(pi l (j + 1/2) / n)``, l = 0..u-1; the first column is constant."""
    j = np.arange(n) + 0.5
    return np.cos(np.pi * np.outer(j, np.arange(u)) / n)


def _ritz(A, Y):
    AY = A @ Y
    H = Y.conj().T @ AY
    R = AY - Y @ H
    return H, float(np.linalg.norm(R)), AY


def subspace_iteration(spec, u=6, Y0=None, diag=None, *, diag_mode="auto", callback=None):
    """Inverse subspace iteration with block GMRES inner solves.

    Each step orthonormalizes the iterate block ``Y``, computes the Ritz
    values of ``Y^H A Y`` and the block residual ``||A Y - Y (Y^H A Y)||_F``,
    sets ``tau = min(delta, delta * residual)`` and solves ``B X = Y`` by block
    GMRES on the Frobenius residual.  A tuned preconditioner is re-tuned on
    the block with Sherman-Morrison-Woodbury.

    Only the standard problem (``M = I``) is supported.
    """
    if spec.M is not None:
        raise ValueError("subspace_iteration supports the standard problem only (M must be None)")
    A, n = spec.A, spec.n
    if not 1 <= u <= n:
        raise ValueError(f"block width u must satisfy 1 <= u <= n={n}, got {u}")
    B = spec.shifted_operator()
    P = _fit_preconditioner(spec, B)
    dgx = _Diagnostics(spec, B, P, diag, diag_mode)

    Y0 = default_block_start(n, u) if Y0 is None else check_block(Y0, n, "Y0")
    if Y0.shape[1] != u:
        raise ValueError(f"Y0 has {Y0.shape[1]} columns, expected u={u}")
    Y = orthonormalize(Y0.astype(np.result_type(Y0.dtype, B.dtype)))
    H, res, _ = _ritz(A, Y)
    ritz = small_eigvals(H)
    lam = ritz[np.argmin(np.abs(ritz - spec.sigma))]

    steps = []
    converged = False
    for i in range(1, spec.max_outer + 1):
        tau = min(spec.delta, spec.delta * res)
        if isinstance(P, TunedPreconditioner):
            P.tune_block(Y, eigenvalues=np.diag(H))
        trace = block_gmres(
            B, None if P is None else P.apply_inverse, Y, tol=tau,
            max_it=spec.inner_max_it, relative=spec.inner_relative,
        )
        if not trace.converged:
            warnings.warn(
                f"outer step {i}: block GMRES stopped after {trace.iterations} iterations",
                ConvergenceWarning,
                stacklevel=2,
            )
        step = OuterStep(
            i=i, eigenvalue=lam, rho_norm=res, tau=tau,
            inner_iterations=trace.iterations, inner_converged=trace.converged,
            residual_history=trace, new_eigenvalue=None, new_rho_norm=None,
            iterate=Y, ritz_values=ritz, preconditioner=getattr(P, "current_", None),
        )
        if dgx.enabled:
            basis = dgx.basis(Y)
            W = dg.block_weights(basis, Y)
            step.block_weights = W
            step.W1_norm, step.W2_norm = dg.block_weight_split(W, u)
            step.z_norm2 = basis.z_norm2
            if dgx.bounds_valid:
                step.bound25 = dg.block_bound_history(basis, W, trace.iterations)
            if u == 1:
                _record_single(step, dgx, Y[:, 0], Y[:, 0], tau, trace.iterations)

        X = trace.solution_block
        Y = orthonormalize(X)
        H, res, _ = _ritz(A, Y)
        ritz = small_eigvals(H)
        lam = ritz[np.argmin(np.abs(ritz - spec.sigma))]
        step.new_eigenvalue, step.new_rho_norm = lam, res
        steps.append(step)
        if callback is not None:
            callback(step)
        if res <= spec.outer_tol:
            converged = True
            break
    trace = OuterTrace(steps, converged, lam, Y, res, block=True)
    trace.ritz_values = ritz
    return trace


class _OuterEstimator(BaseEstimator):
    def _spec(self, A, M):
        return ProblemSpec(
            A=A, M=M, sigma=self.sigma, y0=getattr(self, "y0", None), delta=self.delta,
            max_outer=self.max_outer, outer_tol=self.outer_tol, precond=self.preconditioner,
            inner_max_it=self.inner_max_it,
        )

    def _store(self, trace):
        self.trace_ = trace
        self.n_outer_ = trace.n_outer
        self.n_inner_total_ = trace.inner_total
        self.converged_ = trace.converged
        self.residual_norm_ = trace.rho_norm


class InverseIteration(_OuterEstimator):
    """Inexact inverse iteration estimator.

    Parameters
    ----------
    sigma : complex, default 0.0
        Fixed shift.
    delta : float, default 0.1
        Inner tolerance factor.
    max_outer : int, default 50
    outer_tol : float, default 1e-10
        Stop when the eigenvalue residual norm reaches this value.
    preconditioner : estimator, optional
        Unfitted preconditioner (identity, ILU, tuned, polynomial, LU).
    y0 : array_like, optional
        Start vector; defaults to ``ones(n) / n``.
    diag_mode : {'auto', 'operator', 'fixed'}, default 'auto'
    inner_max_it : int, optional

    Attributes
    ----------
    eigenvalue_, eigenvector_, trace_, n_outer_, n_inner_total_, converged_
    """

    def __init__(self, sigma=0.0, delta=0.1, max_outer=50, outer_tol=1e-10, preconditioner=None,
                 y0=None, diag_mode="auto", inner_max_it=None):
        self.sigma = sigma
        self.delta = delta
        self.max_outer = max_outer
        self.outer_tol = outer_tol
        self.preconditioner = preconditioner
        self.y0 = y0
        self.diag_mode = diag_mode
        self.inner_max_it = inner_max_it

    def fit(self, A, y=None, *, M=None, basis=None):
        trace = inverse_iteration(self._spec(A, M), basis, diag_mode=self.diag_mode)
        self.eigenvalue_ = trace.eigenvalue
        self.eigenvector_ = trace.eigenvector
        self._store(trace)
        return self


class SubspaceIteration(_OuterEstimator):
    """Inverse subspace iteration estimator (block GMRES inner solves).

    Parameters are those of :class:`InverseIteration` plus ``n_vectors``
    (block width, default 6) and ``Y0`` (start block).

    Attributes
    ----------
    eigenvalues_ : Ritz values of the final block
    eigenvectors_ : orthonormal final block
    """

    def __init__(self, n_vectors=6, sigma=0.0, delta=0.1, max_outer=50, outer_tol=1e-10,
                 preconditioner=None, Y0=None, diag_mode="auto", inner_max_it=None):
        self.n_vectors = n_vectors
        self.sigma = sigma
        self.delta = delta
        self.max_outer = max_outer
        self.outer_tol = outer_tol
        self.preconditioner = preconditioner
        self.Y0 = Y0
        self.diag_mode = diag_mode
        self.inner_max_it = inner_max_it

    def fit(self, A, y=None, *, basis=None):
        trace = subspace_iteration(
            self._spec(A, None), self.n_vectors, self.Y0, basis, diag_mode=self.diag_mode
        )
        self.eigenvalues_ = trace.ritz_values
        self.eigenvectors_ = trace.eigenvector
        self._store(trace)
        return self
