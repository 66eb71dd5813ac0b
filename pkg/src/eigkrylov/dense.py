"""Dense kernels: constrained polynomial least squares, norm estimation, LU solves
and the :class:`EigenBasis` container used by the diagnostics.
"""

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, aslinearoperator

from .exceptions import ConvergenceWarning, MatrixMarketError, SingularMatrixError


_DENSE_SVD_MAX = 4096


@dataclass(frozen=True)
class LeastSquaresResult:
    coefficients: np.ndarray
    min_value: float


def constrained_poly_ls(d, M):
    """Minimize ``||d + M c||_2`` over complex ``c``.

    With ``d = w`` and ``M[j, m] = w_j * lam_j**m`` this is the minimum over
    polynomials ``q`` of degree ``k`` with ``q(0) = 1`` of
    ``sqrt(sum_j |w_j q(lam_j)|**2)``.  Rank deficient ``M`` is resolved by the
    minimum-norm solution (SVD based ``lstsq``).
    """
    d = np.asarray(d, dtype=complex)
    if d.ndim != 1 or d.size == 0:
        raise ValueError("d must be a nonempty vector")
    M = np.asarray(M, dtype=complex)
    if M.ndim == 1 and M.size == 0:
        M = M.reshape(d.size, 0)
    if M.ndim != 2 or M.shape[0] != d.size:
        raise ValueError(f"M has shape {M.shape}, expected ({d.size}, k)")
    if M.shape[1] == 0:
        return LeastSquaresResult(np.zeros(0, dtype=complex), float(np.linalg.norm(d)))
    c, *_ = np.linalg.lstsq(M, -d, rcond=None)
    return LeastSquaresResult(c, float(np.linalg.norm(d + M @ c)))


def spectral_norm2(Z, *, tol=1e-10, maxiter=5000, return_info=False):
    """Largest singular value of ``Z`` by power iteration on ``Z^H Z``.

    ``Z`` may be a dense array, a sparse matrix or a ``LinearOperator`` with
    ``rmatvec``.  The seed is ``(1, ..., 1)/sqrt(n)`` so runs are reproducible.
    Stops when the eigen-residual ``||Z^H Z x - s^2 x||`` falls below
    ``tol * s^2``; a test on the change of the estimate alone stalls early
    when the top singular values cluster.  At the iteration cap a :class:`ConvergenceWarning` is issued and the best
    estimate returned (``return_info=True`` also returns a converged flag).
    """
    op = aslinearoperator(Z)
    n = op.shape[1]
    if n == 0 or op.shape[0] == 0:
        raise ValueError("spectral_norm2 needs a nonempty matrix")
    x = np.full(n, 1.0 / np.sqrt(n))
    if not np.any(op.matvec(x)):
        # seed in the null space: retry once with a deterministic ramp
        ramp = np.arange(1.0, n + 1.0)
        x = ramp / np.linalg.norm(ramp)
        if not np.any(op.matvec(x)):
            return (0.0, True) if return_info else 0.0
    est = 0.0
    converged = False
    for _ in range(maxiter):
        y = op.matvec(x)
        est = float(np.linalg.norm(y))
        z = op.rmatvec(y)
        if np.linalg.norm(z - est**2 * x) <= tol * est**2:
            converged = True
            break
        x = z / np.linalg.norm(z)
    if not converged:
        warnings.warn(
            f"power iteration did not reach relative change {tol} in {maxiter} steps; "
            f"returning best estimate {est:.6e}",
            ConvergenceWarning,
            stacklevel=2,
        )
    return (est, converged) if return_info else est


class DenseLU:
    """Partial-pivoted LU of a square dense matrix with solves by ``Z`` and ``Z^H``."""

    def __init__(self, Z):
        Z = np.asarray(Z)
        if Z.ndim != 2 or Z.shape[0] != Z.shape[1]:
            raise ValueError(f"Z must be square, got shape {Z.shape}")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            self._lu, self._piv = scipy.linalg.lu_factor(Z, check_finite=True)
        pivots = np.abs(np.diag(self._lu))
        if np.any(pivots == 0.0):
            row = int(np.argmin(pivots))
            raise SingularMatrixError(f"zero pivot at position {row} in partial-pivoted LU")
        self.shape = Z.shape
        self.dtype = self._lu.dtype

    def solve(self, v, conjugate_transpose=False):
        return scipy.linalg.lu_solve((self._lu, self._piv), v, trans=2 if conjugate_transpose else 0)

    def inverse_operator(self):
        n = self.shape[0]
        return LinearOperator(
            (n, n),
            matvec=self.solve,
            rmatvec=lambda v: self.solve(v, conjugate_transpose=True),
            dtype=self.dtype,
        )


def dense_lu_solve(Z, v):
    """Solve ``Z x = v`` with partial-pivoted LU."""
    v = np.asarray(v)
    Z = np.asarray(Z)
    if v.shape[0] != Z.shape[0]:
        raise ValueError(f"dimension mismatch: Z is {Z.shape}, v has {v.shape[0]} rows")
    return DenseLU(Z).solve(v)


class EigenBasis:
    """Eigenvalues and eigenvectors of a diagonalizable operator ``B = Z diag(lam) Z^-1``.

    Eigenpairs are stored ordered by ascending ``|lam|`` (stable, so ties keep
    their input order); ``eigenvalues[0]`` is therefore the eigenvalue targeted
    by the shift.  ``shift`` records the shift already subtracted, so that the
    eigenvalues of the unshifted matrix are ``eigenvalues + shift``.

    Parameters
    ----------
    eigenvalues : array_like, shape (n,)
    Z : array_like, shape (n, n)
        Eigenvectors as columns.
    shift : complex, default 0
    A : sparse or dense matrix, optional
        When given, every pair is validated against ``A``:
        ``||A z_j - (lam_j + shift) z_j|| <= rtol * ||A||_F``.
    """

    def __init__(self, eigenvalues, Z, *, shift=0.0, A=None, rtol=1e-10):
        lam = np.asarray(eigenvalues, dtype=complex).ravel()
        Z = np.asarray(Z, dtype=complex)
        n = lam.size
        if Z.shape != (n, n):
            raise ValueError(f"Z has shape {Z.shape}, expected ({n}, {n})")
        order = np.argsort(np.abs(lam), kind="stable")
        self.eigenvalues = lam[order]
        self.Z = np.asfortranarray(Z[:, order])
        self.shift = complex(shift)
        self.n = n
        self._lu = DenseLU(self.Z)
        self._z_norm2 = None
        self._z_cond2 = None
        if A is not None:
            self.validate(A, rtol=rtol)

    def _singular_extremes(self):
        # Z is held densely, so the extremes come straight from LAPACK; every
        # bound scales with ||Z||, and an underestimate would make them invalid
        if self.n <= _DENSE_SVD_MAX:
            s = scipy.linalg.svdvals(self.Z)
            self._z_norm2 = float(s[0])
            self._z_cond2 = float(s[0] / s[-1]) if s[-1] > 0 else np.inf
        else:
            self._z_norm2 = spectral_norm2(self.Z)
            self._z_cond2 = self._z_norm2 * spectral_norm2(self._lu.inverse_operator())

    @property
    def z_norm2(self):
        if self._z_norm2 is None:
            self._singular_extremes()
        return self._z_norm2

    @property
    def z_cond2(self):
        if self._z_cond2 is None:
            self._singular_extremes()
        return self._z_cond2

    def solve(self, v):
        """Apply ``Z^-1`` to a vector or block."""
        v = np.asarray(v)
        if v.shape[0] != self.n:
            raise ValueError(f"dimension mismatch: basis has n={self.n}, got {v.shape[0]} rows")
        return self._lu.solve(v.astype(complex, copy=False))

    def residuals(self, A):
        """Per-column ``||A z_j - (lam_j + shift) z_j||_2``."""
        AZ = A @ self.Z
        return np.linalg.norm(AZ - self.Z * (self.eigenvalues + self.shift), axis=0)

    def validate(self, A, rtol=1e-10):
        if sp.issparse(A):
            fro = sp.linalg.norm(A, "fro")
        else:
            fro = np.linalg.norm(np.asarray(A), "fro")
        res = self.residuals(A)
        worst = int(np.argmax(res))
        if res[worst] > rtol * fro:
            raise ValueError(
                f"eigenpair {worst} fails validation: residual {res[worst]:.3e} > {rtol:g}*||A||_F"
            )
        return self

    def shifted(self, sigma):
        """Basis of ``B - sigma I`` (same eigenvectors, re-ordered by ``|lam - sigma|``)."""
        new = EigenBasis.__new__(EigenBasis)
        lam = self.eigenvalues - sigma
        order = np.argsort(np.abs(lam), kind="stable")
        new.eigenvalues = lam[order]
        new.Z = np.asfortranarray(self.Z[:, order])
        new.shift = self.shift + complex(sigma)
        new.n = self.n
        new._lu = DenseLU(new.Z) if np.any(order != np.arange(self.n)) else self._lu
        new._z_norm2 = self._z_norm2
        new._z_cond2 = self._z_cond2
        return new

    def mapped(self, fn):
        """Basis of ``f(B)`` for a polynomial ``f``; the ordering of the pairs is kept.

        Used for polynomially preconditioned operators ``B p(B)``, where the
        target stays the image of the original target eigenvalue.
        """
        new = EigenBasis.__new__(EigenBasis)
        new.eigenvalues = np.asarray(fn(self.eigenvalues), dtype=complex)
        new.Z = self.Z
        new.shift = 0j
        new.n = self.n
        new._lu = self._lu
        new._z_norm2 = self._z_norm2
        new._z_cond2 = self._z_cond2
        return new

    def reordered(self, order):
        """Copy with the pairs permuted by ``order`` (``order[0]`` becomes the target)."""
        order = np.asarray(order)
        if sorted(order.tolist()) != list(range(self.n)):
            raise ValueError("order must be a permutation of range(n)")
        new = EigenBasis.__new__(EigenBasis)
        new.eigenvalues = self.eigenvalues[order]
        new.Z = np.asfortranarray(self.Z[:, order])
        new.shift = self.shift
        new.n = self.n
        new._lu = self._lu if np.all(order == np.arange(self.n)) else DenseLU(new.Z)
        new._z_norm2 = self._z_norm2
        new._z_cond2 = self._z_cond2
        return new

    def retarget(self, index):
        """Copy with pair ``index`` moved to the front (the rest keep their order)."""
        return self.reordered(np.r_[index, np.delete(np.arange(self.n), index)])

    @classmethod
    def from_dense(cls, B):
        """Eigendecomposition of a dense operator via LAPACK (diagnostic scale only)."""
        B = B.toarray() if sp.issparse(B) else np.asarray(B)
        lam, Z = np.linalg.eig(B)
        return cls(lam, Z)

    def __repr__(self):
        return f"EigenBasis(n={self.n}, target={self.eigenvalues[0]:.6g}, shift={self.shift:.6g})"


def _fmt(x):
    return repr(float(x))


def write_eigb(path, eigenvalues, Z):
    """Write an EIGB1 file: header, ``n`` eigenvalue lines, ``n*n`` column-major Z lines."""
    lam = np.asarray(eigenvalues, dtype=complex).ravel()
    Z = np.asarray(Z, dtype=complex)
    n = lam.size
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"EIGB1 {n}\n")
        for v in lam:
            fh.write(f"{_fmt(v.real)} {_fmt(v.imag)}\n")
        for v in Z.ravel(order="F"):
            fh.write(f"{_fmt(v.real)} {_fmt(v.imag)}\n")


def read_eigb(path):
    """Read an EIGB1 file and return ``(eigenvalues, Z)``."""
    with open(path, "r", encoding="ascii") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise MatrixMarketError(f"{path}: empty EIGB1 file")
    head = lines[0].split()
    if len(head) != 2 or head[0] != "EIGB1":
        raise MatrixMarketError(f"{path}: first line must be 'EIGB1 n', got {lines[0]!r}")
    try:
        n = int(head[1])
    except ValueError:
        raise MatrixMarketError(f"{path}: bad dimension {head[1]!r}") from None
    if n < 1:
        raise MatrixMarketError(f"{path}: dimension must be positive")
    expected = 1 + n + n * n
    if len(lines) != expected:
        raise MatrixMarketError(f"{path}: expected {expected} nonblank lines, found {len(lines)}")
    vals = np.empty(n + n * n, dtype=complex)
    for idx, ln in enumerate(lines[1:]):
        parts = ln.split()
        if len(parts) != 2:
            raise MatrixMarketError(f"{path}: line {idx + 2} must hold 're im'")
        try:
            vals[idx] = complex(float(parts[0]), float(parts[1]))
        except ValueError:
            raise MatrixMarketError(f"{path}: line {idx + 2} is not numeric: {ln!r}") from None
    return vals[:n], vals[n:].reshape((n, n), order="F")
