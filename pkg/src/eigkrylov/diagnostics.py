"""Eigenvector-weighted GMRES residual bounds.

For ``B = Z diag(lam) Z^-1`` and a unit right-hand side ``y`` with weights
``w = Z^-1 y``, the GMRES residual after ``k`` steps satisfies

    ||r_k|| <= ||Z|| min_{q(0)=1, deg q <= k} ||w * q(lam)||

and, splitting off the target eigenvalue ``lam[0]``,

    ||r_k|| <= ||Z|| min_{q(0)=1, deg q <= k-1} ||wt * q(lam[1:])||,
    wt_j = w_j (1 - lam_j / lam_0).

The polynomial minimizations are evaluated in an orthonormal basis of the
weighted Krylov space ``span{D w, D^2 w, ...}`` with ``D = diag(lam)``
(built by Arnoldi), which spans the same space as the weighted Vandermonde
columns but stays well conditioned for large ``k``.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .dense import EigenBasis, constrained_poly_ls
from .exceptions import InvalidEnvelopeError, ShiftEqualsEigenvalueError

_DEPENDENCE_TOL = 1e-14


@dataclass
class WeightRecord:
    """Weights of a right-hand side in an eigenbasis.

    ``w = Z^-1 y / ||y||`` and ``wt[j-1] = w[j] (1 - lam[j]/lam[0])``.  For a
    pencil, ``f = Z^-1 M y / ||M y||`` are the weights of the actual GMRES
    right-hand side ``M y`` and ``ft`` is defined like ``wt``.
    """

    w: np.ndarray
    w1: complex
    w2_norm: float
    wt: np.ndarray
    wt_norm: float
    eigenvalues: np.ndarray
    f: np.ndarray = None
    f1: complex = None
    f2_norm: float = None
    ft: np.ndarray = None
    ft_norm: float = None

    @property
    def rhs_weights(self):
        """Weights of the vector GMRES is applied to (``f`` for a pencil, else ``w``)."""
        return self.w if self.f is None else self.f

    @property
    def rhs_tilde(self):
        return self.wt if self.f is None else self.ft

    @property
    def rhs_w1(self):
        return self.w1 if self.f is None else self.f1

    @property
    def rhs_w2_norm(self):
        return self.w2_norm if self.f is None else self.f2_norm

    @property
    def rhs_tilde_norm(self):
        return self.wt_norm if self.f is None else self.ft_norm


@dataclass
class BoundReport:
    k: int
    bound_25: float
    bound_26a: float
    bound_26k1: float
    disk_C: float
    disk_S: float
    disk_valid: bool
    bound_26b_disk: float
    iter_lower: float


@dataclass
class DiskEnvelope:
    """Disk around ``lam[1:]``: ``|1 - lam/c| <= 1/C`` on the disk, so ``S = 1``."""

    C: float
    S: float
    center: complex
    radius: float
    valid: bool


def _tilt(v, lam):
    return v[1:] * (1.0 - lam[1:] / lam[0])


def compute_weights(basis, y, M=None):
    """Weights of ``y`` (and of ``M y`` for a pencil) in ``basis``.

    Raises
    ------
    ShiftEqualsEigenvalueError
        If the target eigenvalue ``basis.eigenvalues[0]`` is zero.
    """
    y = np.asarray(y)
    if y.ndim != 1 or y.shape[0] != basis.n:
        raise ValueError(f"y must be a vector of length {basis.n}, got shape {y.shape}")
    ny = np.linalg.norm(y)
    if ny == 0:
        raise ValueError("y must be nonzero")
    lam = basis.eigenvalues
    if lam[0] == 0:
        raise ShiftEqualsEigenvalueError("target eigenvalue of the shifted operator is zero")
    w = basis.solve(y) / ny
    wt = _tilt(w, lam)
    rec = WeightRecord(
        w=w, w1=complex(w[0]), w2_norm=float(np.linalg.norm(w[1:])),
        wt=wt, wt_norm=float(np.linalg.norm(wt)), eigenvalues=lam,
    )
    if M is not None:
        My = M @ y
        f = basis.solve(My) / np.linalg.norm(My)
        ft = _tilt(f, lam)
        rec.f, rec.f1, rec.f2_norm = f, complex(f[0]), float(np.linalg.norm(f[1:]))
        rec.ft, rec.ft_norm = ft, float(np.linalg.norm(ft))
    return rec


def weighted_krylov_basis(d, lam, kmax):
    """Orthonormal basis of ``span{D d, ..., D^kmax d}``, ``D = diag(lam)``.

    Stops early when the space becomes invariant under ``D``.  Arnoldi with
    two Gram-Schmidt passes.
    """
    d = np.asarray(d, dtype=complex)
    lam = np.asarray(lam, dtype=complex)
    n = d.size
    Q = np.zeros((n, max(0, min(kmax, n))), dtype=complex)
    v = lam * d
    k = 0
    while k < Q.shape[1]:
        ref = np.linalg.norm(v)
        if ref == 0:
            break
        for _ in range(2):
            v = v - Q[:, :k] @ (Q[:, :k].conj().T @ v)
        nrm = np.linalg.norm(v)
        if nrm <= _DEPENDENCE_TOL * ref:
            break
        Q[:, k] = v / nrm
        k += 1
        v = lam * Q[:, k - 1]
    return Q[:, :k]


def poly_ls_history(d, lam, kmax):
    """``min_{q(0)=1, deg q <= k} ||d * q(lam)||`` for ``k = 0..kmax``."""
    d = np.asarray(d, dtype=complex)
    Q = weighted_krylov_basis(d, lam, kmax)
    r = d.copy()
    out = np.empty(kmax + 1)
    out[0] = np.linalg.norm(r)
    for k in range(1, kmax + 1):
        if k <= Q.shape[1]:
            q = Q[:, k - 1]
            r = r - q * np.vdot(q, r)
        out[k] = np.linalg.norm(r)
    return out


def poly_ls_min(d, lam, k):
    """Single-``k`` value of :func:`poly_ls_history` via :func:`constrained_poly_ls`."""
    Q = weighted_krylov_basis(d, lam, k)
    return constrained_poly_ls(d, Q).min_value


def bound_25(basis, weights, k):
    """``||Z|| min_{q(0)=1} (sum_j |w_j q(lam_j)|^2)^(1/2)`` over degree ``k``."""
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    return basis.z_norm2 * poly_ls_min(weights.rhs_weights, basis.eigenvalues, k)


def bound_26a(basis, weights, k):
    """``||Z|| min_{q(0)=1} (sum_{j>=2} |wt_j q(lam_j)|^2)^(1/2)`` over degree ``k - 1``.

    For ``k = 1`` this is ``||Z|| ||wt||``.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    return basis.z_norm2 * poly_ls_min(weights.rhs_tilde, basis.eigenvalues[1:], k - 1)


def bound_26k1(basis, weights):
    return basis.z_norm2 * weights.rhs_tilde_norm


def bound_histories(basis, weights, kmax):
    """Arrays ``(full, split)`` of :func:`bound_25` and :func:`bound_26a` for
    ``k = 0..kmax`` (``split[0]`` is NaN)."""
    full = basis.z_norm2 * poly_ls_history(weights.rhs_weights, basis.eigenvalues, kmax)
    split = np.full(kmax + 1, np.nan)
    if kmax >= 1 and basis.n > 1:
        split[1:] = basis.z_norm2 * poly_ls_history(weights.rhs_tilde, basis.eigenvalues[1:], kmax - 1)
    elif kmax >= 1:
        split[1:] = 0.0
    return full, split


def disk_envelope(eigenvalues):
    """Disk enclosing ``eigenvalues`` (meant to be ``lam[1:]``).

    Center at the midpoint of the bounding box, radius the largest distance
    to it.  ``C = |c| / r`` and ``S = 1``; the envelope is valid (certifies
    decay) only when ``r < |c|``.  A single point gives ``C = inf``.
    """
    lam = np.asarray(eigenvalues, dtype=complex).ravel()
    if lam.size == 0:
        raise ValueError("disk_envelope needs at least one eigenvalue")
    center = complex(
        0.5 * (lam.real.min() + lam.real.max()), 0.5 * (lam.imag.min() + lam.imag.max())
    )
    radius = float(np.max(np.abs(lam - center)))
    if radius == 0:
        return DiskEnvelope(np.inf, 1.0, center, 0.0, abs(center) > 0)
    if radius < abs(center):
        return DiskEnvelope(abs(center) / radius, 1.0, center, radius, True)
    return DiskEnvelope(1.0, 1.0, center, radius, False)


def disk_bound(basis, weights, k, envelope=None):
    """``||Z|| ||wt|| S C^-(k-1)``, the weighted bound realized by the disk polynomial."""
    env = disk_envelope(basis.eigenvalues[1:]) if envelope is None else envelope
    if not env.valid:
        return np.inf
    decay = 0.0 if np.isinf(env.C) and k > 1 else env.C ** -(k - 1)
    return basis.z_norm2 * weights.rhs_tilde_norm * env.S * decay


def iter_lower_bound(C, S, z_norm, wt_norm, tau):
    """``1 + (log S + log(||Z|| ||wt|| / tau)) / log C``.

    The step at which the disk form ``||Z|| ||wt|| S C^-(k-1)`` reaches
    ``tau``.  It guarantees convergence by that step; GMRES itself may
    stop much earlier when ``C`` is close to one.

    Raises
    ------
    InvalidEnvelopeError
        If ``C <= 1``.
    """
    if not C > 1:
        raise InvalidEnvelopeError(f"envelope constant C = {C} does not certify convergence (needs C > 1)")
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")
    if not wt_norm > 0:
        raise ValueError(f"wt_norm must be positive, got {wt_norm}")
    if np.isinf(C):
        return 1.0
    return 1.0 + (np.log(S) + np.log(z_norm * wt_norm / tau)) / np.log(C)


def initial_decrease_constants(basis, sigma=None):
    """``C1 = max_{j>=2} |lam_1 - lam_j| / |lam_1|`` and ``C2 = ||Z|| C1``.

    The eigenvalues stored in ``basis`` are those of the shifted operator, so
    ``|lam_1| = |gamma_1 - sigma|``; ``sigma`` is accepted for reference only.
    """
    lam = basis.eigenvalues
    if lam[0] == 0:
        raise ShiftEqualsEigenvalueError("target eigenvalue of the shifted operator is zero")
    C1 = float(np.max(np.abs(lam[0] - lam[1:])) / abs(lam[0])) if basis.n > 1 else 0.0
    return C1, basis.z_norm2 * C1


def bound_report(basis, weights, k, tau):
    env = disk_envelope(basis.eigenvalues[1:]) if basis.n > 1 else DiskEnvelope(np.inf, 1.0, 0j, 0.0, True)
    wt_norm = weights.rhs_tilde_norm
    if env.valid and wt_norm > 0:
        lower = iter_lower_bound(env.C, env.S, basis.z_norm2, wt_norm, tau)
    else:
        lower = np.nan
    return BoundReport(
        k=k,
        bound_25=bound_25(basis, weights, k),
        bound_26a=bound_26a(basis, weights, k) if k >= 1 else np.nan,
        bound_26k1=bound_26k1(basis, weights) if k == 1 else np.nan,
        disk_C=env.C,
        disk_S=env.S,
        disk_valid=env.valid,
        bound_26b_disk=disk_bound(basis, weights, k, env) if k >= 1 else np.nan,
        iter_lower=lower,
    )


def block_weights(basis, Y):
    """``W = Z^-1 Y`` for a block."""
    return basis.solve(np.asarray(Y))


def block_bound(basis, W, k):
    """``||Z|| min_{q(0)=1} (sum_l sum_j |W[j, l] q(lam_j)|^2)^(1/2)`` over degree ``k``."""
    W = np.asarray(W)
    if W.ndim == 1:
        W = W[:, None]
    d = W.ravel(order="F")
    lam = np.tile(basis.eigenvalues, W.shape[1])
    return basis.z_norm2 * poly_ls_min(d, lam, k)


def block_bound_history(basis, W, kmax):
    W = np.asarray(W)
    if W.ndim == 1:
        W = W[:, None]
    lam = np.tile(basis.eigenvalues, W.shape[1])
    return basis.z_norm2 * poly_ls_history(W.ravel(order="F"), lam, kmax)


def block_weight_split(W, u):
    """Frobenius norms of the leading ``u`` rows and of the remaining rows of ``W``."""
    W = np.asarray(W)
    if W.ndim == 1:
        W = W[:, None]
    if u < 1 or u > W.shape[0]:
        raise ValueError(f"u must satisfy 1 <= u <= n={W.shape[0]}, got {u}")
    return float(np.linalg.norm(W[:u])), float(np.linalg.norm(W[u:]))


def operator_basis(apply_op, n, rhs=None, dtype=float):
    """Eigenbasis of a preconditioned operator formed densely (diagnostic scale).

    ``apply_op`` is applied to the identity block.  With ``rhs`` (a vector or
    an orthonormal block of ``u`` columns) the ``u`` eigenvectors with the
    largest unit-normalized projection onto ``span(rhs)`` are moved to the
    front, most aligned first; otherwise the ordering is by ascending
    ``|lam|``.
    """
    E = np.eye(n, dtype=dtype)
    D = np.asarray(apply_op(E))
    if sp.issparse(D):
        D = D.toarray()
    basis = EigenBasis.from_dense(D)
    if rhs is None:
        return basis
    R = np.asarray(rhs)
    if R.ndim == 1:
        R = (R / np.linalg.norm(R))[:, None]
    Zn = basis.Z / np.linalg.norm(basis.Z, axis=0)
    align = np.linalg.norm(R.conj().T @ Zn, axis=0)
    lead = np.argsort(-align, kind="stable")[: R.shape[1]]
    rest = np.setdiff1d(np.arange(n), lead)
    rest = rest[np.argsort(np.abs(basis.eigenvalues[rest]), kind="stable")]
    return basis.reordered(np.r_[lead, rest])
