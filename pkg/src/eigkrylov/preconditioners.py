"""Right preconditioners: identity, threshold incomplete LU, tuned rank-one
updates of a base preconditioner, and residual-polynomial preconditioners.

Every preconditioner object exposes ``apply_inverse(V)`` acting on a vector
or on the columns of a block; ``transform`` is an alias so the objects fit
the usual estimator vocabulary.
"""

import heapq
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve_triangular
from sklearn.base import BaseEstimator, clone

from ._validation import as_operator, check_block, check_square_matrix, check_vector, operator_size
from .exceptions import (
    DegreeTooHighError,
    PivotBreakdownError,
    SpectrumStraddlesOriginError,
    TuningSingularError,
)
from .krylov import arnoldi_ritz

PIVOT_RTOL = 1e-14
TUNING_TOL = 1e-14
GAUSS_NODES = 32
# a weighted Vandermonde system worse than this is treated as singular
CONTOUR_COND_LIMIT = 1.0 / (1e3 * np.finfo(float).eps)


class _ApplyMixin:
    def transform(self, V):
        return self.apply_inverse(V)

    def __call__(self, V):
        return self.apply_inverse(V)


class IdentityPreconditioner(_ApplyMixin, BaseEstimator):
    """``P = I``."""

    def fit(self, B=None, y=None):
        self.fitted_ = True
        return self

    def apply_inverse(self, V):
        return np.asarray(V)


# ---------------------------------------------------------------- incomplete LU


@dataclass
class IluFactors:
    """``L`` unit lower triangular (diagonal stored), ``U`` upper triangular, both CSR."""

    L: sp.csr_matrix
    U: sp.csr_matrix
    droptol: float


def ilu_factor(A, droptol):
    """Threshold incomplete LU, row by row (IKJ ordering).

    Entries of row ``i`` of ``L`` and ``U`` are dropped when their magnitude is
    below ``droptol`` times the 2-norm of row ``i`` of ``A``; a multiplier is
    tested before it is used for elimination.  Diagonal entries are always
    kept and there is no cap on fill.

    Raises
    ------
    PivotBreakdownError
        If a row has no diagonal entry or ``|u_ii| < 1e-14 * ||A[i, :]||``.
    """
    A = check_square_matrix(A)
    if droptol < 0:
        raise ValueError(f"droptol must be >= 0, got {droptol}")
    n = A.shape[0]
    dtype = np.result_type(A.dtype, float)
    indptr, indices, data = A.indptr, A.indices, A.data.astype(dtype, copy=False)

    u_rows = []
    u_diag = np.zeros(n, dtype=dtype)
    l_ptr, l_idx, l_val = [0], [], []
    u_ptr, u_idx, u_val = [0], [], []
    for i in range(n):
        lo, hi = indptr[i], indptr[i + 1]
        row = dict(zip(indices[lo:hi].tolist(), data[lo:hi].tolist()))
        row_norm = float(np.linalg.norm(data[lo:hi]))
        if i not in row:
            raise PivotBreakdownError(f"row {i} has no stored diagonal entry", i)
        thresh = droptol * row_norm

        pending = [k for k in row if k < i]
        heapq.heapify(pending)
        while pending:
            k = heapq.heappop(pending)
            mult = row[k] / u_diag[k]
            if abs(mult) < thresh:
                del row[k]
                continue
            row[k] = mult
            for j, ukj in u_rows[k]:
                if j in row:
                    row[j] -= mult * ukj
                else:
                    row[j] = -mult * ukj
                    if j < i:
                        heapq.heappush(pending, j)

        pivot = row[i]
        if not abs(pivot) >= PIVOT_RTOL * row_norm or pivot == 0:
            raise PivotBreakdownError(
                f"pivot breakdown in row {i}: |u_ii| = {abs(pivot):.3e} "
                f"< {PIVOT_RTOL:g} * ||A[{i}, :]|| = {PIVOT_RTOL * row_norm:.3e}",
                i,
            )
        u_diag[i] = pivot
        lower = sorted(j for j in row if j < i)
        upper = sorted(j for j in row if j > i and abs(row[j]) >= thresh)
        l_idx.extend(lower + [i])
        l_val.extend([row[j] for j in lower] + [1.0])
        l_ptr.append(len(l_idx))
        u_idx.extend([i] + upper)
        u_val.extend([pivot] + [row[j] for j in upper])
        u_ptr.append(len(u_idx))
        u_rows.append([(j, row[j]) for j in upper])

    L = sp.csr_matrix((np.array(l_val, dtype=dtype), np.array(l_idx), np.array(l_ptr)), shape=(n, n))
    U = sp.csr_matrix((np.array(u_val, dtype=dtype), np.array(u_idx), np.array(u_ptr)), shape=(n, n))
    return IluFactors(L, U, float(droptol))


def ilu_apply_inverse(F, v):
    """``U^-1 L^-1 v`` by forward then back substitution (vector or block)."""
    v = np.asarray(v)
    if v.shape[0] != F.L.shape[0]:
        raise ValueError(f"dimension mismatch: factors are {F.L.shape}, v has {v.shape[0]} rows")
    dtype = np.result_type(F.L.dtype, v.dtype, float)
    z = spsolve_triangular(F.L, v.astype(dtype, copy=False), lower=True, unit_diagonal=True)
    return spsolve_triangular(F.U, z, lower=False)


class IluPreconditioner(_ApplyMixin, BaseEstimator):
    """Threshold incomplete LU preconditioner.

    Parameters
    ----------
    droptol : float, default 1e-2
        Relative drop tolerance (see :func:`ilu_factor`).
    """

    def __init__(self, droptol=1e-2):
        self.droptol = droptol

    def fit(self, B, y=None):
        self.factors_ = ilu_factor(B, self.droptol)
        self.n_ = B.shape[0]
        return self

    def apply_inverse(self, V):
        return ilu_apply_inverse(self.factors_, V)


# ---------------------------------------------------------------- tuning

TUNING_TARGETS = ("identity", "A", "B", "lambda")


@dataclass
class TunedPrecond:
    """Rank-one tuned preconditioner ``P_i = P + (t - P y) y^H / (y^H y)``.

    ``P_i y = t`` and, by Sherman-Morrison,
    ``P_i^-1 v = P^-1 v - (P^-1 t - y) (y^H P^-1 v) / (y^H P^-1 t)``.
    """

    base: object
    y: np.ndarray
    t: np.ndarray
    base_inv_t: np.ndarray
    denominator: complex
    target: str = "identity"

    def apply_inverse(self, V):
        z = self.base(V)
        coef = np.conj(self.y) @ z / self.denominator
        corr = self.base_inv_t - self.y
        if z.ndim == 1:
            return z - corr * coef
        return z - np.outer(corr, coef)

    transform = apply_inverse
    __call__ = apply_inverse


def _target_vector(y, target, A, B, M, sigma, eigenvalue):
    My = y if M is None else M @ y
    if target == "identity":
        return My
    if target == "A":
        if A is None:
            raise ValueError("target 'A' needs A")
        return A @ y
    if target == "B":
        if B is not None:
            return as_operator(B)(y)
        if A is None:
            raise ValueError("target 'B' needs B or A")
        return A @ y - sigma * My
    if target == "lambda":
        if eigenvalue is None:
            raise ValueError("target 'lambda' needs the current eigenvalue estimate")
        lam = eigenvalue - sigma
        if lam == 0:
            raise TuningSingularError("eigenvalue estimate equals the shift; lambda-target undefined")
        return lam * My
    raise ValueError(f"unknown tuning target {target!r}; expected one of {TUNING_TARGETS}")


def tuned_make(base, y, target="identity", *, A=None, B=None, M=None, sigma=0.0, eigenvalue=None):
    """Tune ``base`` so that the new preconditioner maps ``y`` to the target vector.

    Targets: ``'identity'`` (``t = y``, or ``My`` for a pencil), ``'A'``
    (``t = Ay``), ``'B'`` (``t = (A - sigma M) y``) and ``'lambda'``
    (``t = (eigenvalue - sigma) y``, or ``... M y``).  One application of
    the base inverse is spent on ``P^-1 t``.

    Parameters
    ----------
    base : callable
        Action of the base inverse preconditioner ``P^-1``.
    """
    y = check_vector(y, name="y", allow_zero=False)
    base = as_operator(base)
    t = np.asarray(_target_vector(y, target, A, B, M, sigma, eigenvalue))
    base_inv_t = np.asarray(base(t))
    denom = np.vdot(y, base_inv_t)
    if not abs(denom) >= TUNING_TOL:
        raise TuningSingularError(
            f"tuning denominator |y^H P^-1 t| = {abs(denom):.3e} below {TUNING_TOL:g}"
        )
    return TunedPrecond(base, y, t, base_inv_t, denom, target)


def tuned_apply_inverse(P, v):
    return P.apply_inverse(v)


@dataclass
class BlockTunedPrecond:
    """Block tuned preconditioner with ``P_i Y = T`` applied by Sherman-Morrison-Woodbury.

    ``P_i^-1 V = P^-1 V - (P^-1 T - Y) (Y^H P^-1 T)^-1 Y^H P^-1 V``.
    """

    base: object
    Y: np.ndarray
    T: np.ndarray
    base_inv_T: np.ndarray
    small_lu: tuple = field(repr=False)

    def apply_inverse(self, V):
        Z = self.base(V)
        vec = Z.ndim == 1
        Z2 = Z[:, None] if vec else Z
        C = scipy.linalg.lu_solve(self.small_lu, self.Y.conj().T @ Z2)
        out = Z2 - (self.base_inv_T - self.Y) @ C
        return out[:, 0] if vec else out

    transform = apply_inverse
    __call__ = apply_inverse


def tuned_make_block(base, Y, target="A", *, A=None, B=None, M=None, sigma=0.0, eigenvalues=None):
    """Block analogue of :func:`tuned_make`: ``P_i Y = T`` with ``T`` chosen per target.

    For ``'lambda'`` the columns are scaled by ``eigenvalues - sigma``.
    """
    Y = check_block(Y, name="Y")
    base = as_operator(base)
    MY = Y if M is None else M @ Y
    if target == "identity":
        T = MY
    elif target == "A":
        T = A @ Y
    elif target == "B":
        T = as_operator(B)(Y) if B is not None else A @ Y - sigma * MY
    elif target == "lambda":
        T = MY * (np.asarray(eigenvalues) - sigma)[None, :]
    else:
        raise ValueError(f"unknown tuning target {target!r}; expected one of {TUNING_TARGETS}")
    T = np.asarray(T)
    base_inv_T = np.asarray(base(T))
    if base_inv_T.ndim == 1:
        base_inv_T = base_inv_T[:, None]
    S = Y.conj().T @ base_inv_T
    sv = np.linalg.svd(S, compute_uv=False)
    if sv[-1] < TUNING_TOL * max(1.0, sv[0]):
        raise TuningSingularError(
            f"block tuning matrix Y^H P^-1 T is singular (smallest singular value {sv[-1]:.3e})"
        )
    return BlockTunedPrecond(base, Y, T, base_inv_T, scipy.linalg.lu_factor(S))


class TunedPreconditioner(_ApplyMixin, BaseEstimator):
    """A base preconditioner that is re-tuned at every outer iteration.

    Parameters
    ----------
    base : estimator, default IluPreconditioner()
        Cloned and fitted on the shifted operator.
    target : {'identity', 'A', 'B', 'lambda'}, default 'identity'

    Call :meth:`fit` once, then :meth:`tune` (or :meth:`tune_block`) each
    outer step; :meth:`apply_inverse` uses the most recent tuning.
    """

    def __init__(self, base=None, target="identity"):
        self.base = base
        self.target = target

    def fit(self, B, y=None, *, A=None, M=None, sigma=0.0):
        if self.target not in TUNING_TARGETS:
            raise ValueError(f"unknown tuning target {self.target!r}; expected one of {TUNING_TARGETS}")
        base = IluPreconditioner() if self.base is None else self.base
        self.base_ = clone(base).fit(B)
        self.B_ = B
        self.A_ = A
        self.M_ = M
        self.sigma_ = sigma
        self.current_ = None
        return self

    def tune(self, y, eigenvalue=None):
        self.current_ = tuned_make(
            self.base_.apply_inverse, y, self.target,
            A=self.A_, B=self.B_, M=self.M_, sigma=self.sigma_, eigenvalue=eigenvalue,
        )
        return self.current_

    def tune_block(self, Y, eigenvalues=None):
        self.current_ = tuned_make_block(
            self.base_.apply_inverse, Y, self.target,
            A=self.A_, B=self.B_, M=self.M_, sigma=self.sigma_, eigenvalues=eigenvalues,
        )
        return self.current_

    def apply_inverse(self, V):
        if self.current_ is None:
            return self.base_.apply_inverse(V)
        return self.current_.apply_inverse(V)


# ---------------------------------------------------------------- polynomial


def interval_guard(a, b):
    """Move a slightly straddling interval onto one side of the origin.

    ``b > 0 > a`` with ``|a| <= 0.1 b`` becomes ``(-a, b - 2a)``; the mirrored
    case ``a < 0 < b`` with ``b <= 0.1 |a|`` becomes ``(a - 2b, -b)``.
    Same-signed intervals are returned unchanged.
    """
    a, b = float(a), float(b)
    if a > b:
        raise ValueError(f"interval endpoints out of order: a={a} > b={b}")
    if a == 0 and b == 0:
        raise ValueError("degenerate interval [0, 0]")
    if a > 0 or b < 0:
        return a, b
    if b > 0 and -a <= 0.1 * b and a < 0:
        return -a, b - 2 * a
    if a < 0 and b <= 0.1 * -a and b > 0:
        return a - 2 * b, -b
    raise SpectrumStraddlesOriginError(
        f"spectrum estimate [{a:.6g}, {b:.6g}] contains the origin; "
        "a polynomial preconditioner is not applicable"
    )


def cheb_nu(a, b, d):
    """Reciprocal Chebyshev nodes ``nu_h = 2 / (b + a - (b - a) cos(pi phi_h))``, h = 1..d+1."""
    if d < 0:
        raise ValueError(f"degree must be >= 0, got {d}")
    if a > b:
        raise ValueError(f"interval endpoints out of order: a={a} > b={b}")
    if a <= 0 <= b:
        raise SpectrumStraddlesOriginError(
            f"interval [{a:g}, {b:g}] touches the origin; apply interval_guard first"
        )
    h = np.arange(1, d + 2)
    phi = (2 * h - 1) / (2 * (d + 1))
    return 2.0 / (b + a - (b - a) * np.cos(np.pi * phi))


def nu_to_mu(nu):
    """Coefficients of ``p`` with ``1 - z p(z) = prod_h (1 - nu_h z)``.

    Expands ``g_h(z) = g_{h-1}(z) - nu_h z g_{h-1}(z)`` from ``g_0 = 1``.
    """
    nu = np.asarray(nu)
    if nu.ndim != 1 or nu.size == 0:
        raise ValueError("nu must be a nonempty list of roots")
    g = np.zeros(nu.size + 1, dtype=np.result_type(nu.dtype, float))
    g[0] = 1.0
    for h, v in enumerate(nu, start=1):
        g[1 : h + 1] = g[1 : h + 1] - v * g[:h]
    return -g[1:]


def poly_apply_inverse(apply_B, mu, v):
    """``p(B) v`` by Horner's rule (``len(mu) - 1`` applications of ``B``)."""
    mu = np.asarray(mu)
    if mu.size == 0:
        raise ValueError("mu must be nonempty")
    apply_B = as_operator(apply_B)
    v = np.asarray(v)
    out = mu[-1] * v
    for coef in mu[-2::-1]:
        out = apply_B(out) + coef * v
    return out


def _gauss_points(segments):
    x, wts = np.polynomial.legendre.leggauss(GAUSS_NODES)
    nodes, weights = [], []
    for z0, z1 in segments:
        z0, z1 = complex(z0), complex(z1)
        half = 0.5 * (z1 - z0)
        length = abs(z1 - z0)
        if length == 0:
            continue
        nodes.append(0.5 * (z0 + z1) + half * x)
        weights.append(0.5 * length * wts)
    if not nodes:
        return np.zeros(0, dtype=complex), np.zeros(0)
    return np.concatenate(nodes), np.concatenate(weights)


def contour_ls_mu(segments, d, *, real=False):
    """Least-squares residual polynomial on a piecewise linear contour.

    Minimizes ``(1/L) int |1 - z p(z)|^2 |dz|`` over ``p`` of degree ``d``,
    with each segment integrated by 32-point Gauss-Legendre quadrature.  The
    discretized problem is solved as a weighted least-squares problem in the
    monomials ``z, ..., z^(d+1)`` (rescaled by ``max |z|``).  With
    ``real=True`` the contour is taken as the upper half of a contour
    symmetric about the real axis and the coefficients are real.

    A contour of zero length is a point mass at its first endpoint.

    Raises
    ------
    DegreeTooHighError
        If the weighted Vandermonde system is numerically singular.
    """
    if d < 0:
        raise ValueError(f"degree must be >= 0, got {d}")
    segments = [tuple(s) for s in segments]
    if not segments:
        raise ValueError("at least one segment is required")
    nodes, weights = _gauss_points(segments)
    if nodes.size == 0:
        nodes = np.array([complex(segments[0][0])])
        weights = np.array([1.0])
    if np.any(nodes == 0):
        raise SpectrumStraddlesOriginError("the contour passes through the origin")
    weights = weights / weights.sum()
    scale = np.max(np.abs(nodes))
    powers = np.arange(1, d + 2)
    root_w = np.sqrt(weights)[:, None]
    V = root_w * (nodes[:, None] / scale) ** powers[None, :]
    rhs = np.sqrt(weights).astype(complex)
    if real:
        V = np.vstack([V.real, V.imag])
        rhs = np.concatenate([rhs.real, rhs.imag])
    sv = np.linalg.svd(V, compute_uv=False)
    if sv.size < d + 1 or sv[-1] <= sv[0] / CONTOUR_COND_LIMIT:
        raise DegreeTooHighError(
            f"degree {d} is too high for this contour (weighted Vandermonde system is singular); "
            "use a smaller degree"
        )
    coef, *_ = np.linalg.lstsq(V, rhs, rcond=None)
    return coef / scale**powers


def _convex_hull(points):
    """Counter-clockwise convex hull (Andrew's monotone chain) of complex points."""
    pts = sorted(set((float(p.real), float(p.imag)) for p in points))
    if len(pts) <= 2:
        return [complex(*p) for p in pts]

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return [complex(*p) for p in lower[:-1] + upper[:-1]]


def _origin_in_polygon(poly):
    # counter-clockwise convex polygon: origin inside or on the boundary
    if len(poly) < 3:
        return False
    for a, b in zip(poly, poly[1:] + poly[:1]):
        if (b - a).real * (-a).imag - (b - a).imag * (-a).real < 0:
            return False
    return True


def _clip_upper(segments):
    """Parts of the segments with nonnegative imaginary part."""
    out = []
    for z0, z1 in segments:
        if z0.imag >= 0 and z1.imag >= 0:
            out.append((z0, z1))
        elif z0.imag < 0 and z1.imag < 0:
            continue
        else:
            s = z0.imag / (z0.imag - z1.imag)
            cut = complex((z0 + s * (z1 - z0)).real, 0.0)
            out.append((cut, z1) if z0.imag < 0 else (z0, cut))
    return [(a, b) for a, b in out if a != b]


def hull_contour(ritz, real_operator=True):
    """Piecewise linear contour around the Ritz values (convex hull).

    For real operators only the part with nonnegative imaginary part is
    returned.  Raises :class:`SpectrumStraddlesOriginError` when the hull
    contains the origin.
    """
    ritz = np.asarray(ritz, dtype=complex)
    if real_operator:
        ritz = np.concatenate([ritz, ritz.conj()])
    hull = _convex_hull(ritz)
    if len(hull) == 1:
        return [(hull[0], hull[0])]
    if len(hull) == 2:
        a, b = sorted(hull, key=lambda z: (z.real, z.imag))
        if a.imag == 0 and b.imag == 0:
            lo, hi = interval_guard(a.real, b.real)
            return [(complex(lo), complex(hi))]
        return [(a, b)]
    if _origin_in_polygon(hull):
        raise SpectrumStraddlesOriginError("the convex hull of the Ritz values contains the origin")
    segments = list(zip(hull, hull[1:] + hull[:1]))
    return _clip_upper(segments) if real_operator else segments


@dataclass
class PolyPrecond:
    """Polynomial preconditioner ``P^-1 = p(B)`` with ``p(z) = sum_h mu_h z^h``.

    ``nu`` holds the reciprocal roots of ``g(z) = 1 - z p(z)`` in Leja order;
    when present, evaluation and application use the product form over them.
    """

    degree: int
    mu: np.ndarray
    nu: np.ndarray = None
    provenance: str = ""
    interval: tuple = None
    contour: list = None

    def residual_poly(self, z):
        """``g(z) = 1 - z p(z)``."""
        z = np.asarray(z)
        if self.nu is None:
            return 1.0 - z * np.polynomial.polynomial.polyval(z, self.mu)
        g = np.ones_like(z, dtype=np.result_type(z, self.nu, float))
        for v in self.nu:
            g = g - v * z * g
        return _real_if_close(g, z)

    def poly(self, z):
        z = np.asarray(z)
        if self.nu is None:
            return np.polynomial.polynomial.polyval(z, self.mu)
        g = np.ones_like(z, dtype=np.result_type(z, self.nu, float))
        p = np.zeros_like(g)
        for v in self.nu:
            p = p + v * g
            g = g - v * z * g
        return _real_if_close(p, z)


def _real_if_close(x, like):
    # conjugate root pairs leave rounding-level imaginary parts on real input
    if np.iscomplexobj(x) and not np.iscomplexobj(like):
        return x.real
    return x


def leja_order(nu):
    """Order reciprocal roots so the partial products of ``g`` stay tame.

    Leja ordering of the roots ``1/nu``: start from the largest modulus, then
    repeatedly take the root maximizing the product of distances to those
    already chosen.
    """
    nu = np.asarray(nu)
    if nu.size <= 1:
        return nu.copy()
    roots = 1.0 / nu
    left = list(range(nu.size))
    first = max(left, key=lambda h: abs(roots[h]))
    order = [first]
    left.remove(first)
    logdist = np.zeros(nu.size)
    while left:
        logdist += np.log(np.maximum(np.abs(roots - roots[order[-1]]), np.finfo(float).tiny))
        nxt = max(left, key=lambda h: logdist[h])
        order.append(nxt)
        left.remove(nxt)
    return nu[order]


def nu_from_mu(mu):
    """Reciprocal roots of ``g(z) = 1 - z p(z)`` from the coefficients of ``p``."""
    g = np.concatenate([[1.0], -np.asarray(mu)])
    roots = np.polynomial.polynomial.polyroots(g)
    if np.any(roots == 0):
        raise DegreeTooHighError("residual polynomial has a root at the origin")
    return 1.0 / roots


def poly_apply_roots(apply_B, nu, v):
    """``p(B) v`` from the reciprocal roots of ``g`` (``len(nu) - 1`` applications of ``B``).

    Uses ``p = sum_h nu_h g_(h-1)`` with ``g_h = (1 - nu_h z) g_(h-1)``, which
    avoids the cancellation of large monomial coefficients.
    """
    nu = np.asarray(nu)
    if nu.size == 0:
        raise ValueError("nu must be nonempty")
    apply_B = as_operator(apply_B)
    v = np.asarray(v)
    g = v.astype(np.result_type(v.dtype, nu.dtype, float))
    out = nu[0] * g
    for h in range(1, nu.size):
        g = g - nu[h - 1] * np.asarray(apply_B(g))
        out = out + nu[h] * g
    return _real_if_close(out, v)


def _is_real_operator(B, n):
    dtype = getattr(B, "dtype", None)
    if dtype is not None:
        return not np.issubdtype(dtype, np.complexfloating)
    probe = np.asarray(as_operator(B)(np.ones(n)))
    return not np.iscomplexobj(probe)


def poly_precond_from_ritz(ritz, degree, scheme="auto", real_operator=True):
    """Build a :class:`PolyPrecond` from eigenvalue estimates."""
    ritz = np.asarray(ritz, dtype=complex)
    complex_spectrum = bool(np.any(np.abs(ritz.imag) > 1e-8 * np.abs(ritz.real)))
    if scheme == "auto":
        scheme = "contour" if complex_spectrum else "cheb"
    if scheme == "cheb":
        a, b = interval_guard(ritz.real.min(), ritz.real.max())
        nu = cheb_nu(a, b, degree)
        return PolyPrecond(degree, nu_to_mu(nu), leja_order(nu), "cheb", interval=(a, b))
    if scheme == "contour":
        if not complex_spectrum:
            ritz = ritz.real.astype(complex)
        segments = hull_contour(ritz, real_operator)
        mu = contour_ls_mu(segments, degree, real=real_operator)
        nu = leja_order(nu_from_mu(mu))
        return PolyPrecond(degree, mu, nu, "contour", contour=segments)
    raise ValueError(f"unknown polynomial scheme {scheme!r}; expected 'cheb', 'contour' or 'auto'")


class PolynomialPreconditioner(_ApplyMixin, BaseEstimator):
    """Residual-polynomial preconditioner ``P^-1 = p(B)``.

    Parameters
    ----------
    degree : int, default 10
    scheme : {'auto', 'cheb', 'contour'}, default 'auto'
        ``'auto'`` uses Chebyshev roots for a real spectrum estimate and the
        contour least-squares fit when some Ritz value has a relative
        imaginary part above ``1e-8``.
    n_ritz : int, default 20
        Arnoldi steps used to estimate the spectrum (seed ``ones/sqrt(n)``).
    interval : tuple, optional
        ``(a, b)`` overriding the Ritz estimate for the Chebyshev scheme.
    """

    def __init__(self, degree=10, scheme="auto", n_ritz=20, interval=None):
        self.degree = degree
        self.scheme = scheme
        self.n_ritz = n_ritz
        self.interval = interval

    def fit(self, B, y=None, *, n=None):
        n = operator_size(B, n)
        self.apply_B_ = as_operator(B)
        real_operator = _is_real_operator(B, n)
        if self.interval is not None:
            a, b = interval_guard(*self.interval)
            nu = cheb_nu(a, b, self.degree)
            self.ritz_ = None
            self.poly_ = PolyPrecond(self.degree, nu_to_mu(nu), leja_order(nu), "cheb", interval=(a, b))
            return self
        seed = np.full(n, 1.0 / np.sqrt(n))
        self.ritz_ = arnoldi_ritz(self.apply_B_, min(self.n_ritz, n), seed)
        self.poly_ = poly_precond_from_ritz(self.ritz_, self.degree, self.scheme, real_operator)
        return self

    def apply_inverse(self, V):
        return poly_apply_roots(self.apply_B_, self.poly_.nu, V)
