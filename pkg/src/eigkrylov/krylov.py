"""Right-preconditioned (block) GMRES with full residual histories, and Arnoldi Ritz values.

``gmres`` is the single-column case of the block solver, so ``block_gmres``
with one right-hand side reproduces its residual history exactly.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from ._validation import as_operator, check_block, check_positive_int, check_vector

DEFLATION_TOL = 1e-12


@dataclass
class SolveTrace:
    """Residual history of one GMRES solve.

    ``residual_norms[k]`` is ``||rhs - B P^-1 xt_k||_2`` after ``k`` steps, so
    ``len(residual_norms) == iterations + 1``.  ``true_residual`` is the
    explicitly recomputed ``||rhs - B x||_2`` of the returned solution.
    """

    residual_norms: np.ndarray
    iterations: int
    converged: bool
    solution: np.ndarray
    final_tol: float
    true_residual: float


@dataclass
class BlockSolveTrace:
    """Frobenius residual history of one block GMRES solve."""

    residual_fro_norms: np.ndarray
    iterations: int
    converged: bool
    solution_block: np.ndarray
    final_tol: float
    true_residual: float


def _identity(X):
    return X


def _orthonormalize(basis, W, coeffs, refs, deflation_tol):
    """Orthonormalize the columns of ``W`` against ``basis`` (extended in place).

    Modified Gram-Schmidt followed by one full reorthogonalization pass.  A
    column whose remaining norm is at most ``deflation_tol * refs[c]`` is
    deflated.  ``coeffs[:, c]`` receives the coordinates of ``W[:, c]`` in the
    (extended) basis.
    """
    for c in range(W.shape[1]):
        x = W[:, c].copy()
        for _ in range(2):
            for j, v in enumerate(basis):
                h = np.vdot(v, x)
                x -= h * v
                coeffs[j, c] += h
        nrm = np.linalg.norm(x)
        if nrm > deflation_tol * refs[c] and nrm > 0.0:
            coeffs[len(basis), c] = nrm
            basis.append(x / nrm)


def _givens(a, b):
    """Rotation ``[[c, s], [-conj(s), c]]`` mapping ``(a, b)`` to ``(r, 0)``."""
    if b == 0:
        return 1.0, 0.0
    if a == 0:
        return 0.0, 1.0
    r = np.hypot(abs(a), abs(b))
    c = abs(a) / r
    s = (a / abs(a)) * np.conj(b) / r
    return c, s


def _rotate(X, i, j, c, s):
    xi = X[i].copy()
    X[i] = c * xi + s * X[j]
    X[j] = -np.conj(s) * xi + c * X[j]


def _apply(op, V):
    # single columns go through as 1-D vectors so plain vector callables work
    if V.shape[1] == 1:
        return np.asarray(op(V[:, 0])).reshape(-1, 1)
    return np.asarray(op(V))


def _check_tol(tol):
    tol = float(tol)
    if not tol >= 0:
        raise ValueError(f"tol must be >= 0, got {tol}")
    return tol


def _block_gmres_core(apply_B, apply_Pinv, R0, tol, max_it, relative, deflation_tol):
    n, u = R0.shape
    r0_norm = np.linalg.norm(R0)
    target = tol * r0_norm if relative else tol

    basis = []
    G = np.zeros((n + u + 1, u), dtype=np.result_type(R0.dtype, float))
    _orthonormalize(basis, R0, G, np.linalg.norm(R0, axis=0), deflation_tol)
    history = [r0_norm]
    converged = r0_norm <= target or not basis

    H = None
    rotations = []
    done = 0  # number of basis vectors already expanded (= columns of H)
    it = 0
    while not converged and it < max_it:
        block = slice(done, len(basis))
        Vb = np.column_stack(basis[block])
        W = _apply(apply_B, _apply(apply_Pinv, Vb))
        if W.ndim == 1:
            W = W[:, None]
        if H is None:
            dtype = np.result_type(R0.dtype, W.dtype, float)
            cap = n + u + 1
            H = np.zeros((cap, cap), dtype=dtype)
            G = G.astype(dtype)
            basis[:] = [v.astype(dtype) for v in basis]
        W = W.astype(H.dtype, copy=False)
        if len(basis) + W.shape[1] > H.shape[0]:
            grow = np.zeros((H.shape[0] + W.shape[1], H.shape[1] + W.shape[1]), dtype=H.dtype)
            grow[: H.shape[0], : H.shape[1]] = H
            H = grow
            G = np.vstack([G, np.zeros((W.shape[1], u), dtype=G.dtype)])
        coeffs = np.zeros((len(basis) + W.shape[1], W.shape[1]), dtype=H.dtype)
        _orthonormalize(basis, W, coeffs, np.linalg.norm(W, axis=0), deflation_tol)
        nv = len(basis)
        H[:nv, block] = coeffs[:nv]

        for col in range(block.start, block.stop):
            for (i, j, c, s) in rotations:
                _rotate(H[:, col : col + 1], i, j, c, s)
            for r in range(col + 1, nv):
                if H[r, col] == 0:
                    continue
                c, s = _givens(H[col, col], H[r, col])
                _rotate(H[:, col : col + 1], col, r, c, s)
                H[r, col] = 0.0
                _rotate(G, col, r, c, s)
                rotations.append((col, r, c, s))
        done = block.stop
        it += 1
        res = float(np.linalg.norm(G[done:nv]))
        history.append(res)
        if res <= target or nv == done:
            converged = True

    if done:
        Y = scipy.linalg.solve_triangular(H[:done, :done], G[:done], lower=False)
        Xt = np.column_stack(basis[:done]) @ Y
        X = _apply(apply_Pinv, Xt)
        if X.ndim == 1:
            X = X[:, None]
    else:
        X = np.zeros_like(R0)
    residual = R0 - _apply(apply_B, X)
    return np.asarray(history), it, converged, X, float(np.linalg.norm(residual))


def gmres(apply_B, apply_Pinv=None, rhs=None, tol=1e-8, max_it=None, *, relative=False):
    """Full (unrestarted) right-preconditioned GMRES from a zero initial guess.

    Solves ``B P^-1 xt = rhs`` and returns ``x = P^-1 xt``.  The Arnoldi basis
    uses modified Gram-Schmidt with one reorthogonalization pass; the small
    least-squares problem is updated with Givens rotations.  Convergence is
    ``||r_k|| <= tol`` (or ``tol * ||rhs||`` with ``relative=True``).

    Parameters
    ----------
    apply_B : callable or matrix
    apply_Pinv : callable, matrix or None
        Action of the inverse preconditioner; ``None`` means no preconditioning.
    rhs : array_like, shape (n,)
    tol : float
    max_it : int, optional
        Defaults to ``n``.

    Returns
    -------
    SolveTrace
    """
    rhs = check_vector(rhs, name="rhs")
    tol = _check_tol(tol)
    n = rhs.shape[0]
    max_it = n if max_it is None else check_positive_int(max_it, "max_it", minimum=0)
    apply_B = as_operator(apply_B)
    apply_Pinv = _identity if apply_Pinv is None else as_operator(apply_Pinv)
    hist, it, conv, X, true_res = _block_gmres_core(
        apply_B, apply_Pinv, rhs[:, None], tol, max_it, relative, DEFLATION_TOL
    )
    return SolveTrace(hist, it, conv, X[:, 0], tol, true_res)


def block_gmres(apply_B, apply_Pinv=None, RHS=None, tol=1e-8, max_it=None, *, relative=False):
    """Block GMRES minimizing ``||Y - B X_k||_F`` over the block Krylov space.

    Block Arnoldi with per-column Gram-Schmidt (two passes); a new direction
    is deflated when its norm after orthogonalization drops to
    ``1e-12`` times its norm before.  Total deflation is exact convergence.

    Callable operators receive ``n x u`` blocks (``u > 1``) or 1-D vectors.
    """
    RHS = check_block(RHS, name="RHS")
    tol = _check_tol(tol)
    n = RHS.shape[0]
    max_it = n if max_it is None else check_positive_int(max_it, "max_it", minimum=0)
    apply_B = as_operator(apply_B)
    apply_Pinv = _identity if apply_Pinv is None else as_operator(apply_Pinv)
    hist, it, conv, X, true_res = _block_gmres_core(
        apply_B, apply_Pinv, RHS, tol, max_it, relative, DEFLATION_TOL
    )
    return BlockSolveTrace(hist, it, conv, X, tol, true_res)


def arnoldi(apply_B, seed, m):
    """``m`` steps of Arnoldi (MGS with reorthogonalization).

    Returns ``(V, H)`` with ``B V[:, :k] = V H`` where ``H`` is
    ``(k+1) x k`` (``k = m`` normally).  On breakdown at step ``j`` an exact
    invariant subspace has been found and ``H`` is the square ``j x j`` block
    with ``V`` of ``j`` columns.
    """
    seed = check_vector(seed, name="seed", allow_zero=False)
    m = check_positive_int(m, "m")
    if m > seed.shape[0]:
        raise ValueError(f"m={m} exceeds the dimension {seed.shape[0]}")
    apply_B = as_operator(apply_B)
    basis = []
    coeffs0 = np.zeros((1, 1), dtype=complex)
    _orthonormalize(basis, seed[:, None].astype(float if not np.iscomplexobj(seed) else complex), coeffs0,
                    [np.linalg.norm(seed)], DEFLATION_TOL)
    H = None
    for j in range(m):
        w = np.asarray(apply_B(basis[j]))
        if H is None:
            dtype = np.result_type(seed.dtype, w.dtype, float)
            H = np.zeros((m + 1, m), dtype=dtype)
            basis[:] = [v.astype(dtype) for v in basis]
        coeffs = np.zeros((j + 2, 1), dtype=H.dtype)
        _orthonormalize(basis, w.astype(H.dtype)[:, None], coeffs, [np.linalg.norm(w)], DEFLATION_TOL)
        H[: len(basis), j] = coeffs[: len(basis), 0]
        if len(basis) == j + 1:
            return np.column_stack(basis), H[: j + 1, : j + 1]
    return np.column_stack(basis), H


def hessenberg_eigvals(H, maxiter_per_eig=60):
    """Eigenvalues of a small upper Hessenberg matrix by shifted QR iteration.

    Complex single-shift QR with Wilkinson shifts and deflation on negligible
    subdiagonal entries, plus an exceptional shift after 10 stagnant sweeps.
    """
    H = np.array(H, dtype=complex)
    m = H.shape[0]
    if H.shape != (m, m):
        raise ValueError("H must be square")
    eps = np.finfo(float).eps
    eigs = []
    hi = m - 1
    its = 0
    total = 0
    while hi >= 0:
        if hi == 0:
            eigs.append(H[0, 0])
            break
        lo = hi
        while lo > 0:
            scale = abs(H[lo, lo]) + abs(H[lo - 1, lo - 1])
            if scale == 0.0:
                scale = np.linalg.norm(H[: hi + 1, : hi + 1], 1)
            if abs(H[lo, lo - 1]) <= eps * scale:
                H[lo, lo - 1] = 0.0
                break
            lo -= 1
        if lo == hi:
            eigs.append(H[hi, hi])
            hi -= 1
            its = 0
            continue
        its += 1
        total += 1
        if total > maxiter_per_eig * m:
            raise np.linalg.LinAlgError("shifted QR failed to converge on the Hessenberg matrix")
        a, b = H[hi - 1, hi - 1], H[hi - 1, hi]
        c, d = H[hi, hi - 1], H[hi, hi]
        if its % 11 == 10:
            mu = d + 0.75 * abs(c)
        else:
            half = 0.5 * (a - d)
            disc = np.sqrt(half * half + b * c)
            mu1, mu2 = d - b * c / (half + disc) if half + disc != 0 else d, d - b * c / (half - disc) if half - disc != 0 else d
            mu = mu1 if abs(mu1 - d) <= abs(mu2 - d) else mu2
        blk = slice(lo, hi + 1)
        A = H[blk, blk]
        k = A.shape[0]
        A[np.diag_indices(k)] -= mu
        rots = []
        for j in range(k - 1):
            cj, sj = _givens(A[j, j], A[j + 1, j])
            _rotate(A[:, j:], j, j + 1, cj, sj)
            A[j + 1, j] = 0.0
            rots.append((cj, sj))
        for j, (cj, sj) in enumerate(rots):
            # right-multiply by the conjugate transpose of the rotation
            top = min(j + 2, k)
            cols = A[:top, [j, j + 1]].copy()
            A[:top, j] = cj * cols[:, 0] + np.conj(sj) * cols[:, 1]
            A[:top, j + 1] = -sj * cols[:, 0] + cj * cols[:, 1]
        A[np.diag_indices(k)] += mu
        H[blk, blk] = A
    return np.array(eigs[::-1])


def small_eigvals(A):
    """Eigenvalues of a small dense matrix: Hessenberg reduction then shifted QR."""
    A = np.asarray(A)
    if A.shape == (1, 1):
        return A.astype(complex).ravel()
    return hessenberg_eigvals(scipy.linalg.hessenberg(A))


def arnoldi_ritz(apply_B, m, seed):
    """Ritz values of ``B`` from ``m`` Arnoldi steps started at ``seed``."""
    V, H = arnoldi(apply_B, seed, m)
    k = H.shape[1]
    return hessenberg_eigvals(H[:k, :k])
