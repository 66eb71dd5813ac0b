"""Sparse matrices: Matrix Market coordinate I/O, products and test-problem generators.

Matrices are ``scipy.sparse.csr_matrix`` objects in canonical form (sorted
column indices, no duplicates), so ``indptr``/``indices``/``data`` are the
row offsets, column indices and values.
"""

import numpy as np
import scipy.sparse as sp

from .dense import EigenBasis
from .exceptions import MatrixMarketError

_SUPPORTED_FIELDS = ("real", "integer")
_SUPPORTED_SYMMETRY = ("general", "symmetric")


def _canonical_csr(rows, cols, vals, shape):
    # coo -> csr sums duplicates; explicit zeros are kept as stored
    A = sp.coo_matrix((vals, (rows, cols)), shape=shape).tocsr()
    A.sum_duplicates()
    A.sort_indices()
    return A


def mm_read(path):
    """Read a Matrix Market ``coordinate`` file (field real/integer, symmetry general/symmetric).

    Symmetric storage is expanded to general and duplicate entries are summed.
    """
    with open(path, "r", encoding="ascii", errors="strict") as fh:
        header = fh.readline()
        tokens = header.strip().split()
        if len(tokens) != 5 or tokens[0].lower() != "%%matrixmarket":
            raise MatrixMarketError(f"{path}: malformed header {header.strip()!r}")
        obj, fmt, field, symmetry = (t.lower() for t in tokens[1:])
        if obj != "matrix":
            raise MatrixMarketError(f"{path}: unsupported object {obj!r}")
        if fmt != "coordinate":
            raise MatrixMarketError(f"{path}: only coordinate format is supported, got {fmt!r}")
        if field not in _SUPPORTED_FIELDS:
            raise MatrixMarketError(
                f"{path}: unsupported field {field!r} (supported: {', '.join(_SUPPORTED_FIELDS)})"
            )
        if symmetry not in _SUPPORTED_SYMMETRY:
            raise MatrixMarketError(
                f"{path}: unsupported symmetry {symmetry!r} (supported: {', '.join(_SUPPORTED_SYMMETRY)})"
            )

        lineno = 1
        size_line = None
        for line in fh:
            lineno += 1
            stripped = line.strip()
            if not stripped or stripped.startswith("%"):
                continue
            size_line = stripped
            break
        if size_line is None:
            raise MatrixMarketError(f"{path}: missing size line")
        try:
            nrows, ncols, nnz = (int(t) for t in size_line.split())
        except ValueError:
            raise MatrixMarketError(f"{path}:{lineno}: bad size line {size_line!r}") from None
        if nrows < 0 or ncols < 0 or nnz < 0:
            raise MatrixMarketError(f"{path}:{lineno}: negative size")
        if symmetry == "symmetric" and nrows != ncols:
            raise MatrixMarketError(f"{path}: symmetric matrix must be square")

        rows = np.empty(nnz, dtype=np.int64)
        cols = np.empty(nnz, dtype=np.int64)
        vals = np.empty(nnz, dtype=float)
        count = 0
        for line in fh:
            lineno += 1
            stripped = line.strip()
            if not stripped or stripped.startswith("%"):
                continue
            parts = stripped.split()
            if len(parts) != 3:
                raise MatrixMarketError(f"{path}:{lineno}: expected 'i j value', got {stripped!r}")
            if count >= nnz:
                raise MatrixMarketError(f"{path}:{lineno}: more entries than the declared {nnz}")
            try:
                i, j = int(parts[0]), int(parts[1])
                v = float(parts[2]) if field == "real" else float(int(parts[2]))
            except ValueError:
                raise MatrixMarketError(f"{path}:{lineno}: non-numeric entry {stripped!r}") from None
            if not (1 <= i <= nrows and 1 <= j <= ncols):
                raise MatrixMarketError(
                    f"{path}:{lineno}: index ({i}, {j}) out of range for {nrows}x{ncols}"
                )
            rows[count], cols[count], vals[count] = i - 1, j - 1, v
            count += 1
        if count != nnz:
            raise MatrixMarketError(f"{path}: declared {nnz} entries, found {count}")

    if symmetry == "symmetric":
        off = rows != cols
        rows, cols, vals = (
            np.concatenate([rows, cols[off]]),
            np.concatenate([cols, rows[off]]),
            np.concatenate([vals, vals[off]]),
        )
    return _canonical_csr(rows, cols, vals, (nrows, ncols))


def mm_write(path, A, comment=None):
    """Write ``A`` as a general real coordinate Matrix Market file.

    Values are written with ``repr`` so they read back bit-for-bit.
    """
    A = sp.coo_matrix(A)
    if np.iscomplexobj(A.data):
        raise MatrixMarketError("complex matrices cannot be written as field 'real'")
    A = sp.csr_matrix(A)
    A.sort_indices()
    A = A.tocoo()
    with open(path, "w", encoding="ascii") as fh:
        fh.write("%%MatrixMarket matrix coordinate real general\n")
        if comment:
            for line in str(comment).splitlines():
                fh.write(f"% {line}\n")
        fh.write(f"{A.shape[0]} {A.shape[1]} {A.nnz}\n")
        for i, j, v in zip(A.row, A.col, A.data):
            fh.write(f"{i + 1} {j + 1} {float(v)!r}\n")


def spmv(A, x):
    """Sparse matrix-vector product ``A @ x`` with a dimension check."""
    x = np.asarray(x)
    if x.ndim != 1 or x.shape[0] != A.shape[1]:
        raise ValueError(f"dimension mismatch: A is {A.shape[0]}x{A.shape[1]}, x has shape {x.shape}")
    return A @ x


def gen_tridiag(n, a, b, c):
    """Toeplitz tridiagonal ``n x n`` matrix with sub-, main and super-diagonal ``a, b, c``."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    A = sp.diags(
        [np.full(n - 1, a, dtype=float), np.full(n, b, dtype=float), np.full(n - 1, c, dtype=float)],
        [-1, 0, 1],
        shape=(n, n),
        format="csr",
    )
    A.sort_indices()
    return A


def _toeplitz_eigs(m, alpha, beta, gamma):
    """Eigenpairs of tridiag(beta, alpha, gamma) of order ``m`` with ``beta*gamma > 0``.

    Eigenvector components are ``(beta/gamma)**(j/2) * sin(j p pi/(m+1))``,
    normalized to unit length.
    """
    theta = np.arange(1, m + 1) * np.pi / (m + 1)
    root = np.sign(beta) * np.sqrt(beta * gamma)
    # cos(theta) as sin of the complement: the middle node is exactly zero
    cos_theta = np.sin(np.pi * (m + 1 - 2 * np.arange(1, m + 1)) / (2 * (m + 1)))
    lam = alpha + 2.0 * root * cos_theta
    j = np.arange(1, m + 1)[:, None]
    scale = np.sqrt(beta / gamma) ** j
    V = scale * np.sin(j * theta[None, :])
    V /= np.linalg.norm(V, axis=0)
    return lam, V


def gen_convdiff(m, alpha_x, beta_x, gamma_x, alpha_y, beta_y, gamma_y, *, validate=True):
    """Two-dimensional convection-diffusion type operator with a closed-form eigenbasis.

    ``A = T_x kron I + I kron T_y`` where each ``T`` is the Toeplitz tridiagonal
    matrix with sub-diagonal ``beta``, diagonal ``alpha`` and super-diagonal
    ``gamma``.  Requires ``beta * gamma > 0`` on both axes so the spectrum is
    real; returns ``(A, basis)`` with ``n = m**2``.
    """
    if m < 1:
        raise ValueError(f"grid size m must be >= 1, got {m}")
    for axis, (bb, gg) in (("x", (beta_x, gamma_x)), ("y", (beta_y, gamma_y))):
        if not bb * gg > 0:
            raise ValueError(
                f"beta_{axis}*gamma_{axis} = {bb * gg:g} <= 0: complex spectrum, no real analytic basis"
            )
    Tx = gen_tridiag(m, beta_x, alpha_x, gamma_x)
    Ty = gen_tridiag(m, beta_y, alpha_y, gamma_y)
    eye = sp.identity(m, format="csr")
    A = (sp.kron(Tx, eye) + sp.kron(eye, Ty)).tocsr()
    A.sum_duplicates()
    A.sort_indices()
    lx, Vx = _toeplitz_eigs(m, alpha_x, beta_x, gamma_x)
    ly, Vy = _toeplitz_eigs(m, alpha_y, beta_y, gamma_y)
    lam = (lx[:, None] + ly[None, :]).ravel()
    Z = np.kron(Vx, Vy)
    basis = EigenBasis(lam, Z, A=A if validate else None)
    return A, basis
