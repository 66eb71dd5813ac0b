"""Input validation helpers shared by the public functions and estimators."""

import numbers

import numpy as np
import scipy.sparse as sp


def check_square_matrix(A, name="A"):
    """Return ``A`` as a canonical CSR matrix, rejecting non-square input."""
    if sp.issparse(A):
        A = sp.csr_matrix(A)
    else:
        A = np.asarray(A)
        if A.ndim != 2:
            raise ValueError(f"{name} must be two-dimensional, got ndim={A.ndim}")
        A = sp.csr_matrix(A)
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"{name} must be square, got shape {A.shape}")
    if not A.has_sorted_indices:
        A.sort_indices()
    return A


def check_vector(x, n=None, name="x", allow_zero=True):
    x = np.asarray(x)
    if x.ndim != 1:
        raise ValueError(f"{name} must be a 1-D vector, got shape {x.shape}")
    if not np.issubdtype(x.dtype, np.inexact):
        x = x.astype(float)
    if n is not None and x.shape[0] != n:
        raise ValueError(f"{name} has length {x.shape[0]}, expected {n}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} contains non-finite values")
    if not allow_zero and not np.any(x):
        raise ValueError(f"{name} must be nonzero")
    return x


def check_block(Y, n=None, name="Y"):
    Y = np.asarray(Y)
    if Y.ndim == 1:
        Y = Y[:, None]
    if Y.ndim != 2:
        raise ValueError(f"{name} must be a 2-D block, got shape {Y.shape}")
    if not np.issubdtype(Y.dtype, np.inexact):
        Y = Y.astype(float)
    if n is not None and Y.shape[0] != n:
        raise ValueError(f"{name} has {Y.shape[0]} rows, expected {n}")
    if not np.all(np.isfinite(Y)):
        raise ValueError(f"{name} contains non-finite values")
    return Y


def check_positive_int(value, name, minimum=1):
    if not isinstance(value, numbers.Integral) or value < minimum:
        raise ValueError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)


def as_operator(B):
    """Return a callable applying ``B`` to a vector or a block of columns."""
    if callable(B) and not (sp.issparse(B) or isinstance(B, np.ndarray)):
        return B
    if sp.issparse(B) or isinstance(B, np.ndarray):
        return lambda X: B @ X
    raise TypeError(f"cannot interpret {type(B).__name__} as a linear operator")


def operator_size(B, n=None):
    shape = getattr(B, "shape", None)
    if shape is not None:
        return shape[0]
    if n is None:
        raise ValueError("operator size cannot be inferred; pass n explicitly")
    return n
