import numpy as np
import pytest
import scipy.optimize as so
from hypothesis import given, settings, strategies as st

from eigkrylov import (
    EigenBasis,
    InvalidEnvelopeError,
    ShiftEqualsEigenvalueError,
    block_bound,
    block_bound_history,
    block_gmres,
    block_weight_split,
    block_weights,
    bound_25,
    bound_26a,
    bound_histories,
    bound_report,
    compute_weights,
    disk_bound,
    disk_envelope,
    gmres,
    initial_decrease_constants,
    iter_lower_bound,
    operator_basis,
    poly_ls_min,
)
from eigkrylov.diagnostics import poly_ls_history
from oracles import gmres_brute_residual_1d


def _diag_basis(lam):
    lam = np.asarray(lam, dtype=complex)
    return EigenBasis(lam, np.eye(lam.size))


def _random_basis(rng, n, cplx=False, spread=0.3):
    lam = rng.uniform(0.3, 4.0, n) + (1j * rng.uniform(-1.0, 1.0, n) if cplx else 0)
    Z = np.eye(n) + spread * rng.standard_normal((n, n)) / np.sqrt(n)
    B = Z @ np.diag(lam) @ np.linalg.inv(Z)
    return B, EigenBasis(lam, Z)


# ---------------------------------------------------------------- weights


def test_weights_examples():
    basis = _diag_basis([1.0, 2.0, 3.0])
    rec = compute_weights(basis, np.array([1.0, 0.0, 0.0]))
    assert np.allclose(rec.w, [1, 0, 0]) and rec.w2_norm == 0 and rec.wt_norm == 0

    rec = compute_weights(basis, np.array([1.0, 1.0, 0.0]) / np.sqrt(2))
    assert abs(rec.w1) == pytest.approx(1 / np.sqrt(2)) and rec.w2_norm == pytest.approx(1 / np.sqrt(2))

    rec = compute_weights(_diag_basis([1.0, 2.0]), np.ones(2) / np.sqrt(2))
    assert rec.wt[0] == pytest.approx(-1 / np.sqrt(2))
    assert rec.wt_norm == pytest.approx(1 / np.sqrt(2))


def test_weights_shift_equals_eigenvalue():
    with pytest.raises(ShiftEqualsEigenvalueError):
        compute_weights(_diag_basis([0.0, 1.0]), np.ones(2))


def test_pencil_weights_use_mass_rhs():
    basis = _diag_basis([1.0, 2.0])
    M = np.diag([1.0, 3.0])
    y = np.array([1.0, 1.0])
    rec = compute_weights(basis, y, M)
    assert np.allclose(rec.f, np.array([1.0, 3.0]) / np.sqrt(10))
    assert np.allclose(rec.rhs_weights, rec.f)


# ---------------------------------------------------------------- bounds


def test_weighted_bound_examples():
    rng = np.random.default_rng(0)
    _, basis = _random_basis(rng, 6)
    y = rng.standard_normal(6)
    rec = compute_weights(basis, y)
    assert bound_25(basis, rec, 0) == pytest.approx(basis.z_norm2 * np.linalg.norm(rec.w), rel=1e-14)
    assert bound_25(basis, rec, 6) <= 1e-10

    rec = compute_weights(_diag_basis([1.0, 2.0]), np.ones(2) / np.sqrt(2))
    assert bound_25(_diag_basis([1.0, 2.0]), rec, 1) == pytest.approx(0.31623, abs=1e-5)
    assert bound_25(_diag_basis([1.0, 2.0]), rec, 1) == pytest.approx(
        gmres_brute_residual_1d([1.0, 2.0], rec.w), abs=1e-14)


def test_split_bound_examples():
    rng = np.random.default_rng(1)
    _, basis = _random_basis(rng, 5)
    rec = compute_weights(basis, basis.Z[:, 0])
    assert all(bound_26a(basis, rec, k) <= 1e-14 for k in range(1, 4))
    rec = compute_weights(basis, rng.standard_normal(5))
    assert bound_26a(basis, rec, 1) == basis.z_norm2 * rec.wt_norm

    basis = _diag_basis([1.0, 2.0, 4.0])
    rec = compute_weights(basis, np.ones(3) / np.sqrt(3))
    assert np.allclose(rec.wt, [-1 / np.sqrt(3), -3 / np.sqrt(3)])
    assert bound_26a(basis, rec, 2) == pytest.approx(gmres_brute_residual_1d([2.0, 4.0], rec.wt), abs=1e-14)


def test_poly_ls_history_agrees_with_single_k():
    rng = np.random.default_rng(2)
    d = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    lam = rng.uniform(0.5, 3.0, 8) + 0.2j
    hist = poly_ls_history(d, lam, 8)
    for k in range(9):
        assert hist[k] == pytest.approx(poly_ls_min(d, lam, k), abs=1e-12)


def test_disk_envelope_examples():
    env = disk_envelope([2.0, 4.0])
    assert env.center == 3 and env.radius == 1 and env.C == 3 and env.S == 1 and env.valid
    env = disk_envelope([5.0])
    assert np.isinf(env.C)
    assert not disk_envelope([-1.0, 1.0]).valid


def test_iter_lower_examples():
    assert iter_lower_bound(2.0, 1.0, 8.0, 1.0, 1.0) == pytest.approx(4.0)
    assert iter_lower_bound(2.0, 1.0, 1.0, 1.0, 1.0) == pytest.approx(1.0)
    assert iter_lower_bound(3.0, 2.0, 9.0, 1.0, 1.0) == pytest.approx(1 + (np.log(2) + np.log(9)) / np.log(3))
    assert iter_lower_bound(3.0, 2.0, 9.0, 1.0, 1.0) == pytest.approx(3.6309, abs=1e-4)
    with pytest.raises(InvalidEnvelopeError):
        iter_lower_bound(1.0, 1.0, 1.0, 1.0, 1.0)


def test_initial_decrease_examples():
    basis = _diag_basis([1.0, 2.0, 3.0]).shifted(0.9)
    C1, C2 = initial_decrease_constants(basis, 0.9)
    assert C1 == pytest.approx(20.0) and C2 == pytest.approx(C1)
    assert initial_decrease_constants(_diag_basis([2.0]))[0] == 0.0
    assert initial_decrease_constants(_diag_basis([2.0, 2.0]))[0] == 0.0


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6), n=st.integers(2, 30), cplx=st.booleans(), spread=st.floats(0.0, 0.8))
def test_gmres_below_bounds(seed, n, cplx, spread):
    rng = np.random.default_rng(seed)
    B, basis = _random_basis(rng, n, cplx, spread)
    y = rng.standard_normal(n)
    y /= np.linalg.norm(y)
    tr = gmres(B, None, y, tol=1e-12)
    rec = compute_weights(basis, y)
    full, split = bound_histories(basis, rec, tr.iterations)
    r = tr.residual_norms
    assert np.all(r <= full + 1e-8)
    assert np.all(r[1:] <= split[1:] + 1e-8)
    C1, C2 = initial_decrease_constants(basis)
    if tr.iterations >= 1:
        assert r[1] <= C2 * rec.w2_norm + 1e-8
    env = disk_envelope(basis.eigenvalues[1:])
    if env.valid:
        for k in range(1, tr.iterations + 1):
            assert split[k] <= disk_bound(basis, rec, k, env) * (1 + 1e-10) + 1e-14


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6), n=st.integers(2, 30))
def test_unitary_basis_bound_is_sharp(seed, n):
    rng = np.random.default_rng(seed)
    Q = np.linalg.qr(rng.standard_normal((n, n)))[0]
    lam = rng.uniform(0.5, 3.0, n)
    B = Q @ np.diag(lam) @ Q.T
    basis = EigenBasis(lam, Q)
    y = rng.standard_normal(n)
    y /= np.linalg.norm(y)
    tr = gmres(B, None, y, tol=1e-12)
    full, _ = bound_histories(basis, compute_weights(basis, y), tr.iterations)
    assert np.max(np.abs(full - tr.residual_norms)) <= 1e-8


def test_bound_report_fields():
    basis = _diag_basis([1.0, 3.0, 5.0]).shifted(0.5)
    rec = compute_weights(basis, np.ones(3) / np.sqrt(3))
    rep = bound_report(basis, rec, 1, 1e-3)
    assert rep.disk_valid and rep.disk_C == pytest.approx(3.5)
    assert rep.bound_26k1 == pytest.approx(basis.z_norm2 * rec.wt_norm)
    assert rep.iter_lower == pytest.approx(iter_lower_bound(rep.disk_C, 1.0, basis.z_norm2, rec.wt_norm, 1e-3))


# ---------------------------------------------------------------- block


def test_block_bound_single_column_matches_weighted_bound():
    rng = np.random.default_rng(3)
    _, basis = _random_basis(rng, 7)
    y = rng.standard_normal(7)
    y /= np.linalg.norm(y)
    rec = compute_weights(basis, y)
    W = block_weights(basis, y[:, None])
    for k in range(5):
        assert block_bound(basis, W, k) == pytest.approx(bound_25(basis, rec, k), rel=1e-12, abs=1e-15)


def test_block_bound_exact_eigenvectors():
    rng = np.random.default_rng(4)
    _, basis = _random_basis(rng, 8)
    W = block_weights(basis, basis.Z[:, :3])
    assert block_bound(basis, W, 3) <= 1e-10


def test_block_bound_bruteforce_k1():
    rng = np.random.default_rng(5)
    _, basis = _random_basis(rng, 3, cplx=True)
    W = block_weights(basis, rng.standard_normal((3, 2)))
    lam = basis.eigenvalues

    def obj(c):
        q = 1 + (c[0] + 1j * c[1]) * lam
        return np.linalg.norm(W * q[:, None])

    grid = np.linspace(-3, 3, 61)
    best = min(((a, b) for a in grid for b in grid), key=obj)
    res = so.minimize(obj, best, method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 4000})
    assert block_bound(basis, W, 1) == pytest.approx(basis.z_norm2 * res.fun, rel=1e-8)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10**6), n=st.integers(4, 64), u=st.integers(2, 3))
def test_block_gmres_below_block_bound(seed, n, u):
    rng = np.random.default_rng(seed)
    B, basis = _random_basis(rng, n, cplx=bool(seed % 2))
    Y = np.linalg.qr(rng.standard_normal((n, u)))[0]
    tr = block_gmres(B, None, Y, tol=1e-11)
    W = block_weights(basis, Y)
    bounds = block_bound_history(basis, W, tr.iterations)
    for k in range(tr.iterations + 1):
        assert tr.residual_fro_norms[k] <= bounds[k] + 1e-8


def test_block_weight_split_examples():
    rng = np.random.default_rng(6)
    _, basis = _random_basis(rng, 6)
    W = block_weights(basis, basis.Z[:, :2])
    W1, W2 = block_weight_split(W, 2)
    assert W2 <= 1e-13 and W1 == pytest.approx(np.linalg.norm(np.eye(2)))
    Q = np.linalg.qr(rng.standard_normal((6, 6)))[0]
    W1, W2 = block_weight_split(np.linalg.solve(Q, Q[:, :6]), 6)
    assert W2 == 0.0 and W1 == pytest.approx(np.sqrt(6))
    # orthonormal exact basis of width six: ||W1||_F = sqrt(6)
    Q = np.linalg.qr(rng.standard_normal((10, 10)))[0]
    W1, W2 = block_weight_split(Q.T @ Q[:, :6], 6)
    assert W1 == pytest.approx(np.sqrt(6)) and W2 <= 1e-14


def test_operator_basis_alignment():
    B = np.diag([3.0, 1.0, 2.0])
    basis = operator_basis(lambda X: B @ X, 3)
    assert np.allclose(basis.eigenvalues, [1.0, 2.0, 3.0])
    basis = operator_basis(lambda X: B @ X, 3, rhs=np.array([0.1, 0.0, 1.0]))
    assert basis.eigenvalues[0] == pytest.approx(2.0)
