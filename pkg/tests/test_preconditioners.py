import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st
from sklearn.base import clone

from eigkrylov import (
    DegreeTooHighError,
    IdentityPreconditioner,
    IluPreconditioner,
    PivotBreakdownError,
    PolynomialPreconditioner,
    SpectrumStraddlesOriginError,
    TunedPreconditioner,
    TuningSingularError,
    cheb_nu,
    contour_ls_mu,
    gen_convdiff,
    gen_tridiag,
    ilu_apply_inverse,
    ilu_factor,
    interval_guard,
    nu_to_mu,
    poly_apply_inverse,
    tuned_apply_inverse,
    tuned_make,
    tuned_make_block,
)
from eigkrylov.preconditioners import IluFactors, hull_contour, leja_order, nu_from_mu, poly_apply_roots


# ---------------------------------------------------------------- ILU


def test_ilu_exact_on_tridiagonal():
    A = gen_tridiag(4, -1.0, 2.0, -1.0)
    F = ilu_factor(A, 0.0)
    assert np.linalg.norm((A - F.L @ F.U).toarray()) <= 1e-12


def test_ilu_large_droptol_keeps_diagonal():
    A = sp.csr_matrix(np.array([[4.0, 1.0, 0.5], [1.0, 5.0, 1.0], [0.2, 1.0, 6.0]]))
    F = ilu_factor(A, 10.0)
    assert np.array_equal(F.L.toarray(), np.eye(3))
    assert np.array_equal(F.U.toarray(), np.diag([4.0, 5.0, 6.0]))


def test_ilu_beats_jacobi():
    A, _ = gen_convdiff(8, 2.0, -1.1, -0.9, 2.0, -1.05, -0.95)
    F = ilu_factor(A, 1e-2)
    d = A.diagonal()
    rng = np.random.default_rng(0)
    for _ in range(20):
        v = rng.standard_normal(A.shape[0])
        ilu_err = np.linalg.norm(v - ilu_apply_inverse(F, A @ v)) / np.linalg.norm(v)
        jac_err = np.linalg.norm(v - (A @ v) / d) / np.linalg.norm(v)
        assert ilu_err < jac_err


def test_ilu_apply_examples():
    eye = sp.identity(4, format="csr")
    v = np.arange(4.0)
    assert np.array_equal(ilu_apply_inverse(IluFactors(eye, eye, 0.0), v), v)

    rng = np.random.default_rng(1)
    A = sp.csr_matrix(rng.standard_normal((5, 5)) + 6 * np.eye(5))
    F = ilu_factor(A, 0.0)
    w = rng.standard_normal(5)
    assert np.linalg.norm(ilu_apply_inverse(F, A @ w) - w) <= 1e-12
    v = rng.standard_normal(5)
    assert np.linalg.norm(F.L @ (F.U @ ilu_apply_inverse(F, v)) - v) <= 1e-12


def test_ilu_pivot_breakdown_names_row():
    A = sp.csr_matrix(np.array([[1.0, 1.0], [1.0, 1.0]]))
    with pytest.raises(PivotBreakdownError) as info:
        ilu_factor(A, 0.0)
    assert info.value.row == 1


def test_ilu_block_apply():
    A, _ = gen_convdiff(4, 2.0, -1.1, -0.9, 2.0, -1.05, -0.95)
    P = IluPreconditioner(1e-2).fit(A)
    V = np.random.default_rng(2).standard_normal((16, 3))
    block = P.apply_inverse(V)
    for j in range(3):
        assert np.allclose(block[:, j], P.apply_inverse(V[:, j]), atol=1e-14)


# ---------------------------------------------------------------- tuning


def test_tuned_identity_target_with_identity_base_is_noop():
    y = np.array([3.0, 4.0, 0.0]) / 5.0
    P = tuned_make(lambda v: v, y, "identity")
    rng = np.random.default_rng(3)
    for _ in range(5):
        v = rng.standard_normal(3)
        assert np.allclose(tuned_apply_inverse(P, v), v, atol=1e-15)


def test_tuned_lambda_target_hand_value():
    e1 = np.array([1.0, 0.0, 0.0])
    P = tuned_make(lambda v: v, e1, "lambda", sigma=0.0, eigenvalue=2.0)
    assert np.allclose(P.apply_inverse(e1), e1 / 2)


def test_tuned_b_target_with_exact_base():
    rng = np.random.default_rng(4)
    B = rng.standard_normal((8, 8)) + 8 * np.eye(8)
    Binv = np.linalg.inv(B)
    y = rng.standard_normal(8)
    y /= np.linalg.norm(y)
    P = tuned_make(lambda v: Binv @ v, y, "B", B=B)
    assert np.linalg.norm(P.apply_inverse(B @ y) - y) <= 1e-12
    assert np.linalg.norm(P.apply_inverse(P.t) - y) <= 1e-12


def test_tuned_singular_denominator():
    y = np.array([1.0, 0.0])
    with pytest.raises(TuningSingularError):
        tuned_make(lambda v: v, y, "A", A=np.array([[0.0, 1.0], [1.0, 0.0]]))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6), n=st.integers(2, 20), target=st.sampled_from(["identity", "A", "B", "lambda"]))
def test_sherman_morrison_consistency(seed, n, target):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, n))
    S = X @ X.T + n * np.eye(n)
    A = rng.standard_normal((n, n)) + 3 * np.eye(n)
    sigma = 0.3
    B = A - sigma * np.eye(n)
    y = rng.standard_normal(n)
    y /= np.linalg.norm(y)
    gamma = y @ A @ y
    Sinv = np.linalg.inv(S)
    P = tuned_make(lambda v: Sinv @ v, y, target, A=A, B=B, sigma=sigma, eigenvalue=gamma)
    dense = S + np.outer(P.t - S @ y, y.conj()) / (y.conj() @ y)
    for _ in range(3):
        v = rng.standard_normal(n)
        assert np.linalg.norm(dense @ P.apply_inverse(v) - v) <= 1e-10 * max(1.0, np.linalg.norm(v))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6), n=st.integers(3, 30))
def test_tuned_lambda_eigenrelation(seed, n):
    rng = np.random.default_rng(seed)
    A = np.diag(rng.uniform(1.0, 5.0, n)) + 0.2 * rng.standard_normal((n, n))
    sigma = 0.5
    B = A - sigma * np.eye(n)
    y = rng.standard_normal(n)
    y /= np.linalg.norm(y)
    gamma = y @ A @ y
    base = np.linalg.inv(np.diag(np.diag(B)))
    P = tuned_make(lambda v: base @ v, y, "lambda", sigma=sigma, eigenvalue=gamma)
    r = A @ y - gamma * y
    lhs = B @ P.apply_inverse(y)
    assert np.linalg.norm(lhs - (y + r / (gamma - sigma))) <= 1e-12


def test_block_tuning_maps_Y_to_targets():
    rng = np.random.default_rng(5)
    n, u = 12, 3
    A = np.diag(np.arange(1.0, n + 1)) + 0.1 * rng.standard_normal((n, n))
    B = A - 0.5 * np.eye(n)
    Y = np.linalg.qr(rng.standard_normal((n, u)))[0]
    base = np.linalg.inv(np.diag(np.diag(B)))
    P = tuned_make_block(lambda V: base @ V, Y, "A", A=A, B=B, sigma=0.5)
    assert np.linalg.norm(P.apply_inverse(A @ Y) - Y) <= 1e-12
    # a rank-u update of the base inverse: agrees with it on the orthogonal complement
    Q = np.linalg.qr(np.column_stack([Y, rng.standard_normal((n, n - u))]))[0][:, u:]
    w = Q @ rng.standard_normal(n - u)
    diff = P.apply_inverse(w) - base @ w
    coef = np.linalg.lstsq(P.base_inv_T - Y, diff, rcond=None)[0]
    assert np.linalg.norm((P.base_inv_T - Y) @ coef - diff) <= 1e-10


def test_tuned_preconditioner_estimator():
    A, _ = gen_convdiff(4, 2.0, -1.1, -0.9, 2.0, -1.05, -0.95)
    sigma = 0.1
    B = (A - sigma * sp.identity(16)).tocsr()
    est = TunedPreconditioner(IluPreconditioner(1e-1), "A")
    params = est.get_params()
    assert params["target"] == "A" and params["base__droptol"] == 1e-1
    est.fit(B, A=A, sigma=sigma)
    y = np.ones(16) / 4.0
    v = np.arange(16.0)
    assert np.allclose(est.apply_inverse(v), est.base_.apply_inverse(v))
    est.tune(y)
    assert np.linalg.norm(est.apply_inverse(A @ y) - y) <= 1e-12
    fresh = clone(est)
    assert not hasattr(fresh, "base_")
    with pytest.raises(ValueError):
        TunedPreconditioner(target="bogus").fit(B)


# ---------------------------------------------------------------- polynomial


def test_cheb_nu_examples():
    assert np.allclose(cheb_nu(1.0, 3.0, 0), [0.5])
    nu = cheb_nu(1.0, 3.0, 1)
    assert nu[0] == pytest.approx(2 / (4 - np.sqrt(2)), rel=1e-14)
    assert nu[1] == pytest.approx(2 / (4 + np.sqrt(2)), rel=1e-14)
    assert nu[0] == pytest.approx(0.773460, abs=1e-6)
    assert nu[1] == pytest.approx(0.369398, abs=1e-6)
    assert np.allclose(cheb_nu(2.5, 2.5, 4), 0.4)


def test_cheb_nu_rejects_origin():
    with pytest.raises(SpectrumStraddlesOriginError):
        cheb_nu(-1.0, 3.0, 3)


def test_nu_to_mu_examples():
    assert np.allclose(nu_to_mu([0.5]), [0.5])
    nu = cheb_nu(1.0, 3.0, 1)
    mu = nu_to_mu(nu)
    assert mu[0] == pytest.approx(8 / 7, rel=1e-14)
    assert mu[1] == pytest.approx(-2 / 7, rel=1e-14)
    mu = nu_to_mu([1.0, 1.0])
    assert np.allclose(mu, [2.0, -1.0])
    assert 1 - 1.0 * (mu[0] + mu[1] * 1.0) == 0.0


@settings(max_examples=40, deadline=None)
@given(nu=st.lists(st.floats(0.05, 2.0), min_size=1, max_size=8), z=st.floats(-3.0, 3.0))
def test_nu_to_mu_factorization(nu, z):
    mu = nu_to_mu(nu)
    g_product = np.prod([1 - v * z for v in nu])
    g_expanded = 1 - z * np.polyval(mu[::-1], z)
    assert g_expanded == pytest.approx(g_product, abs=1e-10 * max(1.0, abs(g_product)))


def test_interval_guard_examples():
    assert interval_guard(1.0, 3.0) == (1.0, 3.0)
    a, b = interval_guard(-0.1, 3.0)
    assert a == pytest.approx(0.1) and b == pytest.approx(3.2)
    with pytest.raises(SpectrumStraddlesOriginError):
        interval_guard(-3.0, 3.0)


def test_contour_ls_mu_examples():
    c = 2.5
    mu = contour_ls_mu([(c, c)], 0)
    assert mu[0] == pytest.approx(1 / c, rel=1e-14)
    assert abs(1 - mu[0] * c) <= 1e-14
    mu = contour_ls_mu([(1.0, 3.0)], 0)
    assert mu[0] == pytest.approx(6 / 13, rel=1e-13)


def test_contour_degree_too_high():
    with pytest.raises(DegreeTooHighError):
        contour_ls_mu([(2.0, 2.0)], 3)


def _quadrature_g2(segments, mu):
    x, w = np.polynomial.legendre.leggauss(32)
    total, length = 0.0, 0.0
    for z0, z1 in segments:
        z = 0.5 * (z0 + z1) + 0.5 * (z1 - z0) * x
        L = abs(z1 - z0)
        g = 1 - z * np.polyval(np.asarray(mu)[::-1], z)
        total += 0.5 * L * np.sum(w * np.abs(g) ** 2)
        length += L
    return total / length


@settings(max_examples=30, deadline=None)
@given(
    a=st.floats(0.2, 2.0),
    width=st.floats(0.5, 4.0),
    height=st.floats(0.0, 1.0),
    d=st.integers(0, 6),
)
def test_contour_ls_mu_is_stationary(a, width, height, d):
    b = a + width
    segments = [(complex(a, 0), complex(a, height)), (complex(a, height), complex(b, height)),
                (complex(b, height), complex(b, 0))]
    segments = [s for s in segments if s[0] != s[1]]
    mu = contour_ls_mu(segments, d, real=True)
    base = _quadrature_g2(segments, mu)
    for h in range(d + 1):
        for step in (1e-6, -1e-6):
            pert = mu.copy()
            pert[h] += step
            assert _quadrature_g2(segments, pert) >= base * (1 - 1e-12)


def test_poly_apply_examples():
    v = np.array([1.0, 1.0])
    assert np.array_equal(poly_apply_inverse(np.diag([5.0, 7.0]), [1.0], v), v)
    assert np.allclose(poly_apply_inverse(np.diag([2.0, 3.0]), [0.0, 1.0], v), [2.0, 3.0])
    mu = [8 / 7, -2 / 7]
    B = np.diag([1.0, 3.0])
    pv = poly_apply_inverse(B, mu, v)
    assert np.allclose(pv, [8 / 7 - 2 / 7, 8 / 7 - 6 / 7])
    g = 1 - np.diag(B) * pv
    assert np.allclose(g, [1 / 7, 1 / 7])


@settings(max_examples=30, deadline=None)
@given(nu=st.lists(st.floats(0.1, 2.0), min_size=1, max_size=6), seed=st.integers(0, 1000))
def test_product_form_matches_horner_at_low_degree(nu, seed):
    rng = np.random.default_rng(seed)
    B = np.diag(rng.uniform(0.5, 2.0, 5)) + 0.1 * rng.standard_normal((5, 5))
    v = rng.standard_normal(5)
    ordered = leja_order(np.array(nu))
    assert sorted(ordered) == sorted(nu)
    a = poly_apply_roots(B, ordered, v)
    b = poly_apply_inverse(B, nu_to_mu(np.array(nu)), v)
    assert np.linalg.norm(a - b) <= 1e-10 * max(1.0, np.linalg.norm(b))


def test_nu_from_mu_roundtrip():
    nu = np.array([0.9, 0.5, 0.3 + 0.1j, 0.3 - 0.1j])
    back = nu_from_mu(nu_to_mu(nu))
    assert np.allclose(np.sort_complex(back), np.sort_complex(nu), atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(d=st.integers(0, 15), scheme=st.sampled_from(["cheb", "contour"]), seed=st.integers(0, 1000))
def test_poly_preserves_eigenvectors(d, scheme, seed):
    A, basis = gen_convdiff(6, 2.0, -1.1, -0.9, 2.0, -1.05, -0.95)
    B = (A - 0.05 * sp.identity(36)).tocsr()
    lam = basis.eigenvalues - 0.05
    try:
        P = PolynomialPreconditioner(d, scheme).fit(B)
    except DegreeTooHighError:
        return
    rng = np.random.default_rng(seed)
    for j in rng.choice(36, 10, replace=False):
        z = basis.Z[:, j]
        pz = P.apply_inverse(z)
        p_lam = P.poly_.poly(lam[j])
        assert np.linalg.norm(B @ pz - lam[j] * p_lam * z) <= 1e-10 * np.linalg.norm(z)


@settings(max_examples=30, deadline=None)
@given(a=st.floats(0.01, 5.0), width=st.floats(0.01, 20.0))
def test_chebyshev_damping(a, width):
    b = a + width
    lam = np.linspace(a, b, 1000)
    peaks = []
    for d in (5, 10, 15):
        nu = cheb_nu(a, b, d)
        g = np.prod(1 - np.outer(lam, nu), axis=1)
        peaks.append(np.max(np.abs(g)))
    assert all(p < 1 for p in peaks)
    assert peaks[0] > peaks[1] > peaks[2] or peaks[0] < 1e-300


def test_hull_contour_excludes_origin_and_clips():
    ritz = np.array([1.0 + 1.0j, 1.0 - 1.0j, 3.0 + 0.5j, 3.0 - 0.5j, 2.0])
    segs = hull_contour(ritz, real_operator=True)
    assert all(s[0].imag >= 0 and s[1].imag >= 0 for s in segs)
    with pytest.raises(SpectrumStraddlesOriginError):
        hull_contour(np.array([-1.0 + 1j, -1.0 - 1j, 1.0 + 1j, 1.0 - 1j]))


def test_polynomial_estimator_interval_override():
    A, _ = gen_convdiff(4, 2.0, -1.1, -0.9, 2.0, -1.05, -0.95)
    P = PolynomialPreconditioner(degree=3, scheme="cheb", interval=(0.5, 7.5)).fit(A)
    assert np.allclose(np.sort(P.poly_.nu), np.sort(cheb_nu(0.5, 7.5, 3)))
    assert P.get_params()["interval"] == (0.5, 7.5)


def test_identity_preconditioner():
    v = np.arange(3.0)
    assert np.array_equal(IdentityPreconditioner().fit(None).apply_inverse(v), v)
