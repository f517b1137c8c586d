import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_sym
from qtensor.errors import InvalidArgument
from qtensor.tensor_core import (
    BASIS,
    QTensor,
    contract22,
    contract_quad,
    eig_sym3,
    frobenius4,
    from_coeffs,
    identity4,
    lower_triangular,
    lower_triangular_reduced,
    make_traceless,
    reduce4,
    to_coeffs,
    tr2,
    tr3,
    uniaxial,
)

finite = st.floats(-10, 10, allow_nan=False)


def brute_quad(Q, A):
    total = 0.0
    for i in range(3):
        for j in range(3):
            for k in range(3):
                for l in range(3):
                    total += Q[i, j] * A[i, j, k, l] * Q[k, l]
    return total


def test_make_traceless_examples():
    assert np.array_equal(np.asarray(make_traceless(0, 0, 0, 0, 0)), np.zeros((3, 3)))
    assert np.array_equal(np.asarray(make_traceless(1, 0, 0, 0, 0)), np.diag([1.0, 0.0, -1.0]))
    np.testing.assert_allclose(np.asarray(make_traceless(1 / 3, 0, 0, 1 / 3, 0)), np.diag([1, 1, -2]) / 3)


def test_make_traceless_rejects_nonfinite():
    with pytest.raises(InvalidArgument):
        make_traceless(np.nan, 0, 0, 0, 0)
    with pytest.raises(InvalidArgument):
        make_traceless(0, np.inf, 0, 0, 0)


@given(finite, finite, finite, finite, finite)
def test_make_traceless_is_symmetric_traceless(a, b, c, d, e):
    q = make_traceless(a, b, c, d, e)
    m = np.asarray(q)
    assert np.array_equal(m, m.T)
    assert abs(q.trace) <= 1e-14 * (1 + np.linalg.norm(m))
    assert q.traceless


def test_general_symmetric_view():
    q = QTensor.from_matrix(2.0 * np.eye(3))
    assert not q.traceless
    assert q.trace == 6.0


def test_uniaxial_examples():
    np.testing.assert_allclose(np.asarray(uniaxial(1, [0, 0, 1])), np.diag([-1, -1, 2]) / 3, atol=1e-15)
    assert np.array_equal(np.asarray(uniaxial(0, [1, 0, 0])), np.zeros((3, 3)))
    q = uniaxial(1, np.array([1, 1, 0]) / np.sqrt(2))
    assert q.q12 == pytest.approx(0.5)
    assert q.q11 == pytest.approx(1 / 6) and q.q22 == pytest.approx(1 / 6)
    assert q.q33 == pytest.approx(-1 / 3)


def test_uniaxial_rejects_non_unit():
    with pytest.raises(InvalidArgument):
        uniaxial(1, [1, 1, 0])


def test_uniaxial_spectrum(rng):
    n = rng.normal(size=3)
    n /= np.linalg.norm(n)
    lam = np.linalg.eigvalsh(np.asarray(uniaxial(0.7, n)))
    np.testing.assert_allclose(sorted(lam), [-0.7 / 3, -0.7 / 3, 1.4 / 3], atol=1e-14)


def test_traces():
    z = np.zeros((3, 3))
    assert tr2(z) == 0 and tr3(z) == 0
    q = np.diag([-1, -1, 2]) / 3
    assert tr2(q) == pytest.approx(2 / 3)
    assert tr3(q) == pytest.approx(2 / 9)
    q = np.diag([1.0, 0.0, -1.0])
    assert tr2(q) == 2.0 and tr3(q) == 0.0


def test_contract22(rng):
    q = np.diag([-1, -1, 2]) / 3
    assert contract22(q, q) == pytest.approx(2 / 3)
    assert contract22(np.zeros((3, 3)), q) == 0
    assert contract22(np.diag([1.0, 0, -1]), np.eye(3)) == 0
    p = random_sym(rng)
    assert contract22(p, p) == tr2(p)


def test_contract_quad(rng):
    p = random_sym(rng)
    _, val = contract_quad(p, identity4())
    assert val == pytest.approx(tr2(p))
    pa, val = contract_quad(np.zeros((3, 3)), rng.normal(size=(3, 3, 3, 3)))
    assert val == 0 and not pa.any()


def test_contract_quad_inequality(rng):
    P = random_sym(rng, 10_000, 3.0)
    A = rng.normal(size=(10_000, 3, 3, 3, 3))
    _, val = contract_quad(P, A)
    assert np.all(np.abs(val) <= frobenius4(A) * tr2(P) * (1 + 1e-12))
    # the quadratic form against a direct 81-term sum
    for k in range(5):
        assert val[k] == pytest.approx(brute_quad(P[k], A[k]), rel=1e-12)


def test_frobenius4():
    assert frobenius4(np.zeros((3, 3, 3, 3))) == 0
    assert frobenius4(identity4()) == pytest.approx(3.0)
    a = np.zeros((3, 3, 3, 3))
    a[0, 1, 2, 0] = 2.0
    assert frobenius4(a) == 2.0


def test_lower_triangular_examples(rng):
    assert not lower_triangular(np.zeros((3, 3, 3, 3))).any()
    q = random_sym(rng)
    assert brute_quad(q, lower_triangular(identity4())) == pytest.approx(tr2(q), rel=1e-13)


def test_lower_triangular_identity(rng):
    for _ in range(100):
        A = rng.normal(size=(3, 3, 3, 3))
        Q = random_sym(rng, scale=2.0)
        err = abs(brute_quad(Q, A) - brute_quad(Q, lower_triangular(A)))
        assert err <= 1e-12 * frobenius4(A) * tr2(Q)


def test_basis_orthonormal():
    gram = np.einsum("aij,bij->ab", BASIS, BASIS)
    np.testing.assert_allclose(gram, np.eye(5), atol=1e-15)
    np.testing.assert_allclose(np.trace(BASIS, axis1=1, axis2=2), 0, atol=1e-15)


def test_coeff_roundtrip(rng):
    from conftest import random_traceless

    q = random_traceless(rng, 20)
    np.testing.assert_allclose(from_coeffs(to_coeffs(q)), q, atol=1e-14)


def test_reduced_fold_keeps_quadratic_form(rng):
    C = rng.normal(size=(5, 5))
    v = rng.normal(size=5)
    L = lower_triangular_reduced(C)
    assert np.allclose(np.triu(L, 1), 0)
    assert v @ L @ v == pytest.approx(v @ C @ v, rel=1e-13)


def test_reduce4_identity():
    np.testing.assert_allclose(reduce4(identity4()), np.eye(5), atol=1e-15)


def test_eig_examples():
    e = eig_sym3(np.diag([-1, -1, 2]) / 3)
    np.testing.assert_allclose(e.eigenvalues, [2 / 3, -1 / 3, -1 / 3], atol=1e-15)
    assert abs(abs(e.eigenvectors[2, 0]) - 1) < 1e-14
    np.testing.assert_allclose(eig_sym3(np.zeros((3, 3))).eigenvalues, 0)
    e = eig_sym3(np.asarray(uniaxial(1, np.array([1, 1, 0]) / np.sqrt(2))))
    assert e.eigenvalues[0] == pytest.approx(2 / 3)
    assert abs(abs(e.eigenvectors[:, 0] @ np.array([1, 1, 0]) / np.sqrt(2)) - 1) < 1e-12


@settings(max_examples=200)
@given(st.lists(st.floats(-5, 5, allow_nan=False), min_size=6, max_size=6))
def test_eig_invariants(xs):
    a, b, c, d, e, f = xs
    Q = np.array([[a, b, c], [b, d, e], [c, e, f]])
    dec = eig_sym3(Q)
    lam, V = dec.eigenvalues, dec.eigenvectors
    assert np.all(np.diff(lam) <= 0)
    assert abs(lam.sum() - np.trace(Q)) <= 1e-12 * (1 + np.abs(Q).max())
    np.testing.assert_allclose(V.T @ V, np.eye(3), atol=1e-10)
    scale = 1 + np.linalg.norm(Q)
    np.testing.assert_allclose(Q @ V, V * lam, atol=1e-10 * scale)
    assert np.linalg.norm(Q - (V * lam) @ V.T) <= 1e-10 * scale


def test_eig_near_degenerate():
    Q = np.diag([1.0, 1.0 + 1e-13, -2.0]) + 1e-14
    dec = eig_sym3(Q)
    np.testing.assert_allclose(dec.eigenvectors.T @ dec.eigenvectors, np.eye(3), atol=1e-10)
