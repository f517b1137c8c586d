import math

import numpy as np
import pytest

from conftest import random_sym, random_traceless
from qtensor import potential as pot
from qtensor.errors import InvalidArgument
from qtensor.tensor_core import frobenius4, identity4, tr2, uniaxial

H = 1e-5
UNI = np.diag([-1.0, -1.0, 2.0]) / 3.0


def central(f, Q, E):
    # fourth-order stencil: the cut-off band has third derivatives ~ 1e6
    return (8 * (f(Q + E) - f(Q - E)) - (f(Q + 2 * E) - f(Q - 2 * E))) / (12 * H)


def fd_grad(f, Q):
    """Central differences of a scalar function over all nine entries."""
    g = np.zeros_like(Q)
    for i in range(3):
        for j in range(3):
            E = np.zeros((3, 3))
            E[i, j] = H
            g[..., i, j] = central(f, Q, E)
    return g


def fd_jac(F, Q):
    J = np.zeros(Q.shape + (3, 3))
    for k in range(3):
        for l in range(3):
            E = np.zeros((3, 3))
            E[k, l] = H
            J[..., k, l] = central(F, Q, E)
    return J


def rel(a, b):
    axes = tuple(range(1, a.ndim))
    return np.linalg.norm((a - b).reshape(len(a), -1), axis=1) / np.maximum(
        np.linalg.norm(b.reshape(len(b), -1), axis=1), 1e-300
    )


def test_alpha_examples():
    assert pot.alpha_from_params(-0.2, 1, 1) == pytest.approx(math.sqrt(1.4))
    assert pot.alpha_from_params(0, 1, 1) == 1.0
    assert pot.alpha_from_params(-1, 0, 2) == 1.0
    with pytest.raises(InvalidArgument):
        pot.alpha_from_params(1.0, 0.0, 1.0)


def test_params_validation():
    with pytest.raises(InvalidArgument):
        pot.PotentialParams(B=0)
    with pytest.raises(InvalidArgument):
        pot.PotentialParams(epsilon=0)
    with pytest.raises(InvalidArgument):
        pot.PotentialParams(alpha=1.0)
    with pytest.raises(InvalidArgument):
        pot.PotentialParams(alpha1=1.3, alpha2=1.25)
    p = pot.PotentialParams()
    assert p.beta == pytest.approx(100.0)
    assert p.alpha == pytest.approx(math.sqrt(1.4))


def test_psi_value_examples(params):
    assert pot.psi_value(np.zeros((3, 3)), params) == 0
    # (-0.1)(2/3) - (1/3)(2/9) + (1/4)(4/9)
    assert pot.psi_value(UNI, params) == pytest.approx(-4 / 135)
    assert pot.psi_value(np.diag([1.0, 0, -1]), params) == pytest.approx(0.8)


def test_psi_grad_example(params):
    assert not pot.psi_grad(np.zeros((3, 3)), params).any()
    np.testing.assert_allclose(pot.psi_grad(UNI, params), np.diag([-4, -4, -2]) / 15, atol=1e-15)


def test_psi_hessian_at_zero(params):
    np.testing.assert_allclose(pot.psi_hessian(np.zeros((3, 3)), params), params.A * identity4())


def test_gradients_match_finite_differences(rng, params):
    Q = random_sym(rng, 1000, 2.0)
    for f, g in (
        (pot.psi_value, pot.psi_grad),
        (pot.psi1_hat, pot.psi1_hat_grad),
        (pot.psi3_hat, pot.psi3_hat_grad),
    ):
        err = rel(fd_grad(lambda X: f(X, params), Q), g(Q, params))
        assert err.max() <= 1e-6, f.__name__


def test_psi3_hat_gradient_inside_cutoff_band(rng, params):
    Q = random_traceless(rng, 500)
    s = rng.uniform(params.alpha1 + 1e-4, params.alpha2 - 1e-4, 500)
    Q *= (s / np.sqrt(tr2(Q)))[:, None, None]
    err = rel(fd_grad(lambda X: pot.psi3_hat(X, params), Q), pot.psi3_hat_grad(Q, params))
    assert err.max() <= 1e-6


def test_hessians_match_finite_differences(rng, params):
    Q = random_sym(rng, 1000, 2.0)
    for g, h in ((pot.psi_grad, pot.psi_hessian), (pot.psi1_hat_grad, pot.psi1_hat_hessian)):
        err = rel(fd_jac(lambda X: g(X, params), Q), h(Q, params))
        assert err.max() <= 1e-5, h.__name__


def test_hessian_directional_second_derivative(rng, params):
    for _ in range(20):
        P = random_sym(rng)
        f = lambda t: pot.psi_value(UNI + t * P, params)  # noqa: E731
        h = 1e-4
        d2 = (f(h) - 2 * f(0) + f(-h)) / h**2
        quad = np.einsum("ij,ijkl,kl->", P, pot.psi_hessian(UNI, params), P)
        assert quad == pytest.approx(d2, rel=1e-5, abs=1e-7)
        assert pot.hessian_quadratic(UNI, P, params) == pytest.approx(quad, rel=1e-12)


def test_closed_form_norms(rng, params):
    Q = random_sym(rng, 200, 2.0)
    np.testing.assert_allclose(pot.psi1_hessian_norm(Q, params), frobenius4(pot.psi1_hessian(Q, params)), rtol=1e-12)
    np.testing.assert_allclose(pot.psi3_hessian_norm(Q, params), frobenius4(pot.psi3_hessian(Q, params)), rtol=1e-12)
    np.testing.assert_allclose(
        pot.trace_penalty_grad_norm(Q, params), frobenius4(pot.trace_penalty_grad(Q, params)), rtol=1e-12
    )


def test_splitting_identity(rng, params):
    z = np.zeros((3, 3))
    a4 = params.alpha**4
    p1, p2, p3 = pot.psi_parts(z, params)
    assert p1 == pytest.approx(a4 / 4) and p2 == pytest.approx(-a4 / 4) and p3 == 0
    assert pot.psi_parts(UNI, params)[0] == pytest.approx(0.25 * (2 / 3 - 1.4) ** 2)
    Q = random_sym(rng, 1000, 2.0)
    psi = pot.psi_value(Q, params)
    assert np.all(np.abs(sum(pot.psi_parts(Q, params)) - psi) <= 1e-12 * (1 + np.abs(psi)))
    g = pot.psi_grad(Q, params)
    np.testing.assert_allclose(sum(pot.psi_parts_grad(Q, params)), g, atol=1e-12 * (1 + np.abs(g).max()))


def test_rho(params):
    a1, a2 = params.alpha1, params.alpha2
    assert pot.rho(a1, params) == 1.0
    assert pot.rho(a2, params) == 0.0
    assert pot.rho(0.5 * (a1 + a2), params) == pytest.approx(0.5)
    assert pot.rho_prime(a1, params) == 0.0 and pot.rho_prime(a2, params) == 0.0
    with pytest.raises(InvalidArgument):
        pot.rho(-1e-3, params)


def test_rho_monotone_and_c1(params):
    s = np.linspace(0, 2, 200_001)
    r = pot.rho(s, params)
    assert np.all(np.diff(r) <= 1e-15)
    for edge in (params.alpha1, params.alpha2):
        lo, hi = pot.rho_prime([edge - 1e-14, edge + 1e-14], params)
        assert abs(hi - lo) <= 1e-8


def test_psi1_hat_seam(params):
    a = params.alpha
    Q = np.asarray(uniaxial(a * math.sqrt(1.5), [0, 0, 1]))
    assert tr2(Q) == pytest.approx(a * a)
    assert pot.psi1_hat(Q, params) == pytest.approx(0, abs=1e-14)
    np.testing.assert_allclose(pot.psi1_hat_grad(Q, params), 0, atol=1e-13)
    # value, gradient and Hessian continuous across |Q| = alpha
    lo, hi = Q * (1 - 1e-9), Q * (1 + 1e-9)
    assert abs(pot.psi1_hat(hi, params) - pot.psi1_hat(lo, params)) < 1e-12
    assert np.abs(pot.psi1_hat_hessian(hi, params) - pot.psi1_hat_hessian(lo, params)).max() < 1e-7


def test_psi1_hat_tail_value(params):
    a = params.alpha
    Q = 2 * a * (np.diag([1.0, 0, 0]) - np.eye(3) / 3) / math.sqrt(2 / 3)
    assert math.sqrt(tr2(Q)) == pytest.approx(2 * a)
    assert pot.psi1_hat(Q, params) == pytest.approx(params.C * a**4)


def test_truncations_agree_inside(rng, params):
    Q = random_sym(rng, 1000)
    s = np.sqrt(tr2(Q))
    Q1 = Q * (params.alpha * rng.random(1000) / s)[:, None, None]
    np.testing.assert_allclose(pot.psi1_hat(Q1, params), pot.psi_parts(Q1, params)[0], atol=1e-12)
    np.testing.assert_allclose(pot.psi1_hat_grad(Q1, params), pot.psi_parts_grad(Q1, params)[0], atol=1e-12)
    Q3 = Q * (params.alpha1 * rng.random(1000) / s)[:, None, None]
    np.testing.assert_allclose(pot.psi3_hat(Q3, params), pot.psi_parts(Q3, params)[2], atol=1e-12)
    np.testing.assert_allclose(pot.psi3_hat_grad(Q3, params), pot.psi_parts_grad(Q3, params)[2], atol=1e-12)


def test_psi3_hat_examples(params):
    z = np.zeros((3, 3))
    assert pot.psi3_hat(z, params) == 0 and not pot.psi3_hat_grad(z, params).any()
    np.testing.assert_allclose(pot.psi3_hat_grad(UNI, params), -UNI @ UNI, atol=1e-15)
    Q = UNI * 2 * params.alpha2 / math.sqrt(2 / 3)
    assert pot.psi3_hat(Q, params) == pytest.approx(4 * params.alpha2**2)
    np.testing.assert_allclose(pot.psi3_hat_grad(Q, params), 2 * Q, atol=1e-13)


def test_psi1_hat_hessian_bound(params):
    rng = np.random.default_rng(7)
    Q = random_sym(rng, 100_000)
    Q *= (3 * params.alpha2 * rng.random(100_000) / np.sqrt(tr2(Q)))[:, None, None]
    nrm = frobenius4(pot.psi1_hat_hessian(Q, params))
    assert nrm.max() <= 12 * math.sqrt(3) * params.C * params.alpha**2 * (1 + 1e-9)


def test_trace_penalty(rng, params):
    z = np.zeros((3, 3))
    assert not pot.trace_penalty(z, params).any() and not pot.trace_penalty_grad(z, params).any()
    np.testing.assert_allclose(pot.trace_penalty(UNI, params), 2 / 9 * np.eye(3))
    tot = pot.psi_grad(UNI, params) + pot.trace_penalty(UNI, params)
    np.testing.assert_allclose(tot, np.diag([-2, -2, 4]) / 45, atol=1e-15)
    Q = random_traceless(rng, 1000, 2.0)
    tr = np.trace(pot.psi_grad(Q, params) + pot.trace_penalty(Q, params), axis1=1, axis2=2)
    assert np.all(np.abs(tr) <= 1e-12 * (1 + np.sqrt(tr2(Q)) ** 3))
    err = rel(fd_jac(lambda X: pot.trace_penalty(X, params), Q), pot.trace_penalty_grad(Q, params))
    assert err.max() <= 1e-6


def test_stability_bounds_default_parameters(params):
    s1, s3, _ = pot.stability_bounds(params)
    assert s1 == pytest.approx(16.8 * math.sqrt(3))
    assert s1 == pytest.approx(29.098, abs=1e-3)
    assert s3 == 208.0


def test_stability_bounds_sampled():
    p = pot.PotentialParams(A=-0.5, B=0.5, C=2.0)
    _, s3, _ = pot.stability_bounds(p)
    # sup of ||grad psi3|| over traceless |Q| <= alpha is sqrt(6) B alpha
    assert math.sqrt(6) * p.B * p.alpha * 0.99 <= s3 <= 1.05 * math.sqrt(6) * p.B * p.alpha


def test_certified_bound_dominates_sampled_norm(params):
    rng = np.random.default_rng(3)
    Q = random_traceless(rng, 20_000)
    s = rng.uniform(0, 3 * params.alpha2, 20_000)
    s[:10_000] = rng.uniform(params.alpha1, params.alpha2, 10_000)
    Q *= (s / np.sqrt(tr2(Q)))[:, None, None]
    J = fd_jac(lambda X: pot.psi3_hat_grad(X, params), Q)
    assert frobenius4(J).max() <= pot.stability_bounds(params)[2]


def test_stability_bounds_rejects_bad_thresholds(params):
    with pytest.raises(InvalidArgument):
        pot.s3_certified_bound(1.2, 1.19, 1.0)


@pytest.mark.xfail(strict=True, reason="the certified sup of the gradient norm is about 1.2e5 at these thresholds")
def test_s3_report_within_quoted_value(params):
    assert pot.stability_bounds(params)[2] <= 32571
