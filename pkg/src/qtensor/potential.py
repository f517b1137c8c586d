"""Landau-de Gennes bulk potential, its splitting and its truncations.

All functions accept a single 3x3 tensor (or a QTensor) or a stack of them
with trailing shape (3, 3); scalars come back with the leading shape.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidArgument
from .tensor_core import I3, as_array, identity4, tr2, tr3

DEFAULT_ABC = (-0.2, 1.0, 1.0)


def alpha_from_params(A: float, B: float, C: float) -> float:
    """Radius of the maximum principle, sqrt(B^2/C^2 - 2A/C)."""
    if C <= 0:
        raise InvalidArgument("C must be positive")
    rad = B * B / (C * C) - 2.0 * A / C
    if rad < 0:
        raise InvalidArgument(f"negative radicand {rad}")
    return math.sqrt(rad)


@dataclass(frozen=True)
class PotentialParams:
    A: float = -0.2
    B: float = 1.0
    C: float = 1.0
    epsilon: float = 1e-2
    gamma: float = 1.0
    alpha: float | None = None
    alpha1: float = 1.19
    alpha2: float = 1.2
    S1: float | None = None
    S3: float | None = None
    psi3_tail_coeff: float = 1.0
    beta: float = field(init=False)

    def __post_init__(self):
        if self.B <= 0 or self.C <= 0:
            raise InvalidArgument("B and C must be positive")
        if self.epsilon <= 0 or self.gamma <= 0:
            raise InvalidArgument("epsilon and gamma must be positive")
        amin = alpha_from_params(self.A, self.B, self.C)
        if self.alpha is None:
            object.__setattr__(self, "alpha", amin)
        elif self.alpha < amin * (1 - 1e-12):
            raise InvalidArgument(f"alpha={self.alpha} is below the bound {amin}")
        if not self.alpha < self.alpha1 < self.alpha2:
            raise InvalidArgument("need alpha < alpha1 < alpha2")
        object.__setattr__(self, "beta", 1.0 / (self.alpha2 - self.alpha1))
        if self.S1 is None or self.S3 is None:
            s1, s3, _ = stability_bounds(self)
            if self.S1 is None:
                object.__setattr__(self, "S1", s1)
            if self.S3 is None:
                object.__setattr__(self, "S3", s3)
        if self.S1 < 0 or self.S3 < 0:
            raise InvalidArgument("stabilization constants must be non-negative")

    def with_(self, **kw) -> "PotentialParams":
        return replace(self, **kw)


# -- full potential ---------------------------------------------------------


def psi_value(Q, p: PotentialParams):
    t2 = tr2(Q)
    return 0.5 * p.A * t2 - p.B / 3.0 * tr3(Q) + 0.25 * p.C * t2 * t2


def psi_grad(Q, p: PotentialParams):
    Q = as_array(Q)
    Q2 = Q @ Q
    return p.A * Q - p.B * Q2 + p.C * tr2(Q)[..., None, None] * Q


def psi_hessian(Q, p: PotentialParams):
    """d psi_ij / d Q_kl."""
    Q = as_array(Q)
    t2 = tr2(Q)[..., None, None, None, None]
    h = (p.A + p.C * t2) * identity4() + psi3_hessian(Q, p)
    return h + 2.0 * p.C * np.einsum("...ij,...kl->...ijkl", Q, Q)


# -- splitting --------------------------------------------------------------


def psi_parts(Q, p: PotentialParams):
    a2 = p.alpha**2
    t2 = tr2(Q)
    psi1 = 0.25 * p.C * (t2 - a2) ** 2
    psi2 = 0.5 * (p.A + p.C * a2) * t2 - 0.25 * p.C * a2 * a2
    psi3 = -p.B / 3.0 * tr3(Q)
    return psi1, psi2, psi3


def psi_parts_grad(Q, p: PotentialParams):
    Q = as_array(Q)
    a2 = p.alpha**2
    g1 = p.C * (tr2(Q) - a2)[..., None, None] * Q
    g2 = (p.A + p.C * a2) * Q
    g3 = -p.B * (Q @ Q)
    return g1, g2, g3


def psi1_hessian(Q, p: PotentialParams):
    Q = as_array(Q)
    t2 = tr2(Q)[..., None, None, None, None]
    return p.C * (t2 - p.alpha**2) * identity4() + 2.0 * p.C * np.einsum(
        "...ij,...kl->...ijkl", Q, Q
    )


def psi3_hessian(Q, p: PotentialParams):
    Q = as_array(Q)
    return -p.B * (np.einsum("ik,...lj->...ijkl", I3, Q) + np.einsum("...ik,jl->...ijkl", Q, I3))


# -- cut-off function -------------------------------------------------------


def _check_s(s):
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise InvalidArgument("rho is defined for s >= 0")
    return s


def rho(s, p: PotentialParams):
    s = _check_s(s)
    t = np.clip((s - p.alpha1) * p.beta, 0.0, 1.0)
    return (2.0 * t + 1.0) * (1.0 - t) ** 2


def rho_prime(s, p: PotentialParams):
    s = _check_s(s)
    t = np.clip((s - p.alpha1) * p.beta, 0.0, 1.0)
    return 6.0 * p.beta * t * (t - 1.0)


# -- truncated first part ---------------------------------------------------


def psi1_hat(Q, p: PotentialParams):
    a = p.alpha
    t2 = tr2(Q)
    s = np.sqrt(t2)
    inner = 0.25 * p.C * (t2 - a * a) ** 2
    tail = p.C * a * a * (s - a) ** 2
    return np.where(s <= a, inner, tail)


def _safe_s(Q):
    s = np.sqrt(tr2(Q))
    return s, np.where(s > 0, s, 1.0)


def psi1_hat_grad(Q, p: PotentialParams):
    Q = as_array(Q)
    a = p.alpha
    s, s_ = _safe_s(Q)
    inner = p.C * (s * s - a * a)
    tail = 2.0 * p.C * a * a * (s - a) / s_
    return np.where(s <= a, inner, tail)[..., None, None] * Q


def psi1_hat_hessian(Q, p: PotentialParams):
    Q = as_array(Q)
    a = p.alpha
    s, s_ = _safe_s(Q)
    inside = (s <= a)[..., None, None, None, None]
    QQ = np.einsum("...ij,...kl->...ijkl", Q, Q)
    d = identity4()
    tail = 2.0 * p.C * a * a * (
        (a / s_**3)[..., None, None, None, None] * QQ + ((s - a) / s_)[..., None, None, None, None] * d
    )
    return np.where(inside, psi1_hessian(Q, p), tail)


# -- truncated third part ---------------------------------------------------


def psi3_hat(Q, p: PotentialParams):
    t2 = tr2(Q)
    r = rho(np.sqrt(t2), p)
    return -p.B / 3.0 * tr3(Q) * r + p.psi3_tail_coeff * t2 * (1.0 - r)


def psi3_hat_grad(Q, p: PotentialParams):
    Q = as_array(Q)
    s, s_ = _safe_s(Q)
    r = rho(s, p)[..., None, None]
    f = -p.B / 3.0 * tr3(Q)
    g = p.psi3_tail_coeff * s * s
    drho = (rho_prime(s, p) * (f - g) / s_)[..., None, None]
    return r * (-p.B * (Q @ Q)) + (1.0 - r) * 2.0 * p.psi3_tail_coeff * Q + drho * Q


# -- trace penalty ----------------------------------------------------------


def trace_penalty(Q, p: PotentialParams):
    """p(Q) = (B/3) tr(Q^2) I, cancels the trace of psi(Q)."""
    return (p.B / 3.0 * tr2(Q))[..., None, None] * I3


def trace_penalty_grad(Q, p: PotentialParams):
    Q = as_array(Q)
    return 2.0 * p.B / 3.0 * np.einsum("ij,...kl->...ijkl", I3, Q)


def hessian_quadratic(Q, P, p: PotentialParams):
    """P : grad psi(Q) : P without forming the Hessian."""
    Q, P = as_array(Q), as_array(P)
    QP = Q @ P
    qp = np.einsum("...ij,...ij->...", Q, P)
    return (p.A + p.C * tr2(Q)) * tr2(P) - 2.0 * p.B * np.einsum("...ij,...ji->...", QP, P) + 2.0 * p.C * qp * qp


def psi1_hessian_norm(Q, p: PotentialParams):
    """Frobenius norm of psi1_hessian without forming the 81 entries."""
    t2 = tr2(Q)
    c = t2 - p.alpha**2
    return p.C * np.sqrt(9.0 * c * c + 4.0 * c * t2 + 4.0 * t2 * t2)


def psi3_hessian_norm(Q, p: PotentialParams):
    trq = np.trace(as_array(Q), axis1=-2, axis2=-1)
    return p.B * np.sqrt(6.0 * tr2(Q) + 2.0 * trq * trq)


def trace_penalty_grad_norm(Q, p: PotentialParams):
    return 2.0 * p.B / np.sqrt(3.0) * np.sqrt(tr2(Q))


def psi_hat_value(Q, p: PotentialParams):
    """Modified bulk density used by the unconditionally stable scheme."""
    return psi1_hat(Q, p) + psi_parts(Q, p)[1] + psi3_hat(Q, p)


# -- stabilization constants ------------------------------------------------


def _sampled_psi3_bound(p: PotentialParams, n: int = 100_000, seed: int = 0) -> float:
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, 3, 3))
    x = 0.5 * (x + np.swapaxes(x, 1, 2))
    x -= np.trace(x, axis1=1, axis2=2)[:, None, None] * I3 / 3.0
    x /= np.sqrt(tr2(x))[:, None, None]
    x *= (p.alpha * rng.random(n) ** (1.0 / 5.0))[:, None, None]
    # ||B(Q_lj d_ik + Q_ik d_jl)||_F^2 = B^2 (6|Q|^2 + 2 tr(Q)^2)
    nrm = p.B * np.sqrt(6.0 * tr2(x) + 2.0 * np.trace(x, axis1=1, axis2=2) ** 2)
    return 1.05 * float(nrm.max())


def s3_certified_bound(alpha1: float, alpha2: float, B: float, tail: float = 1.0) -> float:
    """Upper bound on ||grad psi3_hat||_F valid for every symmetric Q.

    Built from the product rule with |rho'| <= 3 beta / 2, |rho''| <= 6 beta^2,
    |tr Q^3| <= |Q|^3 and the fact that rho' vanishes outside (alpha1, alpha2).
    """
    if alpha2 <= alpha1:
        raise InvalidArgument("alpha2 must exceed alpha1")
    beta = 1.0 / (alpha2 - alpha1)
    a2 = alpha2
    hess_parts = max(2.0 * math.sqrt(3.0) * B * a2, 6.0 * tail)
    cross = 3.0 * beta * (B * a2 * a2 + 2.0 * tail * a2)
    curv = (B / 3.0 * a2**3 + tail * a2 * a2) * (6.0 * beta * beta + 6.0 * beta / alpha1)
    return hess_parts + cross + curv


def stability_bounds(p) -> tuple[float, float, float]:
    """(S1 default, S3 default, certified bound on ||grad psi3_hat||_F)."""
    if p.alpha2 <= p.alpha1:
        raise InvalidArgument("alpha2 must exceed alpha1")
    s1 = 12.0 * math.sqrt(3.0) * p.C * p.alpha**2
    if np.allclose((p.A, p.B, p.C), DEFAULT_ABC, rtol=0, atol=1e-15):
        s3 = 208.0
    else:
        s3 = _sampled_psi3_bound(p)
    s3f = s3_certified_bound(p.alpha1, p.alpha2, p.B, p.psi3_tail_coeff)
    return s1, s3, s3f
