"""Algebra of symmetric 3x3 tensors and dense 3x3x3x3 tensors.

Second order tensors are numpy arrays with trailing shape (3, 3) and fourth
order tensors have trailing shape (3, 3, 3, 3), so every routine here works on
a single tensor or on a whole stack of them (one per node or quadrature
point).  A fourth order tensor ``A`` stores ``A[i,j,k,l] = d f_ij / d Q_kl``
so that ``A:P`` (contraction on the last two indices) is the directional
derivative of ``f`` along ``P``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument

I3 = np.eye(3)

# order in which the five traceless components are solved for
COMPONENTS = ("11", "12", "22", "13", "23")


@dataclass(frozen=True)
class QTensor:
    """Symmetric 3x3 tensor stored through its six independent entries.

    ``traceless=True`` marks tensors built with q33 = -(q11+q22).  Trace
    penalties are multiples of the identity, so general symmetric tensors are
    representable as well.
    """

    q11: float
    q12: float
    q13: float
    q22: float
    q23: float
    q33: float
    traceless: bool = False

    @classmethod
    def from_matrix(cls, m, traceless: bool | None = None) -> "QTensor":
        m = np.asarray(m, dtype=float)
        if m.shape != (3, 3):
            raise InvalidArgument(f"expected a 3x3 matrix, got shape {m.shape}")
        s = 0.5 * (m + m.T)
        if traceless is None:
            traceless = abs(np.trace(s)) <= 1e-14 * (1.0 + np.linalg.norm(s))
        return cls(s[0, 0], s[0, 1], s[0, 2], s[1, 1], s[1, 2], s[2, 2], traceless)

    @property
    def matrix(self) -> np.ndarray:
        return np.array(
            [
                [self.q11, self.q12, self.q13],
                [self.q12, self.q22, self.q23],
                [self.q13, self.q23, self.q33],
            ]
        )

    def __array__(self, dtype=None, copy=None):
        m = self.matrix
        return m if dtype is None else m.astype(dtype)

    @property
    def trace(self) -> float:
        return self.q11 + self.q22 + self.q33


@dataclass(frozen=True)
class EigenDecomp:
    eigenvalues: np.ndarray  # (3,) descending
    eigenvectors: np.ndarray  # (3, 3), column k belongs to eigenvalues[k]


def make_traceless(q11, q12, q13, q22, q23) -> QTensor:
    vals = np.array([q11, q12, q13, q22, q23], dtype=float)
    if not np.all(np.isfinite(vals)):
        raise InvalidArgument("QTensor components must be finite")
    q11, q12, q13, q22, q23 = (float(x) for x in vals)
    return QTensor(q11, q12, q13, q22, q23, -(q11 + q22), traceless=True)


def uniaxial(s: float, n) -> QTensor:
    """``s (n n^T - I/3)`` for a unit director ``n``."""
    n = np.asarray(n, dtype=float)
    if n.shape != (3,) or abs(np.linalg.norm(n) - 1.0) > 1e-12:
        raise InvalidArgument("director must be a unit 3-vector")
    m = s * (np.outer(n, n) - I3 / 3.0)
    q = QTensor.from_matrix(m, traceless=True)
    # pin q33 so the stored trace is zero to rounding of one subtraction
    return QTensor(q.q11, q.q12, q.q13, q.q22, q.q23, -(q.q11 + q.q22), True)


def as_array(Q) -> np.ndarray:
    return np.asarray(Q, dtype=float)


def tr2(Q):
    Q = as_array(Q)
    return np.einsum("...ij,...ij->...", Q, Q)


def tr3(Q):
    Q = as_array(Q)
    # three-operand einsum is an unoptimised loop; matmul first
    return np.einsum("...ij,...ji->...", Q @ Q, Q)


def norm(Q):
    return np.sqrt(tr2(Q))


def contract22(P, R):
    P, R = as_array(P), as_array(R)
    return np.einsum("...ij,...ij->...", P, R)


def contract_right(A, P):
    """``A:P``, the tensor with entries ``A_ijkl P_kl``."""
    return np.einsum("...ijkl,...kl->...ij", as_array(A), as_array(P))


def contract_quad(P, A):
    """Return ``(P:A, P:A:P)`` where ``(P:A)_kl = P_ij A_ijkl``."""
    P, A = as_array(P), as_array(A)
    PA = np.einsum("...ij,...ijkl->...kl", P, A)
    return PA, np.einsum("...kl,...kl->...", PA, P)


def frobenius4(A):
    A = as_array(A)
    return np.sqrt(np.einsum("...ijkl,...ijkl->...", A, A))


def identity4() -> np.ndarray:
    """delta_ik delta_jl."""
    return np.einsum("ik,jl->ijkl", I3, I3)


# Lower triangular rearrangement.  Each nonzero entry (i,j,k,l) of A^LT is a
# sum of entries of A, listed here block by block (block ij, row k, column l)
# exactly as tabulated for the decoupled scheme.
_LT_TABLE = {
    "1111": ["1111"],
    "1211": ["1211", "1112"],
    "1221": ["1212", "1221"],
    "2111": ["2111", "1121"],
    "2121": ["2121", "2112"],
    "1311": ["1311", "1113"],
    "1321": ["1312", "1321", "1213", "1231"],
    "1331": ["1313", "1331"],
    "3111": ["3111", "1131"],
    "3121": ["3112", "3121", "2113", "2131"],
    "3131": ["3113", "3131"],
    "2211": ["2211", "1122"],
    "2221": ["2212", "2221", "1222", "2122"],
    "2222": ["2222"],
    "2231": ["2213", "2231", "1322", "3122"],
    "2311": ["2311", "1123"],
    "2321": ["2312", "2321", "1223", "1232"],
    "2322": ["2322", "2223"],
    "2331": ["2313", "2331", "1323", "1332"],
    "2332": ["2323", "2332"],
    "3211": ["3211", "1132"],
    "3221": ["3212", "3221", "2123", "2132"],
    "3222": ["3222", "2232"],
    "3231": ["3213", "3231", "3123", "3132"],
    "3232": ["3223", "3232"],
    "3311": ["3311", "1133"],
    "3321": ["3312", "3321", "1233", "2133"],
    "3322": ["3322", "2233"],
    "3331": ["3313", "3331", "1333", "3133"],
    "3332": ["3323", "3332", "2333", "3233"],
    "3333": ["3333"],
}


def _idx(code: str):
    return tuple(int(c) - 1 for c in code)


_LT_TARGETS = [_idx(k) for k in _LT_TABLE]
_LT_SOURCES = [[_idx(c) for c in v] for v in _LT_TABLE.values()]


def lower_triangular(A) -> np.ndarray:
    """Lower triangular approximation ``A^LT`` with ``Q:A:Q = Q:A^LT:Q``."""
    A = as_array(A)
    out = np.zeros_like(A)
    for tgt, srcs in zip(_LT_TARGETS, _LT_SOURCES):
        acc = A[(Ellipsis,) + srcs[0]].copy()
        for s in srcs[1:]:
            acc += A[(Ellipsis,) + s]
        out[(Ellipsis,) + tgt] = acc
    return out


# Orthonormal basis of the traceless symmetric matrices, ordered like
# COMPONENTS: Gram-Schmidt applied to e11-e33, e12, e22-e33, e13, e23.
_r2, _r6 = np.sqrt(2.0), np.sqrt(6.0)
BASIS = np.zeros((5, 3, 3))
BASIS[0] = np.diag([1.0, 0.0, -1.0]) / _r2
BASIS[1][0, 1] = BASIS[1][1, 0] = 1.0 / _r2
BASIS[2] = np.diag([-1.0, 2.0, -1.0]) / _r6
BASIS[3][0, 2] = BASIS[3][2, 0] = 1.0 / _r2
BASIS[4][1, 2] = BASIS[4][2, 1] = 1.0 / _r2


def to_coeffs(Q) -> np.ndarray:
    """Coordinates of the traceless part of ``Q`` in ``BASIS`` (trailing 5)."""
    return np.einsum("aij,...ij->...a", BASIS, as_array(Q))


def from_coeffs(v) -> np.ndarray:
    return np.einsum("...a,aij->...ij", np.asarray(v, dtype=float), BASIS)


def reduce4(A) -> np.ndarray:
    """5x5 matrix ``C_ab = F_a : A : F_b`` of ``A`` on the traceless space."""
    return np.einsum("aij,...ijkl,bkl->...ab", BASIS, as_array(A), BASIS)


def lower_triangular_reduced(C) -> np.ndarray:
    """Fold a 5x5 coupling into lower triangular form, keeping ``v.C.v``."""
    C = np.asarray(C, dtype=float)
    n = C.shape[-1]
    strict = np.tri(n, k=-1, dtype=bool)
    return np.where(strict, C + np.swapaxes(C, -1, -2), np.where(np.eye(n, dtype=bool), C, 0.0))


def _jacobi(a: np.ndarray, tol: float, max_sweeps: int):
    a = a.copy()
    v = np.eye(3)
    for _ in range(max_sweeps):
        off = np.sqrt(2.0 * (a[0, 1] ** 2 + a[0, 2] ** 2 + a[1, 2] ** 2))
        if off <= tol:
            break
        for p, q in ((0, 1), (0, 2), (1, 2)):
            apq = a[p, q]
            if apq == 0.0:
                continue
            h = a[q, q] - a[p, p]
            if abs(h) + 100.0 * abs(apq) == abs(h):
                t = apq / h  # theta would overflow; t ~ 1/(2 theta)
            else:
                theta = h / (2.0 * apq)
                t = np.copysign(1.0, theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            rot = np.eye(3)
            rot[p, p] = rot[q, q] = c
            rot[p, q] = s
            rot[q, p] = -s
            a = rot.T @ a @ rot
            v = v @ rot
    return np.diag(a).copy(), v


def eig_sym3(Q, tol: float = 1e-13, max_sweeps: int = 50) -> EigenDecomp:
    """Cyclic Jacobi eigendecomposition, eigenvalues sorted descending."""
    a = as_array(Q)
    if a.shape != (3, 3):
        raise InvalidArgument("eig_sym3 expects a single 3x3 tensor")
    a = 0.5 * (a + a.T)
    scale = max(1.0, float(np.abs(a).max()))
    lam, vec = _jacobi(a, tol * scale, max_sweeps)
    order = np.argsort(-lam, kind="stable")
    return EigenDecomp(lam[order], vec[:, order])
