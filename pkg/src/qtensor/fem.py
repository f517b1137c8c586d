"""P1 finite elements: assembly, quadrature, Krylov solves and norms."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import InvalidArgument, SolverError
from .mesh import Mesh
from .tensor_core import reduce4, tr2

# degree two interior rules in barycentric coordinates, weights sum to one
_A3 = 2.0 / 3.0
_B3 = 1.0 / 6.0
_A4 = 0.5854101966249685
_B4 = 0.1381966011250105
QUADRATURE = {
    2: (
        np.array([[_A3, _B3, _B3], [_B3, _A3, _B3], [_B3, _B3, _A3]]),
        np.full(3, 1.0 / 3.0),
    ),
    3: (
        np.array(
            [
                [_A4, _B4, _B4, _B4],
                [_B4, _A4, _B4, _B4],
                [_B4, _B4, _A4, _B4],
                [_B4, _B4, _B4, _A4],
            ]
        ),
        np.full(4, 0.25),
    ),
}


@dataclass(frozen=True, eq=False)
class SparseOperator:
    matrix: sp.csr_matrix
    symmetric: bool = False
    spd: bool = False

    @property
    def shape(self):
        return self.matrix.shape

    def __matmul__(self, x):
        return self.matrix @ x


@dataclass(eq=False)
class TensorField:
    """Nodal values of a symmetric 3x3 tensor field."""

    values: np.ndarray  # (n_nodes, 3, 3)
    traceless: bool = True

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 3 or self.values.shape[1:] != (3, 3):
            raise InvalidArgument(f"tensor field needs shape (n, 3, 3), got {self.values.shape}")
        if self.traceless and self.trace_norm() > 1e-10 * (1.0 + np.abs(self.values).max(initial=0.0)):
            raise InvalidArgument("field flagged traceless has nonzero trace")

    def trace_norm(self) -> float:
        return float(np.abs(np.trace(self.values, axis1=1, axis2=2)).max(initial=0.0))

    def copy(self) -> "TensorField":
        return TensorField(self.values.copy(), self.traceless)

    def __len__(self):
        return len(self.values)


class _Scatter:
    """Maps element-local matrix entries onto a fixed CSR pattern."""

    def __init__(self, rows: np.ndarray, cols: np.ndarray, n: int):
        key = rows.astype(np.int64) * n + cols
        uniq, pos = np.unique(key, return_inverse=True)
        r, c = np.divmod(uniq, n)
        self.pos = pos
        self.nnz = len(uniq)
        self.indices = c.astype(np.int32)
        self.indptr = np.searchsorted(r, np.arange(n + 1)).astype(np.int32)
        self.n = n

    def build(self, local: np.ndarray) -> sp.csr_matrix:
        data = np.bincount(self.pos, weights=local.ravel(), minlength=self.nnz)
        return sp.csr_matrix((data, self.indices.copy(), self.indptr.copy()), shape=(self.n, self.n))


@dataclass(eq=False)
class P1Space:
    """Precomputed geometry and quadrature for P1 elements on a mesh."""

    mesh: Mesh
    grads: np.ndarray = field(init=False)  # (ne, d+1, d)
    phi: np.ndarray = field(init=False)  # (nq, d+1)
    wq: np.ndarray = field(init=False)  # (ne, nq) physical weights
    mass_local: np.ndarray = field(init=False)
    stiff_local: np.ndarray = field(init=False)

    def __post_init__(self):
        m = self.mesh
        d = m.dim
        x = m.nodes[m.elements]
        jac = np.swapaxes(x[:, 1:, :] - x[:, :1, :], 1, 2)  # columns are edges
        jinv_t = np.swapaxes(np.linalg.inv(jac), 1, 2)
        ref = np.vstack([-np.ones((1, d)), np.eye(d)])  # reference gradients
        self.grads = np.einsum("nd,ekd->enk", ref, jinv_t)
        vol = m.element_volumes
        self.phi, w = QUADRATURE[d]
        self.wq = vol[:, None] * w[None, :]
        self.mass_local = np.einsum("eq,qi,qj->eij", self.wq, self.phi, self.phi)
        self.stiff_local = vol[:, None, None] * np.einsum("eik,ejk->eij", self.grads, self.grads)
        nl = d + 1
        el = m.elements
        self._scalar = _Scatter(np.repeat(el, nl, axis=1).ravel(), np.tile(el, (1, nl)).ravel(), m.n_nodes)
        n = m.n_nodes
        a = np.arange(5)
        rows = a[None, :, None, None, None] * n + el[:, None, None, :, None]
        cols = a[None, None, :, None, None] * n + el[:, None, None, None, :]
        rows, cols = np.broadcast_arrays(rows, cols)
        self._block = _Scatter(rows.ravel(), cols.ravel(), 5 * n)
        # outer products phi_i phi_j at each quadrature point, (nq, nl*nl)
        self._pp = np.einsum("qi,qj->qij", self.phi, self.phi).reshape(len(w), nl * nl)
        # gathers element-local vectors (ne*nl, c) into nodal ones
        self._gather = sp.csr_matrix(
            (np.ones(el.size), (el.ravel(), np.arange(el.size))), shape=(m.n_nodes, el.size)
        )
        self.M = self.scalar_matrix(self.mass_local)
        self.K = self.scalar_matrix(self.stiff_local)

    @property
    def n(self) -> int:
        return self.mesh.n_nodes

    @property
    def n_qp(self) -> int:
        return self.phi.shape[0]

    def scalar_matrix(self, local: np.ndarray) -> sp.csr_matrix:
        return self._scalar.build(local)

    def block_matrix(self, local: np.ndarray) -> sp.csr_matrix:
        """``local`` has shape (ne, 5, 5, d+1, d+1); unknown index a*n + node."""
        return self._block.build(local)

    def at_qp(self, u: np.ndarray) -> np.ndarray:
        """Interpolate nodal values (n, ...) to quadrature points (ne, nq, ...)."""
        u = np.asarray(u, dtype=float)
        ue = u[self.mesh.elements].reshape(self.mesh.n_elements, self.phi.shape[1], -1)
        return np.matmul(self.phi, ue).reshape((self.mesh.n_elements, self.n_qp) + u.shape[1:])

    def load(self, g: np.ndarray) -> np.ndarray:
        """Nodal load vector int g phi_i from quadrature values (ne, nq, ...)."""
        ne, nq = g.shape[:2]
        gw = (g.reshape(ne, nq, -1) * self.wq[:, :, None])
        loc = np.matmul(self.phi.T, gw).reshape(ne * self.phi.shape[1], -1)
        return np.asarray(self._gather @ loc).reshape((self.n,) + g.shape[2:])

    def weighted_local(self, coeff: np.ndarray) -> np.ndarray:
        """Local matrices of int c phi_i phi_j for c given at quadrature points.

        ``coeff`` of shape (ne, nq) gives (ne, d+1, d+1); (ne, nq, 5, 5) gives
        (ne, 5, 5, d+1, d+1).
        """
        ne, nq = coeff.shape[:2]
        nl = self.phi.shape[1]
        if coeff.ndim == 2:
            return ((self.wq * coeff) @ self._pp).reshape(ne, nl, nl)
        cw = (coeff.reshape(ne, nq, 25) * self.wq[:, :, None]).transpose(0, 2, 1)
        return np.matmul(cw, self._pp).reshape(ne, 5, 5, nl, nl)

    def integrate_qp(self, g: np.ndarray) -> float:
        return float(np.einsum("eq,eq->", self.wq, g))


def assemble_mass(mesh: Mesh | P1Space) -> SparseOperator:
    space = mesh if isinstance(mesh, P1Space) else P1Space(mesh)
    return SparseOperator(space.M, symmetric=True, spd=True)


def assemble_stiffness(mesh: Mesh | P1Space) -> SparseOperator:
    space = mesh if isinstance(mesh, P1Space) else P1Space(mesh)
    return SparseOperator(space.K, symmetric=True, spd=False)


def _coeff_at_qp(space: P1Space, coeff, trailing: tuple) -> np.ndarray:
    ne, nq = space.mesh.n_elements, space.n_qp
    c = np.asarray(coeff, dtype=float)
    core = c.shape[c.ndim - len(trailing):] if trailing else ()
    if core != trailing:
        raise InvalidArgument(f"coefficient trailing shape {c.shape} does not end in {trailing}")
    lead = c.shape[: c.ndim - len(trailing)]
    if lead == ():
        c = np.broadcast_to(c, (ne, nq) + trailing)
    elif lead == (ne,):
        c = np.broadcast_to(c[:, None], (ne, nq) + trailing)
    elif lead != (ne, nq):
        raise InvalidArgument(f"coefficient of shape {np.shape(coeff)} does not match the mesh")
    return c


def assemble_weighted(mesh: Mesh | P1Space, coeff) -> SparseOperator:
    """Mass matrix weighted by ``coeff``.

    ``coeff`` may be a scalar, one value per element, or one per quadrature
    point.  Trailing shape () gives a scalar operator, (3, 3, 3, 3) a fourth
    order tensor acting on the five traceless components, and (5, 5) an
    already reduced 5x5 coupling.  Tensor couplings return an operator on
    5 * n_nodes unknowns ordered component-major.
    """
    space = mesh if isinstance(mesh, P1Space) else P1Space(mesh)
    c = np.asarray(coeff, dtype=float)
    if c.shape[-4:] == (3, 3, 3, 3):
        c = reduce4(_coeff_at_qp(space, c, (3, 3, 3, 3)))
    if c.shape[-2:] == (5, 5):
        c = _coeff_at_qp(space, c, (5, 5))
        sym = bool(np.allclose(c, np.swapaxes(c, -1, -2), rtol=0, atol=1e-12 * max(1.0, np.abs(c).max())))
        return SparseOperator(space.block_matrix(space.weighted_local(c)), symmetric=sym)
    c = _coeff_at_qp(space, c, ())
    return SparseOperator(space.scalar_matrix(space.weighted_local(c)), symmetric=True, spd=bool(np.all(c > 0)))


@dataclass
class SolveInfo:
    iterations: int
    residual: float


def solve(A, b, tol: float = 1e-10, max_iter: int = 10_000, x0=None, spd: bool | None = None):
    """Solve ``A x = b`` by preconditioned Krylov iteration.

    Conjugate gradients are used for operators flagged SPD and BiCGStab
    otherwise, both with a Jacobi preconditioner.  The relative residual is
    recomputed afterwards and :class:`SolverError` is raised when it exceeds
    ``tol``.  Returns ``(x, SolveInfo)``.
    """
    if isinstance(A, SparseOperator):
        spd = A.spd if spd is None else spd
        mat = A.matrix
    else:
        mat = sp.csr_matrix(A)
        spd = bool(spd)
    b = np.asarray(b, dtype=float)
    if mat.shape[0] != mat.shape[1] or mat.shape[0] != b.shape[0]:
        raise InvalidArgument(f"operator {mat.shape} does not conform with rhs {b.shape}")
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros_like(b), SolveInfo(0, 0.0)
    diag = mat.diagonal()
    inv = np.where(diag != 0, 1.0 / np.where(diag != 0, diag, 1.0), 1.0)
    precond = spla.LinearOperator(mat.shape, matvec=lambda r: inv * r, dtype=float)
    count = [0]

    def cb(*_):
        count[0] += 1

    method = spla.cg if spd else spla.bicgstab
    # aim a little below tol so the explicit check below rarely trips
    x, _ = method(mat, b, x0=x0, rtol=0.1 * tol, atol=0.0, maxiter=max_iter, M=precond, callback=cb)
    res = float(np.linalg.norm(mat @ x - b) / bnorm)
    if not np.isfinite(res) or res > tol:
        if spd is False or not np.isfinite(res):
            raise SolverError("Krylov solve did not converge", res, count[0])
        # CG can stall on indefinite input, fall back once
        x, _ = spla.bicgstab(mat, b, x0=x, rtol=0.1 * tol, atol=0.0, maxiter=max_iter, M=precond, callback=cb)
        res = float(np.linalg.norm(mat @ x - b) / bnorm)
        if not np.isfinite(res) or res > tol:
            raise SolverError("Krylov solve did not converge", res, count[0])
    return x, SolveInfo(count[0], res)


def _components(u):
    u = np.asarray(u, dtype=float)
    return u.reshape(u.shape[0], -1)


def l2_norm(space: P1Space, u) -> float:
    """Discrete L2 norm; tensor fields use the Frobenius norm pointwise."""
    c = _components(u)
    return float(np.sqrt(max(np.einsum("ic,ic->", c, space.M @ c), 0.0)))


def h1_norm(space: P1Space, u) -> float:
    c = _components(u)
    return float(np.sqrt(max(np.einsum("ic,ic->", c, space.M @ c + space.K @ c), 0.0)))


def integrate(space: P1Space, u) -> float:
    return float(np.sum(space.M @ np.asarray(u, dtype=float)))


def frobenius_field(values: np.ndarray) -> np.ndarray:
    return np.sqrt(tr2(values))
