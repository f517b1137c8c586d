"""Linear time stepping schemes for the Q-tensor gradient flow.

Every scheme advances the five coordinates of Q in the orthonormal traceless
basis ``tensor_core.BASIS``.  Test functions live in the same space, so the
trace penalty (a multiple of the identity) drops out of the weak forms and
Q stays traceless up to rounding.  Each step solves for the increment
``Q^{n+1} - Q^n``.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from . import potential as pot
from .errors import InvalidArgument
from .fem import P1Space, SparseOperator, TensorField, solve
from .mesh import Mesh
from .tensor_core import BASIS, COMPONENTS, I3, lower_triangular_reduced

log = logging.getLogger(__name__)

SCHEMES = ("ues1d", "od2c", "od1d")
BC_KINDS = ("neumann", "dirichlet-uniform", "dirichlet-radial", "dirichlet-custom")


@dataclass(frozen=True, eq=False)
class BoundaryCondition:
    kind: str = "neumann"
    values: np.ndarray | None = None  # nodal tensors for dirichlet-custom

    def __post_init__(self):
        if self.kind not in BC_KINDS:
            raise InvalidArgument(f"unknown boundary condition {self.kind!r}")
        if self.kind == "dirichlet-custom" and self.values is None:
            raise InvalidArgument("dirichlet-custom needs nodal values")

    @property
    def is_dirichlet(self) -> bool:
        return self.kind != "neumann"

    def boundary_values(self, mesh: Mesh) -> np.ndarray:
        idx = mesh.boundary
        if self.kind == "dirichlet-uniform":
            d = np.array([0.0, 1.0, 0.0])
            return np.broadcast_to(np.outer(d, d) - I3 / 3.0, (len(idx), 3, 3)).copy()
        if self.kind == "dirichlet-radial":
            half = np.asarray(mesh.extents[:2]) / 2.0
            d = np.zeros((len(idx), 3))
            d[:, :2] = (mesh.nodes[idx, :2] - half) / half
            dd = np.einsum("ni,nj->nij", d, d)
            return dd - np.einsum("ni,ni->n", d, d)[:, None, None] * I3 / 3.0
        if self.kind == "dirichlet-custom":
            return np.asarray(self.values, dtype=float)[idx]
        raise InvalidArgument("neumann conditions prescribe no values")


def apply_dirichlet(field_: TensorField, bc: BoundaryCondition, mesh: Mesh) -> TensorField:
    if not bc.is_dirichlet:
        return field_
    out = field_.copy()
    out.values[mesh.boundary] = bc.boundary_values(mesh)
    return out


@dataclass(frozen=True)
class SchemeConfig:
    scheme_id: str
    dt: float
    params: pot.PotentialParams = field(default_factory=pot.PotentialParams)
    bc: BoundaryCondition = field(default_factory=BoundaryCondition)
    tol: float = 1e-10
    max_iter: int = 10_000

    def __post_init__(self):
        if self.scheme_id not in SCHEMES:
            raise InvalidArgument(f"unknown scheme {self.scheme_id!r}")
        if not self.dt > 0:
            raise InvalidArgument("dt must be positive")


@dataclass
class StepReport:
    scheme: str
    iterations: list = field(default_factory=list)
    residuals: list = field(default_factory=list)
    wall_time: float = 0.0
    trace_residual: float = 0.0
    solve_order: tuple = ()
    warnings: list = field(default_factory=list)


def to_coeffs(values: np.ndarray) -> np.ndarray:
    return np.einsum("aij,nij->na", BASIS, values)


def from_coeffs(v: np.ndarray) -> np.ndarray:
    return np.einsum("...a,aij->...ij", v, BASIS)


def project(g: np.ndarray) -> np.ndarray:
    """Components of tensors (..., 3, 3) along the traceless basis."""
    return np.einsum("aij,...ij->...a", BASIS, g)


# T[a, b] = F_a F_b + F_b F_a, so that F_a : (Q F_b + F_b Q) = T[a, b] : Q
_T = np.einsum("aij,bjk->abik", BASIS, BASIS)
_T = (_T + np.swapaxes(_T, 0, 1)).reshape(25, 9)


def coupling(Qq: np.ndarray, p: pot.PotentialParams) -> np.ndarray:
    """Reduced Hessian ``F_a : (grad psi + grad p) : F_b`` at quadrature points.

    Closed form of ``reduce4(psi_hessian + trace_penalty_grad)``; the trace
    penalty contributes nothing because every F_a is traceless.
    """
    lead = Qq.shape[:-2]
    q = Qq.reshape(-1, 9)
    w = q @ BASIS.reshape(5, 9).T
    t2 = np.einsum("ni,ni->n", q, q)
    C = -p.B * (q @ _T.T).reshape(-1, 5, 5)
    C += 2.0 * p.C * w[:, :, None] * w[:, None, :]
    idx = np.arange(5)
    C[:, idx, idx] += (p.A + p.C * t2)[:, None]
    return C.reshape(lead + (5, 5))


def solvability_margin(Qq: np.ndarray, cfg: SchemeConfig) -> float:
    """Left side of the sufficient solvability condition for OD2C/OD1D."""
    p = cfg.params
    h = (
        pot.psi1_hessian_norm(Qq, p).max()
        + pot.psi3_hessian_norm(Qq, p).max()
        + pot.trace_penalty_grad_norm(Qq, p).max()
    )
    return 1.0 / (p.gamma * cfg.dt) + (p.A + p.C * p.alpha**2 - h) / (2.0 * p.epsilon)


class Stepper:
    """Advances nodal Q fields with one of the three schemes."""

    def __init__(self, space: P1Space | Mesh, cfg: SchemeConfig):
        self.space = space if isinstance(space, P1Space) else P1Space(space)
        self.cfg = cfg
        self._warned = False
        mesh = self.space.mesh
        n = mesh.n_nodes
        if cfg.bc.is_dirichlet:
            free = np.ones(n, dtype=bool)
            free[mesh.boundary] = False
        else:
            free = np.ones(n, dtype=bool)
        self.free = np.flatnonzero(free)
        self.free_block = (np.arange(5)[:, None] * n + self.free[None, :]).ravel()
        self._all_free = bool(free.all())
        p = cfg.params
        self.base_local = self.space.mass_local / (p.gamma * cfg.dt) + 0.5 * self.space.stiff_local
        if cfg.scheme_id == "ues1d":
            c = 1.0 / (p.gamma * cfg.dt) + (p.S1 + p.S3 + p.A + p.C * p.alpha**2) / (2.0 * p.epsilon)
            mat = c * self.space.M + 0.5 * self.space.K
            self.ues_op = SparseOperator(self._restrict(mat, self.free), symmetric=True, spd=c > 0)

    def _restrict(self, mat, idx):
        if self._all_free and mat.shape[0] == len(idx):
            return mat
        return mat[idx][:, idx]

    def step(self, Qn: TensorField) -> tuple[TensorField, StepReport]:
        if not Qn.traceless:
            raise InvalidArgument("schemes advance traceless fields only")
        t0 = time.perf_counter()
        report = StepReport(self.cfg.scheme_id)
        v = to_coeffs(Qn.values)
        Qq = self.space.at_qp(Qn.values)
        dv = getattr(self, "_" + self.cfg.scheme_id)(v, Qq, report)
        out = TensorField(from_coeffs(v + dv), traceless=True)
        if self.cfg.bc.is_dirichlet:
            # the basis round trip perturbs the last bit; impose the values exactly
            out.values[self.space.mesh.boundary] = self.cfg.bc.boundary_values(self.space.mesh)
        report.trace_residual = out.trace_norm()
        report.wall_time = time.perf_counter() - t0
        return out, report

    # -- helpers ------------------------------------------------------------

    def _explicit_rhs(self, v: np.ndarray, g: np.ndarray) -> np.ndarray:
        """-K v - (1/eps) (g, phi) for projected bulk terms g (ne, nq, 5)."""
        return -(self.space.K @ v) - self.space.load(g) / self.cfg.params.epsilon

    def _solve(self, op: SparseOperator, rhs: np.ndarray, report: StepReport) -> np.ndarray:
        x, info = solve(op, rhs, tol=self.cfg.tol, max_iter=self.cfg.max_iter)
        report.iterations.append(info.iterations)
        report.residuals.append(info.residual)
        return x

    def _check_solvable(self, Qq, report: StepReport) -> bool:
        margin = solvability_margin(Qq, self.cfg)
        if margin < 0:
            msg = f"dt={self.cfg.dt:g} exceeds the sufficient solvability bound (margin {margin:.3g})"
            report.warnings.append(msg)
            # once per stepper; every step's report still carries the warning
            (log.debug if self._warned else log.warning)(msg)
            self._warned = True
        return margin >= 0

    # -- schemes ------------------------------------------------------------

    def _ues1d(self, v, Qq, report):
        p = self.cfg.params
        g = pot.psi1_hat_grad(Qq, p) + pot.psi3_hat_grad(Qq, p) + (p.A + p.C * p.alpha**2) * Qq
        rhs = self._explicit_rhs(v, project(g))
        dv = np.zeros_like(v)
        for a in range(5):
            dv[self.free, a] = self._solve(self.ues_op, rhs[self.free, a], report)
        report.solve_order = COMPONENTS
        return dv

    def _od2c(self, v, Qq, report):
        p = self.cfg.params
        spd = self._check_solvable(Qq, report)
        C = coupling(Qq, p)
        local = self.space.weighted_local(C) / (2.0 * p.epsilon)
        idx = np.arange(5)
        local[:, idx, idx] += self.base_local[:, None]
        mat = self._restrict(self.space.block_matrix(local), self.free_block)
        rhs = self._explicit_rhs(v, project(pot.psi_grad(Qq, p)))
        x = self._solve(SparseOperator(mat, symmetric=True, spd=spd), rhs.T.ravel()[self.free_block], report)
        full = np.zeros(5 * self.space.n)
        full[self.free_block] = x
        report.solve_order = ("coupled",)
        return full.reshape(5, -1).T

    def _od1d(self, v, Qq, report):
        p = self.cfg.params
        spd = self._check_solvable(Qq, report)
        CL = lower_triangular_reduced(coupling(Qq, p)) / (2.0 * p.epsilon)
        rhs = self._explicit_rhs(v, project(pot.psi_grad(Qq, p)))
        dv = np.zeros_like(v)
        dq = np.zeros(Qq.shape[:2] + (5,))
        for a in range(5):
            local = self.base_local + self.space.weighted_local(CL[..., a, a])
            op = SparseOperator(self._restrict(self.space.scalar_matrix(local), self.free), True, spd)
            b = rhs[:, a]
            if a:
                b = b - self.space.load(np.einsum("eqb,eqb->eq", CL[..., a, :a], dq[..., :a]))
            dv[self.free, a] = self._solve(op, b[self.free], report)
            dq[..., a] = self.space.at_qp(dv[:, a])
        report.solve_order = COMPONENTS
        return dv


def step_ues1d(Qn: TensorField, cfg: SchemeConfig, space: P1Space | Mesh):
    return Stepper(space, _as(cfg, "ues1d")).step(Qn)


def step_od2c(Qn: TensorField, cfg: SchemeConfig, space: P1Space | Mesh):
    return Stepper(space, _as(cfg, "od2c")).step(Qn)


def step_od1d(Qn: TensorField, cfg: SchemeConfig, space: P1Space | Mesh):
    return Stepper(space, _as(cfg, "od1d")).step(Qn)


def _as(cfg: SchemeConfig, scheme: str) -> SchemeConfig:
    if cfg.scheme_id != scheme:
        raise InvalidArgument(f"config is for {cfg.scheme_id}, not {scheme}")
    return cfg
