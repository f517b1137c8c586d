"""Energies, numerical dissipation, convergence rates and defect fields."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import potential as pot
from .errors import InvalidArgument
from .fem import P1Space, TensorField, frobenius_field
from .tensor_core import contract22


def _values(Q) -> np.ndarray:
    return Q.values if isinstance(Q, TensorField) else np.asarray(Q, dtype=float)


@dataclass
class EnergyRecord:
    step: int
    t: float
    E: float
    E_hat: float
    nd: float
    nd_direct: float
    trace_norm: float
    max_q: float
    dt: float

    def row(self) -> list:
        return [self.step, self.t, self.E, self.E_hat, self.nd, self.nd_direct, self.trace_norm, self.max_q]


def elastic_energy(space: P1Space, Q) -> float:
    c = _values(Q).reshape(space.n, 9)
    return 0.5 * float(np.einsum("ic,ic->", c, space.K @ c))


def energy(space: P1Space, Q, params: pot.PotentialParams, truncated: bool = False) -> float:
    """int 1/2 |grad Q|^2 + Psi(Q)/eps, with Psi swapped for its truncation on request."""
    Qq = space.at_qp(_values(Q))
    density = pot.psi_hat_value(Qq, params) if truncated else pot.psi_value(Qq, params)
    return elastic_energy(space, Q) + space.integrate_qp(density) / params.epsilon


def mass_norm_sq(space: P1Space, dQ: np.ndarray) -> float:
    c = dQ.reshape(space.n, 9)
    return float(np.einsum("ic,ic->", c, space.M @ c))


def numerical_dissipation(
    space: P1Space,
    Q1,
    Q0,
    params: pot.PotentialParams,
    dt: float,
    scheme_id: str,
    energies: tuple[float, float] | None = None,
) -> tuple[float, float]:
    """Return ``(nd_residual, nd_direct)`` for one step ``Q0 -> Q1``.

    The residual form closes the discrete energy law; the direct form
    integrates the defect of the scheme's linearised bulk term.  ``energies``
    may pass precomputed ``(E(Q1), E(Q0))`` in the energy the scheme is
    stable for (truncated for UES1D).
    """
    q0, q1 = _values(Q0), _values(Q1)
    truncated = scheme_id == "ues1d"
    if energies is None:
        energies = (energy(space, q1, params, truncated), energy(space, q0, params, truncated))
    dQ = q1 - q0
    nd_res = -(energies[0] - energies[1]) / dt - mass_norm_sq(space, dQ) / (params.gamma * dt * dt)

    a, b = space.at_qp(q0), space.at_qp(q1)
    d = b - a
    p = params
    if truncated:
        lin = (
            pot.psi1_hat_grad(a, p)
            + pot.psi3_hat_grad(a, p)
            + 0.5 * (p.S1 + p.S3) * d
            + (p.A + p.C * p.alpha**2) * 0.5 * (a + b)
        )
        work = contract22(lin, d)
        jump = pot.psi_hat_value(b, p) - pot.psi_hat_value(a, p)
    else:
        # the trace penalty and its derivative pair with tr(d) only, which vanishes
        g = pot.psi_grad(a, p) + pot.trace_penalty(a, p)
        work = contract22(g, d) + 0.5 * pot.hessian_quadratic(a, d, p)
        jump = pot.psi_value(b, p) - pot.psi_value(a, p)
    nd_dir = space.integrate_qp(work - jump) / (p.epsilon * dt)
    return float(nd_res), float(nd_dir)


def eoc(errors, dts) -> list[float]:
    e = np.asarray(errors, dtype=float)
    h = np.asarray(dts, dtype=float)
    if e.shape != h.shape or e.ndim != 1 or len(e) < 2:
        raise InvalidArgument("need matching error and step lists of length >= 2")
    if np.any(e <= 0) or np.any(h <= 0):
        raise InvalidArgument("errors and step sizes must be positive")
    return [math.log(e[i] / e[i + 1]) / math.log(h[i] / h[i + 1]) for i in range(len(e) - 1)]


@dataclass
class EocTable:
    components: tuple
    dts: list = field(default_factory=list)
    e2: list = field(default_factory=list)  # one array of per-component errors per dt
    e1: list = field(default_factory=list)

    def add(self, dt: float, e2, e1):
        self.dts.append(float(dt))
        self.e2.append(np.asarray(e2, dtype=float))
        self.e1.append(np.asarray(e1, dtype=float))

    def rates(self, norm: str = "l2") -> np.ndarray:
        errs = np.array(self.e2 if norm == "l2" else self.e1)
        return np.array([eoc(errs[:, c], self.dts) for c in range(errs.shape[1])]).T

    def rows(self) -> list[list]:
        r2, r1 = self.rates("l2"), self.rates("h1")
        out = []
        for i, dt in enumerate(self.dts):
            row = [dt]
            for c in range(len(self.components)):
                row += [self.e2[i][c], r2[i - 1][c] if i else float("nan")]
            for c in range(len(self.components)):
                row += [self.e1[i][c], r1[i - 1][c] if i else float("nan")]
            out.append(row)
        return out

    def header(self) -> list[str]:
        cols = ["dt"]
        for tag in ("e2", "e1"):
            rate = "r2" if tag == "e2" else "r1"
            for c in self.components:
                cols += [f"{tag}_{c}", f"{rate}_{c}"]
        return cols


def eigen_field(Q) -> tuple[np.ndarray, np.ndarray]:
    """Per-node eigenvalues (descending) and eigenvectors (columns)."""
    lam, vec = np.linalg.eigh(_values(Q))
    return lam[:, ::-1], vec[:, :, ::-1]


def defect_field(Q) -> tuple[np.ndarray, np.ndarray]:
    """(lambda_1 - lambda_2, leading eigenvector) at every node."""
    lam, vec = eigen_field(Q)
    return np.maximum(lam[:, 0] - lam[:, 1], 0.0), vec[:, :, 0]


def max_principle_monitor(Q, alpha: float) -> tuple[float, bool]:
    m = float(frobenius_field(_values(Q)).max(initial=0.0))
    return m, m > alpha * (1.0 + 1e-8)
