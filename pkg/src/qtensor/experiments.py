"""Initial data, the time loop and the experiment protocols."""

from __future__ import annotations

import csv
import json
import logging
import os
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import diagnostics as dg
from .config import RunConfig
from .errors import SolverError
from .fem import P1Space, TensorField, h1_norm, l2_norm
from .mesh import Mesh, box_mesh, rect_mesh
from .schemes import BoundaryCondition, SchemeConfig, Stepper, apply_dirichlet
from .tensor_core import I3, uniaxial

log = logging.getLogger(__name__)

CSV_HEADER = ["step", "t", "energy", "modified_energy", "nd_residual", "nd_direct", "trace_norm", "max_q"]
EOC_COMPONENTS = ("11", "12", "13", "22", "23")
_COMP_IDX = {"11": (0, 0), "12": (0, 1), "13": (0, 2), "22": (1, 1), "23": (1, 2)}


# -- initial data -------------------------------------------------------------


def _director_field(d: np.ndarray) -> np.ndarray:
    """d d^T / |d|^2 - I/3 with the trace pinned to zero."""
    d = d / np.linalg.norm(d, axis=1, keepdims=True)
    Q = np.einsum("ni,nj->nij", d, d) - I3 / 3.0
    Q[:, 2, 2] = -(Q[:, 0, 0] + Q[:, 1, 1])
    return Q


def init_eoc(mesh: Mesh) -> TensorField:
    x, y = mesh.nodes[:, 0], mesh.nodes[:, 1]
    Q = np.zeros((mesh.n_nodes, 3, 3))
    for k in (1, 2):
        for l in range(k, 4):
            Q[:, k - 1, l - 1] = Q[:, l - 1, k - 1] = 0.5 * np.sin(k * np.pi * x) * np.cos(np.pi * (l * y - 0.5))
    Q[:, 2, 2] = -(Q[:, 0, 0] + Q[:, 1, 1])
    return TensorField(Q)


def init_defects(mesh: Mesh) -> TensorField:
    x, y = mesh.nodes[:, 0], mesh.nodes[:, 1]
    cx, cy = mesh.extents[0] / 2.0, mesh.extents[1] / 2.0
    theta = np.arctan2(x - cx, y - cy)
    d = np.column_stack([np.cos(4 * theta), np.sin(4 * theta), np.zeros_like(x)])
    center = (x == cx) & (y == cy)
    d[center] = (1.0, 0.0, 0.0)
    return TensorField(_director_field(d))


def init_random3d(mesh: Mesh, seed: int) -> TensorField:
    """Uniform directions from rejection sampling of the cube [-1, 1]^3."""
    rng = np.random.default_rng(seed)
    n = mesh.n_nodes
    d = np.empty((0, 3))
    while len(d) < n:
        cand = rng.uniform(-1.0, 1.0, size=(2 * (n - len(d)) + 16, 3))
        r = np.linalg.norm(cand, axis=1)
        d = np.vstack([d, cand[(r <= 1.0) & (r > 1e-3)]])
    return TensorField(_director_field(d[:n]))


def init_uniaxial(mesh: Mesh, s: float, director) -> TensorField:
    q = np.asarray(uniaxial(s, np.asarray(director, dtype=float) / np.linalg.norm(director)))
    return TensorField(np.broadcast_to(q, (mesh.n_nodes, 3, 3)).copy())


def make_mesh(cfg: RunConfig) -> Mesh:
    if len(cfg.mesh) == 2:
        return rect_mesh(*cfg.extents, *cfg.mesh)
    return box_mesh(*cfg.extents, *cfg.mesh)


def initial_field(cfg: RunConfig, mesh: Mesh) -> TensorField:
    if cfg.init == "eoc":
        return init_eoc(mesh)
    if cfg.init == "defects":
        return init_defects(mesh)
    if cfg.init == "random":
        return init_random3d(mesh, cfg.seed)
    if cfg.init == "uniaxial":
        return init_uniaxial(mesh, cfg.init_s, cfg.init_director)
    return TensorField(np.zeros((mesh.n_nodes, 3, 3)))


# -- time loop ----------------------------------------------------------------


@dataclass
class SimResult:
    final: TensorField
    records: list = field(default_factory=list)
    reports: list = field(default_factory=list)
    step_time: float = 0.0


def record_for(space, Q1, Q0, cfg: SchemeConfig, step: int, prev=None) -> dg.EnergyRecord:
    p = cfg.params
    E = dg.energy(space, Q1, p)
    Eh = dg.energy(space, Q1, p, truncated=True)
    if prev is None:
        nd = nd_dir = 0.0
    else:
        pair = (Eh, prev.E_hat) if cfg.scheme_id == "ues1d" else (E, prev.E)
        nd, nd_dir = dg.numerical_dissipation(space, Q1, Q0, p, cfg.dt, cfg.scheme_id, energies=pair)
    return dg.EnergyRecord(
        step=step,
        t=step * cfg.dt,
        E=E,
        E_hat=Eh,
        nd=nd,
        nd_direct=nd_dir,
        trace_norm=Q1.trace_norm(),
        max_q=dg.max_principle_monitor(Q1, p.alpha)[0],
        dt=cfg.dt,
    )


def simulate(
    space: P1Space,
    cfg: SchemeConfig,
    Q0: TensorField,
    n_steps: int,
    diagnostics: bool = True,
    on_step=None,
) -> SimResult:
    """Advance ``Q0`` by ``n_steps`` steps.

    ``on_step(n, Q, report, record)`` is called after the initial state
    (``n = 0``, no report) and after every step.
    """
    stepper = Stepper(space, cfg)
    Q = apply_dirichlet(Q0, cfg.bc, space.mesh)
    res = SimResult(Q)
    rec = record_for(space, Q, Q, cfg, 0) if diagnostics else None
    if rec is not None:
        res.records.append(rec)
    if on_step:
        on_step(0, Q, None, rec)
    for n in range(1, n_steps + 1):
        Q1, rep = stepper.step(Q)
        res.step_time += rep.wall_time
        res.reports.append(rep)
        if diagnostics:
            rec = record_for(space, Q1, Q, cfg, n, rec)
            res.records.append(rec)
        if on_step:
            on_step(n, Q1, rep, rec)
        Q = Q1
    res.final = Q
    return res


# -- output -------------------------------------------------------------------


@dataclass
class RunOutput:
    directory: str
    energy_csv: str | None = None
    vtk: list = field(default_factory=list)
    eoc_csv: str | None = None
    step_log: str | None = None
    figures: list = field(default_factory=list)
    eoc_table: dg.EocTable | None = None
    results: dict = field(default_factory=dict)


def scheme_config(cfg: RunConfig, dt: float | None = None) -> SchemeConfig:
    return SchemeConfig(
        cfg.scheme,
        cfg.dt if dt is None else dt,
        cfg.params,
        BoundaryCondition(cfg.bc),
        tol=cfg.tol,
        max_iter=cfg.max_iter,
    )


def _fmt(x) -> str:
    return repr(float(x)) if not isinstance(x, (int, np.integer)) else str(x)


def _run_one(cfg: RunConfig, space: P1Space, Q0: TensorField, directory: str, dt: float | None = None):
    """One time loop writing energy.csv, steps.jsonl and VTK snapshots."""
    from .vtk import write_vtk

    os.makedirs(directory, exist_ok=True)
    scfg = scheme_config(cfg, dt)
    n_steps = int(round(cfg.tmax / scfg.dt))
    csv_path = os.path.join(directory, "energy.csv")
    log_path = os.path.join(directory, "steps.jsonl")
    vtk_paths: list = []
    with open(csv_path, "w", newline="") as fh, open(log_path, "w") as lh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)

        def on_step(n, Q, rep, rec):
            writer.writerow([_fmt(v) for v in rec.row()])
            if rep is not None:
                lh.write(json.dumps({"step": n, **asdict(rep)}, default=float) + "\n")
            if n % cfg.snapshot_every == 0 or n == n_steps:
                path = os.path.join(directory, f"q_{n:06d}.vtk")
                write_vtk(space.mesh, Q.values, path)
                vtk_paths.append(path)

        try:
            res = simulate(space, scfg, Q0, n_steps, on_step=on_step)
        except SolverError as err:
            with open(os.path.join(directory, "FAILED"), "w") as fail:
                fail.write(f"{err}\n")
            raise
    return res, csv_path, log_path, vtk_paths


def component_errors(space: P1Space, ref: np.ndarray, q: np.ndarray):
    e = ref - q
    e2 = [l2_norm(space, e[:, i, j]) for i, j in (_COMP_IDX[c] for c in EOC_COMPONENTS)]
    e1 = [h1_norm(space, e[:, i, j]) for i, j in (_COMP_IDX[c] for c in EOC_COMPONENTS)]
    return e2, e1


def eoc_study(cfg: RunConfig, space: P1Space | None = None, diagnostics: bool = False):
    """Errors at t = tmax against a fine-step reference of the same scheme."""
    mesh = space.mesh if space is not None else make_mesh(cfg)
    space = space or P1Space(mesh)
    Q0 = initial_field(cfg, mesh)
    n_ref = int(round(cfg.tmax / cfg.eoc_dt_ref))
    ref = simulate(space, scheme_config(cfg, cfg.eoc_dt_ref), Q0, n_ref, diagnostics=False).final
    table = dg.EocTable(EOC_COMPONENTS)
    finals = {}
    for dt in cfg.eoc_dts:
        run = simulate(space, scheme_config(cfg, dt), Q0, int(round(cfg.tmax / dt)), diagnostics=diagnostics)
        table.add(dt, *component_errors(space, ref.values, run.final.values))
        finals[dt] = run
    return table, ref, finals


def write_eoc_csv(table: dg.EocTable, path: str) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(table.header())
        for row in table.rows():
            w.writerow([_fmt(v) for v in row])


def run_experiment(cfg: RunConfig) -> RunOutput:
    """Execute ``cfg`` and write its CSV, VTK and figure outputs."""
    from . import report

    out = RunOutput(cfg.out)
    os.makedirs(cfg.out, exist_ok=True)
    mesh = make_mesh(cfg)
    space = P1Space(mesh)
    if cfg.experiment == "eoc":
        table, ref, finals = eoc_study(cfg, space)
        out.eoc_table = table
        out.eoc_csv = os.path.join(cfg.out, "eoc.csv")
        write_eoc_csv(table, out.eoc_csv)
        from .vtk import write_vtk

        ref_path = os.path.join(cfg.out, "reference.vtk")
        write_vtk(mesh, ref.values, ref_path)
        out.vtk.append(ref_path)
        if cfg.figures:
            out.figures.append(report.plot_eoc(table, os.path.join(cfg.out, "eoc.png"), cfg.scheme))
        # the finest run is also written as a regular time series
        finest = replace(cfg, experiment="custom")
        res, csv_path, log_path, vtks = _run_one(finest, space, initial_field(cfg, mesh), cfg.out, cfg.eoc_dts[-1])
    else:
        res, csv_path, log_path, vtks = _run_one(cfg, space, initial_field(cfg, mesh), cfg.out)
    out.energy_csv, out.step_log = csv_path, log_path
    out.vtk += vtks
    out.results["sim"] = res
    if cfg.figures:
        out.figures += report.plot_energy(res.records, cfg.out, cfg.scheme)
    return out
