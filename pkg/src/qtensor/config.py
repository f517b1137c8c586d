"""Run configuration: experiment presets, ``key = value`` files and overrides.

A config file is read with :mod:`configparser`.  Recognised sections and
keys (all optional)::

    [run]     experiment scheme dt tmax snapshot_every seed bc out strict_stability paper_scale
    [mesh]    nx ny nz lx ly lz
    [params]  A B C epsilon gamma alpha alpha1 alpha2 S1 S3 psi3_tail_coeff
    [solver]  tol max_iter
    [eoc]     dts dt_ref
    [custom]  init s director

Command line flags override file values, which override the preset.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, replace

from .errors import InvalidArgument
from .potential import PotentialParams, stability_bounds
from .schemes import BC_KINDS, SCHEMES

EXPERIMENTS = ("eoc", "defects2d", "random3d", "custom")
INITS = ("eoc", "defects", "random", "uniaxial", "zero")


@dataclass(frozen=True)
class RunConfig:
    experiment: str = "custom"
    scheme: str = "od1d"
    dt: float = 1e-4
    tmax: float = 1e-2
    mesh: tuple = (50, 50)
    extents: tuple = (1.0, 1.0)
    bc: str = "neumann"
    params: PotentialParams = field(default_factory=PotentialParams)
    seed: int = 0
    out: str = "qtensor-out"
    snapshot_every: int = 100
    strict_stability: bool = False
    paper_scale: bool = False
    tol: float = 1e-10
    max_iter: int = 10_000
    eoc_dts: tuple = ()
    eoc_dt_ref: float = 1e-7
    init: str = "zero"
    init_s: float = 1.0
    init_director: tuple = (0.0, 0.0, 1.0)
    figures: bool = True

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise InvalidArgument(f"unknown experiment {self.experiment!r}")
        if self.scheme not in SCHEMES:
            raise InvalidArgument(f"unknown scheme {self.scheme!r}")
        if self.bc not in BC_KINDS[:3]:
            raise InvalidArgument(f"unknown boundary condition {self.bc!r}")
        if not self.dt > 0:
            raise InvalidArgument("dt must be positive")
        if self.tmax < 0:
            raise InvalidArgument("tmax must be non-negative")
        if self.snapshot_every < 1:
            raise InvalidArgument("snapshot cadence must be at least 1")
        if len(self.mesh) != len(self.extents) or len(self.mesh) not in (2, 3):
            raise InvalidArgument("mesh counts and extents must both have 2 or 3 entries")
        if self.init not in INITS:
            raise InvalidArgument(f"unknown initial condition {self.init!r}")

    @property
    def n_steps(self) -> int:
        return int(round(self.tmax / self.dt))


def preset(experiment: str, paper_scale: bool = False) -> dict:
    """Defaults of each experiment, before file and flag overrides."""
    if experiment == "eoc":
        n = 100 if paper_scale else 50
        return dict(
            mesh=(n, n),
            extents=(2.0, 2.0),
            tmax=1e-4,
            dt=1e-5,
            eoc_dts=tuple(1e-5 / k for k in range(1, 6)),
            eoc_dt_ref=1e-7,
            params=dict(epsilon=1e-2),
            init="eoc",
        )
    if experiment == "defects2d":
        return dict(mesh=(50, 50), extents=(4.0, 4.0), tmax=1.0, dt=1e-4, params=dict(epsilon=1e-3), init="defects")
    if experiment == "random3d":
        n = 50 if paper_scale else 16
        return dict(
            mesh=(n, n, n), extents=(2.0, 2.0, 2.0), tmax=0.2, dt=1e-4, params=dict(epsilon=1.0), init="random"
        )
    if experiment == "custom":
        return dict(params={})
    raise InvalidArgument(f"unknown experiment {experiment!r}")


_PARAM_KEYS = ("A", "B", "C", "epsilon", "gamma", "alpha", "alpha1", "alpha2", "S1", "S3", "psi3_tail_coeff")


def _floats(text: str) -> tuple:
    return tuple(float(x) for x in text.replace(",", " ").split())


def read_config_file(path) -> dict:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    with open(path) as fh:
        cp.read_file(fh)
    out: dict = {"params": {}}
    run = cp["run"] if cp.has_section("run") else {}
    for key in ("experiment", "scheme", "bc", "out"):
        if key in run:
            out[key] = run[key].strip().lower() if key != "out" else run[key].strip()
    for key in ("dt", "tmax"):
        if key in run:
            out[key] = float(run[key])
    for key in ("snapshot_every", "seed"):
        if key in run:
            out[key] = int(run[key])
    for key in ("strict_stability", "paper_scale", "figures"):
        if key in run:
            out[key] = cp.getboolean("run", key)
    if cp.has_section("mesh"):
        m = cp["mesh"]
        counts = [int(m[k]) for k in ("nx", "ny", "nz") if k in m]
        lengths = [float(m[k]) for k in ("lx", "ly", "lz") if k in m]
        if counts:
            out["mesh"] = tuple(counts)
        if lengths:
            out["extents"] = tuple(lengths)
    if cp.has_section("params"):
        for key, val in cp["params"].items():
            if key not in _PARAM_KEYS:
                raise InvalidArgument(f"unknown parameter {key!r} in [params]")
            out["params"][key] = float(val)
    if cp.has_section("solver"):
        s = cp["solver"]
        if "tol" in s:
            out["tol"] = float(s["tol"])
        if "max_iter" in s:
            out["max_iter"] = int(s["max_iter"])
    if cp.has_section("eoc"):
        e = cp["eoc"]
        if "dts" in e:
            out["eoc_dts"] = _floats(e["dts"])
        if "dt_ref" in e:
            out["eoc_dt_ref"] = float(e["dt_ref"])
    if cp.has_section("custom"):
        c = cp["custom"]
        if "init" in c:
            out["init"] = c["init"].strip().lower()
        if "s" in c:
            out["init_s"] = float(c["s"])
        if "director" in c:
            out["init_director"] = _floats(c["director"])
    return out


def build_config(experiment: str, file_values: dict | None = None, overrides: dict | None = None) -> RunConfig:
    """Merge preset, file values and flag overrides into a RunConfig."""
    file_values = dict(file_values or {})
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    paper_scale = bool(overrides.get("paper_scale", file_values.get("paper_scale", False)))
    merged = preset(experiment, paper_scale)
    params = dict(merged.pop("params"))
    params.update(file_values.pop("params", {}))
    params.update(overrides.pop("params", {}))
    merged.update(file_values)
    merged.update(overrides)
    merged["experiment"] = experiment
    strict = bool(merged.get("strict_stability", False))
    p = PotentialParams(**params)
    if strict and "S3" not in params:
        p = replace(p, S3=stability_bounds(p)[2])
    if strict and "S1" not in params:
        p = replace(p, S1=12.0 * math.sqrt(3.0) * p.C * p.alpha**2)
    merged["params"] = p
    return RunConfig(**merged)
