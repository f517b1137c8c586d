"""Command line entry point ``qtensor``."""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from .config import EXPERIMENTS, build_config, read_config_file
from .errors import InvalidArgument, SolverError
from .schemes import SCHEMES


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qtensor", description="Q-tensor gradient flow solver")
    ap.add_argument("experiment", choices=EXPERIMENTS)
    ap.add_argument("--config", metavar="PATH", help="key = value config file")
    ap.add_argument("--scheme", choices=SCHEMES)
    ap.add_argument("--dt", type=float)
    ap.add_argument("--tmax", type=float)
    ap.add_argument("--mesh", type=int, nargs="+", metavar="N", help="NX NY [NZ]")
    ap.add_argument("--bc", choices=("neumann", "dirichlet-uniform", "dirichlet-radial"))
    ap.add_argument("--seed", type=int)
    ap.add_argument("--out", metavar="DIR")
    ap.add_argument("--strict-stability", action="store_true", default=None)
    ap.add_argument("--paper-scale", action="store_true", default=None)
    ap.add_argument("--no-figures", dest="figures", action="store_false", default=None)
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def _summary(out, cfg) -> list[str]:
    lines = [f"experiment,{cfg.experiment}", f"scheme,{cfg.scheme}", f"out,{out.directory}"]
    sim = out.results.get("sim")
    if sim is not None and sim.records:
        last = sim.records[-1]
        nd = np.array([r.nd for r in sim.records[1:]])
        lines += [
            f"steps,{last.step}",
            f"t_final,{last.t!r}",
            f"energy_final,{last.E!r}",
            f"modified_energy_final,{last.E_hat!r}",
            f"nd_min,{float(nd.min() if nd.size else 0.0)!r}",
            f"trace_norm_max,{max(r.trace_norm for r in sim.records)!r}",
            f"step_time_total,{sim.step_time!r}",
        ]
    if out.eoc_table is not None:
        t = out.eoc_table
        lines.append(",".join(t.header()))
        lines += [",".join(repr(float(v)) for v in row) for row in t.rows()]
    lines += [f"file,{p}" for p in [out.energy_csv, out.eoc_csv, out.step_log, *out.vtk, *out.figures] if p]
    return lines


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        file_values = read_config_file(args.config) if args.config else {}
        overrides = {
            "scheme": args.scheme,
            "dt": args.dt,
            "tmax": args.tmax,
            "bc": args.bc,
            "seed": args.seed,
            "out": args.out,
            "strict_stability": args.strict_stability,
            "paper_scale": args.paper_scale,
            "figures": args.figures,
        }
        if args.mesh is not None:
            if len(args.mesh) not in (2, 3):
                raise InvalidArgument("--mesh takes NX NY or NX NY NZ")
            overrides["mesh"] = tuple(args.mesh)
        cfg = build_config(args.experiment, file_values, overrides)
        if args.mesh is not None and len(cfg.extents) != len(cfg.mesh):
            raise InvalidArgument("--mesh dimension does not match the experiment")
        from .experiments import run_experiment

        out = run_experiment(cfg)
    except (InvalidArgument, OSError) as err:
        print(f"qtensor: error: {err}", file=sys.stderr)
        return 2
    except SolverError as err:
        print(f"qtensor: solver failed: {err}", file=sys.stderr)
        return 3
    print("---")
    print("\n".join(_summary(out, cfg)))
    print("---")
    return 0


if __name__ == "__main__":
    sys.exit(main())
