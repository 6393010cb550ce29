"""Command line entry point: ``snnpde run|sweep|presets``.

Outputs (schema version 1):

* ``<name>.json``: the run report plus a config echo. Timing lives under ``timing``.
* ``<name>_error.csv``: ``x[, y|t], u_exact, u_approx, abs_error`` on the evaluation grid.
* ``<name>_loss.csv`` (with ``--loss-history``): ``epoch, loss, ratio``.
* ``<sweep>.csv``: one row per cell, flushed as each cell finishes.

Set ``SNNPDE_NUM_THREADS`` to cap BLAS and numba threads.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import traceback
from pathlib import Path

import numpy as np

from . import _kernels
from .config import RunConfig, cell_label, load_sweep, presets, resolve_config, sweep_names
from .errors import SNNError
from .network import MlpConfig
from .sampling import collocation_set, quadrature_set
from .solver import SolveReport, error_field, snn_solve
from .training import AdamConfig, TrainConfig

log = logging.getLogger("snnpde")

REPORT_SCHEMA = "snnpde.report/1"
SWEEP_COLUMNS = ("problem", "method", "seed", "status", "rel_l2", "rel_linf", "epochs_used", "stop_reason", "total_s", "error")


def set_threads() -> None:
    n = os.environ.get("SNNPDE_NUM_THREADS")
    if not n:
        return
    n = int(n)
    from threadpoolctl import threadpool_limits

    threadpool_limits(n)
    if _kernels.HAVE_NUMBA:
        import numba

        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


def build_points(cfg: RunConfig, problem):
    if cfg.integral:
        q = cfg.quadrature
        return quadrature_set(problem, q.subintervals, q.points, q.group_subintervals, q.group_points)
    c = cfg.collocation
    return collocation_set(problem, c.grid, c.inclusive, c.per_face, c.group_per_face)


def execute(cfg: RunConfig) -> SolveReport:
    """Run one configuration end to end."""
    problem = cfg.problem.build()
    net = MlpConfig(d=problem.d, hidden_widths=cfg.network.hidden_widths, M=cfg.network.M, seed=cfg.network.seed)
    t = cfg.training
    train_cfg = TrainConfig(
        form="integral" if cfg.integral else "discrete",
        epsilon=t.epsilon,
        n_max=t.n_max,
        include_boundary_loss=t.include_boundary_loss,
        penalty=t.penalty,
        adam=AdamConfig(lr=t.lr),
    )
    return snn_solve(problem, net, train_cfg, build_points(cfg, problem), cfg.method, r_m=cfg.network.r_m)


def report_document(rep: SolveReport, cfg: RunConfig) -> dict:
    doc = {"schema": REPORT_SCHEMA, **rep.to_dict()}
    doc["config"] = cfg.to_dict()
    doc["backend"] = _kernels.backend()
    # keep timing last so diffs that ignore it stay simple
    doc["timing"] = doc.pop("timing")
    return doc


def write_report(rep: SolveReport, cfg: RunConfig, out_dir: Path, name: str, loss_history: bool) -> dict[str, Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {"report": out_dir / f"{name}.json"}
    paths["report"].write_text(json.dumps(report_document(rep, cfg), indent=2, allow_nan=False) + "\n")
    if cfg.output.error_field and rep.rel_l2 is not None:
        problem = cfg.problem.build()
        field = error_field(rep.params, rep.omega, problem)
        coords = list(problem.coords)
        paths["error_field"] = out_dir / f"{name}_error.csv"
        np.savetxt(
            paths["error_field"],
            field,
            delimiter=",",
            header=",".join(coords + ["u_exact", "u_approx", "abs_error"]),
            comments="",
            fmt="%.17g",
        )
    if loss_history and rep.train_report is not None and rep.train_report.epochs_used:
        paths["loss_history"] = out_dir / f"{name}_loss.csv"
        rep.train_report.write_csv(paths["loss_history"])
    return paths


def _fmt(v) -> str:
    return "" if v is None else (repr(v) if isinstance(v, float) else str(v))


def run_sweep(ref: str, out_dir: Path, seed: int | None = None, stream=None) -> Path:
    spec = load_sweep(ref)
    cells = spec.configs()
    axes = list(spec.axes)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{spec.name}.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["cell", *axes, *SWEEP_COLUMNS])
        fh.flush()
        for i, (assign, cfg) in enumerate(cells):
            if seed is not None:
                cfg = cfg.with_seed(seed)
            label = cell_label(assign)
            row = {"problem": cfg.problem.name, "method": cfg.method, "seed": cfg.network.seed}
            try:
                rep = execute(cfg)
                row.update(
                    status="ok",
                    rel_l2=rep.rel_l2,
                    rel_linf=rep.rel_linf,
                    epochs_used=rep.epochs_used,
                    stop_reason=rep.stop_reason,
                    total_s=round(rep.timing.get("total_s", float("nan")), 3),
                )
            except Exception as exc:  # a failed cell is recorded, the sweep goes on
                log.debug("cell %d failed:\n%s", i, traceback.format_exc())
                row.update(status="failed", error=f"{type(exc).__name__}: {exc}")
            w.writerow([i, *(label[a] for a in axes), *(_fmt(row.get(c)) for c in SWEEP_COLUMNS)])
            fh.flush()
            if stream is not None:
                print(f"[{i + 1}/{len(cells)}] {label} -> {row['status']} rel_l2={_fmt(row.get('rel_l2'))}", file=stream)
    return path


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="snnpde", description="Subspace neural-network PDE solvers.")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one config file or preset")
    r.add_argument("config", help="path to a YAML config or a preset name")
    r.add_argument("--seed", type=int, help="override network.seed")
    r.add_argument("--out-dir", type=Path, help="override output.dir")
    r.add_argument("--name", help="base name of the output files")
    r.add_argument("--loss-history", action="store_true", help="also write the per-epoch loss CSV")

    s = sub.add_parser("sweep", help="run a sweep file or a shipped sweep")
    s.add_argument("spec", help="path to a sweep YAML or a shipped sweep name")
    s.add_argument("--seed", type=int, help="override network.seed in every cell")
    s.add_argument("--out-dir", type=Path, default=Path("results"))

    ps = sub.add_parser("presets", help="list built-in presets")
    ps.add_argument("--sweeps", action="store_true", help="list shipped sweeps instead")
    ps.add_argument("--show", metavar="NAME", help="print one preset as YAML")
    return p


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        set_threads()
        if args.command == "presets":
            if args.show:
                cfg, _ = resolve_config(args.show)
                print(cfg.dumps(), end="")
            elif args.sweeps:
                for n in sweep_names():
                    print(f"{n:36s} {load_sweep(n).description}")
            else:
                for n, desc in presets():
                    print(f"{n:30s} {desc}")
            return 0
        if args.command == "run":
            cfg, name = resolve_config(args.config)
            if args.seed is not None:
                cfg = cfg.with_seed(args.seed)
            out_dir = args.out_dir if args.out_dir is not None else Path(cfg.output.dir)
            name = args.name or cfg.output.name or name
            rep = execute(cfg)
            paths = write_report(rep, cfg, out_dir, name, args.loss_history or cfg.output.loss_history)
            msg = f"{name}: method={rep.method} epochs={rep.epochs_used} ({rep.stop_reason})"
            if rep.rel_l2 is not None:
                msg += f" rel_l2={rep.rel_l2:.3e} rel_linf={rep.rel_linf:.3e}"
            print(msg)
            for kind, path in paths.items():
                print(f"  {kind}: {path}")
            return 0
        if args.command == "sweep":
            path = run_sweep(args.spec, args.out_dir, args.seed, stream=sys.stdout)
            print(f"wrote {path}")
            return 0
    except SNNError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 1


if __name__ == "__main__":
    sys.exit(main())
