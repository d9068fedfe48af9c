"""Command-line driver: ``converge``, ``example2``, ``stability``, ``check``.

Settings are resolved as defaults, then the ``--config`` file, then flags.
Exit codes: 0 on success, 1 on error, 2 when a stability report finds an
instability.
"""
from __future__ import annotations

import argparse
import csv
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from . import checks, config, problems
from .analysis import ENERGY_LABELS, ErrorRecord, SensorFunctional, convergence_rates
from .config import RunConfig
from .spaces import SpaceKind
from .timestep import Trajectory, cfl_max_step, energy_report, write_step_csv

EXIT_OK, EXIT_ERROR, EXIT_UNSTABLE = 0, 1, 2

STABILITY_RATIOS = (0.5, 0.9, 0.99, 1.05)
STABILITY_COLUMNS = ["n", "integrator", "k_ratio", "k", "k_max", "steps", "energy_drift", "energy_growth",
                     "blew_up", "blowup_step"]
SENSOR_COLUMNS = ["t", "u_c(t)"]

# Example 2 step counts: 600 on 50x50, 1200 on 100x100, proportional otherwise
EXAMPLE2_STEPS_PER_CELL = 12


def _g(v) -> str:
    return "nan" if v is None or (isinstance(v, float) and math.isnan(v)) else f"{v:.17g}"


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat 'key = value' config file; flags override it")
    p.add_argument("--scheme", choices=config.SCHEMES)
    p.add_argument("--integrator", choices=config.INTEGRATORS)
    p.add_argument("--n", type=int, action="append", help="cells per side (repeatable)")
    p.add_argument("--T", type=float, help="end time")
    p.add_argument("--k", type=float, help="fixed time step")
    p.add_argument("--k-ratio", type=float, help="k = k_ratio * h^2 (explicit default 0.01)")
    p.add_argument("--steps", type=int, help="number of time steps (k = T / steps)")
    p.add_argument("--sigma-dg1", type=float)
    p.add_argument("--sigma-dg2", type=float)
    p.add_argument("--sigma-ip", type=float)
    p.add_argument("--penalty-length", choices=("edge", "circumradius", "diameter"))
    p.add_argument("--solver", choices=("sparse-cholesky", "conjugate-gradient"))
    p.add_argument("--solver-tol", type=float)
    p.add_argument("--cfl-override", action="store_true", default=None,
                   help="allow explicit steps above 0.95 * k_max")
    p.add_argument("--out", help="output CSV path (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="biharmwave", description="Biharmonic wave equation solver.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("converge", help="convergence table for the smooth manufactured solution")
    _add_common(p)
    p.add_argument("--per-step", metavar="DIR", help="also write per-step CSVs into DIR")
    p.add_argument("--jobs", type=int, default=1, help="resolutions run in parallel")

    p = sub.add_parser("example2", help="heterogeneous plate with a sensor region")
    _add_common(p)
    p.add_argument("--snapshot-times", type=float, action="append", default=None,
                   help="write the dof vector at the step nearest to this time (repeatable)")
    p.add_argument("--dump-mesh", metavar="PATH")
    p.add_argument("--dump-matrix", metavar="PATH", help="write a_h as 'row col value' lines")

    p = sub.add_parser("stability", help="energy drift and blow-up sweep with f = 0")
    _add_common(p)
    p.add_argument("--ratios", type=float, nargs="+", default=list(STABILITY_RATIOS),
                   help="k / k_max values for the explicit sweep")
    p.add_argument("--sweep-steps", type=int, default=1000)

    p = sub.add_parser("check", help="run the invariant suites")
    p.add_argument("--suite", choices=sorted(checks.SUITES), action="append")
    return parser


_FLAG_KEYS = ("scheme", "integrator", "T", "k", "k_ratio", "steps", "sigma_dg1", "sigma_dg2", "sigma_ip",
              "penalty_length", "solver", "solver_tol", "cfl_override", "out")


def resolve_config(args, base: RunConfig | None = None) -> RunConfig:
    cfg = base or RunConfig()
    if getattr(args, "config", None):
        cfg = config.load(args.config, cfg)
    over = {key: getattr(args, key) for key in _FLAG_KEYS if getattr(args, key, None) is not None}
    if getattr(args, "n", None):
        over["n"] = tuple(args.n)
    if "k" in over:
        over["coupling"] = "fixed"
    elif "steps" in over:
        over["coupling"] = "steps"
    elif "k_ratio" in over:
        over["coupling"] = "ratio_h2"
    if getattr(args, "snapshot_times", None):
        over["snapshot_times"] = tuple(args.snapshot_times)
    return cfg.replace(**over)


@contextmanager
def _output(path):
    if path is None:
        yield sys.stdout
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            yield fh


# ---------------------------------------------------------------- converge


def converge_one(cfg: RunConfig, n: int, per_step: str | None = None) -> ErrorRecord:
    traj = Trajectory(cfg, n, track_energy=per_step is not None)
    if per_step is None:
        l2, en = traj.error_record()
    else:
        records = list(traj)
        path = Path(per_step) / f"{cfg.scheme}_{cfg.integrator}_n{n}.csv"
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            write_step_csv(records, fh)
        l2 = max(r.l2_error for r in records)
        en = max(r.energy_error for r in records)
    label = ENERGY_LABELS[SpaceKind.parse(cfg.scheme)]
    return ErrorRecord(h=traj.h, k=traj.k, l2_error=l2, energy_error=en, energy_label=label, n=n)


def cmd_converge(cfg: RunConfig, jobs: int = 1, per_step: str | None = None):
    if cfg.problem != "example1":
        raise ValueError("converge needs a problem with a known exact solution")
    if len(cfg.n) < 2:
        raise ValueError("converge needs at least two resolutions")
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(converge_one, [cfg] * len(cfg.n), cfg.n, [per_step] * len(cfg.n)))
    else:
        records = [converge_one(cfg, n, per_step) for n in cfg.n]
    table = convergence_rates(records)
    if cfg.out:
        table.to_csv(cfg.out)
    return table


# ---------------------------------------------------------------- example 2


def example2_config(cfg: RunConfig) -> RunConfig:
    cfg = cfg.replace(problem="example2")
    if cfg.n == RunConfig().n:
        cfg = cfg.replace(n=(50,))
    if cfg.resolved_coupling() in ("ratio_h2", "equal_h") and cfg.coupling == "auto":
        cfg = cfg.replace(coupling="steps", steps=EXAMPLE2_STEPS_PER_CELL * cfg.n[0])
    return cfg


def cmd_example2(cfg: RunConfig, fh, dump_mesh=None, dump_matrix=None) -> list[tuple[float, float]]:
    """Stream ``t,u_c(t)`` rows to ``fh``; write requested snapshots next to
    ``cfg.out``. Returns the trace."""
    cfg = example2_config(cfg)
    traj = Trajectory(cfg, cfg.n[0], measure_errors=False, track_energy=False)
    if dump_mesh:
        traj.mesh.dump(dump_mesh)
    if dump_matrix:
        traj.A.dump(dump_matrix)
    sensor = SensorFunctional(traj.space, problems.sensor_region())
    snap_steps = {int(round(t / traj.k)): t for t in cfg.snapshot_times}
    stem = Path(cfg.out).with_suffix("") if cfg.out else Path("example2")
    w = csv.writer(fh)
    w.writerow(SENSOR_COLUMNS)
    trace = []
    for rec in traj:
        uc = sensor(rec.U)
        trace.append((rec.t, uc))
        w.writerow([_g(rec.t), _g(uc)])
        if rec.n in snap_steps:
            write_snapshot(f"{stem}_snapshot_t{snap_steps[rec.n]:g}.csv", rec.U)
    return trace


def write_snapshot(path, U) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["dof", "value"])
        for i, v in enumerate(np.asarray(U)):
            w.writerow([i, _g(float(v))])


# ---------------------------------------------------------------- stability


def stability_rows(cfg: RunConfig, n: int, ratios=STABILITY_RATIOS, steps: int = 1000):
    """Explicit runs at k = r * k_max for each ratio plus one implicit run at
    k = h, all with f = 0 and the smooth initial data."""
    base = cfg.replace(problem="example1", n=(n,))
    imp = Trajectory(base.replace(integrator="implicit", coupling="fixed", k=1.0 / n, T=steps / n),
                     measure_errors=False, zero_forcing=True)
    k_max = cfl_max_step(imp.M, imp.A, tol=1e-12)
    rows = []
    for r in ratios:
        k = r * k_max
        run_cfg = base.replace(integrator="explicit", coupling="fixed", k=k, T=steps * k, cfl_override=True)
        rep = energy_report(Trajectory(run_cfg, measure_errors=False, zero_forcing=True), steps)
        rows.append(dict(n=n, integrator="explicit", k_ratio=r, k=rep.k, k_max=k_max, steps=steps,
                         energy_drift=rep.drift, energy_growth=rep.growth, blew_up=rep.blew_up,
                         blowup_step=rep.blowup_step))
    rep = energy_report(imp, steps)
    rows.append(dict(n=n, integrator="implicit", k_ratio=rep.k / k_max, k=rep.k, k_max=k_max, steps=steps,
                     energy_drift=rep.drift, energy_growth=rep.growth, blew_up=rep.blew_up,
                     blowup_step=rep.blowup_step))
    return rows


def write_stability_csv(rows, fh) -> None:
    w = csv.writer(fh)
    w.writerow(STABILITY_COLUMNS)
    for row in rows:
        w.writerow([row["n"], row["integrator"], _g(row["k_ratio"]), _g(row["k"]), _g(row["k_max"]), row["steps"],
                    _g(row["energy_drift"]), _g(row["energy_growth"]), int(row["blew_up"]),
                    "" if row["blowup_step"] is None else row["blowup_step"]])


# ---------------------------------------------------------------- entry


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "check":
            names = args.suite or list(checks.SUITES)
            results = [r for name in names for r in checks.SUITES[name]()]
            for r in results:
                print(r.line())
            return EXIT_OK if all(r.passed for r in results) else EXIT_ERROR

        cfg = resolve_config(args)
        if args.command == "converge":
            table = cmd_converge(cfg, jobs=args.jobs, per_step=args.per_step)
            print(table.format())
            return EXIT_OK

        if args.command == "example2":
            with _output(cfg.out) as fh:
                cmd_example2(cfg, fh, args.dump_mesh, args.dump_matrix)
            return EXIT_OK

        if args.command == "stability":
            ns = cfg.n if args.n else (4,)
            rows = [row for n in ns for row in stability_rows(cfg, n, args.ratios, args.sweep_steps)]
            with _output(cfg.out) as fh:
                write_stability_csv(rows, fh)
            return EXIT_UNSTABLE if any(row["blew_up"] for row in rows) else EXIT_OK
    except Exception as exc:  # noqa: BLE001 - every failure maps to exit code 1
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
