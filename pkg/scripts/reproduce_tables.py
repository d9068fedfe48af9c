"""Convergence tables for the smooth manufactured solution.

Runs every scheme with the implicit integrator (k = h) and, optionally, the
explicit one (k = h^2 / 100), printing a table per combination and writing
CSVs to --out-dir.

    python3 scripts/reproduce_tables.py --n 4 8 16 32 64
    python3 scripts/reproduce_tables.py --integrator explicit --n 4 8 16 32
"""
from __future__ import annotations

import argparse
from pathlib import Path

from biharmwave.cli import cmd_converge
from biharmwave.config import INTEGRATORS, SCHEMES, RunConfig


def main(argv=None) -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, nargs="+", default=[4, 8, 16, 32, 64])
    p.add_argument("--scheme", choices=SCHEMES, nargs="+", default=list(SCHEMES))
    p.add_argument("--integrator", choices=INTEGRATORS, nargs="+", default=["implicit"])
    p.add_argument("--jobs", type=int, default=4)
    p.add_argument("--out-dir", default="results/tables")
    args = p.parse_args(argv)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for integrator in args.integrator:
        for scheme in args.scheme:
            cfg = RunConfig(scheme=scheme, integrator=integrator, n=tuple(args.n),
                            out=str(out / f"{scheme}_{integrator}.csv"))
            table = cmd_converge(cfg, jobs=min(args.jobs, len(args.n)))
            print(f"\n{scheme}, {integrator}")
            print(table.format())


if __name__ == "__main__":
    main()
