"""Sensor traces u_c(t) for the two-layer plate, per scheme and resolution.

Writes one CSV per run and a summary of the successive maximum differences
between resolutions (traces compared at the coarsest grid's time levels).

    python3 scripts/example2_sensor.py --n 25 50 100 --scheme morley c0ip
"""
from __future__ import annotations

import argparse
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from biharmwave.cli import cmd_example2
from biharmwave.config import SCHEMES, RunConfig


def trace(scheme: str, n: int, out_dir: str) -> np.ndarray:
    path = Path(out_dir) / f"{scheme}_n{n}.csv"
    with open(path, "w", newline="") as fh:
        tr = cmd_example2(RunConfig(scheme=scheme, n=(n,), out=str(path)), fh)
    return np.array(tr)


def main(argv=None) -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, nargs="+", default=[25, 50, 100])
    p.add_argument("--scheme", choices=SCHEMES, nargs="+", default=list(SCHEMES))
    p.add_argument("--jobs", type=int, default=3)
    p.add_argument("--out-dir", default="results/example2")
    args = p.parse_args(argv)
    Path(args.out_dir).mkdir(parents=True, exist_ok=True)
    ns = sorted(args.n)
    jobs = [(s, n) for s in args.scheme for n in ns]
    with ProcessPoolExecutor(max_workers=args.jobs) as pool:
        results = dict(zip(jobs, pool.map(trace, *zip(*jobs), [args.out_dir] * len(jobs))))
    for s in args.scheme:
        print(f"{s}: u_c(0) = " + ", ".join(f"{results[s, n][0, 1]:.3e} (n={n})" for n in ns))
        for a, b in zip(ns, ns[1:]):
            if b % a:
                continue
            ta, tb = results[s, a][:, 1], results[s, b][:: b // a, 1]
            print(f"  max |u_c^{a} - u_c^{b}| = {np.abs(ta - tb).max():.3e}")


if __name__ == "__main__":
    main()
