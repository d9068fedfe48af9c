"""Quick invariant checks on small meshes, run by ``biharmwave check``.

Each check returns a :class:`CheckResult`; none of them take more than a
fraction of a second.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import forms, problems
from .config import RunConfig
from .mesh import build_uniform
from .spaces import SpaceKind, build_space, eval_basis
from .timestep import Trajectory, energy_report


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    limit: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: {self.value:.3e} (limit {self.limit:.1e})"


def _below(name: str, value: float, limit: float) -> CheckResult:
    return CheckResult(name, bool(value <= limit), float(value), limit)


def check_symmetry(n: int = 3) -> list[CheckResult]:
    out = []
    for kind in SpaceKind:
        space = build_space(build_uniform(n, n), kind)
        A = forms.assemble_ah(space, forms.FormParams())
        M = forms.assemble_mass(space)
        out.append(_below(f"a_h symmetric ({kind.value})", A.asymmetry() / A.max_abs(), 1e-12))
        out.append(_below(f"mass symmetric ({kind.value})", M.asymmetry() / M.max_abs(), 1e-12))
    return out


def check_morley_consistency(ns=(2, 4)) -> list[CheckResult]:
    out = []
    for n in ns:
        space = build_space(build_uniform(n, n), SpaceKind.MORLEY)
        ratio = forms.assemble_bh(space).max_abs() / forms.assemble_apw(space).max_abs()
        out.append(_below(f"Morley b_h vanishes (n={n})", ratio, 1e-12))
    return out


def check_duality(n: int = 2) -> list[CheckResult]:
    """Local bases are dual to their dof functionals."""
    out = []
    for kind in SpaceKind:
        space = build_space(build_uniform(n, n), kind)
        nodes, normals = space.interpolation_functionals()
        worst = 0.0
        for K in range(space.mesh.n_triangles):
            val, grad, _ = eval_basis(space, K, nodes[K])
            table = val.copy()
            if kind is SpaceKind.MORLEY:
                table[3:] = np.einsum("ejd,ed->ej", grad[3:], normals[K])
            worst = max(worst, np.abs(table - np.eye(6)).max())
        out.append(_below(f"basis duality ({kind.value})", worst, 1e-10))
    return out


def check_partition_of_unity(n: int = 3) -> list[CheckResult]:
    space = build_space(build_uniform(n, n), SpaceKind.DG)
    M = forms.assemble_mass(space)
    one = np.ones(space.ndof)
    return [_below("dG mass integrates 1 to |Omega|", abs(one @ (M @ one) - 1.0), 1e-12)]


def check_conservation(n: int = 4, steps: int = 200) -> list[CheckResult]:
    out = []
    for kind in ("morley", "dg", "c0ip"):
        cfg = RunConfig(scheme=kind, integrator="implicit", n=(n,), coupling="fixed", k=1.0 / n, T=steps / n)
        traj = Trajectory(cfg, measure_errors=False, zero_forcing=True)
        rep = energy_report(traj, steps)
        out.append(_below(f"implicit energy drift ({kind})", rep.drift, 1e-8))
    return out


SUITES: dict[str, Callable[[], list[CheckResult]]] = {
    "symmetry": check_symmetry,
    "morley_consistency": check_morley_consistency,
    "duality": check_duality,
    "partition_of_unity": check_partition_of_unity,
    "conservation": check_conservation,
}


def run_all() -> list[CheckResult]:
    results = []
    for suite in SUITES.values():
        results.extend(suite())
    return results
