"""Fully discrete time stepping: shared first step, explicit central
differences, the implicit averaged scheme, CFL estimation, discrete energies
and the trajectory driver.

The matrix-level functions take load vectors, not fields, so they can be
exercised on tiny hand-made systems; :class:`Trajectory` binds them to a
space, a problem and a load cache.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from typing import Iterator

import numpy as np

from . import forms, problems
from .analysis import ErrorEvaluator
from .config import RunConfig
from .mesh import build_uniform
from .projection import ritz_project
from .sparse import LinearSolver, SolverConfig, SparseMatrix, lambda_max_generalized
from .spaces import build_space


class InstabilityError(RuntimeError):
    def __init__(self, step: int, message: str = ""):
        super().__init__(message or f"non-finite iterate at step {step}")
        self.step = step


class CFLError(ValueError):
    pass


@dataclass(frozen=True)
class TimeState:
    U_prev: np.ndarray
    U_curr: np.ndarray
    n: int
    k: float

    @property
    def t(self) -> float:
        return self.n * self.k

    def advance(self, U_next) -> "TimeState":
        return TimeState(self.U_curr, np.asarray(U_next), self.n + 1, self.k)


@dataclass(frozen=True)
class DiscreteEnergy:
    kinetic: float
    potential: float
    correction: float

    @property
    def implicit(self) -> float:
        return self.kinetic + self.potential

    @property
    def explicit(self) -> float:
        return self.kinetic + self.potential - self.correction


def discrete_energy(M: SparseMatrix, A: SparseMatrix, U_a, U_b, k: float) -> DiscreteEnergy:
    """Energies at the half step between ``U_a = U^n`` and ``U_b = U^{n+1}``."""
    dU = (np.asarray(U_b) - np.asarray(U_a)) / k
    mid = 0.5 * (np.asarray(U_b) + np.asarray(U_a))
    Ad = A @ dU
    return DiscreteEnergy(
        kinetic=float(dU @ (M @ dU)),
        potential=float(mid @ (A @ mid)),
        correction=0.25 * k * k * float(dU @ Ad),
    )


def _check(U, step):
    if not np.all(np.isfinite(U)):
        raise InstabilityError(step)
    return U


def first_step(M, A, U0, k, F_half, V0, solve=None):
    """Solve (2/k^2 M + A/2) U1 = F^{1/2} + (2/k) V0 + (2/k^2 M - A/2) U0,
    where ``V0`` is the load vector of the initial velocity."""
    U0 = np.asarray(U0, dtype=float)
    S = M * (2.0 / k**2) + A * 0.5
    solve = solve or LinearSolver(S)
    rhs = np.asarray(F_half) + (2.0 / k) * np.asarray(V0) + (2.0 / k**2) * (M @ U0) - 0.5 * (A @ U0)
    _check(rhs, 1)
    return _check(solve(rhs, U0), 1)


def explicit_step(M, A, state: TimeState, F_n, solve=None):
    """M U^{n+1} = 2 M U^n - M U^{n-1} + k^2 (F^n - A U^n)."""
    k = state.k
    extrap = 2.0 * state.U_curr - state.U_prev
    rhs = M @ extrap + k * k * (np.asarray(F_n) - A @ state.U_curr)
    solve = solve or LinearSolver(M)
    _check(rhs, state.n + 1)
    return _check(solve(rhs, extrap), state.n + 1)


def implicit_step(M, A, state: TimeState, F_quarter, solve=None):
    """(M + k^2/4 A) U^{n+1} = 2 M U^n - M U^{n-1} - k^2 A (2 U^n + U^{n-1}) / 4
    + k^2 F^{n,1/4}."""
    k = state.k
    Un, Um = state.U_curr, state.U_prev
    rhs = M @ (2.0 * Un - Um) - 0.25 * k * k * (A @ (2.0 * Un + Um)) + k * k * np.asarray(F_quarter)
    solve = solve or LinearSolver(M + A * (0.25 * k * k))
    _check(rhs, state.n + 1)
    return _check(solve(rhs, 2.0 * Un - Um), state.n + 1)


def cfl_max_step(M, A, tol: float = 1e-8, cfg: SolverConfig | None = None) -> float:
    """Sharp explicit step bound 2 / sqrt(lambda_max(M^{-1} A))."""
    lam = lambda_max_generalized(A, M, tol=tol, cfg=cfg)
    return 2.0 / math.sqrt(lam) if lam > 0 else math.inf


# ---------------------------------------------------------------- driver


@dataclass
class StepRecord:
    n: int
    t: float
    U: np.ndarray
    l2_error: float = math.nan
    energy_error: float = math.nan
    energy: DiscreteEnergy | None = None


def build_problem(cfg: RunConfig) -> problems.Problem:
    return problems.example1() if cfg.problem == "example1" else problems.example2()


def form_params(cfg: RunConfig, problem: problems.Problem) -> forms.FormParams:
    s1, s2, sip = cfg.penalties()
    return forms.FormParams(s1, s2, sip, coefficient=problem.coefficient, penalty_length=cfg.penalty_length)


class Trajectory:
    """One run of the selected scheme on an ``n x n`` mesh; iterate to stream
    :class:`StepRecord` objects for n = 0..N."""

    def __init__(self, cfg: RunConfig, n: int | None = None, problem: problems.Problem | None = None,
                 measure_errors: bool = True, zero_forcing: bool = False, track_energy: bool = True):
        self.cfg = cfg
        self.problem = problem or build_problem(cfg)
        n = int(n if n is not None else cfg.n[0])
        rect = tuple(cfg.rect) if cfg.rect is not None else self.problem.rect
        self.mesh = build_uniform(n, n, rect)
        self.space = build_space(self.mesh, cfg.scheme)
        self.params = form_params(cfg, self.problem)
        self.solver_cfg = SolverConfig(method=cfg.solver, rtol=cfg.solver_tol)
        self.A = forms.assemble_ah(self.space, self.params)
        self.M = forms.assemble_mass(self.space)
        self.loads = forms.LoadOperator(self.space)
        self.f = None if zero_forcing else self.problem.f
        self.T = cfg.T if cfg.T is not None else self.problem.T_end
        self.h = self.mesh.cell_width
        self.k, self.N = self._resolve_step()
        self.k_max = None
        if cfg.integrator == "explicit" and not cfg.cfl_override:
            self.k_max = cfl_max_step(self.M, self.A, tol=1e-6)
            if self.k > cfg.cfl_safety * self.k_max:
                raise CFLError(
                    f"explicit step k={self.k:.3e} exceeds {cfg.cfl_safety} * k_max = {cfg.cfl_safety * self.k_max:.3e}; "
                    "pass cfl_override to run anyway"
                )
        self.exact = self.problem.exact if measure_errors else None
        self.errors = ErrorEvaluator(self.space, self.params) if self.exact is not None else None
        self.track_energy = track_energy
        self._load_cache: dict[int, np.ndarray] = {}

    def _resolve_step(self) -> tuple[float, int]:
        rule = self.cfg.resolved_coupling()
        if rule == "steps":
            N = int(self.cfg.steps)
        else:
            k = {"ratio_h2": self.cfg.k_ratio * self.h**2, "equal_h": self.h, "fixed": self.cfg.k}[rule]
            N = max(1, int(round(self.T / k)))
        return self.T / N, N

    def load_at(self, step: int) -> np.ndarray:
        if self.f is None:
            return np.zeros(self.space.ndof)
        F = self._load_cache.get(step)
        if F is None:
            F = self.loads(self.f, step * self.k)
            self._load_cache[step] = F
            for old in [s for s in self._load_cache if s < step - 2]:
                del self._load_cache[old]
        return F

    def initial_values(self, U0=None):
        if U0 is None:
            U0 = ritz_project(self.space, self.params, self.problem.u0, self.solver_cfg, A=self.A)
        V0 = self.loads(self.problem.v0, 0.0) if self.problem.v0 is not None else np.zeros(self.space.ndof)
        k = self.k
        S = self.M * (2.0 / k**2) + self.A * 0.5
        U1 = first_step(self.M, self.A, U0, k, 0.5 * (self.load_at(0) + self.load_at(1)), V0,
                        LinearSolver(S, self.solver_cfg))
        return U0, U1

    def _record(self, n, U, prev):
        rec = StepRecord(n=n, t=n * self.k, U=U)
        if self.errors is not None:
            rec.l2_error = self.errors.l2(U, self.exact, rec.t)
            rec.energy_error = self.errors.energy(U, self.exact, rec.t)
        if prev is not None and self.track_energy:
            rec.energy = discrete_energy(self.M, self.A, prev, U, self.k)
        return rec

    def __iter__(self) -> Iterator[StepRecord]:
        return self.stream()

    def stream(self, U0=None, steps: int | None = None) -> Iterator[StepRecord]:
        N = self.N if steps is None else steps
        U0, U1 = self.initial_values(U0)
        yield self._record(0, U0, None)
        yield self._record(1, U1, U0)
        k = self.k
        if self.cfg.integrator == "explicit":
            solve = LinearSolver(self.M, self.solver_cfg)
            step = lambda st: explicit_step(self.M, self.A, st, self.load_at(st.n), solve)
        else:
            solve = LinearSolver(self.M + self.A * (0.25 * k * k), self.solver_cfg)

            def step(st):
                Fq = 0.25 * (self.load_at(st.n + 1) + 2.0 * self.load_at(st.n) + self.load_at(st.n - 1))
                return implicit_step(self.M, self.A, st, Fq, solve)

        state = TimeState(U0, U1, 1, k)
        for _ in range(1, N):
            U = step(state)
            state = state.advance(U)
            yield self._record(state.n, U, state.U_prev)

    def error_record(self):
        """Run to the end and return ``(max L2 error, max energy error)``
        over all time levels."""
        l2 = en = 0.0
        for rec in self:
            l2 = max(l2, rec.l2_error)
            en = max(en, rec.energy_error)
        return l2, en


def run(cfg: RunConfig, n: int | None = None, **kw) -> Trajectory:
    return Trajectory(cfg, n, **kw)


STEP_COLUMNS = ["n", "t", "l2_error", "energy_error", "E_kinetic", "E_potential"]


def _g(v) -> str:
    return "nan" if v is None or (isinstance(v, float) and math.isnan(v)) else f"{v:.17g}"


def write_step_csv(records, fh) -> None:
    """Stream per-step diagnostics as CSV."""
    w = csv.writer(fh)
    w.writerow(STEP_COLUMNS)
    for r in records:
        e = r.energy
        w.writerow([r.n, _g(r.t), _g(r.l2_error), _g(r.energy_error),
                    _g(e.kinetic if e else None), _g(e.potential if e else None)])


@dataclass
class EnergyReport:
    k: float
    steps: int
    drift: float  # max relative change of the scheme's conserved energy
    growth: float  # max (kinetic + potential) relative to its first value
    blew_up: bool
    blowup_step: int | None = None


def energy_report(traj: Trajectory, steps: int, blowup: float = 1e3, U0=None) -> EnergyReport:
    """Run ``steps`` steps and monitor the conserved discrete energy.

    The explicit scheme conserves kinetic + potential - correction, the
    implicit one kinetic + potential (both for f = 0). A run is declared
    blown up once kinetic + potential exceeds ``blowup`` times its initial
    value or an iterate stops being finite.
    """
    explicit = traj.cfg.integrator == "explicit"
    ref = base = None
    drift, growth = 0.0, 1.0
    try:
        for rec in traj.stream(U0=U0, steps=steps):
            if rec.energy is None:
                continue
            E = rec.energy.explicit if explicit else rec.energy.implicit
            raw = rec.energy.implicit
            if ref is None:
                ref, base = E, raw
                continue
            drift = max(drift, abs(E - ref) / abs(ref))
            growth = max(growth, raw / base)
            if not math.isfinite(raw) or growth >= blowup:
                return EnergyReport(traj.k, steps, drift, growth, True, rec.n)
    except InstabilityError as exc:
        return EnergyReport(traj.k, steps, math.inf, math.inf, True, exc.step)
    return EnergyReport(traj.k, steps, drift, growth, False)
