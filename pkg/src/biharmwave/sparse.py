"""Compressed-row matrices and SPD solvers for mass and stiffness systems.

Storage and the raw product kernel come from ``scipy.sparse``; the
preconditioned conjugate gradient solver and the generalized power iteration
are implemented here.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse.csgraph import reverse_cuthill_mckee

CG = "conjugate-gradient"
CHOLESKY = "sparse-cholesky"


class SolverError(RuntimeError):
    """Raised when an SPD solve fails to converge or detects indefiniteness."""


@dataclass(frozen=True)
class SolverConfig:
    method: str = CG
    rtol: float = 1e-12
    max_iter: int = 10_000

    def __post_init__(self):
        if self.method not in (CG, CHOLESKY):
            raise ValueError(f"unknown solver method {self.method!r}")
        if not self.rtol > 0:
            raise ValueError("solver tolerance must be positive")


class SparseMatrix:
    """Immutable CSR matrix with sorted, duplicate-free column indices."""

    def __init__(self, csr: sp.csr_matrix, name: str = "matrix"):
        csr = sp.csr_matrix(csr, dtype=np.float64)
        csr.sum_duplicates()
        csr.sort_indices()
        self._csr = csr
        self.name = name

    @classmethod
    def from_triplets(cls, rows, cols, vals, shape, name: str = "matrix") -> "SparseMatrix":
        rows, cols, vals = (np.asarray(a).ravel() for a in (rows, cols, vals))
        keep = (rows >= 0) & (cols >= 0)
        coo = sp.coo_matrix((vals[keep], (rows[keep], cols[keep])), shape=shape)
        return cls(coo.tocsr(), name=name)

    @classmethod
    def from_dense(cls, a, name: str = "matrix") -> "SparseMatrix":
        return cls(sp.csr_matrix(np.asarray(a, dtype=float)), name=name)

    @classmethod
    def identity(cls, n: int) -> "SparseMatrix":
        return cls(sp.identity(n, format="csr"), name="identity")

    @property
    def nrows(self) -> int:
        return self._csr.shape[0]

    @property
    def ncols(self) -> int:
        return self._csr.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self._csr.shape

    @property
    def row_offsets(self) -> np.ndarray:
        return self._csr.indptr

    @property
    def column_indices(self) -> np.ndarray:
        return self._csr.indices

    @property
    def values(self) -> np.ndarray:
        return self._csr.data

    @property
    def nnz(self) -> int:
        return self._csr.nnz

    @property
    def scipy(self) -> sp.csr_matrix:
        return self._csr

    def diagonal(self) -> np.ndarray:
        return self._csr.diagonal()

    def toarray(self) -> np.ndarray:
        return self._csr.toarray()

    def max_abs(self) -> float:
        return float(np.abs(self._csr.data).max()) if self.nnz else 0.0

    def asymmetry(self) -> float:
        """max |A - A^T|"""
        d = self._csr - self._csr.T
        return float(abs(d).max()) if d.nnz else 0.0

    def __matmul__(self, x):
        return spmv(self, x)

    def __add__(self, other: "SparseMatrix") -> "SparseMatrix":
        return SparseMatrix(self._csr + other._csr, name=f"{self.name}+{other.name}")

    def __mul__(self, s: float) -> "SparseMatrix":
        return SparseMatrix(self._csr * float(s), name=self.name)

    __rmul__ = __mul__

    def dump(self, path: str | Path) -> None:
        """Write ``row col value`` lines (coordinate format)."""
        coo = self._csr.tocoo()
        with open(path, "w") as fh:
            for r, c, v in zip(coo.row, coo.col, coo.data):
                fh.write(f"{r} {c} {v:.17g}\n")


def spmv(A: SparseMatrix, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[0] != A.ncols:
        raise ValueError(f"dimension mismatch: {A.name} is {A.shape}, vector has {x.shape[0]} rows")
    return A.scipy @ x


def pcg(A: SparseMatrix, b, rtol=1e-12, max_iter=10_000, x0=None):
    """Jacobi-preconditioned conjugate gradient. Returns ``(x, iterations)``."""
    b = np.asarray(b, dtype=float)
    if b.shape[0] != A.nrows:
        raise ValueError(f"dimension mismatch: {A.name} is {A.shape}, rhs has {b.shape[0]} rows")
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros_like(b), 0
    d = A.diagonal()
    if np.any(d <= 0):
        raise SolverError(f"{A.name}: non-positive diagonal entry, matrix is not SPD")
    inv_d = 1.0 / d
    K = A.scipy
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    r = b - K @ x
    target = rtol * bnorm
    rnorm = np.linalg.norm(r)
    if rnorm <= target:
        return x, 0
    z = inv_d * r
    p = z.copy()
    rz = r @ z
    for it in range(1, max_iter + 1):
        q = K @ p
        pq = p @ q
        if pq <= 0:
            raise SolverError(f"{A.name}: CG breakdown (p^T A p = {pq:.3e}), matrix is not positive definite")
        alpha = rz / pq
        x += alpha * p
        r -= alpha * q
        rnorm = np.linalg.norm(r)
        if rnorm <= target:
            # guard against drift of the recursive residual
            rnorm = np.linalg.norm(b - K @ x)
            if rnorm <= target:
                return x, it
            r = b - K @ x
        z = inv_d * r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise SolverError(
        f"{A.name}: CG did not converge in {max_iter} iterations "
        f"(relative residual {rnorm / bnorm:.3e} > {rtol:.1e})"
    )


BAND_BUDGET = 20_000_000  # max stored band entries for the banded Cholesky route


def _direct_factor(K: sp.csr_matrix, name: str):
    """Return a solve callable. Bandwidth-reducing ordering plus banded
    Cholesky when the band is small enough, SuperLU otherwise."""
    n = K.shape[0]
    perm = reverse_cuthill_mckee(K, symmetric_mode=True)
    Kp = K[perm][:, perm].tocoo()
    bw = int(np.max(np.abs(Kp.row - Kp.col))) if Kp.nnz else 0
    if (bw + 1) * n <= BAND_BUDGET:
        ab = np.zeros((bw + 1, n))
        low = Kp.row >= Kp.col
        ab[(Kp.row - Kp.col)[low], Kp.col[low]] = Kp.data[low]
        try:
            cb = la.cholesky_banded(ab, lower=True)
        except la.LinAlgError as exc:
            raise SolverError(f"{name}: Cholesky failed, matrix is not positive definite ({exc})") from exc
        inv = np.empty_like(perm)
        inv[perm] = np.arange(n)

        def solve(b):
            return la.cho_solve_banded((cb, True), b[perm], check_finite=False)[inv]

        return solve
    try:
        return spla.factorized(K.tocsc())
    except RuntimeError as exc:
        raise SolverError(f"{name}: factorization failed ({exc})") from exc


class LinearSolver:
    """A solver prepared for one matrix; call with a right-hand side.

    CG solves are warm-started from the previous solution when no initial
    guess is supplied. The Cholesky route factorizes once and applies
    iterative refinement towards ``rtol``.
    """

    refine_steps = 2
    direct_fail_tol = 1e-6

    def __init__(self, A: SparseMatrix, cfg: SolverConfig | None = None):
        self.A = A
        self.cfg = cfg or SolverConfig()
        self._last = None
        self._factor: Callable | None = None
        if self.cfg.method == CHOLESKY:
            if A.nrows == 0:
                self._factor = lambda b: np.zeros(0)
            else:
                self._factor = _direct_factor(A.scipy, A.name)

    def __call__(self, b, x0=None) -> np.ndarray:
        b = np.asarray(b, dtype=float)
        if self._factor is not None:
            K = self.A.scipy
            x = self._factor(b)
            bn = np.linalg.norm(b)
            r = b - K @ x
            res = np.linalg.norm(r)
            # iterative refinement; the attainable residual is limited by conditioning
            for _ in range(self.refine_steps):
                if res <= self.cfg.rtol * bn:
                    break
                x = x + self._factor(r)
                r = b - K @ x
                res = np.linalg.norm(r)
            if not np.isfinite(res) or res > self.direct_fail_tol * bn:
                raise SolverError(f"{self.A.name}: direct solve residual {res / bn:.3e} too large")
            return x
        guess = x0 if x0 is not None else self._last
        x, _ = pcg(self.A, b, self.cfg.rtol, self.cfg.max_iter, guess)
        self._last = x
        return x


def solve_spd(A: SparseMatrix, b, cfg: SolverConfig | None = None) -> np.ndarray:
    return LinearSolver(A, cfg)(b)


def lambda_max_generalized(A: SparseMatrix, M: SparseMatrix, tol=1e-8, max_iter=20_000, seed=0, cfg=None):
    """Largest eigenvalue of ``M^{-1} A`` by power iteration with the
    M-weighted Rayleigh quotient."""
    if A.shape != M.shape:
        raise ValueError(f"shape mismatch {A.shape} vs {M.shape}")
    n = A.nrows
    if n == 1:
        return float(A.values[0] / M.values[0]) if A.nnz else 0.0
    solve = LinearSolver(M, cfg or SolverConfig(method=CHOLESKY))
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n)
    x /= np.sqrt(x @ (M @ x))
    lam, prev_change = 0.0, np.inf
    for _ in range(max_iter):
        y = solve(A @ x)
        ny = np.sqrt(y @ (M @ y))
        if ny == 0.0:
            return 0.0
        x = y / ny
        lam_new = float(x @ (A @ x))
        change = abs(lam_new - lam)
        # geometric tail estimate of the remaining error
        ratio = change / prev_change if prev_change > 0 else 1.0
        remaining = change * ratio / (1.0 - ratio) if ratio < 1.0 else np.inf
        if change <= tol * abs(lam_new) and remaining <= tol * abs(lam_new):
            return lam_new
        lam, prev_change = lam_new, change
    return lam
