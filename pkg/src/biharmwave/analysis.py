"""Error norms against analytic solutions, convergence rates and the sensor
functional."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from . import forms
from .quadrature import TRI_DEG4, TRI_DEG6
from .spaces import Space, SpaceKind

ENERGY_LABELS = {SpaceKind.MORLEY: "pw", SpaceKind.DG: "dG", SpaceKind.C0IP: "IP"}


class ErrorEvaluator:
    """Caches basis evaluations at the degree-6 points so that errors can be
    measured at every time step."""

    def __init__(self, space: Space, params: forms.FormParams | None = None, penalty=None):
        self.space = space
        self.params = params or forms.FormParams()
        F = space.mesh.n_triangles
        pts, wts = forms.triangle_points(space, TRI_DEG6)
        val, _ = space.tabulate(np.arange(F), pts)
        q = pts.shape[1]
        self.x, self.y = pts[..., 0].ravel(), pts[..., 1].ravel()
        self.w = wts.ravel()
        self.values = _cell_operator(space, val.reshape(F, q, 6), F * q)
        H = space.hessians  # (F, 6, 2, 2)
        comps = np.stack([H[..., 0, 0], H[..., 0, 1], H[..., 1, 1]], axis=1)  # (F, 3, 6)
        self.hess = _cell_operator(space, comps, 3 * F)
        self.cK = forms.cell_coefficient(space, self.params.coefficient)
        self.areas = space.mesh.areas
        self._q = q
        self._penalty = penalty
        self._samples = {}

    def _spatial(self, u):
        """Time-independent samples of a separable field's value and Hessian."""
        key = id(u)
        if key not in self._samples:
            g = u.with_time(lambda t: 1.0)
            self._samples[key] = (u, g(self.x, self.y), g.hessian(self.x, self.y))
        return self._samples[key]

    def _exact(self, u, t, hessian=True):
        if hasattr(u, "with_time"):
            _, val, hess = self._spatial(u)
            s = u.T(t)
            return s * val, s * hess
        return u(self.x, self.y, t), (u.hessian(self.x, self.y, t) if hessian else None)

    @property
    def penalty(self):
        if self._penalty is None and self.space.kind is not SpaceKind.MORLEY:
            self._penalty = forms.assemble_penalty(self.space, self.params)
        return self._penalty

    def l2(self, U, u=None, t=0.0) -> float:
        uh = self.values @ np.asarray(U, dtype=float)
        diff = uh if u is None else uh - self._exact(u, t, hessian=False)[0]
        return float(np.sqrt(np.sum(self.w * diff * diff)))

    def energy(self, U, u=None, t=0.0) -> float:
        U = np.asarray(U, dtype=float)
        F = self.space.mesh.n_triangles
        hh = (self.hess @ U).reshape(F, 3)
        if u is None:
            sq = self.areas * self.cK * (hh[:, 0] ** 2 + 2 * hh[:, 1] ** 2 + hh[:, 2] ** 2)
            total = float(sq.sum())
        else:
            ex = self._exact(u, t)[1].reshape(3, F, self._q)
            d = ex - hh.T[:, :, None]
            w = self.w.reshape(F, self._q) * self.cK[:, None]
            total = float(np.sum(w * (d[0] ** 2 + 2 * d[1] ** 2 + d[2] ** 2)))
        if self.penalty is not None:
            total += float(U @ (self.penalty @ U))
        return math.sqrt(max(total, 0.0))


def _cell_operator(space: Space, local, nrows) -> sp.csr_matrix:
    """Sparse operator mapping global coefficients to per-cell samples.
    ``local`` has shape (F, r, 6); row ``K*r + i`` evaluates sample i of K."""
    F, r, _ = local.shape
    rows = np.broadcast_to(np.arange(F * r).reshape(F, r, 1), (F, r, 6)).ravel()
    cols = np.broadcast_to(space.cell_dofs[:, None, :], (F, r, 6)).ravel()
    vals = local.ravel()
    keep = cols >= 0
    return sp.csr_matrix((vals[keep], (rows[keep], cols[keep])), shape=(nrows, space.ndof))


def l2_error(space: Space, U, u_exact=None, t: float = 0.0) -> float:
    return ErrorEvaluator(space).l2(U, u_exact, t)


def energy_error(space: Space, params: forms.FormParams | None, U, u_exact=None, t: float = 0.0) -> float:
    """Broken H2 seminorm of u - U plus, for dG/C0IP, the penalty seminorm of U."""
    return ErrorEvaluator(space, params).energy(U, u_exact, t)


# ---------------------------------------------------------------- rates


@dataclass
class ErrorRecord:
    h: float
    k: float
    l2_error: float
    energy_error: float
    energy_label: str = "pw"
    n: int | None = None

    def __post_init__(self):
        if self.l2_error < 0 or self.energy_error < 0:
            raise ValueError("errors must be non-negative")


def _rate(e0, e1, h0, h1) -> float:
    if not (e0 > 0 and e1 > 0) or h0 == h1:
        return math.nan
    return math.log(e0 / e1) / math.log(h0 / h1)


@dataclass
class RateTable:
    records: list[ErrorRecord]
    l2_rates: list[float] = field(default_factory=list)
    energy_rates: list[float] = field(default_factory=list)

    @property
    def undefined(self) -> list[int]:
        """Row indices whose rates could not be computed."""
        return [i for i in range(1, len(self.records)) if math.isnan(self.l2_rates[i]) or math.isnan(self.energy_rates[i])]

    def rows(self):
        for i, r in enumerate(self.records):
            yield r, self.l2_rates[i], self.energy_rates[i]

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["h", "k", "l2_error", "l2_rate", "energy_error", "energy_rate"])
            for r, lr, er in self.rows():
                w.writerow([_fmt(r.h), _fmt(r.k), _fmt(r.l2_error), _fmt(lr), _fmt(r.energy_error), _fmt(er)])

    def format(self) -> str:
        lines = [f"{'h':>8} {'k':>10} {'L2':>10} {'rate':>6} {'energy':>10} {'rate':>6}"]
        for r, lr, er in self.rows():
            lr_s = "--" if math.isnan(lr) else f"{lr:.3f}"
            er_s = "--" if math.isnan(er) else f"{er:.3f}"
            lines.append(f"{r.h:8.3f} {r.k:10.3e} {r.l2_error:10.2e} {lr_s:>6} {r.energy_error:10.2e} {er_s:>6}")
        return "\n".join(lines)


def convergence_rates(records) -> RateTable:
    records = sorted(records, key=lambda r: -r.h)
    if len(records) < 2:
        raise ValueError("need at least two records to compute rates")
    l2, en = [math.nan], [math.nan]
    for a, b in zip(records, records[1:]):
        l2.append(_rate(a.l2_error, b.l2_error, a.h, b.h))
        en.append(_rate(a.energy_error, b.energy_error, a.h, b.h))
    return RateTable(records, l2, en)


def _fmt(v: float) -> str:
    return "nan" if v is None or (isinstance(v, float) and math.isnan(v)) else f"{v:.17g}"


# ---------------------------------------------------------------- sensor


def clip_polygon(poly, rect):
    """Sutherland-Hodgman clipping of a convex polygon against an axis-aligned
    rectangle ``(x0, y0, x1, y1)``."""
    x0, y0, x1, y1 = rect
    planes = [(0, x0, 1.0), (0, x1, -1.0), (1, y0, 1.0), (1, y1, -1.0)]
    out = [tuple(p) for p in poly]
    for axis, bound, sgn in planes:
        if not out:
            break
        src, out = out, []
        for i, cur in enumerate(src):
            prev = src[i - 1]
            cin = sgn * (cur[axis] - bound) >= 0
            pin = sgn * (prev[axis] - bound) >= 0
            if cin != pin:
                s = (bound - prev[axis]) / (cur[axis] - prev[axis])
                out.append((prev[0] + s * (cur[0] - prev[0]), prev[1] + s * (cur[1] - prev[1])))
            if cin:
                out.append(cur)
    # drop repeated vertices produced by vertices lying on a clip line
    return [p for i, p in enumerate(out) if not np.allclose(p, out[i - 1], rtol=0, atol=1e-15)] if len(out) > 1 else out


class SensorFunctional:
    """Linear functional U -> int_region u_h dx; partially covered triangles
    are clipped and integrated exactly (P2 on sub-triangles, degree-4 rule)."""

    def __init__(self, space: Space, region):
        mesh = space.mesh
        x0, y0, x1, y1 = region
        rx0, ry0, rx1, ry1 = mesh.rect
        if not (rx0 <= x0 < x1 <= rx1 and ry0 <= y0 < y1 <= ry1):
            raise ValueError(f"sensor region {region} is not inside the domain {mesh.rect}")
        self.region = tuple(region)
        vec = np.zeros(space.ndof + 1)
        tri_pts = mesh.vertices[mesh.triangles]
        lo, hi = tri_pts.min(axis=1), tri_pts.max(axis=1)
        cand = np.flatnonzero((hi[:, 0] > x0) & (lo[:, 0] < x1) & (hi[:, 1] > y0) & (lo[:, 1] < y1))
        for K in cand:
            poly = clip_polygon(tri_pts[K], self.region)
            if len(poly) < 3:
                continue
            poly = np.array(poly)
            for j in range(1, len(poly) - 1):
                sub = np.array([poly[0], poly[j], poly[j + 1]])
                d1, d2 = sub[1] - sub[0], sub[2] - sub[0]
                area = 0.5 * abs(d1[0] * d2[1] - d1[1] * d2[0])
                if area == 0.0:
                    continue
                pts = TRI_DEG4.points @ sub
                val, _ = space.tabulate(np.array([K]), pts[None])
                np.add.at(vec, space.cell_dofs[K], area * (TRI_DEG4.weights @ val[0]))
        self.vector = vec[:-1]

    def __call__(self, U) -> float:
        return float(self.vector @ np.asarray(U, dtype=float))


def sensor_integral(space: Space, U, region) -> float:
    return SensorFunctional(space, region)(U)


def mesh_norm_error(space: Space, U, w, t: float = 0.0) -> float:
    """||w - U||_h for a smooth clamped ``w`` (its own jumps vanish): broken
    H2 seminorm of the difference plus the jump terms of ``U``."""
    J = forms.jump_functionals(space)
    return ErrorEvaluator(space, forms.FormParams(), penalty=(J.T @ J).tocsr()).energy(U, w, t)
