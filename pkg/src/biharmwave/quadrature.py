"""Quadrature rules on the reference triangle and the reference edge.

Triangle rules are given in barycentric coordinates with weights normalized
to sum to one, so ``sum(w * f(x)) * area`` integrates over a physical
triangle. Edge rules live on [0, 1] with weights summing to one.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray  # (q, 3) barycentric for triangles, (q,) in [0, 1] for edges
    weights: np.ndarray  # (q,), sum to 1
    degree: int

    @property
    def size(self) -> int:
        return len(self.weights)


def _orbit3(a: float) -> list[tuple[float, float, float]]:
    b = 1.0 - 2.0 * a
    return [(a, a, b), (a, b, a), (b, a, a)]


def _orbit6(a: float, b: float) -> list[tuple[float, float, float]]:
    c = 1.0 - a - b
    return [(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)]


def _symmetric_rule(groups, degree: int) -> QuadratureRule:
    pts, wts = [], []
    for orbit, w in groups:
        pts.extend(orbit)
        wts.extend([w] * len(orbit))
    return QuadratureRule(np.array(pts), np.array(wts), degree)


# Dunavant rules, constants refined against the moment equations.
TRI_DEG4 = _symmetric_rule(
    [
        (_orbit3(0.44594849091596488632), 0.22338158967801146570),
        (_orbit3(0.09157621350977074346), 0.10995174365532186764),
    ],
    4,
)

TRI_DEG6 = _symmetric_rule(
    [
        (_orbit3(0.24928674517091042129), 0.11678627572637936603),
        (_orbit3(0.06308901449150222834), 0.050844906370206816921),
        (_orbit6(0.053145049844816947353, 0.31035245103378440542), 0.082851075618373575194),
    ],
    6,
)


def gauss_edge(npts: int) -> QuadratureRule:
    """Gauss-Legendre rule mapped to [0, 1]; exact to degree 2*npts - 1."""
    x, w = np.polynomial.legendre.leggauss(npts)
    return QuadratureRule(0.5 * (x + 1.0), 0.5 * w, 2 * npts - 1)


def collapsed_gauss_triangle(npts: int) -> QuadratureRule:
    """Conical product (Duffy) rule with npts**2 points, exact to degree 2*npts - 2."""
    x, w = np.polynomial.legendre.leggauss(npts)
    s, ws = 0.5 * (x + 1.0), 0.5 * w
    u, v = np.meshgrid(s, s, indexing="ij")
    wu, wv = np.meshgrid(ws, ws, indexing="ij")
    l1 = u.ravel()
    l2 = ((1.0 - u) * v).ravel()
    wt = (wu * wv * (1.0 - u)).ravel() * 2.0
    pts = np.column_stack([l1, l2, 1.0 - l1 - l2])
    return QuadratureRule(pts, wt, 2 * npts - 2)


EDGE2 = gauss_edge(2)
EDGE3 = gauss_edge(3)
