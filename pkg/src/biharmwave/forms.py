"""Assembly of the discrete bilinear forms, mass matrix, loads and the
mesh-dependent norm.

All forms are built from batched local matrices (one 6x6 block per triangle,
one 12x12 block per edge coupling its left and right triangles) scattered
into a sparse matrix. The local kernels are public so they can be checked
against independent quadrature.

Jumps follow the mesh convention ``[[v]] = v_left - v_right`` with the
normal pointing left to right; on boundary edges jump and average reduce to
the trace of the single adjacent triangle.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .quadrature import EDGE2, EDGE3, TRI_DEG4, QuadratureRule
from .sparse import SparseMatrix
from .spaces import Space, SpaceKind, expand


@dataclass(frozen=True)
class FormParams:
    sigma_dg1: float = 10.0
    sigma_dg2: float = 15.0
    sigma_ip: float = 10.0
    coefficient: Callable | float | None = field(default=None, compare=False)
    # length h_e in the penalty weights: "edge" (|e|), "circumradius" or
    # "diameter" (averaged over the triangles sharing e). None picks
    # "circumradius" for dG (|e| leaves a_h indefinite at sigma_dg1 = 10 on
    # the structured meshes) and "edge" for C0IP.
    penalty_length: str | None = None
    # coefficient weighting of the penalty on each edge: "max" multiplies by
    # max(c_left, c_right), "none" leaves it unweighted (indefinite a_h once
    # c varies by a factor 9 at the default penalties)
    penalty_coefficient: str = "max"

    def length_kind(self, kind: SpaceKind) -> str:
        if self.penalty_length is not None:
            return self.penalty_length
        return "circumradius" if kind is SpaceKind.DG else "edge"

    def check(self, kind: SpaceKind) -> None:
        if kind is SpaceKind.DG and not (self.sigma_dg1 > 0 and self.sigma_dg2 > 0):
            raise ValueError("dG penalties must be positive")
        if kind is SpaceKind.C0IP and not self.sigma_ip > 0:
            raise ValueError("C0IP penalty must be positive")


def cell_coefficient(space: Space, c=None) -> np.ndarray:
    """Per-triangle coefficient values, sampled at centroids."""
    F = space.mesh.n_triangles
    if c is None:
        return np.ones(F)
    if callable(c):
        xc = space.mesh.centroids
        return np.broadcast_to(np.asarray(c(xc[:, 0], xc[:, 1]), dtype=float), (F,)).copy()
    return np.full(F, float(c))


def triangle_points(space: Space, rule: QuadratureRule = TRI_DEG4, tris=None):
    """Physical quadrature points (B, q, 2) and weights (B, q) including areas."""
    mesh = space.mesh
    tris = np.arange(mesh.n_triangles) if tris is None else np.asarray(tris)
    p = mesh.vertices[mesh.triangles[tris]]
    pts = np.einsum("qi,bid->bqd", rule.points, p)
    wts = mesh.areas[tris][:, None] * rule.weights[None, :]
    return pts, wts


def _scatter(dofs, local, ndof, name) -> SparseMatrix:
    n = dofs.shape[1]
    rows = np.repeat(dofs, n, axis=1).ravel()
    cols = np.tile(dofs, (1, n)).ravel()
    return SparseMatrix.from_triplets(rows, cols, local.ravel(), (ndof, ndof), name=name)


# ---------------------------------------------------------------- element kernels


def local_apw(space: Space, cK=None, tris=None) -> np.ndarray:
    tris = np.arange(space.mesh.n_triangles) if tris is None else np.asarray(tris)
    H = space.hessians[tris]
    cK = np.ones(len(tris)) if cK is None else np.broadcast_to(np.asarray(cK, dtype=float), (space.mesh.n_triangles,))[tris]
    return np.einsum("b,bidk,bjdk->bij", cK * space.mesh.areas[tris], H, H)


def local_mass(space: Space, tris=None) -> np.ndarray:
    pts, wts = triangle_points(space, TRI_DEG4, tris)
    tris = np.arange(space.mesh.n_triangles) if tris is None else np.asarray(tris)
    val, _ = space.tabulate(tris, pts)
    return np.einsum("bq,bqi,bqj->bij", wts, val, val)


# ---------------------------------------------------------------- edge traces


@dataclass(frozen=True)
class EdgeTraces:
    """Jumps and averages of the 12 basis functions attached to each edge
    (6 from the left triangle, then 6 from the right) at edge quadrature
    points."""

    edges: np.ndarray  # (B,)
    dofs: np.ndarray  # (B, 12)
    points: np.ndarray  # (B, q, 2)
    weights: np.ndarray  # (B, q), include the edge length
    lengths: np.ndarray  # (B,)
    normals: np.ndarray  # (B, 2)
    jump: np.ndarray  # (B, q, 12)
    jump_grad: np.ndarray  # (B, q, 12, 2)
    avg_weights: np.ndarray  # (B, 12): 1/2 each side inside, 1 for the left trace on the boundary
    hessians: np.ndarray  # (B, 12, 2, 2)
    tris: np.ndarray  # (B, 2), right == left on the boundary (masked out)

    def avg_hess_normal(self, cK=None) -> np.ndarray:
        """{{c D^2 phi}} n for each of the 12 functions, shape (B, 12, 2)."""
        w = self.avg_weights
        if cK is not None:
            cK = np.asarray(cK)
            w = w * np.concatenate([np.repeat(cK[self.tris[:, :1]], 6, 1), np.repeat(cK[self.tris[:, 1:]], 6, 1)], 1)
        return np.einsum("bi,bide,be->bid", w, self.hessians, self.normals)


def edge_traces(space: Space, rule: QuadratureRule, edges=None) -> EdgeTraces:
    mesh = space.mesh
    edges = np.arange(mesh.n_edges) if edges is None else np.asarray(edges)
    left = mesh.edge_left[edges]
    right = mesh.edge_right[edges]
    bnd = right < 0
    right_t = np.where(bnd, left, right)

    a = mesh.vertices[mesh.edge_vertices[edges, 0]]
    b = mesh.vertices[mesh.edge_vertices[edges, 1]]
    pts = a[:, None, :] + rule.points[None, :, None] * (b - a)[:, None, :]
    h = mesh.edge_lengths[edges]
    wts = h[:, None] * rule.weights[None, :]

    vL, gL = space.tabulate(left, pts)
    vR, gR = space.tabulate(right_t, pts)
    keep = np.where(bnd, 0.0, 1.0)
    jump = np.concatenate([vL, -keep[:, None, None] * vR], axis=2)
    jump_grad = np.concatenate([gL, -keep[:, None, None, None] * gR], axis=2)

    H = space.hessians
    hess = np.concatenate([H[left], H[right_t]], axis=1)
    half = np.where(bnd, 1.0, 0.5)
    avg_w = np.concatenate([np.repeat(half[:, None], 6, 1), np.repeat((keep * 0.5)[:, None], 6, 1)], axis=1)

    dofs = np.concatenate([space.cell_dofs[left], np.where(bnd[:, None], -1, space.cell_dofs[right_t])], axis=1)
    return EdgeTraces(
        edges=edges,
        dofs=dofs,
        points=pts,
        weights=wts,
        lengths=h,
        normals=mesh.edge_normals[edges],
        jump=jump,
        jump_grad=jump_grad,
        avg_weights=avg_w,
        hessians=hess,
        tris=np.column_stack([left, right_t]),
    )


def local_bh(space: Space, cK=None, edges=None) -> np.ndarray:
    tr = edge_traces(space, EDGE2, edges)
    avg = tr.avg_hess_normal(cK)  # (B, 12, 2)
    # T[i, j] = int_e [[grad phi_j]] . {{c D2 phi_i}} n
    T = np.einsum("bq,bqjd,bid->bij", tr.weights, tr.jump_grad, avg)
    return -(T + np.swapaxes(T, 1, 2)), tr.dofs


def penalty_lengths(space: Space, kind: str = "edge", edges=None) -> np.ndarray:
    mesh = space.mesh
    edges = np.arange(mesh.n_edges) if edges is None else np.asarray(edges)
    if kind == "edge":
        return mesh.edge_lengths[edges]
    p = mesh.vertices[mesh.triangles]
    sides = np.linalg.norm(p[:, [1, 2, 0]] - p[:, [2, 0, 1]], axis=2)
    if kind == "circumradius":
        hK = sides.prod(axis=1) / (4.0 * mesh.areas)
    elif kind == "diameter":
        hK = sides.max(axis=1)
    else:
        raise ValueError(f"unknown penalty length {kind!r}")
    left, right = mesh.edge_left[edges], mesh.edge_right[edges]
    return np.where(right < 0, hK[left], 0.5 * (hK[left] + hK[np.maximum(right, 0)]))


def edge_coefficient(space: Space, cK, edges=None) -> np.ndarray:
    """max(c_left, c_right) per edge (c_left on the boundary)."""
    mesh = space.mesh
    edges = np.arange(mesh.n_edges) if edges is None else np.asarray(edges)
    cK = np.asarray(cK, dtype=float)
    left, right = mesh.edge_left[edges], mesh.edge_right[edges]
    return np.where(right < 0, cK[left], np.maximum(cK[left], cK[np.maximum(right, 0)]))


def local_penalty(space: Space, sigma_value: float, sigma_normal: float, edges=None, length: str = "edge",
                  cK=None) -> np.ndarray:
    he = penalty_lengths(space, length, edges)
    ce = 1.0 if cK is None else edge_coefficient(space, cK, edges)
    out = 0.0
    if sigma_value:
        tr = edge_traces(space, EDGE3, edges)
        scale = ce * sigma_value / he**3
        out = out + np.einsum("b,bq,bqi,bqj->bij", scale, tr.weights, tr.jump, tr.jump)
    tr = edge_traces(space, EDGE2, edges)
    jn = np.einsum("bqid,bd->bqi", tr.jump_grad, tr.normals)
    scale = ce * sigma_normal / he
    out = out + np.einsum("b,bq,bqi,bqj->bij", scale, tr.weights, jn, jn)
    return out, tr.dofs


# ---------------------------------------------------------------- global assembly


def assemble_apw(space: Space, c=None) -> SparseMatrix:
    cK = cell_coefficient(space, c)
    return _scatter(space.cell_dofs, local_apw(space, cK), space.ndof, "a_pw")


def assemble_bh(space: Space, c=None) -> SparseMatrix:
    cK = cell_coefficient(space, c)
    local, dofs = local_bh(space, cK)
    return _scatter(dofs, local, space.ndof, "b_h")


def penalty_weights(space: Space, params: FormParams) -> tuple[float, float]:
    if space.kind is SpaceKind.DG:
        return params.sigma_dg1, params.sigma_dg2
    if space.kind is SpaceKind.C0IP:
        return 0.0, params.sigma_ip
    raise ValueError("no penalty form is defined on the Morley space")


def assemble_penalty(space: Space, params: FormParams) -> SparseMatrix:
    s1, s2 = penalty_weights(space, params)
    if params.penalty_coefficient not in ("max", "none"):
        raise ValueError(f"unknown penalty coefficient weighting {params.penalty_coefficient!r}")
    cK = cell_coefficient(space, params.coefficient) if params.penalty_coefficient == "max" else None
    local, dofs = local_penalty(space, s1, s2, length=params.length_kind(space.kind), cK=cK)
    return _scatter(dofs, local, space.ndof, "c_dG" if space.kind is SpaceKind.DG else "c_IP")


def assemble_ah(space: Space, params: FormParams | None = None) -> SparseMatrix:
    params = params or FormParams()
    A = assemble_apw(space, params.coefficient)
    if space.kind is SpaceKind.MORLEY:
        return SparseMatrix(A.scipy, name="a_h")
    params.check(space.kind)
    A = A + assemble_bh(space, params.coefficient) + assemble_penalty(space, params)
    return SparseMatrix(A.scipy, name="a_h")


def assemble_mass(space: Space) -> SparseMatrix:
    return _scatter(space.cell_dofs, local_mass(space), space.ndof, "mass")


class LoadOperator:
    """Precomputed map from field samples at the degree-4 points to the
    load vector ``F_i = sum_K int_K g phi_i``."""

    def __init__(self, space: Space, rule: QuadratureRule = TRI_DEG4):
        pts, wts = triangle_points(space, rule)
        val, _ = space.tabulate(np.arange(space.mesh.n_triangles), pts)
        F, q = wts.shape
        rows = np.broadcast_to(space.cell_dofs[:, None, :], (F, q, 6)).ravel()
        cols = np.broadcast_to(np.arange(F * q).reshape(F, q, 1), (F, q, 6)).ravel()
        vals = (wts[..., None] * val).ravel()
        keep = rows >= 0
        self.matrix = sp.csr_matrix((vals[keep], (rows[keep], cols[keep])), shape=(space.ndof, F * q))
        self.x = pts[..., 0].ravel()
        self.y = pts[..., 1].ravel()
        self.space = space
        self._cache = {}

    def __call__(self, g, t=0.0) -> np.ndarray:
        if g is None:
            return np.zeros(self.space.ndof)
        spatial = getattr(g, "spatial", None)
        if spatial is not None and hasattr(g, "T"):
            key = id(spatial)
            if key not in self._cache:
                self._cache[key] = (spatial, self.matrix @ np.asarray(spatial(self.x, self.y), dtype=float))
            return g.T(t) * self._cache[key][1]
        samples = np.broadcast_to(np.asarray(_eval_field(g, self.x, self.y, t), dtype=float), self.x.shape)
        return self.matrix @ samples


def _eval_field(g, x, y, t):
    if callable(g):
        return g(x, y, t)
    return np.full_like(x, float(g))


def assemble_load(space: Space, g, t: float = 0.0) -> np.ndarray:
    return LoadOperator(space)(g, t)


# ---------------------------------------------------------------- mesh-dependent norm


def jump_functionals(space: Space):
    """Rows evaluating vertex jumps (scaled by 1/h_e) and edge-mean
    normal-derivative jumps; the squared norms of their images give the jump
    part of the mesh-dependent norm."""
    mesh = space.mesh
    ends = QuadratureRule(np.array([0.0, 1.0]), np.array([1.0, 1.0]), 0)
    tv = edge_traces(space, ends)
    vert = tv.jump / tv.lengths[:, None, None]  # (E, 2, 12)
    tn = edge_traces(space, EDGE2)
    mean_jn = np.einsum("bq,bqid,bd->bi", tn.weights, tn.jump_grad, tn.normals) / tn.lengths[:, None]
    E = mesh.n_edges
    shape = (3 * E, space.ndof)
    rows = np.concatenate(
        [
            np.repeat(np.arange(E)[:, None] * 2 + 0, 12, 1),
            np.repeat(np.arange(E)[:, None] * 2 + 1, 12, 1),
            np.repeat(2 * E + np.arange(E)[:, None], 12, 1),
        ]
    ).ravel()
    cols = np.concatenate([tv.dofs, tv.dofs, tn.dofs]).ravel()
    vals = np.concatenate([vert[:, 0], vert[:, 1], mean_jn]).ravel()
    keep = cols >= 0
    return sp.csr_matrix((vals[keep], (rows[keep], cols[keep])), shape=shape)


def assemble_norm_gram(space: Space) -> SparseMatrix:
    """Gram matrix H with v^T H v = ||v||_h^2."""
    J = jump_functionals(space)
    H = assemble_apw(space).scipy + (J.T @ J)
    return SparseMatrix(H, name="mesh_norm")


def mesh_dependent_norm(space: Space, v) -> float:
    v = np.asarray(v, dtype=float)
    cK = expand(space, v)
    hess = np.einsum("bi,bide->bde", cK, space.hessians)
    broken = float(np.sum(space.mesh.areas * np.einsum("bde,bde->b", hess, hess)))
    jumps = jump_functionals(space) @ v
    return float(np.sqrt(broken + jumps @ jumps))
