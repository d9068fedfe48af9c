"""Initial-data operators: Morley interpolation, Ritz-type projection and L2
projection.

The Ritz projection solves ``a_h(R w, v) = a_h(w, v)`` for all discrete
``v``, where ``w`` is smooth and clamped so its own jumps vanish:
``a_h(w, v) = a_pw(w, v) - sum_e int_e [[grad v]] . {{c D2 w}} n`` for the
penalty schemes, and plain ``a_pw(w, v)`` for Morley.

Without an explicit solver config the projections use the sparse Cholesky
route: CG cannot reach a 1e-12 residual on the stiffest dG systems.
"""
from __future__ import annotations

import numpy as np

from . import forms
from .quadrature import EDGE2, EDGE3, TRI_DEG4
from .sparse import CHOLESKY, LinearSolver, SolverConfig
from .spaces import Space, SpaceKind


def morley_interpolate(space: Space, w) -> np.ndarray:
    """Vertex values and Gauss-averaged edge normal derivatives of ``w`` at the
    interior Morley dofs. ``w`` needs a ``grad`` method."""
    if space.kind is not SpaceKind.MORLEY:
        raise ValueError(f"Morley interpolation needs a Morley space, got {space.kind.value}")
    mesh = space.mesh
    out = np.zeros(space.ndof)
    inner_v = np.flatnonzero(~mesh.boundary_vertex)
    x, y = mesh.vertices[inner_v].T
    out[: len(inner_v)] = w(x, y)

    inner_e = mesh.interior_edges
    a = mesh.vertices[mesh.edge_vertices[inner_e, 0]]
    b = mesh.vertices[mesh.edge_vertices[inner_e, 1]]
    pts = a[:, None, :] + EDGE2.points[None, :, None] * (b - a)[:, None, :]
    g = w.grad(pts[..., 0], pts[..., 1])  # (2, E, q)
    dn = np.einsum("dbq,bd->bq", g, mesh.edge_normals[inner_e])
    out[len(inner_v) :] = dn @ EDGE2.weights
    return out


def ritz_rhs(space: Space, params: forms.FormParams, w) -> np.ndarray:
    cK = forms.cell_coefficient(space, params.coefficient)
    pts, wts = forms.triangle_points(space, TRI_DEG4)
    wxx, wxy, wyy = w.hessian(pts[..., 0], pts[..., 1])
    # int_K D2 w : D2 phi_i, with D2 phi constant on K
    Wint = np.stack([(wts * wxx).sum(1), (wts * wxy).sum(1), (wts * wyy).sum(1)], -1)  # (F, 3)
    H = space.hessians
    local = cK[:, None] * (
        Wint[:, None, 0] * H[:, :, 0, 0] + 2.0 * Wint[:, None, 1] * H[:, :, 0, 1] + Wint[:, None, 2] * H[:, :, 1, 1]
    )
    rhs = np.zeros(space.ndof + 1)
    np.add.at(rhs, space.cell_dofs.ravel(), local.ravel())

    if space.kind is not SpaceKind.MORLEY:
        tr = forms.edge_traces(space, EDGE3)
        hx, hxy, hy = w.hessian(tr.points[..., 0], tr.points[..., 1])  # (E, q)
        D2w = np.stack([np.stack([hx, hxy], -1), np.stack([hxy, hy], -1)], -2)  # (E, q, 2, 2)
        n = tr.normals
        cL = cK[tr.tris[:, 0]]
        cR = cK[tr.tris[:, 1]]
        bnd = space.mesh.boundary_edge[tr.edges]
        cavg = np.where(bnd, cL, 0.5 * (cL + cR))
        dwn = cavg[:, None, None] * np.einsum("bqde,be->bqd", D2w, n)
        edge_local = -np.einsum("bq,bqid,bqd->bi", tr.weights, tr.jump_grad, dwn)
        np.add.at(rhs, tr.dofs.ravel(), edge_local.ravel())
    return rhs[:-1]


def ritz_project(space: Space, params: forms.FormParams | None, w, cfg: SolverConfig | None = None, A=None) -> np.ndarray:
    params = params or forms.FormParams()
    A = A if A is not None else forms.assemble_ah(space, params)
    b = ritz_rhs(space, params, w)
    if not np.any(b):
        return np.zeros(space.ndof)
    return LinearSolver(A, cfg or SolverConfig(method=CHOLESKY))(b)


def l2_project(space: Space, w, cfg: SolverConfig | None = None, M=None) -> np.ndarray:
    M = M if M is not None else forms.assemble_mass(space)
    b = forms.assemble_load(space, w)
    if not np.any(b):
        return np.zeros(space.ndof)
    return LinearSolver(M, cfg or SolverConfig(method=CHOLESKY))(b)
