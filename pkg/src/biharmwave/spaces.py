"""Morley, discontinuous P2 and continuous P2 spaces on a triangulation.

Every local basis is a quadratic written in scaled monomials
``{1, xi, eta, xi^2, xi*eta, eta^2}`` with ``xi = (x - xc)/s``,
``eta = (y - yc)/s`` around the centroid; the coefficients come from
inverting the 6x6 matrix of degree-of-freedom functionals applied to those
monomials, so each basis function is dual to its functional.

Local dof order: three vertex dofs, then three edge dofs (edge i opposite
vertex i). For Morley the edge dof is the mean derivative along the mesh's
stored edge normal; for the Lagrange spaces it is the midpoint value.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .mesh import Mesh

ELIMINATED = -1


class SpaceKind(enum.Enum):
    MORLEY = "morley"
    DG = "dg"
    C0IP = "c0ip"

    @classmethod
    def parse(cls, value) -> "SpaceKind":
        if isinstance(value, cls):
            return value
        return cls(str(value).lower())


@dataclass(frozen=True, eq=False)
class Space:
    kind: SpaceKind
    mesh: Mesh
    ndof: int
    cell_dofs: np.ndarray  # (F, 6), ELIMINATED for clamped boundary dofs
    coeffs: np.ndarray  # (F, 6, 6): phi_j = sum_m coeffs[K, m, j] * p_m
    centers: np.ndarray  # (F, 2)
    scales: np.ndarray  # (F,)

    @property
    def hessians(self) -> np.ndarray:
        """Constant Hessians of all local basis functions, shape (F, 6, 2, 2)."""
        s2 = self.scales[:, None] ** 2
        c = self.coeffs
        hxx = 2.0 * c[:, 3, :] / s2
        hxy = c[:, 4, :] / s2
        hyy = 2.0 * c[:, 5, :] / s2
        return np.stack([np.stack([hxx, hxy], -1), np.stack([hxy, hyy], -1)], -2)

    def tabulate(self, tris, points):
        """Values (B, q, 6) and gradients (B, q, 6, 2) of the local bases of
        triangles ``tris`` (B,) at physical ``points`` (B, q, 2)."""
        tris = np.asarray(tris)
        pts = np.asarray(points, dtype=float)
        s = self.scales[tris][:, None]
        xi = (pts[..., 0] - self.centers[tris, 0][:, None]) / s
        eta = (pts[..., 1] - self.centers[tris, 1][:, None]) / s
        one, zero = np.ones_like(xi), np.zeros_like(xi)
        mono = np.stack([one, xi, eta, xi * xi, xi * eta, eta * eta], -1)
        dx = np.stack([zero, one, zero, 2 * xi, eta, zero], -1) / s[..., None]
        dy = np.stack([zero, zero, one, zero, xi, 2 * eta], -1) / s[..., None]
        C = self.coeffs[tris]
        val = np.einsum("bqm,bmj->bqj", mono, C)
        grad = np.stack([np.einsum("bqm,bmj->bqj", dx, C), np.einsum("bqm,bmj->bqj", dy, C)], -1)
        return val, grad

    def interpolation_functionals(self):
        """Physical nodes (F, 6, 2) of the dof functionals and, for Morley,
        the edge normals (F, 3, 2) used by the edge dofs."""
        return _dof_nodes(self.mesh)


def _monomials_at(x, y, center, s):
    xi = (x - center[..., 0]) / s
    eta = (y - center[..., 1]) / s
    return np.stack([np.ones_like(xi), xi, eta, xi * xi, xi * eta, eta * eta], -1)


def _dof_nodes(mesh: Mesh):
    p = mesh.vertices[mesh.triangles]  # (F, 3, 2)
    mids = 0.5 * (p[:, [1, 2, 0]] + p[:, [2, 0, 1]])
    return np.concatenate([p, mids], axis=1), mesh.edge_normals[mesh.tri_edges]


def _local_coefficients(mesh: Mesh, kind: SpaceKind):
    nodes, normals = _dof_nodes(mesh)
    centers = mesh.centroids
    scales = np.sqrt(2.0 * mesh.areas)
    c = centers[:, None, :]
    s = scales[:, None]
    D = _monomials_at(nodes[..., 0], nodes[..., 1], c, s)  # (F, 6, 6)
    if kind is SpaceKind.MORLEY:
        mx, my = nodes[:, 3:, 0], nodes[:, 3:, 1]
        xi = (mx - c[..., 0]) / s
        eta = (my - c[..., 1]) / s
        zero, one = np.zeros_like(xi), np.ones_like(xi)
        dxi = np.stack([zero, one, zero, 2 * xi, eta, zero], -1)
        deta = np.stack([zero, zero, one, zero, xi, 2 * eta], -1)
        nx, ny = normals[..., 0:1], normals[..., 1:2]
        D[:, 3:, :] = (nx * dxi + ny * deta) / s[..., None]
    return np.linalg.inv(D), centers, scales


def build_space(mesh: Mesh, kind) -> Space:
    kind = SpaceKind.parse(kind)
    F = mesh.n_triangles
    if kind is SpaceKind.DG:
        cell_dofs = np.arange(6 * F, dtype=np.int64).reshape(F, 6)
        ndof = 6 * F
    else:
        vmap = np.full(mesh.n_vertices, ELIMINATED, dtype=np.int64)
        inner_v = ~mesh.boundary_vertex
        vmap[inner_v] = np.arange(inner_v.sum())
        emap = np.full(mesh.n_edges, ELIMINATED, dtype=np.int64)
        inner_e = ~mesh.boundary_edge
        emap[inner_e] = inner_v.sum() + np.arange(inner_e.sum())
        cell_dofs = np.concatenate([vmap[mesh.triangles], emap[mesh.tri_edges]], axis=1)
        ndof = int(inner_v.sum() + inner_e.sum())
    coeffs, centers, scales = _local_coefficients(mesh, kind)
    return Space(kind, mesh, ndof, cell_dofs, coeffs, centers, scales)


def eval_basis(space: Space, K: int, points, tol: float = 1e-10):
    """Values (P, 6), gradients (P, 6, 2) and Hessians (P, 6, 2, 2) of the six
    local basis functions of triangle ``K`` at physical ``points`` (P, 2)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    p = space.mesh.vertices[space.mesh.triangles[K]]
    T = np.column_stack([p[1] - p[0], p[2] - p[0]])
    lam12 = np.linalg.solve(T, (pts - p[0]).T).T
    bary = np.column_stack([1.0 - lam12.sum(axis=1), lam12])
    if np.any(bary < -tol):
        raise ValueError(f"point(s) outside triangle {K}")
    val, grad = space.tabulate(np.array([K]), pts[None])
    hess = np.broadcast_to(space.hessians[K], (len(pts), 6, 2, 2))
    return val[0], grad[0], hess.copy()


def expand(space: Space, U) -> np.ndarray:
    """Per-triangle local coefficients (F, 6) of a global vector (zeros at
    eliminated dofs)."""
    U = np.asarray(U, dtype=float)
    padded = np.append(U, 0.0)
    return padded[space.cell_dofs]  # ELIMINATED == -1 picks the padding zero
