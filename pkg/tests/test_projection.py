import numpy as np
import pytest

from biharmwave import forms
from biharmwave.analysis import ErrorEvaluator, mesh_norm_error
from biharmwave.mesh import build_uniform
from biharmwave.problems import example1
from biharmwave.projection import l2_project, morley_interpolate, ritz_project
from biharmwave.spaces import build_space, expand


class DiscreteField:
    """A discrete function on the unit-square grid, evaluated by locating the
    containing triangle (test-only helper)."""

    def __init__(self, space, U):
        self.space, self.loc = space, expand(space, U)
        self.n = space.mesh.shape[0]
        self.H = np.einsum("kj,kjde->kde", self.loc, space.hessians)

    def _tri(self, x, y):
        n = self.n
        i = np.clip(np.floor(x * n).astype(int), 0, n - 1)
        j = np.clip(np.floor(y * n).astype(int), 0, n - 1)
        upper = (y - j / n) > (x - i / n)
        return 2 * (j * n + i) + upper

    def hessian(self, x, y, t=0.0):
        H = self.H[self._tri(np.asarray(x), np.asarray(y))]
        return H[..., 0, 0], H[..., 0, 1], H[..., 1, 1]

    def __call__(self, x, y, t=0.0):
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        K = self._tri(x, y)
        pts = np.stack([x, y], -1).reshape(-1, 1, 2)
        val, _ = self.space.tabulate(K.ravel(), pts)
        return np.einsum("bj,bj->b", val[:, 0], self.loc[K.ravel()]).reshape(x.shape)


def test_morley_interpolation_requires_morley():
    space = build_space(build_uniform(2, 2), "dg")
    with pytest.raises(ValueError):
        morley_interpolate(space, example1().u0)


def test_morley_interpolation_dofs():
    g = example1().u0
    space = build_space(build_uniform(4, 4), "morley")
    I = morley_interpolate(space, g)
    mesh = space.mesh
    inner = np.flatnonzero(~mesh.boundary_vertex)
    assert np.allclose(I[: len(inner)], g(*mesh.vertices[inner].T))


def test_morley_ritz_tends_to_interpolant():
    # a_pw(w - I_M w, v_M) = 0, so the Morley projection is the interpolant up
    # to quadrature error in the right-hand side
    g = example1().u0
    diffs = []
    for n in (4, 8, 16):
        space = build_space(build_uniform(n, n), "morley")
        R, I = ritz_project(space, None, g), morley_interpolate(space, g)
        diffs.append(np.abs(R - I).max() / np.abs(I).max())
    assert diffs[0] / diffs[1] > 8 and diffs[1] / diffs[2] > 8


def test_morley_ritz_is_idempotent(rng):
    space = build_space(build_uniform(4, 4), "morley")
    U = rng.standard_normal(space.ndof)
    R = ritz_project(space, None, DiscreteField(space, U))
    assert np.allclose(R, U, rtol=0, atol=1e-10 * np.abs(U).max())


def test_l2_projection_reproduces_discrete_functions(rng):
    space = build_space(build_uniform(3, 3), "dg")
    U = rng.standard_normal(space.ndof)
    P = l2_project(space, DiscreteField(space, U))
    assert np.allclose(P, U, atol=1e-10)


def test_zero_field_projects_to_zero():
    space = build_space(build_uniform(3, 3), "c0ip")
    zero = example1().u0.with_time(lambda t: 0.0)
    assert not np.any(ritz_project(space, forms.FormParams(), zero))


@pytest.mark.parametrize("kind", ["morley", "dg", "c0ip"])
def test_ritz_projection_energy_rate(kind):
    g = example1().u0
    errs, l2 = [], []
    for n in (8, 16, 32):
        space = build_space(build_uniform(n, n), kind)
        U = ritz_project(space, forms.FormParams(), g)
        errs.append(mesh_norm_error(space, U, g))
        l2.append(ErrorEvaluator(space).l2(U, g))
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(np.abs(rates - 1.0) < 0.15)
    # L2 converges at least quadratically in the asymptotic range
    assert np.log2(l2[1] / l2[2]) > 1.7
