import numpy as np
import pytest
import sympy as sp

from biharmwave import problems

x, y, t = sp.symbols("x y t")
U1 = sp.exp(-t) * (x * (x - 1) * y * (y - 1)) ** 2
U2 = sp.Rational(1, 5) * sp.exp(-100 * (x**2 + y**2)) * (1 - x**2) ** 2 * (1 - y**2) ** 2


def bilap(u):
    return sp.diff(u, x, 4) + 2 * sp.diff(u, x, 2, y, 2) + sp.diff(u, y, 4)


def sample_points(rect, n=25, seed=0):
    rng = np.random.default_rng(seed)
    x0, y0, x1, y1 = rect
    return rng.uniform(x0, x1, n), rng.uniform(y0, y1, n)


def check(field, expr, X, Y, T=0.0, rtol=1e-11):
    f = sp.lambdify((x, y, t), expr, "numpy")
    ref = np.broadcast_to(f(X, Y, T), X.shape)
    scale = np.abs(ref).max() + 1e-300
    assert np.abs(np.asarray(field) - ref).max() <= rtol * scale


def test_example1_solution_and_derivatives():
    p = problems.example1()
    X, Y = sample_points(p.rect)
    for T in (0.0, 0.4, 1.0):
        check(p.exact(X, Y, T), U1, X, Y, T)
        gx, gy = p.exact.grad(X, Y, T)
        check(gx, sp.diff(U1, x), X, Y, T)
        check(gy, sp.diff(U1, y), X, Y, T)
        hxx, hxy, hyy = p.exact.hessian(X, Y, T)
        check(hxx, sp.diff(U1, x, 2), X, Y, T)
        check(hxy, sp.diff(U1, x, y), X, Y, T)
        check(hyy, sp.diff(U1, y, 2), X, Y, T)
        check(p.exact.bilaplacian(X, Y, T), bilap(U1), X, Y, T)


def test_example1_forcing_matches_equation():
    p = problems.example1()
    X, Y = sample_points(p.rect, seed=1)
    forcing = sp.diff(U1, t, 2) + bilap(U1)
    for T in (0.0, 0.25, 0.9):
        check(p.f(X, Y, T), forcing, X, Y, T)


def test_example1_bilaplacian_by_finite_differences():
    p = problems.example1()
    g = p.u0
    h = 1e-2
    X, Y = np.array([0.3, 0.55]), np.array([0.45, 0.7])
    # 13-point stencil for the bilaplacian, O(h^2)
    s = lambda i, j: g(X + i * h, Y + j * h)
    fd = (20 * s(0, 0) - 8 * (s(1, 0) + s(-1, 0) + s(0, 1) + s(0, -1))
          + 2 * (s(1, 1) + s(1, -1) + s(-1, 1) + s(-1, -1))
          + s(2, 0) + s(-2, 0) + s(0, 2) + s(0, -2)) / h**4
    assert np.allclose(fd, g.bilaplacian(X, Y), rtol=1e-3)


def test_example1_initial_data():
    p = problems.example1()
    X, Y = sample_points(p.rect, seed=2)
    check(p.u0(X, Y), U1.subs(t, 0), X, Y)
    check(p.v0(X, Y), sp.diff(U1, t).subs(t, 0), X, Y)
    assert p.rect == (0.0, 0.0, 1.0, 1.0) and p.T_end == 1.0


def test_example2_initial_data():
    p = problems.example2()
    X, Y = sample_points(p.rect, seed=3)
    X = np.concatenate([X, 0.2 * X])  # include points near the pulse peak
    Y = np.concatenate([Y, 0.2 * Y])
    check(p.u0(X, Y), U2, X, Y)
    gx, gy = p.u0.grad(X, Y)
    check(gx, sp.diff(U2, x), X, Y)
    check(gy, sp.diff(U2, y), X, Y)
    hxx, hxy, hyy = p.u0.hessian(X, Y)
    check(hxx, sp.diff(U2, x, 2), X, Y)
    check(hxy, sp.diff(U2, x, y), X, Y)
    check(hyy, sp.diff(U2, y, 2), X, Y)
    assert p.f is None and p.v0 is None
    assert p.T_end == pytest.approx(0.03) and p.rect == (-1.0, -1.0, 1.0, 1.0)


def test_layered_coefficient():
    c = problems.layered_coefficient(np.zeros(4), np.array([-1.0, 0.19999, 0.2, 0.9]))
    assert np.array_equal(c, [1.0, 1.0, 9.0, 9.0])


def test_sensor_region():
    x0, y0, x1, y1 = problems.sensor_region()
    assert (x1 - x0, y1 - y0) == (1 / 16, 1 / 16)
    assert (x0 + x1) / 2 == 0.75 and (y0 + y1) / 2 == 0.0
