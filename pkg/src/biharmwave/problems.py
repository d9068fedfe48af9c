"""Closed-form data for the two experiments.

Fields are callables ``f(x, y, t)``; smooth solutions additionally expose
gradients and Hessians, which the projections and error norms need. Both
experiments use data that factor as ``T(t) X(x) Y(y)``, so derivatives come
from one-dimensional derivative tables.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np


@dataclass(frozen=True)
class SeparableField:
    """u(x, y, t) = T(t) X(x) Y(y). ``X[k]``/``Y[k]`` are the k-th derivatives."""

    X: Sequence[Callable]
    Y: Sequence[Callable]
    T: Callable = lambda t: 1.0

    def __call__(self, x, y, t=0.0):
        return self.T(t) * self.X[0](x) * self.Y[0](y)

    def grad(self, x, y, t=0.0):
        s = self.T(t)
        return np.stack([s * self.X[1](x) * self.Y[0](y), s * self.X[0](x) * self.Y[1](y)])

    def hessian(self, x, y, t=0.0):
        """Returns (u_xx, u_xy, u_yy)."""
        s = self.T(t)
        X0, X1, X2 = (f(x) for f in self.X[:3])
        Y0, Y1, Y2 = (f(y) for f in self.Y[:3])
        return np.stack([s * X2 * Y0, s * X1 * Y1, s * X0 * Y2])

    def bilaplacian(self, x, y, t=0.0):
        X = [f(x) for f in self.X[:5]]
        Y = [f(y) for f in self.Y[:5]]
        return self.T(t) * (X[4] * Y[0] + 2.0 * X[2] * Y[2] + X[0] * Y[4])

    def with_time(self, T: Callable) -> "SeparableField":
        return SeparableField(self.X, self.Y, T)


@dataclass(frozen=True)
class TimeSeparable:
    """g(x, y, t) = T(t) * spatial(x, y); lets loads be assembled once."""

    spatial: Callable
    T: Callable

    def __call__(self, x, y, t=0.0):
        return self.T(t) * self.spatial(x, y)


def _bubble_squared():
    """(s(s-1))^2 = s^4 - 2 s^3 + s^2 and its derivatives."""
    p = np.polynomial.Polynomial([0.0, 0.0, 1.0, -2.0, 1.0])
    return [p.deriv(k) if k else p for k in range(5)]


@dataclass(frozen=True)
class Problem:
    name: str
    rect: tuple[float, float, float, float]
    T_end: float
    u0: Callable
    v0: Callable | None
    f: Callable | None
    exact: SeparableField | None = None
    coefficient: Callable | None = None


def example1() -> Problem:
    """u = exp(-t) (x(x-1) y(y-1))^2 on the unit square, t in [0, 1]."""
    P = _bubble_squared()
    g = SeparableField(P, P)
    u = g.with_time(lambda t: np.exp(-t))

    # u_tt + bilaplacian(u) = exp(-t) (g + bilaplacian(g))
    f = TimeSeparable(lambda x, y: g(x, y) + g.bilaplacian(x, y), lambda t: np.exp(-t))

    return Problem(
        name="example1",
        rect=(0.0, 0.0, 1.0, 1.0),
        T_end=1.0,
        u0=g,
        v0=lambda x, y, t=0.0: -g(x, y),
        f=f,
        exact=u,
    )


def _pulse_factor():
    """X(s) = exp(-100 s^2) (1 - s^2)^2 and derivatives up to order 2."""

    def d0(s):
        return np.exp(-100.0 * s * s) * (1.0 - s * s) ** 2

    def d1(s):
        a = np.exp(-100.0 * s * s)
        b = (1.0 - s * s) ** 2
        return -200.0 * s * a * b + a * (-4.0 * s * (1.0 - s * s))

    def d2(s):
        a = np.exp(-100.0 * s * s)
        b = (1.0 - s * s) ** 2
        a1 = -200.0 * s * a
        a2 = (-200.0 + 40000.0 * s * s) * a
        b1 = -4.0 * s * (1.0 - s * s)
        b2 = -4.0 + 12.0 * s * s
        return a2 * b + 2.0 * a1 * b1 + a * b2

    return [d0, d1, d2]


def layered_coefficient(x, y):
    """Rigidity 1 below x2 = 0.2 and 9 from there up."""
    return np.where(np.asarray(y) < 0.2, 1.0, 9.0) + 0.0 * np.asarray(x)


def example2(T_end: float = 3.0 / 100.0, coefficient: Callable | None = layered_coefficient) -> Problem:
    """Regularized impulse in a two-layer plate on (-1, 1)^2, f = 0, v0 = 0."""
    X = _pulse_factor()
    Y = [lambda s, d=d: 0.2 * d(s) for d in X]
    u0 = SeparableField(X, Y)
    return Problem(
        name="example2",
        rect=(-1.0, -1.0, 1.0, 1.0),
        T_end=T_end,
        u0=u0,
        v0=None,
        f=None,
        exact=None,
        coefficient=coefficient,
    )


SENSOR_HALF_WIDTH = 1.0 / 32.0


def sensor_region(center=(0.75, 0.0), half_width: float = SENSOR_HALF_WIDTH):
    cx, cy = center
    return (cx - half_width, cy - half_width, cx + half_width, cy + half_width)
