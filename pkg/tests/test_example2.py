import io

import numpy as np
import pytest
from scipy.integrate import quad

from biharmwave import cli, problems
from biharmwave.analysis import SensorFunctional
from biharmwave.config import RunConfig
from biharmwave.timestep import Trajectory

KINDS = ["morley", "dg", "c0ip"]


def traces(kind, n, steps, coefficient, centers):
    cfg = cli.example2_config(RunConfig(scheme=kind, n=(n,), coupling="steps", steps=steps))
    traj = Trajectory(cfg, problem=problems.example2(coefficient=coefficient), measure_errors=False,
                      track_energy=False)
    sensors = [SensorFunctional(traj.space, problems.sensor_region(c)) for c in centers]
    return np.array([[s(rec.U) for s in sensors] for rec in traj])


@pytest.mark.parametrize("kind", KINDS)
def test_point_reflection_symmetry_with_constant_coefficient(kind):
    # with c = 1 the mesh, the data and the equation are invariant under
    # (x, y) -> (-x, -y), which maps the sensor at (0.75, 0) to (-0.75, 0)
    tr = traces(kind, 12, 30, None, [(0.75, 0.0), (-0.75, 0.0)])
    scale = np.abs(tr).max()
    assert scale > 0
    np.testing.assert_allclose(tr[:, 0], tr[:, 1], rtol=0, atol=1e-10 * scale)


def test_layered_coefficient_changes_the_trace():
    tr = traces("morley", 12, 30, problems.layered_coefficient, [(0.75, 0.0)])[:, 0]
    flat = traces("morley", 12, 30, None, [(0.75, 0.0)])[:, 0]
    assert np.abs(tr - flat).max() > 1e-3 * np.abs(flat).max()


def test_initial_sensor_value_of_pulse_tail():
    # the pulse is ~1e-27 at the sensor; the dense oracle is positive and tiny
    X = problems.example2().u0.X[0]
    x0, y0, x1, y1 = problems.sensor_region()
    oracle = 0.2 * quad(X, x0, x1, epsabs=0, epsrel=1e-12)[0] * quad(X, y0, y1, epsabs=0, epsrel=1e-12)[0]
    assert 1e-28 < oracle < 1e-27


def test_trace_times_and_length():
    cfg = RunConfig(scheme="c0ip", n=(10,), steps=20)
    trace = cli.cmd_example2(cfg, io.StringIO())
    t = np.array([p[0] for p in trace])
    assert len(trace) == 21
    np.testing.assert_allclose(t, np.linspace(0.0, 0.03, 21), atol=1e-15)

