import math

import numpy as np
import pytest

from oqbm.grid import PhaseGrid, SpatialGrid, default_pmax


def test_nodes_and_spacing():
    g = SpatialGrid(20.0, 1024)
    assert g.x[0] == -20.0 and g.x[-1] == 20.0
    assert np.all(np.diff(g.x) > 0)
    assert g.dx * (g.N - 1) == pytest.approx(2 * g.L, rel=1e-15)


@pytest.mark.parametrize("L,N", [(0.0, 64), (-1.0, 64), (1.0, 15), (1.0, 20.5)])
def test_rejects_bad_grid(L, N):
    with pytest.raises(ValueError):
        SpatialGrid(L, N)


def test_coordinates_are_read_only():
    g = SpatialGrid(1.0, 32)
    with pytest.raises(ValueError):
        g.x[0] = 3.0


def test_d1_exact_cases():
    g = SpatialGrid(1.0, 101)
    assert np.abs(g.d1(np.full(g.N, 3.0))).max() < 1e-12
    assert np.abs(g.d1(g.x) - 1).max() < 1e-12
    assert np.abs(g.d1(g.x ** 2) - 2 * g.x)[1:-1].max() <= 1e-10


def test_d2_exact_cases_and_sine():
    g = SpatialGrid(1.0, 101)
    assert np.abs(g.d2(g.x))[1:-1].max() < 1e-9
    assert np.abs(g.d2(g.x ** 2) - 2)[1:-1].max() < 1e-9
    s = SpatialGrid(math.pi, 401)
    assert np.abs(s.d2(np.sin(s.x)) + np.sin(s.x)).max() <= 1e-4


def test_one_sided_ends_are_second_order():
    errs = []
    for n in (101, 201):
        g = SpatialGrid(1.0, n)
        f = np.exp(g.x)
        errs.append(abs(g.d1(f)[0] - f[0]))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)


def test_drift_cases():
    g = SpatialGrid(3.0, 601)
    assert np.abs(g.drift(np.ones(g.N)) - 1)[1:-1].max() < 1e-12
    assert np.abs(g.drift(g.x) - 2 * g.x)[1:-1].max() < 1e-10
    f = np.exp(-g.x ** 2)
    assert np.abs(g.drift(f) - (1 - 2 * g.x ** 2) * f).max() < 2 * g.dx ** 2


def test_integrate():
    assert SpatialGrid(1.0, 33).integrate(np.ones(33)) == pytest.approx(2.0, abs=1e-14)
    g = SpatialGrid(4.0, 64)
    assert abs(g.integrate(g.x)) < 1e-14
    h = SpatialGrid(10.0, 1001)
    assert h.integrate(np.exp(-h.x ** 2)) == pytest.approx(math.sqrt(math.pi), abs=1e-8)


def test_stencils_act_on_last_axis():
    g = SpatialGrid(2.0, 64)
    stack = np.vstack([np.sin(g.x), g.x ** 3])
    assert np.array_equal(g.d1(stack)[1], g.d1(g.x ** 3))
    assert np.allclose(g.integrate(stack), [g.integrate(np.sin(g.x)), g.integrate(g.x ** 3)])


def test_length_mismatch():
    with pytest.raises(ValueError, match="does not match"):
        SpatialGrid(1.0, 32).d1(np.zeros(31))


def test_phase_grid_width_rule():
    assert default_pmax(0.1) == 6.0
    assert default_pmax(4.0) == 16.0
    with pytest.raises(ValueError, match="P_max"):
        PhaseGrid(SpatialGrid(5.0, 32), SpatialGrid(7.0, 32), alpha=1.0)
    g = PhaseGrid.build(alpha=1.0, L=5.0, N=32, N_p=64)
    assert g.shape == (32, 64)
    # mass of w_s beyond 8 sigma is below 1e-10
    assert math.erfc(g.pgrid.L / math.sqrt(2 * g.alpha)) < 1e-10


def test_phase_grid_axes():
    g = PhaseGrid.build(alpha=1.0, L=3.0, N=61, N_p=81)
    f = g.x[:, None] ** 2 + 0 * g.p[None, :]
    assert np.abs(g.d_x(f) - 2 * g.x[:, None])[1:-1].max() < 1e-10
    assert np.abs(g.d_p(f)).max() < 1e-12
    assert g.integrate(np.ones(g.shape)) == pytest.approx(6.0 * 16.0)
