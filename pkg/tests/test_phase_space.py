import math

import numpy as np
import pytest

from oqbm import phase_space as ps
from oqbm.dynamics import WignerField, initial_field
from oqbm.grid import PhaseGrid, SpatialGrid
from oqbm.params import CoefficientSet

from conftest import FIG1A, ZERO


@pytest.fixture(scope="module")
def small_phase_grid():
    return PhaseGrid(SpatialGrid(6.0, 40), SpatialGrid(8.0, 32), 1.0)


def test_matrix_round_trip(rng):
    v = rng.standard_normal(4)
    np.testing.assert_allclose(ps.from_matrix(ps.to_matrix(v)), v, atol=1e-15)
    basis = ps.hermitian_basis()
    np.testing.assert_allclose(basis[0], [2, 0, 0, 0])
    np.testing.assert_allclose(basis[3], [0, 2, 0, 0])


def test_oracle_fig1a():
    ops = ps.expand_m_operators(FIG1A)
    assert ps.oracle_residuals(ops, FIG1A).max() < 1e-16


def test_m3_image_of_sigma_z():
    c = FIG1A
    ops = ps.expand_m_operators(c)
    sz = ps.from_matrix(np.diag([1.0, -1.0]).astype(complex))
    np.testing.assert_allclose(ops.m3 @ sz, [0, 0, c.beta2 / 2, -c.beta3], atol=1e-18)


def test_couplings_vanish_without_betas():
    c = FIG1A.replace(beta1=0.0, beta2=0.0, beta3=0.0)
    ops = ps.expand_m_operators(c)
    for m in ops.as_tuple():
        assert np.abs(m).max() == 0.0


def test_oracle_detects_a_wrong_entry(monkeypatch):
    real = ps._pauli_expansion

    def broken(c):
        m1, m2, m3, m4, dis = (np.array(m, dtype=float) for m in real(c))
        m3[2, 1] *= -1
        return m1, m2, m3, m4, dis

    monkeypatch.setattr(ps, "_pauli_expansion", broken)
    with pytest.raises(ps.OracleMismatch):
        ps.expand_m_operators(FIG1A)


def test_dissipator_matches_policy():
    assert not ps.dissipator_matches(FIG1A)
    assert ps.dissipator_matches(ps.elimination_analogue(FIG1A))


def test_stationary_momentum_normalised():
    p = np.linspace(-40, 40, 20001)
    assert np.trapezoid(ps.stationary_momentum(p, 8.0), p) == pytest.approx(1.0, abs=1e-12)


def test_thermalized_marginal_recovers_field(small_phase_grid):
    g = small_phase_grid
    fx = initial_field("single", 2, 0.3, 0.5, g.xgrid)
    f = ps.PhaseSpaceField.thermalized(g, fx)
    np.testing.assert_allclose(f.marginal().data, fx.data, atol=1e-9)
    assert f.trace() == pytest.approx(g.xgrid.integrate(fx.W_plus), abs=1e-9)


def test_kernel_matches_reference_rhs(small_phase_grid, rng):
    g = small_phase_grid
    w = rng.standard_normal((4, *g.shape))
    w[:, [0, -1], :] = 0
    w[:, :, [0, -1]] = 0
    f = ps.PhaseSpaceField(g, w)
    ref = ps.rhs_2d(f, FIG1A, 7.0).data
    step = ps.PhaseStepper(g, FIG1A, 7.0)
    out = step._rhs(w, np.zeros_like(w))
    np.testing.assert_allclose(out, ref, atol=1e-11 * np.abs(ref).max())


def test_rhs_2d_argument_checks(small_phase_grid):
    f = ps.PhaseSpaceField(small_phase_grid, np.zeros((4, *small_phase_grid.shape)))
    with pytest.raises(ValueError):
        ps.rhs_2d(f, FIG1A, 0.0)
    with pytest.raises(ValueError):
        ps.rhs_2d(f, FIG1A, 1.0, alpha=2.0)


def test_relaxation_annihilates_stationary_state():
    g = PhaseGrid.build(1.0, 10.0, 64)
    ws = ps.stationary_momentum(g.p, 1.0)
    r = ps.relaxation_operator(ws, g)
    assert np.linalg.norm(r) / np.linalg.norm(ws) < 1e-3


@pytest.mark.parametrize("n", range(5))
def test_hermite_modes_are_eigenfunctions(n):
    g = PhaseGrid.build(1.0, 10.0, 64)
    assert ps.hermite_eigencheck(n, g) <= 1e-2


def test_hermite_error_is_second_order():
    coarse = ps.hermite_eigencheck(1, PhaseGrid.build(1.0, 10.0, 64, N_p=256))
    fine = ps.hermite_eigencheck(1, PhaseGrid.build(1.0, 10.0, 64, N_p=512))
    assert 3.5 < coarse / fine < 4.5


def test_hermite_index_range():
    with pytest.raises(ValueError):
        ps.hermite_eigencheck(7, PhaseGrid.build(1.0, 10.0, 64))


def test_projector_algebra():
    res = ps.projector_algebra_check(PhaseGrid.build(1.0, 10.0, 64))
    assert max(res.values()) < 1e-12


def test_projector_example(small_phase_grid):
    g = small_phase_grid
    fx = initial_field("single", 2, 0.0, 0.0, g.xgrid)
    f = ps.PhaseSpaceField.thermalized(g, fx)
    np.testing.assert_allclose(ps.projector_apply(f).data, f.data, atol=1e-10)
    assert np.abs(ps.complement_apply(f).data).max() < 1e-10


def test_streaming_has_no_projected_part():
    g = PhaseGrid.build(1.0, 10.0, 64)
    assert ps.pl2p_check(g) < 1e-12
    assert ps.pl2p_check(g, FIG1A) < 1e-12


def test_reduced_coefficient_mapping():
    red = ps.reduced_coefficients(FIG1A, 10.0, 8.0)
    assert red.alpha_bar == pytest.approx(0.2)
    assert red.beta_bar == pytest.approx(0.025)
    assert red.alpha_bar / red.beta_bar == pytest.approx(8.0)
    assert red.beta2 == FIG1A.beta2


def test_l1_distance():
    g = SpatialGrid(5.0, 101)
    a = WignerField(g, np.zeros((4, g.N)))
    b = WignerField(g, np.ones((4, g.N)))
    assert ps.l1_distance(a, b) == pytest.approx(4 * 10.0)


def test_evolve_2d_conserves_trace():
    g = PhaseGrid(SpatialGrid(8.0, 48), SpatialGrid(8 * math.sqrt(2.0), 32), 2.0)
    f0 = ps.PhaseSpaceField.thermalized(g, initial_field("single", 2, 0.5, 0.0, g.xgrid))
    out = ps.evolve_2d(f0, ps.elimination_analogue(FIG1A), 5.0, [0.5, 1.0])
    assert [f.t for f in out] == [0.5, 1.0]
    assert abs(out[-1].trace() - f0.trace()) < 1e-6


def test_evolve_2d_blow_up_is_reported():
    g = PhaseGrid(SpatialGrid(8.0, 48), SpatialGrid(8.0, 32), 1.0)
    f0 = ps.PhaseSpaceField.thermalized(g, initial_field("single", 2, 0.0, 0.0, g.xgrid))
    from oqbm.dynamics import NumericalError
    with pytest.raises(NumericalError):
        ps.evolve_2d(f0, ZERO, 10.0, [5.0], dt=0.5)


def test_validation_warns_on_dissipator_mismatch():
    from oqbm import config
    cfg = config.bundled("fig1a")
    with pytest.warns(UserWarning, match="qubit rates"):
        rep = ps.validate_elimination(cfg, gammas=(10.0,), times=(0.0, 0.5), n_x=32, n_p=24)
    assert rep.distances_at(0.0)[0] < 1e-12
    assert rep.gammas() == [10.0]
