import math

import numpy as np
from hypothesis import given, settings, strategies as st

from oqbm import config, moments, observables, phase_space
from oqbm.dynamics import WignerField, initial_field, rhs
from oqbm.grid import SpatialGrid
from oqbm.params import COEFFICIENT_KEYS, CoefficientSet

GRID = SpatialGrid(10.0, 129)
NONNEGATIVE = {"alpha_bar", "beta_bar", "lambda2", "lambda3", "gamma_omega"}
coeffs = st.builds(CoefficientSet, **{k: st.floats(0.0 if k in NONNEGATIVE else -1.0, 1.0)
                                      for k in COEFFICIENT_KEYS})


@settings(max_examples=40, deadline=None)
@given(coeffs)
def test_pauli_expansion_matches_complex_arithmetic(c):
    ops = phase_space.expand_m_operators(c)
    assert phase_space.oracle_residuals(ops, c).max() < 1e-14


@settings(max_examples=30, deadline=None)
@given(coeffs, st.floats(-3, 3), st.floats(-3, 3), st.integers(0, 2 ** 31))
def test_rhs_linear(c, a, b, seed):
    r = np.random.default_rng(seed)
    f = WignerField(GRID, r.standard_normal((4, GRID.N)))
    g = WignerField(GRID, r.standard_normal((4, GRID.N)))
    lhs = rhs(f * a + g * b, c).data
    rhs_ = a * rhs(f, c).data + b * rhs(g, c).data
    assert np.allclose(lhs, rhs_, atol=1e-9 * (1 + np.abs(rhs_).max()))


@settings(max_examples=30, deadline=None)
@given(coeffs)
def test_hierarchy_conserves_norm(c):
    # the row of <W+> in the generator is identically zero
    K = moments.build_system(c, 6).generator()
    assert not np.any(K[0])


@settings(max_examples=50, deadline=None)
@given(st.integers(-12, 12).filter(lambda v: v != 0), st.integers(1, 12))
def test_angle_text_parses_to_rational_multiple(num, den):
    assert math.isclose(config.parse_angle(f"{num}*pi/{den}"), num * math.pi / den, rel_tol=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.floats(1e-3, 1e3), st.floats(2.0, 6.0))
def test_census_scale_invariant(scale, sep):
    x = GRID.x
    data = np.zeros((4, GRID.N))
    data[0] = np.exp(-(x - sep) ** 2) + 0.7 * np.exp(-(x + sep) ** 2)
    a = observables.peak_census(WignerField(GRID, data))
    b = observables.peak_census(WignerField(GRID, data * scale))
    assert a.count == b.count == 2
    assert np.array_equal(a.positions, b.positions)


@settings(max_examples=30, deadline=None)
@given(st.floats(0, math.pi), st.floats(0, 2 * math.pi))
def test_initial_state_bloch_bound(theta, phi):
    f = initial_field("single", 2, theta, phi, GRID)
    bloch = math.hypot(observables.sigma_z(f), 2 * GRID.integrate(f.C_R), 2 * observables.coherence_total(f))
    assert bloch <= 1 + 1e-9
