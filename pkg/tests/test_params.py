import math

import numpy as np
import pytest
from scipy import integrate

from oqbm import params
from oqbm.params import CoefficientSet, PhysicalParams


def test_coefficient_validation():
    with pytest.raises(ValueError):
        CoefficientSet(-1e-3, 1e-3, 0, 0, 0, 0, 0, 0, 0)
    with pytest.raises(ValueError):
        CoefficientSet(1e-3, 1e-3, 0, 0, 0, 0, -1e-3, 0, 0)
    # negative lambda1 and beta3 are allowed
    CoefficientSet(1.0, 5e-2, 0.21, 3e-2, -2e-2, -2e-3, 4e-2, 1e-2, 1e-2)


def test_coefficient_dict_round_trip():
    c = CoefficientSet(8e-3, 1e-3, 3e-3, 5e-2, 1e-2, 5e-3, 8e-3, 1e-3, 1e-4)
    assert CoefficientSet.from_dict(c.to_dict()) == c
    with pytest.raises((KeyError, ValueError)):
        CoefficientSet.from_dict({**c.to_dict(), "beta4": 1.0})


def test_physical_params_validation_and_scales():
    with pytest.raises(ValueError):
        PhysicalParams(T=0.0)
    p = PhysicalParams(m=2.0, omega=0.5, T=3.0)
    assert p.x0 == pytest.approx(math.sqrt(1 / (2 * 2.0 * 0.5)))
    assert p.p0 == pytest.approx(math.sqrt(2.0 * 0.5 / 2))
    assert p.alpha == pytest.approx(6.0)
    assert p.matsubara(1) == pytest.approx(2 * math.pi * 3.0)


def test_spectral_density_values():
    p = PhysicalParams(m=1.0, gamma=1.0, cutoff=1.0)
    assert params.spectral_density(0.0, p) == 0.0
    assert params.spectral_density(1.0, p) == pytest.approx(1 / math.pi)
    assert params.spectral_density(2.0, p) == pytest.approx(4 / (5 * math.pi))
    with pytest.raises(ValueError):
        params.spectral_density(-1.0, p)


def test_thermal_kernels():
    p = PhysicalParams(m=1.0, gamma=2.0, cutoff=10.0, T=1000.0)
    nu, eta = params.thermal_kernels(0.0, p)
    assert nu == pytest.approx(2 * 2.0 * 1000.0 * 10.0)
    nu1, _ = params.thermal_kernels(0.1, p)
    assert nu1 == pytest.approx(nu / math.e)
    assert params.thermal_kernels(1e4, p) == (0.0, 0.0)
    with pytest.raises(params.RegimeError):
        params.thermal_kernels(0.0, PhysicalParams(cutoff=10.0, T=50.0))


def test_qho_limits():
    p = PhysicalParams(m=1.0, gamma=3.0, cutoff=1e3, T=1e5)
    dx, cx, dp, cp = params.qho_coefficients(p, high_limit=True)
    assert dx == pytest.approx(2 * 3.0 * 1e5) and cp == pytest.approx(3.0)
    ex = params.qho_coefficients(p)
    assert ex[2] / ex[0] == pytest.approx(p.omega / p.cutoff)
    assert abs(ex[0] - dx) / dx <= 2e-6


def test_bose_small_argument():
    p = PhysicalParams(T=1.0)
    # 1/(e^x - 1) ~ 1/x - 1/2 for small x
    assert params.bose(1e-9, p) == pytest.approx(1e9 - 0.5, rel=1e-12)


def test_principal_value_examples():
    odd = params.principal_value_integral(lambda w: 1 / (w - 1.0), 1.0, (0.0, 2.0))
    assert abs(odd.value) < 1e-10
    one = params.principal_value_integral(lambda w: 1.0, 1.0, (0.0, 3.0))
    assert one.value == pytest.approx(3.0, abs=1e-10)
    r = params.principal_value_integral(lambda w: w / (w - 1.0), 1.0, (0.0, 2.0))
    assert r.value == pytest.approx(2.0, abs=1e-10)


def test_principal_value_against_cauchy_weight():
    # quad's Cauchy weight computes P int g(w)/(w - c) directly
    g = lambda w: np.exp(-w) * np.cos(w)  # noqa: E731
    ref = integrate.quad(g, 0.0, 5.0, weight="cauchy", wvar=1.3)[0]
    ours = params.principal_value_integral(lambda w: g(w) / (w - 1.3), 1.3, (0.0, 5.0))
    assert ours.value == pytest.approx(ref, abs=1e-9)


def test_principal_value_rejects_outside_pole():
    with pytest.raises(ValueError):
        params.principal_value_integral(lambda w: 1 / (w - 3), 3.0, (0.0, 2.0))


def test_principal_value_reports_nonconvergence():
    # a kink at the pole spoils the odd expansion of the exclusion error
    with pytest.raises(params.PrincipalValueError) as info:
        params.principal_value_integral(lambda w: np.sqrt(abs(w - 1.0)) / (w - 1.0) + 1 / abs(w - 1.0) ** 0.5,
                                        1.0, (0.0, 2.0), levels=2, rtol=1e-12, atol=0.0)
    assert info.value.residuals is not None


def test_two_level_rates_identities():
    p = PhysicalParams(T=10.0)
    l1, l2, l3, gam = params.two_level_rates(p)
    assert l2 - l3 == pytest.approx(gam, rel=1e-12)
    cold = PhysicalParams(T=1e-3)
    _, l2c, l3c, gc = params.two_level_rates(cold)
    assert l3c == pytest.approx(0.0, abs=1e-300) and l2c == pytest.approx(gc)
    g2 = params.two_level_rates(PhysicalParams(T=10.0, a0=2.0))[3]
    assert g2 == pytest.approx(4 * gam)


def test_lambda1_against_cauchy_weight():
    p = PhysicalParams(T=10.0)
    b = 20.0 * p.cutoff

    def g(w):
        if w == 0.0:
            return 2 * p.m * p.gamma * p.T / math.pi
        return params.spectral_density(w, p) * (params.bose(w, p) + 0.5)

    ref = integrate.quad(g, 0.0, b, weight="cauchy", wvar=p.Omega, limit=400)[0]
    l1 = params.two_level_rates(p)[0]
    assert l1 == pytest.approx(ref - p.Omega / 2, rel=1e-8)


def test_cross_rates():
    p = PhysicalParams(T=10.0)
    b1, b2, b3 = params.cross_rates(p)
    assert b1 / b2 == pytest.approx(float(params.bose(p.Omega, p)))
    scale = p.a0 * p.x0 * params.spectral_density(p.Omega, p) / p.hbar
    assert b2 / scale == pytest.approx(2 * math.pi)
    cold = params.cross_rates(PhysicalParams(T=1e-3))
    assert cold[0] == pytest.approx(0.0, abs=1e-300)


def test_cross_rates_resonance_policy():
    p = PhysicalParams(Omega=2.0, T=10.0)
    with pytest.warns(UserWarning):
        params.cross_rates(p)
    with pytest.raises(ValueError):
        params.cross_rates(p, resonance="raise")


def test_coefficient_set_mapping():
    p = PhysicalParams(gamma=20.0, T=1e4, cutoff=100.0)
    c = params.coefficient_set(p)
    assert c.alpha_bar == pytest.approx(p.T * p.omega / (4 * p.gamma))
    assert c.beta_bar == pytest.approx(p.omega ** 2 / (4 * p.gamma))
    assert c.alpha_bar / c.beta_bar == pytest.approx(p.alpha)
    with pytest.raises(params.RegimeError):
        params.coefficient_set(PhysicalParams(gamma=2.0))
