"""Reduced-resolution invariant checks, one row per property."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import config, dynamics, moments, observables, params, phase_space
from .grid import PhaseGrid, SpatialGrid

# position-only checks run at this resolution and horizon
SUITE_N = 256
SUITE_T = 20.0
MOMENT_WINDOW = 30.0


@dataclass
class CheckResult:
    name: str
    residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.residual) and self.residual <= self.tolerance)


def _reduced(name, t_final=SUITE_T, n=SUITE_N, **changes):
    cfg = config.bundled(name)
    grid = SpatialGrid(cfg.grid.L, n)
    dt = min(cfg.dt, dynamics.cfl_check(cfg.coefficients, grid, 0.0).dt_max)
    return cfg.with_(grid=grid, dt=dt, t_final=t_final,
                     snapshots=tuple(np.linspace(0, t_final, 5)), **changes)


# grid -------------------------------------------------------------------------

def check_summation_by_parts():
    g = SpatialGrid(10.0, 201)
    f = (1 + g.x) * np.exp(-(g.x - 0.3) ** 2)
    excess = abs(g.integrate(g.d1(f))) - (abs(f[0]) + abs(f[-1]))
    return CheckResult("grid: summation by parts", max(excess, 0.0), 10 * g.dx ** 2)


def check_second_derivative():
    g = SpatialGrid(math.pi, 401)
    err = np.abs(g.d2(np.sin(g.x)) + np.sin(g.x))[1:-1].max()
    return CheckResult("grid: d2 error on sin(x)", err, g.dx ** 2)


# params -----------------------------------------------------------------------

def check_rate_identity():
    worst = 0.0
    for T in (0.5, 10.0, 1e3):
        p = params.PhysicalParams(m=1.0, omega=1.0, Omega=1.0, T=T)
        _, l2, l3, gam = params.two_level_rates(p)
        worst = max(worst, abs((l2 - l3) - gam) / gam)
    return CheckResult("params: lambda2 - lambda3 = Gamma", worst, 1e-12)


def check_high_limit():
    worst = 0.0
    for cut in np.logspace(2, 4, 5):
        p = params.PhysicalParams(m=1.0, omega=1.0, Omega=1.0, cutoff=cut, T=100 * cut)
        exact = np.array(params.qho_coefficients(p))
        limit = np.array(params.qho_coefficients(p, high_limit=True))
        rel = np.abs(exact - limit) / np.abs(limit)
        worst = max(worst, rel.max() / (1.0 / cut) ** 2)
    return CheckResult("params: high-limit error / (omega/cutoff)^2", worst, 1.0)


def check_spectral_peak():
    p = params.PhysicalParams(m=1.0, omega=1.0, Omega=1.0, cutoff=5.0)
    w = np.linspace(0, 50, 50001)
    j = params.spectral_density(w, p)
    off = abs(w[np.argmax(j)] - p.cutoff) + abs(j[0]) + max(0.0, -j.min())
    return CheckResult("params: J(w) >= 0, J(0)=0, argmax at cutoff", off, 2 * (w[1] - w[0]))


def check_pv_odd():
    res = params.principal_value_integral(lambda w: 1.0 / (w - 1.0), 1.0, (0.0, 2.0))
    return CheckResult("params: PV of an odd integrand", abs(res.value), 1e-8)


# oqbm / observables ---------------------------------------------------------------

def check_trace(name="fig1a"):
    tr = dynamics.evolve(_reduced(name))
    return CheckResult(f"oqbm: trace drift ({name})", np.abs(tr.series.norm - 1).max(), 1e-6)


def check_sigma_z_bound(name="fig2a"):
    tr = dynamics.evolve(_reduced(name))
    return CheckResult(f"oqbm: |sigma_z| - 1 ({name})", max(0.0, np.abs(tr.series.sigma_z).max() - 1), 1e-9)


def check_symmetry(name="fig3b"):
    tr = dynamics.evolve(_reduced(name))
    worst = max(np.abs(s.W_plus - s.W_plus[::-1]).max() for s in tr.snapshots)
    return CheckResult(f"oqbm: parity of W+ ({name})", worst, 1e-8)


def check_linearity():
    cfg = _reduced("fig1a", t_final=5.0)
    f = cfg.initial_field()
    g = dynamics.initial_field("double", 2, 0.3, 1.1, cfg.grid)
    combo = f * 2.0 + g * (-0.5)
    a = dynamics.evolve(cfg, f0=f).snapshots[-1]
    b = dynamics.evolve(cfg, f0=g).snapshots[-1]
    ab = dynamics.evolve(cfg, f0=combo).snapshots[-1]
    return CheckResult("oqbm: linearity", np.abs(ab.data - (2 * a.data - 0.5 * b.data)).max(), 1e-12)


def check_grid_convergence():
    coarse = dynamics.evolve(_reduced("fig1a", n=SUITE_N))
    fine = dynamics.evolve(_reduced("fig1a", n=2 * SUITE_N - 1))
    v0, v1 = coarse.series.variance[-1], fine.series.variance[-1]
    return CheckResult("oqbm: variance change under dx/2", abs(v0 - v1) / v1, 0.01)


def check_observable_linearity():
    g = SpatialGrid(20.0, SUITE_N)
    f = dynamics.initial_field("single", 2, 0.4, 0.7, g)
    h = dynamics.initial_field("double", 2, 1.0, 2.0, g)
    s = f * 1.5 + h * 0.25
    res = max(abs(observables.sigma_z(s) - 1.5 * observables.sigma_z(f) - 0.25 * observables.sigma_z(h)),
              abs(observables.coherence_total(s) - 1.5 * observables.coherence_total(f)
                  - 0.25 * observables.coherence_total(h)))
    return CheckResult("observables: sigma_z, C_I linear", res, 1e-14)


def check_peak_scaling():
    g = SpatialGrid(20.0, SUITE_N)
    f = dynamics.initial_field("double", 2, 0.0, 0.0, g)
    a = observables.peak_census(f)
    b = observables.peak_census(f * 37.0)
    same = a.count == b.count and np.array_equal(a.positions, b.positions)
    return CheckResult("observables: census scale invariance", 0.0 if same else 1.0, 0.0)


def check_exponent_rescaling():
    t = np.linspace(0.0, 200.0, 401)
    var = 0.5 + 1e-3 * t ** 1.7 + 1e-2 * t
    rows = np.column_stack([t, np.ones_like(t), 0 * t, var, 0 * t, 0 * t])
    a = observables.growth_exponent(observables.TimeSeries.from_rows(rows), (2, 20))
    rows[:, 0] *= 3.0
    b = observables.growth_exponent(observables.TimeSeries.from_rows(rows), (6, 60))
    return CheckResult("observables: exponent under time rescaling", abs(a - b), 1e-10)


# moments ----------------------------------------------------------------------

def _hierarchy(cfg, nmax, t_final, dt):
    sys_ = moments.build_system(cfg.coefficients, nmax)
    return moments.evolve_moments(sys_, moments.initial_vector(nmax, cfg.theta, cfg.phi), dt, t_final)


def moment_mismatch(tr, mt, n):
    """max_t |R_hier - R_pde| / max_t |R_pde| at the PDE snapshot times."""
    t, ref = moments.moments_from_pde(tr, n)
    idx = [int(np.argmin(np.abs(mt.t - s))) for s in t]
    diff = np.linalg.norm(mt.R[idx, n, :] - ref, axis=1).max()
    return float(diff / np.linalg.norm(ref, axis=1).max())


def check_moment_consistency(window=MOMENT_WINDOW):
    cfg = _reduced("fig1a", t_final=window, n=1024)
    cfg = cfg.with_(snapshots=tuple(np.linspace(0, window, 7)))
    tr = dynamics.evolve(cfg)
    mt = _hierarchy(cfg, 8, window, cfg.dt)
    worst = max(moment_mismatch(tr, mt, n) for n in (0, 2, 4))
    return CheckResult(f"moments: hierarchy vs PDE, n<=4, t<={window:g}", worst, 0.05)


def check_zeroth_moment():
    cfg = config.bundled("fig1a")
    mt = _hierarchy(cfg, 8, 50.0, 0.05)
    return CheckResult("moments: <W+> conserved", np.abs(mt.order(0)[:, 0] - 1).max(), 1e-9)


def check_truncation_robustness():
    """Distance of orders n <= 4 to an nmax = 16 reference shrinks as nmax goes 8 -> 12."""
    cfg = config.bundled("fig1a")
    ref = _hierarchy(cfg, 16, 50.0, 0.025)
    gaps = [np.abs(_hierarchy(cfg, n, 50.0, 0.025).R[:, :5] - ref.R[:, :5]).max()
            for n in range(8, 13)]
    increases = sum(max(0.0, b - a) for a, b in zip(gaps[:-1], gaps[1:]))
    return CheckResult("moments: nmax 8..12 approach nmax 16", increases, 0.0)


# phase space ------------------------------------------------------------------

def check_oracle():
    cfg = config.bundled("fig1a")
    res = phase_space.oracle_residuals(phase_space.expand_m_operators(cfg.coefficients), cfg.coefficients)
    return CheckResult("phase_space: m-operator oracle", float(res.max()), 1e-12)


def check_trace_2d():
    cfg = config.bundled("fig1a")
    grid = PhaseGrid(SpatialGrid(8.0, 64), SpatialGrid(8 * math.sqrt(8.0), 40), 8.0)
    f0x = dynamics.initial_field("single", 2, cfg.theta, cfg.phi, grid.xgrid)
    f0 = phase_space.PhaseSpaceField.thermalized(grid, f0x)
    out = phase_space.evolve_2d(f0, cfg.coefficients, 10.0, [2.0])
    return CheckResult("phase_space: 2-D trace drift", abs(out[-1].trace() - f0.trace()), 1e-5)


def check_projectors():
    res = phase_space.projector_algebra_check(PhaseGrid.build(1.0, 10.0, 64))
    return CheckResult("phase_space: P^2=P, Q^2=Q, PQ=QP=0", max(res.values()), 1e-10)


# cli --------------------------------------------------------------------------

def check_round_trip():
    bad = 0
    for name in config.bundled_names():
        cfg = config.bundled(name)
        if config.parse(config.serialize(cfg)) != cfg:
            bad += 1
    return CheckResult("cli: bundled configs round-trip", float(bad), 0.0)


def check_determinism():
    cfg = _reduced("fig1a", t_final=5.0)
    a = dynamics.evolve(cfg).snapshots[-1].data
    b = dynamics.evolve(cfg).snapshots[-1].data
    return CheckResult("cli: rerun bit-identical", 0.0 if np.array_equal(a, b) else 1.0, 0.0)


CHECKS = (
    check_summation_by_parts, check_second_derivative,
    check_rate_identity, check_high_limit, check_spectral_peak, check_pv_odd,
    check_trace, check_sigma_z_bound, check_symmetry, check_linearity, check_grid_convergence,
    check_observable_linearity, check_peak_scaling, check_exponent_rescaling,
    check_moment_consistency, check_zeroth_moment, check_truncation_robustness,
    check_oracle, check_trace_2d, check_projectors,
    check_round_trip, check_determinism,
)


def run_suite(checks=CHECKS) -> list:
    out = []
    for check in checks:
        try:
            out.append(check())
        except Exception as exc:  # a crashing check is a failed check
            out.append(CheckResult(f"{check.__name__}: {type(exc).__name__}: {exc}", math.inf, 0.0))
    return out


def format_table(results) -> str:
    width = max(len(r.name) for r in results)
    lines = [f"{'check':<{width}}  {'residual':>12}  {'tolerance':>10}  status"]
    for r in results:
        lines.append(f"{r.name:<{width}}  {r.residual:12.4g}  {r.tolerance:10.3g}  "
                     f"{'pass' if r.passed else 'FAIL'}")
    return "\n".join(lines)
