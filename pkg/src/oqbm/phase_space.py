"""Two-dimensional (x, p) solver used as an oracle for momentum elimination.

The qubit-valued Wigner function keeps the same four-field layout as the
position-only solver, with arrays indexed ``[field, ix, ip]``. Units have
omega = 1, so the oscillator drift is (x/2) d/dp - (p/2) d/dx.

At large friction gamma the p-marginal should follow the position-only
equations with alpha_bar = alpha / (4 gamma) and beta_bar = 1 / (4 gamma).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.special import eval_hermite

from .dynamics import (InternalState, NumericalError, ScenarioConfig, WignerField,
                       cfl_check, evolve, spatial_profile)
from .grid import PhaseGrid, SpatialGrid
from .params import CoefficientSet

ORACLE_TOL = 1e-12
RK4_RADIUS = 2.5
PHASE_SAFETY = 0.8
DEFAULT_GAMMAS = (10.0, 40.0, 160.0)
REPORT_COLUMNS = ("gamma_eff", "t", "l1_distance")

_SX = np.array([[0, 1], [1, 0]], dtype=complex)
_SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
_SZ = np.array([[1, 0], [0, -1]], dtype=complex)
_SP = np.array([[0, 1], [0, 0]], dtype=complex)
_SM = _SP.T.copy()


class OracleMismatch(RuntimeError):
    pass


# 4-field <-> 2x2 Hermitian matrix ------------------------------------------

def to_matrix(v) -> np.ndarray:
    """(W+, W-, C_R, C_I) -> [[(W+ + W-)/2, C_R + i C_I], [C_R - i C_I, (W+ - W-)/2]]."""
    wp, wm, cr, ci = v
    return np.array([[0.5 * (wp + wm), cr + 1j * ci],
                     [cr - 1j * ci, 0.5 * (wp - wm)]])


def from_matrix(w) -> np.ndarray:
    """Inverse of :func:`to_matrix`; anti-Hermitian parts are dropped."""
    return np.array([(w[0, 0] + w[1, 1]).real, (w[0, 0] - w[1, 1]).real,
                     0.5 * (w[0, 1] + w[1, 0].conj()).real,
                     0.5 * (w[0, 1] + w[1, 0].conj()).imag])


def hermitian_basis():
    """Images of the identity and the three Pauli matrices."""
    return [from_matrix(m) for m in (np.eye(2, dtype=complex), _SX, _SY, _SZ)]


# superoperators ---------------------------------------------------------------

def _comm(a, w):
    return a @ w - w @ a


def _acomm(a, w):
    return a @ w + w @ a


def _lindblad(a, b, w):
    """a w b - (1/2){b a, w}."""
    return a @ w @ b - 0.5 * _acomm(b @ a, w)


def m_operators_complex(c: CoefficientSet):
    """The four coupling superoperators as callables on 2x2 complex matrices."""
    b1, b2, b3 = c.beta1, c.beta2, c.beta3

    def m1(w):
        return (1j * b2 / 8 * (2 * _acomm(_SP, w) - 2 * _SX @ w - _comm(_SX, w))
                - 1j * b1 / 2 * _comm(_SX, w) - b3 / 4 * _acomm(_SX, w))

    def m2(w):
        return (b2 / 8 * (2 * _SX @ w - 2 * _comm(_SP, w) - 1j * _comm(_SY, w))
                - 1j * b1 / 2 * _comm(_SY, w) - b3 / 4 * _acomm(_SY, w))

    def m3(w):
        return 1j * b3 / 2 * _comm(_SX, w) - 1j * b2 / 4 * _comm(_SY, w)

    def m4(w):
        return -1j * b2 / 4 * _comm(_SX, w) - 1j * b3 / 2 * _comm(_SY, w)

    return m1, m2, m3, m4


def dissipator_complex(c: CoefficientSet):
    def d(w):
        return (1j * c.lambda1 * _comm(_SZ, w) + c.lambda2 * _lindblad(_SM, _SP, w)
                + c.lambda3 * _lindblad(_SP, _SM, w))
    return d


@dataclass(frozen=True)
class MSuperOperators:
    m1: np.ndarray
    m2: np.ndarray
    m3: np.ndarray
    m4: np.ndarray
    dissipator: np.ndarray

    def as_tuple(self):
        return self.m1, self.m2, self.m3, self.m4


def _pauli_expansion(c: CoefficientSet):
    b1, b2, b3 = c.beta1, c.beta2, c.beta3
    d3 = 2 * b1 + b2
    l1, l2, l3 = c.lambda1, c.lambda2, c.lambda3
    # rows/cols ordered (W+, W-, C_R, C_I)
    m1 = np.array([[0, 0, -b3, b2 / 2],
                   [0, 0, 0, -d3],
                   [-b3 / 4, 0, 0, 0],
                   [b2 / 8, d3 / 4, 0, 0]])
    m2 = np.array([[0, 0, b2 / 2, b3],
                   [0, 0, -d3, 0],
                   [b2 / 8, d3 / 4, 0, 0],
                   [b3 / 4, 0, 0, 0]])
    m3 = np.array([[0, 0, 0, 0],
                   [0, 0, -b2, 2 * b3],
                   [0, b2 / 4, 0, 0],
                   [0, -b3 / 2, 0, 0]])
    m4 = np.array([[0, 0, 0, 0],
                   [0, 0, -2 * b3, -b2],
                   [0, b3 / 2, 0, 0],
                   [0, b2 / 4, 0, 0]])
    dis = np.array([[0, 0, 0, 0],
                    [-(l2 - l3), -(l2 + l3), 0, 0],
                    [0, 0, -(l2 + l3) / 2, -2 * l1],
                    [0, 0, 2 * l1, -(l2 + l3) / 2]])
    return m1, m2, m3, m4, dis


def oracle_residuals(ops: MSuperOperators, c: CoefficientSet) -> np.ndarray:
    """Max abs mismatch per operator against direct 2x2 complex arithmetic."""
    direct = (*m_operators_complex(c), dissipator_complex(c))
    res = []
    for mat, op in zip((*ops.as_tuple(), ops.dissipator), direct):
        worst = 0.0
        for e in hermitian_basis():
            out = op(to_matrix(e))
            # the image must stay Hermitian for the real 4-field form to be exact
            worst = max(worst, np.abs(out - out.conj().T).max() / 2,
                        np.abs(mat @ e - from_matrix(out)).max())
        res.append(worst)
    return np.array(res)


def expand_m_operators(c: CoefficientSet, tol=ORACLE_TOL) -> MSuperOperators:
    """Real 4x4 forms of the coupling superoperators and the qubit dissipator."""
    ops = MSuperOperators(*(np.asarray(m, dtype=float) for m in _pauli_expansion(c)))
    res = oracle_residuals(ops, c)
    scale = max(1.0, abs(c.beta1), abs(c.beta2), abs(c.beta3),
                abs(c.lambda1), abs(c.lambda2), abs(c.lambda3))
    if res.max() > tol * scale:
        raise OracleMismatch(f"Pauli expansion disagrees with complex arithmetic: {res}")
    return ops


# fields -----------------------------------------------------------------------

def stationary_momentum(p, alpha) -> np.ndarray:
    return np.exp(-np.asarray(p) ** 2 / (2 * alpha)) / math.sqrt(2 * math.pi * alpha)


@dataclass
class PhaseSpaceField:
    grid: PhaseGrid
    data: np.ndarray  # (4, Nx, Np)
    t: float = 0.0

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        if self.data.shape != (4, *self.grid.shape):
            raise ValueError(f"field shape {self.data.shape} does not match grid {self.grid.shape}")

    def copy(self):
        return PhaseSpaceField(self.grid, self.data.copy(), self.t)

    def marginal(self) -> WignerField:
        return WignerField(self.grid.xgrid, self.grid.integrate_p(self.data), self.t)

    def trace(self) -> float:
        return float(self.grid.integrate(self.data[0]))

    @classmethod
    def thermalized(cls, grid: PhaseGrid, f: WignerField):
        """w_s(p) times a position-space field, the momentum-relaxed product state."""
        if f.grid != grid.xgrid:
            raise ValueError("position field lives on a different x grid")
        ws = stationary_momentum(grid.p, grid.alpha)
        return cls(grid, f.data[:, :, None] * ws[None, None, :], f.t)


# generator --------------------------------------------------------------------

def _local_matrices(c, ops=None):
    ops = expand_m_operators(c) if ops is None else ops
    return ops.m1, ops.m2, ops.m3, ops.m4, ops.dissipator


def rhs_2d(f: PhaseSpaceField, c: CoefficientSet, gamma_eff, alpha=None, ops=None) -> PhaseSpaceField:
    """Time derivative of the full (x, p) system, vectorised reference version.

    The outermost ring of nodes is held at zero (Dirichlet), matching the
    stepping kernel.
    """
    g = f.grid
    if alpha is not None and not math.isclose(alpha, g.alpha):
        raise ValueError(f"alpha={alpha} differs from the grid's alpha={g.alpha}")
    if not gamma_eff > 0:
        raise ValueError(f"gamma_eff must be positive, got {gamma_eff}")
    m1, m2, m3, m4, dis = _local_matrices(c, ops)
    x = g.x[:, None]
    p = g.p[None, :]
    w = f.data
    dp = g.d_p(w)
    dx = g.d_x(w)
    out = (gamma_eff * g.alpha * g.d2_p(w) + gamma_eff * g.d_p(p * w)
           + 0.5 * x * dp - 0.5 * p * dx)
    mix = lambda m, a: np.einsum("kl,l...->k...", m, a)  # noqa: E731
    out += mix(m1, dp) + mix(m2, dx) + x * mix(m3, w) + p * mix(m4, w) + mix(dis, w)
    out[:, 0, :] = out[:, -1, :] = 0.0
    out[:, :, 0] = out[:, :, -1] = 0.0
    return PhaseSpaceField(g, out, f.t)


@njit(cache=True)
def _rhs_kernel(w, x, p, hx, hp, gamma, alpha, m1, m2, m3, m4, dis, out):
    nx, npn = w.shape[1], w.shape[2]
    out[:] = 0.0
    dpw = np.empty(4)
    dxw = np.empty(4)
    ga = gamma * alpha / (hp * hp)
    for i in range(1, nx - 1):
        xi = x[i]
        for j in range(1, npn - 1):
            pj = p[j]
            for k in range(4):
                dpw[k] = (w[k, i, j + 1] - w[k, i, j - 1]) / (2 * hp)
                dxw[k] = (w[k, i + 1, j] - w[k, i - 1, j]) / (2 * hx)
            for k in range(4):
                acc = ga * (w[k, i, j + 1] - 2 * w[k, i, j] + w[k, i, j - 1])
                acc += gamma * (p[j + 1] * w[k, i, j + 1] - p[j - 1] * w[k, i, j - 1]) / (2 * hp)
                acc += 0.5 * xi * dpw[k] - 0.5 * pj * dxw[k]
                for m in range(4):
                    acc += (m1[k, m] * dpw[m] + m2[k, m] * dxw[m]
                            + (xi * m3[k, m] + pj * m4[k, m] + dis[k, m]) * w[m, i, j])
                out[k, i, j] = acc


class PhaseStepper:
    """Fixed-step RK4 on the (x, p) system using the compiled kernel."""

    def __init__(self, grid: PhaseGrid, c: CoefficientSet, gamma_eff):
        if not gamma_eff > 0:
            raise ValueError(f"gamma_eff must be positive, got {gamma_eff}")
        self.grid, self.c, self.gamma = grid, c, float(gamma_eff)
        self.mats = tuple(np.ascontiguousarray(m) for m in _local_matrices(c))
        self._buf = [np.zeros((4, *grid.shape)) for _ in range(4)]

    def _rhs(self, w, out):
        g = self.grid
        _rhs_kernel(w, g.x, g.p, g.xgrid.dx, g.pgrid.dx, self.gamma, g.alpha, *self.mats, out)
        return out

    def step(self, w, h):
        k1, k2, k3, k4 = self._buf
        self._rhs(w, k1)
        self._rhs(w + 0.5 * h * k1, k2)
        self._rhs(w + 0.5 * h * k2, k3)
        self._rhs(w + h * k3, k4)
        return w + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def phase_rate_bound(grid: PhaseGrid, c: CoefficientSet, gamma_eff) -> float:
    """Gershgorin-style bound on the spectral radius of the discrete generator.

    The p-diffusion term 4 gamma alpha / dp^2 dominates at large gamma, so the
    admissible step, and with it the cost of a run, scales like 1 / gamma.
    """
    hx, hp = grid.xgrid.dx, grid.pgrid.dx
    lx, lp = grid.xgrid.L, grid.pgrid.L
    m1, m2, m3, m4, dis = _local_matrices(c)
    row = lambda m: np.abs(m).sum(axis=1).max()  # noqa: E731
    return (4 * gamma_eff * grid.alpha / hp ** 2 + gamma_eff * (1 + lp / hp)
            + 0.5 * lx / hp + 0.5 * lp / hx
            + row(m1) / hp + row(m2) / hx + lx * row(m3) + lp * row(m4) + row(dis))


def max_phase_dt(grid, c, gamma_eff, safety=PHASE_SAFETY) -> float:
    return RK4_RADIUS * safety / phase_rate_bound(grid, c, gamma_eff)


def evolve_2d(f0: PhaseSpaceField, c: CoefficientSet, gamma_eff, t_stops, dt=None,
              safety=PHASE_SAFETY) -> list:
    """RK4 from f0.t through each time in ``t_stops``; returns the fields there."""
    stepper = PhaseStepper(f0.grid, c, gamma_eff)
    dt = max_phase_dt(f0.grid, c, gamma_eff, safety) if dt is None else dt
    w = f0.data.copy()
    t = f0.t
    out = []
    scale = np.abs(w).max()
    for stop in sorted(t_stops):
        if stop < t:
            raise ValueError(f"stop time {stop} precedes the current time {t}")
        n = math.ceil((stop - t) / dt - 1e-9)
        h = (stop - t) / n if n else 0.0
        for i in range(n):
            w = stepper.step(w, h)
            if (i & 255) == 0 and not np.abs(w).max() < 1e6 * scale:
                raise NumericalError(
                    f"2-D field blew up near t={t + (i + 1) * h:.6g} (dt={h:.3g}, "
                    f"gamma_eff={gamma_eff:g})", t=t + (i + 1) * h)
        t = stop
        if not np.isfinite(w).all() or not np.abs(w).max() < 1e6 * scale:
            raise NumericalError(f"2-D field blew up by t={t:.6g} (dt={h:.3g})", t=t)
        out.append(PhaseSpaceField(f0.grid, w.copy(), t))
    return out


# momentum-relaxation identities ---------------------------------------------

def hermite_mode(n, p, alpha) -> np.ndarray:
    """P_n(p) = w_s(p) (2^n n!)^(-1/2) H_n(p / sqrt(2 alpha))."""
    q = eval_hermite(n, p / math.sqrt(2 * alpha)) / math.sqrt(2.0 ** n * math.factorial(n))
    return stationary_momentum(p, alpha) * q


def relaxation_operator(f, grid: PhaseGrid):
    """Discrete L1 = alpha d^2/dp^2 + d/dp p along the last axis."""
    return grid.alpha * grid.d2_p(f) + grid.d_p(grid.p * f)


def hermite_eigencheck(n, grid: PhaseGrid) -> float:
    """||L1 P_n + n P_n|| / ||P_n|| on the p grid."""
    if int(n) != n or not 0 <= n <= 6:
        raise ValueError(f"mode index must be an integer in [0, 6], got {n}")
    pn = hermite_mode(int(n), grid.p, grid.alpha)
    r = relaxation_operator(pn, grid) + n * pn
    return float(np.linalg.norm(r) / np.linalg.norm(pn))


def projector_apply(f: PhaseSpaceField) -> PhaseSpaceField:
    """w_s(p) times the p-integral, field by field."""
    g = f.grid
    ws = stationary_momentum(g.p, g.alpha)
    return PhaseSpaceField(g, g.integrate_p(f.data)[..., None] * ws, f.t)


def complement_apply(f: PhaseSpaceField) -> PhaseSpaceField:
    return PhaseSpaceField(f.grid, f.data - projector_apply(f).data, f.t)


def streaming_apply(f: PhaseSpaceField) -> PhaseSpaceField:
    """L2 = -(p/2) d/dx + (x/2) d/dp."""
    g = f.grid
    out = -0.5 * g.p * g.d_x(f.data) + 0.5 * g.x[:, None] * g.d_p(f.data)
    return PhaseSpaceField(g, out, f.t)


def _test_fields(grid: PhaseGrid):
    """A small basis of product fields g(x) h(p) spread over the four components."""
    x, p, a = grid.x, grid.p, grid.alpha
    xs = [np.exp(-x ** 2), np.exp(-(x - 1.5) ** 2 / 2), x * np.exp(-x ** 2 / 3)]
    ps = [stationary_momentum(p, a), p * stationary_momentum(p, a),
          stationary_momentum(p - 0.5 * math.sqrt(a), 1.3 * a)]
    out = []
    for k, (gx, hp) in enumerate((gx, hp) for gx in xs for hp in ps):
        data = np.zeros((4, *grid.shape))
        data[k % 4] = gx[:, None] * hp[None, :]
        out.append(PhaseSpaceField(grid, data))
    return out


def _norm(f):
    g = f.grid
    return math.sqrt(float(g.integrate((f.data ** 2).sum(axis=0))))


def pl2p_check(grid: PhaseGrid, c: CoefficientSet | None = None) -> float:
    """max ||P L2 P f|| / ||f|| over the test basis.

    With coefficients, the momentum-odd coupling terms (d/dp m1 and p m4) are
    sandwiched the same way and included in the maximum.
    """
    ops = None if c is None else expand_m_operators(c)
    worst = 0.0
    for f in _test_fields(grid):
        base = _norm(f)
        pf = projector_apply(f)
        worst = max(worst, _norm(projector_apply(streaming_apply(pf))) / base)
        if ops is not None:
            g = grid
            odd = (np.einsum("kl,l...->k...", ops.m1, g.d_p(pf.data))
                   + g.p * np.einsum("kl,l...->k...", ops.m4, pf.data))
            worst = max(worst, _norm(projector_apply(PhaseSpaceField(g, odd))) / base)
    return worst


def projector_algebra_check(grid: PhaseGrid) -> dict:
    """Residuals of P^2 = P, Q^2 = Q and PQ = QP = 0 over the test basis."""
    res = {"PP-P": 0.0, "QQ-Q": 0.0, "PQ": 0.0, "QP": 0.0}
    for f in _test_fields(grid):
        base = _norm(f)
        pf, qf = projector_apply(f), complement_apply(f)
        pairs = {"PP-P": projector_apply(pf).data - pf.data,
                 "QQ-Q": complement_apply(qf).data - qf.data,
                 "PQ": projector_apply(qf).data,
                 "QP": complement_apply(pf).data}
        for key, d in pairs.items():
            res[key] = max(res[key], _norm(PhaseSpaceField(grid, d)) / base)
    return res


# elimination check -----------------------------------------------------------

def reduced_coefficients(c: CoefficientSet, gamma_eff, alpha) -> CoefficientSet:
    """Position-only coefficients for friction gamma_eff (omega = 1)."""
    return c.replace(alpha_bar=alpha / (4.0 * gamma_eff), beta_bar=1.0 / (4.0 * gamma_eff))


def dissipator_matches(c: CoefficientSet, atol=1e-15) -> bool:
    """Whether the position-only rate matrix equals the qubit dissipator.

    They agree only for lambda1 = 0 and Gamma = lambda2 - lambda3.
    """
    return abs(c.lambda1) <= atol and abs(c.gamma_omega - (c.lambda2 - c.lambda3)) <= atol


def elimination_analogue(c: CoefficientSet) -> CoefficientSet:
    """Copy of ``c`` with the rates adjusted so both solvers share one dissipator."""
    return c.replace(lambda1=0.0, gamma_omega=c.lambda2 - c.lambda3)


@dataclass
class EliminationReport:
    rows: list  # (gamma_eff, t, l1_distance)
    alpha: float
    grid: PhaseGrid

    def distances_at(self, t) -> np.ndarray:
        return np.array([d for g, tt, d in self.rows if math.isclose(tt, t)])

    def gammas(self):
        return sorted({g for g, _, _ in self.rows})

    def strictly_decreasing(self, t) -> bool:
        d = self.distances_at(t)
        return bool(np.all(np.diff(d) < 0))


def l1_distance(a: WignerField, b: WignerField) -> float:
    """Sum over the four components of the x-integral of |a - b|."""
    if a.grid != b.grid:
        raise ValueError("fields live on different grids")
    return float(a.grid.integrate(np.abs(a.data - b.data).sum(axis=0)))


def validate_elimination(cfg: ScenarioConfig, gammas=DEFAULT_GAMMAS, alpha=None,
                         times=(0.0, 5.0, 10.0, 15.0, 20.0), x_half_width=8.0, n_x=96,
                         n_p=48, safety=PHASE_SAFETY) -> EliminationReport:
    """Evolve the (x, p) system for each friction and compare marginals.

    ``alpha`` defaults to alpha_bar / beta_bar of the scenario, which is the
    thermal ratio preserved by the reduction. The initial state is w_s(p)
    times the scenario's position-space field. The x grid is shared with the
    position-only reference run so discretisation errors in x largely cancel.
    """
    c = cfg.coefficients
    if alpha is None:
        if not c.beta_bar > 0:
            raise ValueError("scenario has beta_bar = 0; pass alpha explicitly")
        alpha = c.alpha_bar / c.beta_bar
    if not dissipator_matches(c):
        warnings.warn("qubit rates differ between the (x, p) and position-only generators; "
                      "distances will not vanish at large friction (see elimination_analogue)",
                      stacklevel=2)
    gammas = sorted(float(g) for g in gammas)
    times = tuple(sorted(float(t) for t in times))
    grid = PhaseGrid(SpatialGrid(x_half_width, n_x), SpatialGrid(8.0 * math.sqrt(alpha), n_p), alpha)
    state = InternalState(cfg.theta, cfg.phi)
    prof = spatial_profile(cfg.kind, cfg.k, grid.xgrid)
    f0x = WignerField(grid.xgrid, state.weights()[:, None] * prof[None, :], 0.0)
    f0 = PhaseSpaceField.thermalized(grid, f0x)
    rows = []
    for g in gammas:
        red = reduced_coefficients(c, g, alpha)
        dt1 = cfl_check(red, grid.xgrid, 0.0).dt_max
        ref = evolve(cfg.with_(coefficients=red, grid=grid.xgrid, dt=min(cfg.dt, dt1),
                               t_final=times[-1], snapshots=times), f0=f0x)
        try:
            fields = evolve_2d(f0, c, g, times, safety=safety)
        except NumericalError:
            fields = evolve_2d(f0, c, g, times, safety=0.5 * safety)
        for t, f in zip(times, fields):
            rows.append((g, t, l1_distance(f.marginal(), ref.snapshot_at(t))))
    return EliminationReport(rows, alpha, grid)
