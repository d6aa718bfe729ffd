"""OQBM state on a 1-D grid and fixed-step integration of the coupled PDEs.

The qubit-valued Wigner function is stored as four real fields stacked in a
``(4, N)`` array in the order ``W_plus, W_minus, C_R, C_I`` with

    W11 = (W_plus + W_minus)/2,  W22 = (W_plus - W_minus)/2,  W12 = C_R + i C_I.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .grid import SpatialGrid
from .params import CoefficientSet

FIELD_NAMES = ("W_plus", "W_minus", "C_R", "C_I")
DEFAULT_SNAPSHOTS = (0.0, 50.0, 100.0, 150.0, 200.0)
CFL_SAFETY = 0.4


class NumericalError(RuntimeError):
    """Integration produced non-finite values or violated a stability bound."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


@dataclass(frozen=True)
class InternalState:
    """Pure qubit state parametrised by Bloch angles."""

    theta: float = 0.0
    phi: float = 0.0

    def density_matrix(self) -> np.ndarray:
        th, ph = self.theta, self.phi
        return 0.5 * np.array([[2 * math.cos(th) ** 2, math.sin(2 * th) * np.exp(-1j * ph)],
                               [math.sin(2 * th) * np.exp(1j * ph), 2 * math.sin(th) ** 2]])

    def weights(self) -> np.ndarray:
        """Qubit factors multiplying the spatial profile in (W+, W-, C_R, C_I)."""
        th, ph = self.theta, self.phi
        s2 = math.sin(2 * th)
        return np.array([1.0, math.cos(2 * th), 0.5 * s2 * math.cos(ph), -0.5 * s2 * math.sin(ph)])


@dataclass
class WignerField:
    grid: SpatialGrid
    data: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        if self.data.shape != (4, self.grid.N):
            raise ValueError(f"expected field block of shape (4, {self.grid.N}), got {self.data.shape}")

    W_plus = property(lambda self: self.data[0])
    W_minus = property(lambda self: self.data[1])
    C_R = property(lambda self: self.data[2])
    C_I = property(lambda self: self.data[3])

    @classmethod
    def from_matrix(cls, grid, w, t=0.0):
        """Build from an ``(N, 2, 2)`` Hermitian array."""
        w = np.asarray(w)
        data = np.stack([(w[:, 0, 0] + w[:, 1, 1]).real, (w[:, 0, 0] - w[:, 1, 1]).real,
                         w[:, 0, 1].real, w[:, 0, 1].imag])
        return cls(grid, data, t)

    def matrix(self) -> np.ndarray:
        wp, wm, cr, ci = self.data
        out = np.empty((self.grid.N, 2, 2), dtype=complex)
        out[:, 0, 0] = 0.5 * (wp + wm)
        out[:, 1, 1] = 0.5 * (wp - wm)
        out[:, 0, 1] = cr + 1j * ci
        out[:, 1, 0] = cr - 1j * ci
        return out

    def copy(self):
        return WignerField(self.grid, self.data.copy(), self.t)

    def _compatible(self, other):
        if other.grid != self.grid:
            raise ValueError("fields live on different grids")

    def __add__(self, other):
        self._compatible(other)
        return WignerField(self.grid, self.data + other.data, self.t)

    def __sub__(self, other):
        self._compatible(other)
        return WignerField(self.grid, self.data - other.data, self.t)

    def __mul__(self, a):
        return WignerField(self.grid, a * self.data, self.t)

    __rmul__ = __mul__


def spatial_profile(kind, k, grid, odd_k="abs"):
    """Normalised spatial profile for the single-well or two-centre initial state.

    ``e^{-x^k}`` is only integrable for even integer ``k``. Other exponents use
    ``e^{-|x|^k}`` with a warning, or raise when ``odd_k="raise"``.
    """
    if not k > 0:
        raise ValueError(f"exponent k must be positive, got {k}")
    even = float(k).is_integer() and int(k) % 2 == 0
    if not even:
        if odd_k == "raise":
            raise ValueError(f"e^(-x^{k}) is not normalisable; pass odd_k='abs' to use |x|^{k}")
        warnings.warn(f"exponent k={k} is not an even integer; using e^(-|x|^{k})", stacklevel=3)

    def shape(u):
        return np.exp(-(u ** int(k) if even else np.abs(u) ** k))

    x = grid.x
    if kind == "single":
        prof = shape(x)
    elif kind == "double":
        prof = shape(x + 3.0) + shape(x - 3.0)
    else:
        raise ValueError(f"unknown initial-condition kind {kind!r}; use 'single' or 'double'")
    return prof / grid.integrate(prof)


def initial_field(kind, k, theta, phi, grid, odd_k="abs") -> WignerField:
    """Product of a normalised spatial profile and a pure qubit state."""
    prof = spatial_profile(kind, k, grid, odd_k)
    w = InternalState(theta, phi).weights()
    return WignerField(grid, w[:, None] * prof[None, :], 0.0)


def rhs(f: WignerField, c: CoefficientSet) -> WignerField:
    """Time derivative of the four-field OQBM system; linear in ``f``."""
    g = f.grid
    x = g.x
    wp, wm, cr, ci = f.data
    d = g.d1(f.data)
    dwp, dwm, dcr, dci = d
    out = c.alpha_bar * g.d2(f.data) + c.beta_bar * g.drift(f.data)
    d3 = 2.0 * c.beta1 + c.beta2
    out[0] += 0.5 * c.beta2 * dcr + c.beta3 * dci
    out[1] += (-d3 * dcr - c.beta2 * x * cr + 2.0 * c.beta3 * x * ci
               - (2.0 * c.lambda3 + c.gamma_omega) * wm - c.gamma_omega * wp)
    out[2] += (0.25 * d3 * dwm + 0.125 * c.beta2 * dwp + 0.25 * c.beta2 * x * wm
               - 0.5 * (c.lambda2 + c.lambda3) * cr)
    out[3] += (0.25 * c.beta3 * dwp - 0.5 * c.beta3 * x * wm
               + 0.5 * (4.0 * c.lambda1 - c.lambda2 - c.lambda3) * ci)
    return WignerField(g, out, f.t)


def local_rate_bound(c: CoefficientSet, grid: SpatialGrid) -> float:
    """Largest row sum of |coupling| over the non-diffusive terms.

    First-derivative couplings count as |coef|/dx, position-weighted ones as
    |coef| * L; the beta_bar drift is accounted for separately by the caller.
    """
    dx, L = grid.dx, grid.L
    d3 = abs(2.0 * c.beta1 + c.beta2)
    rows = [
        (0.5 * abs(c.beta2) + abs(c.beta3)) / dx,
        d3 / dx + (abs(c.beta2) + 2 * abs(c.beta3)) * L
        + abs(2 * c.lambda3 + c.gamma_omega) + abs(c.gamma_omega),
        (0.25 * d3 + 0.125 * abs(c.beta2)) / dx + 0.25 * abs(c.beta2) * L
        + 0.5 * abs(c.lambda2 + c.lambda3),
        0.25 * abs(c.beta3) / dx + 0.5 * abs(c.beta3) * L
        + 0.5 * abs(4 * c.lambda1 - c.lambda2 - c.lambda3),
    ]
    return max(rows) + c.beta_bar


@dataclass(frozen=True)
class CFLReport:
    ok: bool
    dt: float
    dt_max: float
    dt_diffusive: float
    dt_advective: float
    binding: str

    def __str__(self):
        state = "ok" if self.ok else "FAIL"
        return (f"CFL {state}: dt={self.dt:g}, max stable dt={self.dt_max:g} "
                f"(diffusive {self.dt_diffusive:g}, advective {self.dt_advective:g}; "
                f"binding: {self.binding})")


def cfl_check(c: CoefficientSet, grid: SpatialGrid, dt: float, safety=CFL_SAFETY) -> CFLReport:
    dx = grid.dx
    dt_diff = math.inf if c.alpha_bar == 0 else safety * dx * dx / (2.0 * c.alpha_bar)
    denom = c.beta_bar * grid.L / dx + local_rate_bound(c, grid)
    dt_adv = math.inf if denom == 0 else safety / denom
    dt_max = min(dt_diff, dt_adv)
    if math.isinf(dt_max):
        binding = "unbounded"
    else:
        binding = "diffusive" if dt_diff <= dt_adv else "advective"
    return CFLReport(dt <= dt_max, dt, dt_max, dt_diff, dt_adv, binding)


def _pin(data):
    data[:, 0] = 0.0
    data[:, -1] = 0.0
    return data


def step_rk4(f: WignerField, c: CoefficientSet, dt: float) -> WignerField:
    """One classical RK4 step with Dirichlet pinning at both ends."""
    k1 = rhs(f, c).data
    k2 = rhs(WignerField(f.grid, f.data + 0.5 * dt * k1, f.t), c).data
    k3 = rhs(WignerField(f.grid, f.data + 0.5 * dt * k2, f.t), c).data
    k4 = rhs(WignerField(f.grid, f.data + dt * k3, f.t), c).data
    new = f.data + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    _pin(new)
    t = f.t + dt
    if not np.isfinite(new).all():
        raise NumericalError(f"non-finite field values at t={t:.6g}", t=t)
    return WignerField(f.grid, new, t)


@dataclass
class ScenarioConfig:
    """Everything needed to reproduce one run."""

    coefficients: CoefficientSet
    kind: str = "single"
    k: float = 2.0
    theta: float = 0.0
    phi: float = 0.0
    grid: SpatialGrid | None = field(default_factory=SpatialGrid)
    dt: float = 0.02
    t_final: float = 200.0
    snapshots: tuple = DEFAULT_SNAPSHOTS
    stride: int = 10
    name: str = "scenario"
    out_dir: str | None = None
    nmax: int = 8

    def __post_init__(self):
        self.snapshots = tuple(sorted(float(s) for s in self.snapshots))
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.t_final < 0:
            raise ValueError(f"t_final must be >= 0, got {self.t_final}")
        bad = [s for s in self.snapshots if s < 0 or s > self.t_final]
        if bad:
            raise ValueError(f"snapshot times {bad} fall outside [0, {self.t_final:g}]")
        if int(self.stride) != self.stride or self.stride < 1:
            raise ValueError(f"stride must be a positive integer, got {self.stride}")
        self.stride = int(self.stride)

    def initial_field(self) -> WignerField:
        if self.grid is None:
            raise ValueError(f"scenario {self.name!r} has no spatial grid")
        return initial_field(self.kind, self.k, self.theta, self.phi, self.grid)

    def with_(self, **changes) -> "ScenarioConfig":
        return replace(self, **changes)


@dataclass
class Trajectory:
    snapshots: list
    series: object  # observables.TimeSeries
    config: ScenarioConfig | None = None
    cfl: CFLReport | None = None

    def snapshot_at(self, t) -> WignerField:
        for s in self.snapshots:
            if math.isclose(s.t, t, rel_tol=1e-9, abs_tol=1e-9):
                return s
        raise KeyError(f"no snapshot at t={t}")


def _segments(times, t_final, dt):
    """Integration schedule as (n_steps, dt_seg, capture) between stop times."""
    stops = sorted(set([0.0, float(t_final)] + [float(s) for s in times]))
    out = []
    for a, b in zip(stops[:-1], stops[1:]):
        n = max(1, math.ceil((b - a) / dt - 1e-9))
        out.append((n, (b - a) / n, b))
    return stops, out


def evolve(cfg: ScenarioConfig, f0: WignerField | None = None, check_cfl=True) -> Trajectory:
    """Fixed-step RK4 from t=0 to ``cfg.t_final``.

    The step is shortened per inter-snapshot segment so every snapshot time is
    hit exactly. Time series are recorded every ``cfg.stride`` steps and at
    each snapshot.
    """
    from .observables import TimeSeries, series_row

    f = cfg.initial_field() if f0 is None else f0.copy()
    f.t = 0.0
    c = cfg.coefficients
    report = cfl_check(c, f.grid, cfg.dt)
    if check_cfl and not report.ok:
        raise NumericalError(str(report), t=0.0)

    snap_set = set(cfg.snapshots)
    snapshots = [f.copy()] if 0.0 in snap_set else []
    rows = [series_row(f)]
    stops, segs = _segments(cfg.snapshots, cfg.t_final, cfg.dt)
    steps = 0
    for seg_index, (n, h, t_end) in enumerate(segs):
        t_start = stops[seg_index]
        for i in range(1, n + 1):
            f = step_rk4(f, c, h)
            f.t = t_start + i * h if i < n else t_end
            steps += 1
            if i == n or steps % cfg.stride == 0:
                rows.append(series_row(f))
        if t_end in snap_set:
            snapshots.append(f.copy())
    return Trajectory(snapshots, TimeSeries.from_rows(rows), cfg, report)
