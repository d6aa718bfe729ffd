"""Scalar diagnostics of OQBM fields and trajectories."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import OptimizeWarning, curve_fit
from scipy.signal import find_peaks

SERIES_COLUMNS = ("t", "norm", "mean_x", "variance", "C_I_total", "sigma_z")


class DiagnosticError(ValueError):
    pass


def norm(f) -> float:
    return float(f.grid.integrate(f.W_plus))


def _position_moments(f):
    g = f.grid
    n = norm(f)
    if not n > 0:
        raise DiagnosticError(f"position density has non-positive norm {n:g}")
    mean = g.integrate(g.x * f.W_plus) / n
    second = g.integrate(g.x ** 2 * f.W_plus) / n
    return n, float(mean), float(second)


def mean_x(f) -> float:
    return _position_moments(f)[1]


def variance(f) -> float:
    """Position variance under P(x) = W_plus / norm."""
    _, m, s = _position_moments(f)
    return s - m * m


def sigma_z(f) -> float:
    return float(f.grid.integrate(f.W_minus))


def coherence_total(f) -> float:
    return float(f.grid.integrate(f.C_I))


def series_row(f):
    n, m, s = _position_moments(f)
    return (f.t, n, m, s - m * m, coherence_total(f), sigma_z(f))


@dataclass
class TimeSeries:
    t: np.ndarray
    norm: np.ndarray
    mean_x: np.ndarray
    variance: np.ndarray
    C_I_total: np.ndarray
    sigma_z: np.ndarray

    def __post_init__(self):
        if self.t.size > 1 and not np.all(np.diff(self.t) > 0):
            raise ValueError("time series times must be strictly increasing")

    @classmethod
    def from_rows(cls, rows):
        a = np.asarray(rows, dtype=float).reshape(-1, len(SERIES_COLUMNS))
        return cls(*a.T)

    def as_array(self) -> np.ndarray:
        return np.column_stack([getattr(self, c) for c in SERIES_COLUMNS])

    def window(self, lo, hi):
        sel = (self.t >= lo) & (self.t <= hi)
        return self.t[sel], sel


@dataclass
class PeakReport:
    positions: np.ndarray
    heights: np.ndarray

    @property
    def count(self) -> int:
        return int(self.positions.size)


def peak_census(f, threshold=1e-2, min_sep=None, relative=True) -> PeakReport:
    """Strict local maxima of W_plus above a threshold.

    With ``relative`` the threshold is a fraction of max(W_plus). Maxima
    closer than ``min_sep`` (default 10 dx) are merged, keeping the higher.
    """
    if not threshold > 0:
        raise ValueError("threshold must be positive")
    y = np.asarray(f.W_plus, dtype=float)
    x = f.grid.x
    if min_sep is None:
        min_sep = 10 * f.grid.dx
    top = y.max(initial=0.0)
    if top <= 0:
        return PeakReport(np.empty(0), np.empty(0))
    cut = threshold * top if relative else threshold
    # flat-topped maxima (even N, k=10 plateaus) count once, at the plateau centre
    idx, _ = find_peaks(y, height=cut, distance=max(1.0, min_sep / f.grid.dx))
    return PeakReport(x[idx].copy(), y[idx].copy())


def _gauss(x, a, mu, s):
    return a * np.exp(-0.5 * ((x - mu) / s) ** 2)


def _fit_residual(x, y):
    """L2 norm of the residual of a one-Gaussian least-squares fit."""
    mass = np.trapezoid(y, x)
    if not mass > 0:
        raise DiagnosticError("cannot fit a Gaussian to a non-positive profile")
    mu = np.trapezoid(x * y, x) / mass
    var = np.trapezoid((x - mu) ** 2 * y, x) / mass
    if not var > 0:
        raise DiagnosticError("degenerate Gaussian fit (zero variance)")
    p0 = (y.max(), mu, np.sqrt(var))
    try:
        # an exact fit leaves the covariance undefined; only popt is used
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", OptimizeWarning)
            popt, _ = curve_fit(_gauss, x, y, p0=p0, maxfev=20000)
    except RuntimeError as exc:
        raise DiagnosticError(f"Gaussian fit did not converge: {exc}") from exc
    if not abs(popt[2]) > 0:
        raise DiagnosticError("degenerate Gaussian fit (zero variance)")
    r = y - _gauss(x, *popt)
    return np.sqrt(np.trapezoid(r * r, x))


def gaussian_residual(f, per_lobe=False, **census_kw) -> float:
    """Relative L2 misfit of the best single-Gaussian fit to P(x).

    With ``per_lobe`` the profile is cut at the minima between census peaks
    and each lobe gets its own Gaussian; residuals add in quadrature.
    """
    x = f.grid.x
    y = np.asarray(f.W_plus, dtype=float)
    if not norm(f) > 0:
        raise DiagnosticError("position density has non-positive norm")
    scale = np.sqrt(np.trapezoid(y * y, x))
    bounds = [0, y.size]
    if per_lobe:
        peaks = peak_census(f, **census_kw).positions
        idx = np.searchsorted(x, peaks)
        cuts = [a + int(np.argmin(y[a:b + 1])) for a, b in zip(idx[:-1], idx[1:])]
        bounds = [0, *cuts, y.size]
    total = 0.0
    for a, b in zip(bounds[:-1], bounds[1:]):
        total += _fit_residual(x[a:b], y[a:b]) ** 2
    return float(np.sqrt(total) / scale)


def growth_exponent(ts: TimeSeries, window) -> float:
    """Log-log slope of sigma^2(t) - sigma^2(0) over the time window."""
    lo, hi = window
    t, sel = ts.window(lo, hi)
    growth = ts.variance[sel] - ts.variance[0]
    if t.size < 2:
        raise DiagnosticError(f"fewer than two samples in window [{lo}, {hi}]")
    if np.any(growth <= 0) or np.any(t <= 0):
        raise DiagnosticError(f"variance growth is not positive throughout [{lo}, {hi}]")
    slope, _ = np.polyfit(np.log(t), np.log(growth), 1)
    return float(slope)
