"""Uniform grids and second-order finite-difference stencils.

All stencil functions act along the last axis, so a stacked ``(4, N)`` block
of fields is differentiated in one call.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MIN_NODES = 16


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform grid on ``[-L, L]`` with ``N`` nodes (both ends included)."""

    L: float = 20.0
    N: int = 1024
    x: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.L > 0:
            raise ValueError(f"half-width L must be positive, got {self.L}")
        if int(self.N) != self.N or self.N < MIN_NODES:
            raise ValueError(f"node count N must be an integer >= {MIN_NODES}, got {self.N}")
        object.__setattr__(self, "N", int(self.N))
        x = np.linspace(-self.L, self.L, self.N)
        x.setflags(write=False)
        object.__setattr__(self, "x", x)

    @property
    def dx(self) -> float:
        return 2.0 * self.L / (self.N - 1)

    @property
    def weights(self) -> np.ndarray:
        """Trapezoid weights."""
        w = np.full(self.N, self.dx)
        w[0] = w[-1] = 0.5 * self.dx
        return w

    def _check(self, f):
        f = np.asarray(f, dtype=float)
        if f.shape[-1] != self.N:
            raise ValueError(f"field length {f.shape[-1]} does not match grid N={self.N}")
        return f

    def d1(self, f):
        """First derivative: central interior, one-sided second order at the ends."""
        f = self._check(f)
        h = self.dx
        out = np.empty_like(f)
        out[..., 1:-1] = (f[..., 2:] - f[..., :-2]) / (2.0 * h)
        out[..., 0] = (-3.0 * f[..., 0] + 4.0 * f[..., 1] - f[..., 2]) / (2.0 * h)
        out[..., -1] = (3.0 * f[..., -1] - 4.0 * f[..., -2] + f[..., -3]) / (2.0 * h)
        return out

    def d2(self, f):
        """Second derivative: 3-point interior, one-sided second order at the ends."""
        f = self._check(f)
        h2 = self.dx ** 2
        out = np.empty_like(f)
        out[..., 1:-1] = (f[..., 2:] - 2.0 * f[..., 1:-1] + f[..., :-2]) / h2
        out[..., 0] = (2.0 * f[..., 0] - 5.0 * f[..., 1] + 4.0 * f[..., 2] - f[..., 3]) / h2
        out[..., -1] = (2.0 * f[..., -1] - 5.0 * f[..., -2] + 4.0 * f[..., -3] - f[..., -4]) / h2
        return out

    def drift(self, f):
        """d/dx (x f)."""
        f = self._check(f)
        return self.d1(self.x * f)

    def integrate(self, f):
        """Trapezoid rule over [-L, L]; reduces the last axis."""
        f = self._check(f)
        return f @ self.weights


def default_pmax(alpha: float) -> float:
    return max(8.0 * np.sqrt(alpha), 6.0)


@dataclass(frozen=True)
class PhaseGrid:
    """Product grid in (x, p); arrays are indexed ``[..., ix, ip]``."""

    xgrid: SpatialGrid
    pgrid: SpatialGrid
    alpha: float = 1.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if self.pgrid.L < 8.0 * np.sqrt(self.alpha) * (1 - 1e-12):
            raise ValueError(
                f"p half-width {self.pgrid.L:g} leaves stationary mass outside the grid; "
                f"need P_max >= 8*sqrt(alpha) = {8 * np.sqrt(self.alpha):g}")

    @classmethod
    def build(cls, alpha=1.0, L=20.0, N=1024, p_max=None, N_p=256):
        p_max = default_pmax(alpha) if p_max is None else p_max
        return cls(SpatialGrid(L, N), SpatialGrid(p_max, N_p), alpha)

    @property
    def x(self):
        return self.xgrid.x

    @property
    def p(self):
        return self.pgrid.x

    @property
    def shape(self):
        return (self.xgrid.N, self.pgrid.N)

    def d_p(self, f):
        return self.pgrid.d1(f)

    def d2_p(self, f):
        return self.pgrid.d2(f)

    def d_x(self, f):
        return np.moveaxis(self.xgrid.d1(np.moveaxis(f, -2, -1)), -1, -2)

    def integrate_p(self, f):
        return self.pgrid.integrate(f)

    def integrate(self, f):
        return self.xgrid.integrate(self.pgrid.integrate(f))
