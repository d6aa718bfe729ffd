"""Truncated hierarchy for the position moments <x^n W>.

Each order carries the 4-vector R_n = (<x^n W+>, <x^n W->, <x^n C_R>, <x^n C_I>)
and obeys

    dR_n/dt = M_n R_n + A_n R_{n-1} + B_n R_{n-2} + C R_{n+1},

closed by R_{nmax+1} = 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as gamma_fn

from .dynamics import InternalState, NumericalError
from .params import CoefficientSet

MIN_NMAX = 2
FORMS = ("printed", "consistent")
RK4_STABILITY_RADIUS = 2.5


@dataclass
class MomentSystem:
    coefficients: CoefficientSet
    nmax: int
    M: np.ndarray  # (nmax+1, 4, 4)
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray  # (4, 4)
    closure: str = "truncate"
    form: str = "printed"

    def deltas(self, n):
        c = self.coefficients
        d1 = 2 * c.beta_bar * n + c.lambda2 + c.lambda3
        d2 = 4 * c.lambda1 - 2 * c.beta_bar * n - c.lambda2 - c.lambda3
        d3 = 2 * c.beta1 + c.beta2
        return d1, d2, d3

    @property
    def size(self):
        return 4 * (self.nmax + 1)

    def generator(self) -> np.ndarray:
        """Dense matrix K of the closed system dR/dt = K R, R = concat(R_0..R_nmax)."""
        K = np.zeros((self.size, self.size))
        for n in range(self.nmax + 1):
            r = slice(4 * n, 4 * n + 4)
            K[r, r] = self.M[n]
            if n >= 1:
                K[r, 4 * (n - 1):4 * n] = self.A[n]
            if n >= 2:
                K[r, 4 * (n - 2):4 * (n - 1)] = self.B[n]
            if n < self.nmax:
                K[r, 4 * (n + 1):4 * (n + 2)] = self.C
        return K


def build_system(c: CoefficientSet, nmax=8, form="printed") -> MomentSystem:
    """Materialise M_n, A_n, B_n (n = 0..nmax) and C.

    ``form="printed"`` uses the fixed W- decay rate beta_bar + 2 lambda3 at every order.
    ``form="consistent"`` uses n beta_bar + 2 lambda3 + Gamma, which is what
    taking x^n moments of the field equations solved by ``dynamics`` gives.
    """
    if int(nmax) != nmax or nmax < MIN_NMAX:
        raise ValueError(f"truncation order nmax must be an integer >= {MIN_NMAX}, got {nmax}")
    if form not in FORMS:
        raise ValueError(f"form must be one of {FORMS}, got {form!r}")
    nmax = int(nmax)
    M = np.zeros((nmax + 1, 4, 4))
    A = np.zeros_like(M)
    B = np.zeros_like(M)
    d3 = 2 * c.beta1 + c.beta2
    for n in range(nmax + 1):
        d1 = 2 * c.beta_bar * n + c.lambda2 + c.lambda3
        d2 = 4 * c.lambda1 - 2 * c.beta_bar * n - c.lambda2 - c.lambda3
        if form == "printed":
            decay = c.beta_bar + 2 * c.lambda3
        else:
            decay = n * c.beta_bar + 2 * c.lambda3 + c.gamma_omega
        M[n] = [[-c.beta_bar * n, 0, 0, 0],
                [-c.gamma_omega, -decay, 0, 0],
                [0, 0, -0.5 * d1, 0],
                [0, 0, 0, 0.5 * d2]]
        A[n] = [[0, 0, -0.5 * n * c.beta2, -n * c.beta3],
                [0, 0, n * d3, 0],
                [-n * c.beta2 / 8, -n * d3 / 4, 0, 0],
                [-n * c.beta3 / 4, 0, 0, 0]]
        B[n] = c.alpha_bar * n * (n - 1) * np.eye(4)
    C = np.array([[0, 0, 0, 0],
                  [0, 0, -c.beta2, 2 * c.beta3],
                  [0, c.beta2 / 4, 0, 0],
                  [0, -c.beta3 / 2, 0, 0]], dtype=float)
    return MomentSystem(c, nmax, M, A, B, C, form=form)


def gaussian_moment(n) -> float:
    """n-th moment of e^{-x^2}/sqrt(pi): Gamma((1+n)/2)/sqrt(pi) for even n, 0 for odd."""
    if n < 0:
        raise ValueError(f"moment order must be >= 0, got {n}")
    if n % 2:
        return 0.0
    return float(gamma_fn((1 + n) / 2) / math.sqrt(math.pi))


def initial_moments(n, theta, phi) -> np.ndarray:
    """R_n at t = 0 for the Gaussian profile times a pure qubit state."""
    return gaussian_moment(n) * InternalState(theta, phi).weights()


def initial_vector(nmax, theta, phi) -> np.ndarray:
    return np.concatenate([initial_moments(n, theta, phi) for n in range(nmax + 1)])


def spectral_bound(K, iters=200, seed=0) -> float:
    """Power-iteration estimate of ||K||_2, an upper bound on the spectral radius."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(K.shape[0])
    v /= np.linalg.norm(v)
    s = 0.0
    for _ in range(iters):
        w = K.T @ (K @ v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
        s_new = math.sqrt(nw)
        if abs(s_new - s) <= 1e-12 * s_new:
            s = s_new
            break
        s = s_new
    return s


@dataclass
class MomentTrajectory:
    t: np.ndarray
    R: np.ndarray  # (len(t), nmax+1, 4)
    system: MomentSystem
    dt: float
    bound: float

    def order(self, n) -> np.ndarray:
        return self.R[:, n, :]


def evolve_moments(sys: MomentSystem, init, dt, t_final, record_every=1,
                   growth_limit=1e12) -> MomentTrajectory:
    """RK4 integration of the closed hierarchy.

    ``dt`` is checked against 2.5 / ||K||; growth of max|R| beyond
    ``growth_limit`` times its initial value aborts the run.
    """
    K = sys.generator()
    R = np.asarray(init, dtype=float).reshape(-1).copy()
    if R.size != sys.size:
        raise ValueError(f"initial vector has {R.size} entries, expected {sys.size}")
    bound = spectral_bound(K)
    if bound > 0 and dt > RK4_STABILITY_RADIUS / bound:
        raise NumericalError(
            f"dt={dt:g} exceeds the RK4 stability limit {RK4_STABILITY_RADIUS / bound:.4g} "
            f"(spectral bound {bound:.4g} of the truncated hierarchy)", t=0.0)
    n_steps = max(0, math.ceil(t_final / dt - 1e-9))
    h = t_final / n_steps if n_steps else 0.0
    scale = max(np.abs(R).max(), 1e-300)
    ts, Rs = [0.0], [R.copy()]
    for i in range(1, n_steps + 1):
        k1 = K @ R
        k2 = K @ (R + 0.5 * h * k1)
        k3 = K @ (R + 0.5 * h * k2)
        k4 = K @ (R + h * k3)
        R = R + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        t = i * h
        peak = np.abs(R).max()
        if not np.isfinite(peak) or peak > growth_limit * scale:
            raise NumericalError(
                f"moment hierarchy blew up at t={t:.6g} (max |R| = {peak:.3g}); "
                f"spectral bound {bound:.4g}. Lower nmax or dt.", t=t)
        if i % record_every == 0 or i == n_steps:
            ts.append(t)
            Rs.append(R.copy())
    R_arr = np.asarray(Rs).reshape(len(ts), sys.nmax + 1, 4)
    return MomentTrajectory(np.asarray(ts), R_arr, sys, h, bound)


def field_moments(f, n, tail_tol=1e-6) -> np.ndarray:
    """(<x^n W+>, <x^n W->, <x^n C_R>, <x^n C_I>) by trapezoid quadrature."""
    g = f.grid
    if n < 0:
        raise ValueError(f"moment order must be >= 0, got {n}")
    with np.errstate(over="ignore"):
        w = g.x ** n
    if not np.isfinite(w).all():
        raise ValueError(f"x^{n} overflows on a grid of half-width {g.L:g}; use a lower order")
    weighted = w * f.data
    if n > 0:
        edge = 10
        tail = np.abs(weighted[:, :edge]).sum() + np.abs(weighted[:, -edge:]).sum()
        scale = np.abs(weighted).sum()
        if scale > 0 and tail > tail_tol * scale:
            raise ValueError(
                f"x^{n}-weighted field is not negligible at the boundary "
                f"(tail fraction {tail / scale:.2e}); widen the grid or lower n")
    return g.integrate(weighted)


def moments_from_pde(trajectory, n) -> tuple[np.ndarray, np.ndarray]:
    """Moment 4-vectors of order ``n`` at every snapshot of a PDE trajectory."""
    snaps = trajectory.snapshots if hasattr(trajectory, "snapshots") else list(trajectory)
    t = np.array([s.t for s in snaps])
    return t, np.array([field_moments(s, n) for s in snaps])
