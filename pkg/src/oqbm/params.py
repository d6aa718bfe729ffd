"""Bath spectral density, thermal kernels and the dimensionless rate set.

Physical inputs are carried with explicit ``hbar`` and ``k_B`` (both 1 by
default). Everything downstream of :func:`coefficient_set` is dimensionless,
with frequencies measured in units of the trap frequency.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, fields

import numpy as np
from scipy import integrate


class RegimeError(ValueError):
    """Parameters fall outside the asymptotic regime a formula assumes."""


class PrincipalValueError(RuntimeError):
    """Richardson extrapolation of a principal-value integral did not settle."""

    def __init__(self, message, values=None, residuals=None):
        super().__init__(message)
        self.values = values
        self.residuals = residuals


# config-file key for every CoefficientSet field
COEFFICIENT_KEYS = ("alpha_bar", "beta_bar", "beta1", "beta2", "beta3",
                    "lambda1", "lambda2", "lambda3", "gamma_omega")


@dataclass(frozen=True)
class CoefficientSet:
    """The nine dimensionless rates of the OQBM master equation.

    ``gamma_omega`` is the spontaneous emission rate Gamma(Omega).
    """

    alpha_bar: float
    beta_bar: float = 0.0
    beta1: float = 0.0
    beta2: float = 0.0
    beta3: float = 0.0
    lambda1: float = 0.0
    lambda2: float = 0.0
    lambda3: float = 0.0
    gamma_omega: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            v = float(getattr(self, f.name))
            if not math.isfinite(v):
                raise ValueError(f"{f.name} must be finite, got {v}")
            object.__setattr__(self, f.name, v)
        if self.alpha_bar < 0:
            raise ValueError(f"alpha_bar must be >= 0, got {self.alpha_bar}")
        for name in ("beta_bar", "lambda2", "lambda3", "gamma_omega"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")

    def to_dict(self) -> dict[str, float]:
        return asdict(self)

    @classmethod
    def from_dict(cls, d) -> "CoefficientSet":
        unknown = set(d) - set(COEFFICIENT_KEYS)
        if unknown:
            raise KeyError(f"unknown coefficient keys: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in d.items()})

    def replace(self, **changes) -> "CoefficientSet":
        d = self.to_dict()
        d.update(changes)
        return CoefficientSet(**d)

    def scaled(self, a: float) -> "CoefficientSet":
        return CoefficientSet(**{k: a * v for k, v in self.to_dict().items()})


@dataclass(frozen=True)
class PhysicalParams:
    """Microscopic parameters of particle, qubit and Ohmic bath."""

    m: float = 1.0
    omega: float = 1.0
    Omega: float = 1.0
    gamma: float = 10.0
    cutoff: float = 100.0
    T: float = 1000.0
    a0: float = 1.0
    hbar: float = 1.0
    k_B: float = 1.0

    def __post_init__(self):
        for name in ("m", "omega", "Omega", "gamma", "cutoff", "T", "hbar", "k_B"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive, got {getattr(self, name)}")

    @property
    def x0(self) -> float:
        return math.sqrt(self.hbar / (2.0 * self.m * self.omega))

    @property
    def p0(self) -> float:
        return math.sqrt(self.m * self.hbar * self.omega / 2.0)

    @property
    def alpha(self) -> float:
        """Thermal energy in units of the trap quantum, k_B T / (hbar omega)."""
        return self.k_B * self.T / (self.hbar * self.omega)

    def matsubara(self, n):
        return 2.0 * np.pi * np.asarray(n) * self.k_B * self.T / self.hbar

    def is_high_damping(self, ratio=10.0) -> bool:
        return self.gamma / self.omega >= ratio

    def is_high_temperature(self, ratio=10.0) -> bool:
        """k_B T / hbar >> cutoff >> omega, each by at least ``ratio``."""
        thermal = self.k_B * self.T / self.hbar
        return thermal >= ratio * self.cutoff and self.cutoff >= ratio * self.omega


def bose(w, p: PhysicalParams):
    """Mean Bose occupation 1/(exp(hbar w / k_B T) - 1)."""
    with np.errstate(over="ignore", divide="ignore"):
        return 1.0 / np.expm1(p.hbar * np.asarray(w, dtype=float) / (p.k_B * p.T))


def spectral_density(w, p: PhysicalParams):
    """Ohmic density with Lorentz-Drude cutoff, (2 m gamma / pi) w L^2 / (L^2 + w^2)."""
    w = np.asarray(w, dtype=float)
    if np.any(w < 0):
        raise ValueError("spectral density is defined for non-negative frequencies")
    lam2 = p.cutoff ** 2
    out = 2.0 * p.m * p.gamma / np.pi * w * lam2 / (lam2 + w * w)
    return float(out) if out.ndim == 0 else out


def thermal_kernels(tau, p: PhysicalParams, ratio=10.0):
    """Noise and dissipation kernels (nu, eta) at lag ``tau`` in the high-T limit."""
    if not p.is_high_temperature(ratio):
        raise RegimeError(
            "thermal kernels need k_B T/hbar >> cutoff >> omega "
            f"(ratio {ratio:g}); got k_B T/hbar={p.k_B * p.T / p.hbar:g}, "
            f"cutoff={p.cutoff:g}, omega={p.omega:g}")
    tau = np.asarray(tau, dtype=float)
    decay = np.exp(-p.cutoff * np.abs(tau))
    nu = 2.0 * p.m * p.gamma * p.k_B * p.T * p.cutoff * decay
    eta = p.m * p.gamma * p.hbar * p.cutoff ** 2 * np.sign(tau) * decay
    if tau.ndim == 0:
        return float(nu), float(eta)
    return nu, eta


def qho_coefficients(p: PhysicalParams, high_limit=False):
    """Caldeira-Leggett coefficients (D_x, C_x, D_p, C_p).

    With ``high_limit`` the k_B T >> cutoff >> omega asymptotes are returned
    instead of the full Lorentz-Drude expressions.
    """
    m, g, kT, hb, lam, w = p.m, p.gamma, p.k_B * p.T, p.hbar, p.cutoff, p.omega
    if high_limit:
        return (2 * m * g * kT, m * g * hb * lam, 2 * m * g * kT * w / lam, m * g * hb * w)
    den = lam * lam + w * w
    return (2 * m * g * kT * lam * lam / den,
            m * g * hb * lam ** 3 / den,
            2 * m * g * kT * lam * w / den,
            m * g * hb * lam * lam * w / den)


@dataclass
class PVResult:
    value: float
    error: float
    levels: tuple = ()


def principal_value_integral(f, pole, domain, eps=None, levels=3, rtol=1e-6, atol=1e-10,
                             quad_kw=None) -> PVResult:
    """Cauchy principal value of the integral of ``f`` over ``domain``.

    ``f`` is the full integrand, including its simple pole at ``pole``. The
    window ``[pole - e, pole + e]`` is excluded for ``e`` in ``eps, eps/2, ...``
    and the sequence is Richardson-extrapolated to ``e -> 0``. The exclusion
    error is odd in ``e``, so successive passes remove ``e``, ``e^3``, ...

    Raises :class:`PrincipalValueError` when the last two extrapolants differ
    by more than ``atol + rtol * |value|``.
    """
    a, b = map(float, domain)
    if not a < pole < b:
        raise ValueError(f"pole {pole} must lie strictly inside ({a}, {b})")
    if eps is None:
        eps = 1e-2 * (b - a)
    eps = min(eps, 0.5 * (pole - a), 0.5 * (b - pole))
    if levels < 2:
        raise ValueError("need at least two exclusion widths to extrapolate")
    kw = {"limit": 400, "epsabs": 1e-13, "epsrel": 1e-12}
    kw.update(quad_kw or {})

    raw = []
    for j in range(levels):
        e = eps / 2 ** j
        left = integrate.quad(f, a, pole - e, **kw)[0]
        right = integrate.quad(f, pole + e, b, **kw)[0]
        raw.append(left + right)

    table = [list(raw)]
    for k in range(1, levels):
        fac = 2.0 ** (2 * k - 1)
        prev = table[-1]
        table.append([(fac * prev[i + 1] - prev[i]) / (fac - 1) for i in range(len(prev) - 1)])
    value = table[-1][0]
    error = abs(table[-1][0] - table[-2][-1])
    if not np.isfinite(value) or error > atol + rtol * abs(value):
        residuals = [abs(row[-1] - value) for row in table]
        raise PrincipalValueError(
            f"principal value did not converge: estimate {value:.6g}, "
            f"error {error:.3g}, residuals per level {residuals}",
            values=raw, residuals=residuals)
    return PVResult(value=value, error=error, levels=tuple(raw))


def _pv_over_bath(g, p: PhysicalParams, K=20.0, check_tail=True, **pv_kw):
    """P-integral of g(w)/(w - Omega) over [0, K * cutoff], with a tail check at 2K.

    Bose factors vary on the thermal scale, which can be shorter than the
    default exclusion width, so one extra halving is used by default.
    """
    b = K * max(p.cutoff, 2.0 * p.Omega)
    pv_kw.setdefault("levels", 4)

    def integrand(w):
        return g(w) / (w - p.Omega)

    res = principal_value_integral(integrand, p.Omega, (0.0, b), **pv_kw)
    if check_tail:
        tail = integrate.quad(integrand, b, 2.0 * b, limit=200)[0]
        res.error += abs(tail)
    return res


def two_level_rates(p: PhysicalParams, K=20.0):
    """(lambda1, lambda2, lambda3, Gamma(Omega)) of the qubit dissipator."""
    J = spectral_density(p.Omega, p)
    n = float(bose(p.Omega, p))
    big_gamma = 2.0 * p.a0 ** 2 * np.pi * J / p.hbar

    def g(w):
        # J(w) (n(w) + 1/2) is finite at w -> 0 since J ~ w and n ~ 1/w
        if w == 0.0:
            return p.m * p.gamma * p.k_B * p.T * 2.0 / (np.pi * p.hbar)
        return spectral_density(w, p) * (bose(w, p) + 0.5)

    pv = _pv_over_bath(g, p, K=K).value
    lam1 = p.a0 ** 2 / p.hbar * pv - p.Omega / 2.0
    return lam1, big_gamma * (n + 1.0), big_gamma * n, big_gamma


def cross_rates(p: PhysicalParams, K=20.0, resonance="warn"):
    """(beta1, beta2, beta3) coupling the qubit to the particle position.

    The derivation assumes the qubit and trap are resonant; ``resonance``
    chooses whether a detuned input warns, raises or passes silently.
    """
    if not math.isclose(p.Omega, p.omega, rel_tol=1e-9):
        msg = f"cross rates assume Omega == omega, got Omega={p.Omega:g}, omega={p.omega:g}"
        if resonance == "raise":
            raise RegimeError(msg)
        if resonance == "warn":
            warnings.warn(msg, stacklevel=2)
    J = spectral_density(p.Omega, p)
    n = float(bose(p.Omega, p))
    pref = p.a0 * p.x0 / p.hbar
    b1 = 2.0 * np.pi * pref * J * n
    b2 = 2.0 * np.pi * pref * J
    b3 = pref * _pv_over_bath(lambda w: spectral_density(w, p), p, K=K).value
    return b1, b2, b3


def coefficient_set(p: PhysicalParams, ratio=10.0, K=20.0, resonance="warn") -> CoefficientSet:
    """Dimensionless coefficients (rates divided by omega) from physical inputs.

    Requires the high-damping regime gamma/omega >= ``ratio``.
    """
    if not p.is_high_damping(ratio):
        raise RegimeError(
            f"adiabatic elimination needs gamma >> omega (ratio {ratio:g}); "
            f"got gamma/omega={p.gamma / p.omega:g}")
    alpha_bar = p.k_B * p.T * p.omega / (4.0 * p.gamma * p.hbar)
    beta_bar = p.omega ** 2 / (4.0 * p.gamma)
    lam1, lam2, lam3, big_gamma = two_level_rates(p, K=K)
    b1, b2, b3 = cross_rates(p, K=K, resonance=resonance)
    w = p.omega
    return CoefficientSet(alpha_bar / w, beta_bar / w, b1 / w, b2 / w, b3 / w,
                          lam1 / w, lam2 / w, lam3 / w, big_gamma / w)
