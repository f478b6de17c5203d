"""Thermodynamic closures, Arrhenius kinetics and the algebraic identities they obey.

All quantities are nondimensional.  Pointwise functions accept scalars or numpy
arrays; the bare ``*_formula`` helpers carry no validation and are compiled by
numba for the solver kernels, so each closure is written exactly once.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, fields

import numpy as np

from .errors import DegenerateStencil, InvalidParameters, StatePositivityViolation

THEOREM_B_THRESHOLD = 19.0 / 4.0


# Raw formulas.  ``v`` is specific volume, ``th`` temperature.

def pressure_formula(R, a, v, th):
    return R * th / v + (a / 3.0) * th**4


def energy_formula(cv, a, v, th):
    return cv * th + a * v * th**4


def energy_theta_formula(cv, a, v, th):
    return cv + 4.0 * a * v * th**3


def pressure_theta_formula(R, a, v, th):
    return R / v + (4.0 / 3.0) * a * th**3


def power_formula(th, b):
    return np.exp(b * np.log(th))


def conductivity_formula(k1, k2, b, v, th):
    return k1 + k2 * v * np.exp(b * np.log(th))


def rate_formula(K, beta, A, th):
    return K * np.exp(beta * np.log(th) - A / th)


@dataclass(frozen=True)
class PhysParams:
    """Physical constants of the model.

    ``alpha`` is derived as ``2*mu + lambda1``.  Only the viscosity admissibility
    conditions are hard errors; a ``beta`` outside ``[0, b + 9)`` is reported
    through :attr:`outside_theorem_regime`.
    """

    mu: float = 1.0
    lambda1: float = 0.0
    lambda_heat: float = 1.0
    K_rate: float = 1.0
    A_act: float = 1.0
    beta: float = 1.0
    d_diff: float = 1.0
    R_gas: float = 1.0
    c_v: float = 1.0
    a_rad: float = 0.01
    kappa1: float = 1.0
    kappa2: float = 1.0
    b_exp: float = 5.0
    n_dim: int = 3

    def __post_init__(self):
        problems = self.violations()
        if problems:
            raise InvalidParameters("; ".join(problems))
        if self.outside_theorem_regime:
            warnings.warn(
                f"beta={self.beta} outside [0, b+9) for b={self.b_exp}",
                RuntimeWarning,
                stacklevel=3,
            )

    def violations(self) -> list[str]:
        out = []
        if not self.mu > 0:
            out.append("viscosity rule mu>0 violated")
        if isinstance(self.n_dim, bool) or int(self.n_dim) != self.n_dim or self.n_dim < 2:
            out.append("n_dim must be an integer >= 2")
        elif not self.n_dim * self.lambda1 + 2.0 * self.mu > 0:
            out.append("viscosity rule n*lambda1+2*mu>0 violated")
        if not 2.0 * self.mu + self.lambda1 > 0:
            out.append("alpha=2*mu+lambda1>0 violated")
        for name in ("R_gas", "c_v", "kappa1", "b_exp"):
            if not getattr(self, name) > 0:
                out.append(f"{name} must be > 0")
        for name in ("lambda_heat", "K_rate", "A_act", "d_diff", "a_rad", "kappa2"):
            if not getattr(self, name) >= 0:
                out.append(f"{name} must be >= 0")
        for f in fields(self):
            val = getattr(self, f.name)
            if not math.isfinite(val):
                out.append(f"{f.name} must be finite")
        return out

    @property
    def alpha(self) -> float:
        return 2.0 * self.mu + self.lambda1

    @property
    def theorem_regime(self) -> bool:
        return self.b_exp > THEOREM_B_THRESHOLD

    @property
    def outside_theorem_regime(self) -> bool:
        return not (0.0 <= self.beta < self.b_exp + 9.0)

    def replace(self, **changes) -> "PhysParams":
        d = asdict(self)
        d.update(changes)
        return PhysParams(**d)

    def as_vector(self) -> np.ndarray:
        """Packed float vector consumed by the numba kernels (see ``_kernels``)."""
        return np.array(
            [
                self.mu, self.lambda1, self.lambda_heat, self.K_rate, self.A_act,
                self.beta, self.d_diff, self.R_gas, self.c_v, self.a_rad,
                self.kappa1, self.kappa2, self.b_exp, float(self.n_dim), self.alpha,
            ],
            dtype=np.float64,
        )


@dataclass(frozen=True)
class ThermoPoint:
    """A (specific volume, temperature) pair; fields may be arrays."""

    v: float | np.ndarray
    theta: float | np.ndarray

    def __post_init__(self):
        v = np.asarray(self.v, dtype=float)
        th = np.asarray(self.theta, dtype=float)
        if not np.all(v > 0):
            raise StatePositivityViolation(f"specific volume must be > 0 (min {v.min()})")
        if not np.all(th > 0):
            raise StatePositivityViolation(f"temperature must be > 0 (min {th.min()})")


def _vt(s: ThermoPoint):
    return np.asarray(s.v, dtype=float)[()], np.asarray(s.theta, dtype=float)[()]


def pressure(p: PhysParams, s: ThermoPoint):
    v, th = _vt(s)
    return pressure_formula(p.R_gas, p.a_rad, v, th)


def internal_energy(p: PhysParams, s: ThermoPoint):
    v, th = _vt(s)
    return energy_formula(p.c_v, p.a_rad, v, th)


def energy_temp_deriv(p: PhysParams, s: ThermoPoint):
    v, th = _vt(s)
    return energy_theta_formula(p.c_v, p.a_rad, v, th)


def pressure_temp_deriv(p: PhysParams, s: ThermoPoint):
    v, th = _vt(s)
    return pressure_theta_formula(p.R_gas, p.a_rad, v, th)


def entropy(p: PhysParams, s: ThermoPoint):
    v, th = _vt(s)
    return p.c_v * np.log(th) + (4.0 / 3.0) * p.a_rad * v * th**3 + p.R_gas * np.log(v)


def normalized_entropy(p: PhysParams, s: ThermoPoint):
    """Relative entropy about (v, theta) = (1, 1); nonnegative, zero only there."""
    v, th = _vt(s)
    return (
        p.c_v * (th - np.log(th) - 1.0)
        + p.R_gas * (v - np.log(v) - 1.0)
        + p.a_rad * v * (th - 1.0) ** 2 * (3.0 * th**2 + 2.0 * th + 1.0) / 3.0
    )


def normalized_entropy_unreduced(p: PhysParams, s: ThermoPoint):
    # Same quantity written as energy minus entropy plus the affine correction.
    v, th = _vt(s)
    e = energy_formula(p.c_v, p.a_rad, v, th)
    E = entropy(p, s)
    return (
        e
        - (p.c_v + p.a_rad)
        + (p.R_gas + p.a_rad / 3.0) * (v - 1.0)
        - (E - (4.0 / 3.0) * p.a_rad)
    )


def conductivity(p: PhysParams, s: ThermoPoint):
    v, th = _vt(s)
    return conductivity_formula(p.kappa1, p.kappa2, p.b_exp, v, th)


def reaction_rate(p: PhysParams, theta):
    """Arrhenius rate ``K theta^beta exp(-A/theta)``; theta = 0 is the zero limit."""
    th = np.asarray(theta, dtype=float)
    if np.any(th < 0) or np.any(np.isnan(th)):
        raise StatePositivityViolation("reaction_rate needs theta >= 0")
    safe = np.where(th > 0, th, 1.0)
    out = rate_formula(p.K_rate, p.beta, p.A_act, safe)
    if p.A_act == 0 and p.beta == 0:
        zero_limit = p.K_rate
    else:
        zero_limit = 0.0
    return np.where(th > 0, out, zero_limit)[()]


def species_diffusion(p: PhysParams, s: ThermoPoint):
    v, _ = _vt(s)
    return p.d_diff / v**2


def default_fd_step(s: ThermoPoint) -> float:
    v, th = _vt(s)
    return 1e-4 * max(1.0, float(np.max(np.abs(v))), float(np.max(np.abs(th))))


def maxwell_residuals(p: PhysParams, s: ThermoPoint, h: float | None = None):
    """Central-difference residuals of the three Maxwell-type relations.

    Returns ``(E_v - P_theta, E_theta - e_theta/theta, e_v - (theta P_theta - P))``
    with the left-hand derivatives taken numerically at step ``h``.
    """
    v, th = _vt(s)
    if h is None:
        h = default_fd_step(s)
    if not h > 0:
        raise DegenerateStencil("finite-difference step must be positive")
    if np.any(v - h <= 0) or np.any(th - h <= 0):
        raise DegenerateStencil(f"step h={h} leaves the positive state space")

    def E(vv, tt):
        return p.c_v * np.log(tt) + (4.0 / 3.0) * p.a_rad * vv * tt**3 + p.R_gas * np.log(vv)

    def e(vv, tt):
        return energy_formula(p.c_v, p.a_rad, vv, tt)

    P = pressure_formula(p.R_gas, p.a_rad, v, th)
    Pt = pressure_theta_formula(p.R_gas, p.a_rad, v, th)
    et = energy_theta_formula(p.c_v, p.a_rad, v, th)
    r1 = (E(v + h, th) - E(v - h, th)) / (2 * h) - Pt
    r2 = (E(v, th + h) - E(v, th - h)) / (2 * h) - et / th
    r3 = (e(v + h, th) - e(v - h, th)) / (2 * h) - (th * Pt - P)
    return r1, r2, r3


def dissipation_decomposition(p: PhysParams, v, theta, u, r, ux):
    """Split the viscous entropy production into two nonnegative pieces.

    Returns ``(lhs, t1, t2)`` where ``lhs`` is the viscous production
    ``alpha w^2/(v theta) - 2 mu (n-1) (r^{n-2} u^2)_x / theta`` with
    ``w = (r^{n-1} u)_x``; ``lhs == t1 + t2`` up to roundoff.
    """
    v = np.asarray(v, dtype=float)
    theta = np.asarray(theta, dtype=float)
    r = np.asarray(r, dtype=float)
    if np.any(v <= 0) or np.any(theta <= 0):
        raise StatePositivityViolation("dissipation_decomposition needs v, theta > 0")
    if np.any(r < 1.0):
        raise StatePositivityViolation("radius must be >= 1 in the exterior domain")
    n = p.n_dim
    w = (n - 1) * v * u / r + r ** (n - 1) * ux
    mx = (n - 2) * v * u**2 / r**2 + 2.0 * r ** (n - 2) * u * ux
    lhs = p.alpha * w**2 / (v * theta) - 2.0 * p.mu * (n - 1) * mx / theta
    t1 = (p.lambda1 + 2.0 * p.mu / n) * w**2 / (v * theta)
    sq = w / math.sqrt(n) - math.sqrt(n) * v * u / r
    t2 = 2.0 * p.mu * (n - 1) / (v * theta) * sq**2
    return lhs[()], t1[()], t2[()]
