"""Run-time monitors: Lyapunov functional, dissipation, balance identities,
a priori functionals and the local volume representation.

A :class:`History` follows a run from its initial state.  The solver calls
:meth:`History.observe` after every accepted step; identities that involve time
integrals are accumulated there with the trapezoidal rule.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import Optional

import numpy as np

from . import _kernels as K
from .constitutive import PhysParams, pressure_formula
from .errors import HistoryGap, InvalidArgument
from .geometry import RadiusField, radius_from_volume
from .grid_state import BoundaryConditions, Grid, State
from .solver import StepTally


def _functionals(p: PhysParams, s: State, rf: RadiusField, dx: float, bc: BoundaryConditions):
    return K.state_functionals(
        s.v, s.theta, s.z, s.u, rf.rn, p.as_vector(), dx, bc.dirichlet, bc.theta_far
    )


def lyapunov_functional(p: PhysParams, s: State, rf: RadiusField, dx: float) -> float:
    """Sum of the normalized entropy over cells plus u^2/2 over nodes."""
    return float(_functionals(p, s, rf, dx, BoundaryConditions())[K.F_LYAPUNOV])


def dissipation_rate(p: PhysParams, s: State, rf: RadiusField, dx: float,
                     bc: BoundaryConditions = BoundaryConditions()) -> float:
    return float(_functionals(p, s, rf, dx, bc)[K.F_DISSIPATION_V])


def decay_metric(s: State) -> float:
    """sup |(v - 1, u, theta - 1, z)|."""
    return float(max(np.max(np.abs(s.v - 1.0)), np.max(np.abs(s.u)),
                     np.max(np.abs(s.theta - 1.0)), np.max(np.abs(s.z))))


def entropy_roots(c_over_min: float, tol: float = 1e-12) -> tuple[float, float]:
    """The two roots of y - log y - 1 = c by bisection; (1, 1) when c = 0."""
    c = float(c_over_min)
    if not c >= 0 or not math.isfinite(c):
        raise InvalidArgument(f"entropy_roots needs a finite argument >= 0, got {c_over_min}")
    if c == 0.0:
        return 1.0, 1.0

    def f(y):
        return y - math.log(y) - 1.0 - c

    def bisect(lo, hi, rising):
        for _ in range(400):
            mid = 0.5 * (lo + hi)
            if (f(mid) < 0) == rising:
                lo = mid
            else:
                hi = mid
            # relative, so a tiny lower root is still resolved
            if hi - lo <= 0.25 * tol * mid:
                break
        return 0.5 * (lo + hi)

    lo = math.exp(-c - 1.0)
    a1 = bisect(lo, 1.0, rising=False)
    hi = 2.0
    while f(hi) < 0:
        hi *= 2.0
    a2 = bisect(1.0, hi, rising=True)
    return a1, a2


def unit_interval_means(p: PhysParams, s: State, grid: Grid, lyapunov: Optional[float] = None):
    """Means of v and theta over each [k, k+1] inside the domain.

    Each row is ``(k, mean_v, mean_theta, a1, a2, inside)`` with (a1, a2) the
    entropy roots for C equal to the current Lyapunov value.
    """
    if grid.x_max < 2:
        raise ValueError("unit_interval_means needs x_max >= 2")
    if lyapunov is None:
        lyapunov = lyapunov_functional(p, s, radius_from_volume(p, grid, s.v), grid.dx)
    a1, a2 = entropy_roots(max(lyapunov, 0.0) / min(p.R_gas, p.c_v))
    nodes = grid.nodes
    cum_v = np.concatenate([[0.0], np.cumsum(s.v * grid.dx)])
    cum_t = np.concatenate([[0.0], np.cumsum(s.theta * grid.dx)])
    k = np.arange(int(math.floor(grid.x_max + 1e-12)), dtype=float)
    mv = np.interp(k + 1, nodes, cum_v) - np.interp(k, nodes, cum_v)
    mt = np.interp(k + 1, nodes, cum_t) - np.interp(k, nodes, cum_t)
    slack = 1e-12
    inside = (a1 - slack <= mv) & (mv <= a2 + slack) & (a1 - slack <= mt) & (mt <= a2 + slack)
    return [(int(i), float(a), float(b), a1, a2, bool(q)) for i, a, b, q in zip(k, mv, mt, inside)]


def gplus_envelope(times, values) -> float:
    """Least-squares slope of sup max(1/theta - 1, 0) against time."""
    t = np.asarray(times, dtype=float)
    g = np.asarray(values, dtype=float)
    if t.size < 2 or np.ptp(t) == 0:
        return 0.0
    tm = t - t.mean()
    return float(np.dot(tm, g - g.mean()) / np.dot(tm, tm))


class RepresentationAudit:
    """Accumulators for the local volume representation on cells inside [k, k+1].

    The integrals are discretized so that the representation holds exactly for
    the semi-discrete scheme; the reported residual therefore measures only the
    time discretization.
    """

    def __init__(self, p: PhysParams, grid: Grid, s0: State, k: int):
        if s0.t != 0.0:
            raise HistoryGap("representation audit must start at t = 0")
        if grid.x_max < k + 2 + grid.dx * (1 - 1e-9):
            raise ValueError(f"audit on [{k}, {k + 1}] needs x_max >= {k + 2} plus one cell")
        self.p = p
        self.grid = grid
        self.k = k
        dx = grid.dx
        x = grid.nodes
        lo = np.ceil(k / dx - 1e-9)
        hi = np.floor((k + 1) / dx + 1e-9)
        self.cells = np.arange(int(lo), int(hi), dtype=int)
        if self.cells.size == 0:
            raise ValueError("no cell lies inside the audited interval")
        self.phi = np.clip(k + 2.0 - x, 0.0, 1.0)
        self.dphi = self.phi[:-1] - self.phi[1:]
        self.v0 = s0.v[self.cells].copy()
        self.t = 0.0
        self._b0 = self._b_sum(s0)
        S, U, P = self._rates(s0)
        self._last = (S, U, self._f(s0, P, np.zeros_like(self.v0), np.zeros_like(self.v0)))
        self.sigma_int = 0.0
        self.phi_u2_int = np.zeros_like(self.v0)
        self.A_acc = np.zeros_like(self.v0)
        self.B = self.v0.copy()
        self.Q = np.ones_like(self.v0)
        self.residual = np.zeros_like(self.v0)

    @property
    def x(self) -> np.ndarray:
        return (self.cells + 0.5) * self.grid.dx

    def _b_sum(self, s: State) -> np.ndarray:
        p = self.p
        rf = radius_from_volume(p, self.grid, s.v)
        term = self.phi * s.u * rf.rn ** ((1.0 - p.n_dim) / p.n_dim) * self.grid.dx
        tail = np.cumsum(term[::-1])[::-1]
        # nodes strictly to the right of cell c start at node c + 1
        return tail[self.cells + 1]

    def _rates(self, s: State):
        p = self.p
        dx = self.grid.dx
        rf = radius_from_volume(p, self.grid, s.v)
        area = rf.rn ** ((p.n_dim - 1) / p.n_dim)
        w = (area[1:] * s.u[1:] - area[:-1] * s.u[:-1]) / dx
        P = pressure_formula(p.R_gas, p.a_rad, s.v, s.theta)
        sigma = -P + p.alpha * w / s.v
        S = float(np.dot(self.dphi, sigma))
        term = (p.n_dim - 1) * self.phi * s.u**2 / rf.rn * dx
        tail = np.cumsum(term[::-1])[::-1]
        return S, tail[self.cells + 1], P[self.cells]

    def _f(self, s: State, P, B_exp, Q_exp):
        return s.v[self.cells] * P / (self.v0 * np.exp(B_exp + Q_exp))

    def observe(self, s: State, dt: float) -> None:
        p = self.p
        alpha = p.alpha
        S, U, P = self._rates(s)
        S0, U0, f0 = self._last
        self.sigma_int += 0.5 * dt * (S0 + S)
        self.phi_u2_int += 0.5 * dt * (U0 + U)
        b_exp = (self._b0 - self._b_sum(s)) / alpha
        q_exp = (self.sigma_int - self.phi_u2_int) / alpha
        self.B = self.v0 * np.exp(b_exp)
        self.Q = np.exp(q_exp)
        f1 = s.v[self.cells] * P / (self.B * self.Q)
        # Log-mean quadrature integrates exponential integrands exactly.
        ratio = f1 / f0
        with np.errstate(divide="ignore", invalid="ignore"):
            lm = np.where(np.abs(ratio - 1.0) > 1e-6, (f1 - f0) / np.log(ratio), 0.5 * (f0 + f1))
        self.A_acc += dt * lm
        self._last = (S, U, f1)
        self.t = s.t
        self.residual = s.v[self.cells] - self.B * self.Q * (1.0 + self.A_acc / alpha)

    def max_residual(self) -> float:
        return float(np.max(np.abs(self.residual)))

    def rows(self):
        return list(zip(self.x, self.B, self.Q, self.A_acc, self.residual))


@dataclass
class FunctionalRecord:
    t: float
    step: int
    dt: float
    lyapunov: float
    dissipation_V: float
    reactant_mass: float
    reactant_sq: float
    burn_integral: float
    burn_sq_integral: float
    X: float
    Y: float
    Z: float
    gplus_sup: float
    min_v: float
    max_v: float
    min_theta: float
    max_theta: float
    min_z: float
    max_z: float
    supnorm_dev: float
    H_total: float
    boundary_work_heat: float
    entropy_residual: float
    reactant_residual_1: float
    reactant_residual_2: float
    first_law_residual: float
    audit_residual: float

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def values(self) -> list:
        return [getattr(self, c) for c in self.columns()]


class History:
    """Accumulated diagnostics for one run, starting from its initial state."""

    def __init__(self, p: PhysParams, grid: Grid, s0: State,
                 bc: BoundaryConditions = BoundaryConditions(),
                 audit_k: Optional[int] = None):
        if s0.t != 0.0:
            raise HistoryGap("a history must start from the t = 0 state")
        self.p = p
        self.grid = grid
        self.bc = bc
        self.dx = grid.dx
        self.tally = StepTally()
        self.steps = 0
        self.t = 0.0
        self.last_dt = 0.0
        F0 = self._eval(s0)
        self.F0 = F0
        self._last = F0
        self._last_theta = s0.theta.copy()
        self.mass0 = float(np.sum(s0.z) * self.dx)
        self.sq0 = float(np.sum(s0.z**2) * self.dx)
        self.entropy_prod_int = 0.0
        self.X = 0.0
        self.Y = F0[K.F_Y]
        self.Z = F0[K.F_Z]
        self.gplus_t = [0.0]
        self.gplus = [F0[K.F_GPLUS]]
        self.decay0 = F0[K.F_DEV]
        self.min_v = float(s0.v.min())
        self.max_v = float(s0.v.max())
        self.min_theta = float(s0.theta.min())
        self.max_theta = float(s0.theta.max())
        self.tally.watch_z(s0.z)
        self.state = s0
        self.audit = RepresentationAudit(p, grid, s0, audit_k) if audit_k is not None else None
        self.records: list[FunctionalRecord] = []

    def _eval(self, s: State) -> np.ndarray:
        rf = radius_from_volume(self.p, self.grid, s.v)
        return _functionals(self.p, s, rf, self.dx, self.bc)

    def observe(self, s: State, dt: float, step_tally: Optional[StepTally] = None) -> None:
        """Fold in one accepted step ending at ``s``."""
        if not math.isclose(s.t, self.t + dt, rel_tol=1e-12, abs_tol=1e-14):
            raise HistoryGap(f"step ending at t={s.t} does not follow t={self.t} with dt={dt}")
        F = self._eval(s)
        if step_tally is not None:
            self.tally.merge(step_tally)
        self.entropy_prod_int += 0.5 * dt * (self._last[K.F_ENTROPY_PROD] + F[K.F_ENTROPY_PROD])
        b = self.p.b_exp
        th_mid = 0.5 * (s.theta + self._last_theta)
        rate = (s.theta - self._last_theta) / dt
        self.X += dt * float(np.sum((1.0 + th_mid ** (b + 3.0)) * rate * rate)) * self.dx
        self.Y = max(self.Y, F[K.F_Y])
        self.Z = max(self.Z, F[K.F_Z])
        self.gplus_t.append(s.t)
        self.gplus.append(F[K.F_GPLUS])
        self.min_v = min(self.min_v, float(s.v.min()))
        self.max_v = max(self.max_v, float(s.v.max()))
        self.min_theta = min(self.min_theta, float(s.theta.min()))
        self.max_theta = max(self.max_theta, float(s.theta.max()))
        self.tally.watch_z(s.z)
        if self.audit is not None:
            self.audit.observe(s, dt)
        self._last = F
        self._last_theta = s.theta.copy()
        self.state = s
        self.steps += 1
        self.t = s.t
        self.last_dt = dt

    # identities

    def entropy_identity_residual(self) -> float:
        return float(self._last[K.F_LYAPUNOV] + self.entropy_prod_int - self.F0[K.F_LYAPUNOV])

    def reactant_identities(self) -> tuple[float, float]:
        s = self.state
        mass = float(np.sum(s.z) * self.dx)
        sq = float(np.sum(s.z**2) * self.dx)
        r1 = mass + self.tally.burn - self.mass0 - self.tally.z_inflow
        r2 = sq + 2.0 * (self.tally.z_dissipation + self.tally.burn_sq) - self.sq0
        return r1, r2

    def first_law_balance(self) -> float:
        tl = self.tally
        return float(self._last[K.F_ENERGY] - self.F0[K.F_ENERGY]
                     - tl.heat_inflow - self.p.lambda_heat * tl.z_inflow)

    def xyz(self) -> tuple[float, float, float]:
        return self.X, self.Y, self.Z

    def gplus_slope(self) -> float:
        return gplus_envelope(self.gplus_t, self.gplus)

    def record(self) -> FunctionalRecord:
        F = self._last
        s = self.state
        r1, r2 = self.reactant_identities()
        rec = FunctionalRecord(
            t=s.t,
            step=self.steps,
            dt=self.last_dt,
            lyapunov=float(F[K.F_LYAPUNOV]),
            dissipation_V=float(F[K.F_DISSIPATION_V]),
            reactant_mass=float(np.sum(s.z) * self.dx),
            reactant_sq=float(np.sum(s.z**2) * self.dx),
            burn_integral=self.tally.burn,
            burn_sq_integral=self.tally.z_dissipation + self.tally.burn_sq,
            X=self.X,
            Y=float(self.Y),
            Z=float(self.Z),
            gplus_sup=float(F[K.F_GPLUS]),
            min_v=float(s.v.min()),
            max_v=float(s.v.max()),
            min_theta=float(s.theta.min()),
            max_theta=float(s.theta.max()),
            min_z=float(s.z.min()),
            max_z=float(s.z.max()),
            supnorm_dev=float(F[K.F_DEV]),
            H_total=float(F[K.F_ENERGY]),
            boundary_work_heat=self.tally.heat_inflow + self.p.lambda_heat * self.tally.z_inflow,
            entropy_residual=self.entropy_identity_residual(),
            reactant_residual_1=r1,
            reactant_residual_2=r2,
            first_law_residual=self.first_law_balance(),
            audit_residual=self.audit.max_residual() if self.audit is not None else float("nan"),
        )
        self.records.append(rec)
        return rec


# Functional-style wrappers over a history.

def entropy_identity_residual(p: PhysParams, history: History) -> float:
    _check(p, history)
    return history.entropy_identity_residual()


def reactant_identities(p: PhysParams, history: History) -> tuple[float, float]:
    _check(p, history)
    return history.reactant_identities()


def first_law_balance(p: PhysParams, history: History) -> float:
    _check(p, history)
    return history.first_law_balance()


def xyz_functionals(p: PhysParams, history: History) -> tuple[float, float, float]:
    _check(p, history)
    return history.xyz()


def gplus_tracker(p: PhysParams, history: History):
    """(times, sup-norms, fitted slope)."""
    _check(p, history)
    return np.array(history.gplus_t), np.array(history.gplus), history.gplus_slope()


def representation_audit(p: PhysParams, history: History, k: int) -> RepresentationAudit:
    _check(p, history)
    if history.audit is None or history.audit.k != k:
        raise HistoryGap(f"no representation audit for k={k} was enabled at t = 0")
    return history.audit


def _check(p: PhysParams, history: History) -> None:
    if history.p != p:
        raise HistoryGap("history was recorded with different parameters")
