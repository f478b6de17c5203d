"""Operator-split time stepping of the Lagrangian system.

One step composes a reaction substep (R), an implicit diffusion substep for
temperature and reactant (D) and an energy-compatible hydrodynamic substep (H):
``R(dt/2) D(dt/2) H(dt) D(dt/2) R(dt/2)`` for Strang, ``R D H`` for Lie.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from . import _kernels as K
from .constitutive import PhysParams, energy_formula, pressure_formula
from .errors import NewtonDivergence, PositivityLoss, StepFailure
from .geometry import RadiusField, radius_from_volume
from .grid_state import BoundaryConditions, Grid, State

Forcing = Callable[[float], tuple]
Z_SCHEMES = {"implicit": 0, "fct": 1, "unlimited": 2}
HEAT_SCHEMES = {"be": K.HEAT_BE, "cn": K.HEAT_CN, "trbdf2": K.HEAT_TRBDF2}


@dataclass(frozen=True)
class StepperConfig:
    cfl_hyper: float = 0.4
    diff_theta_impl: bool = True
    newton_tol: float = 1e-10
    newton_max_iter: int = 25
    dt_min: float = 1e-9
    dt_max: float = 0.05
    splitting: str = "strang"
    fixed_dt: Optional[float] = None
    hydro_passes: int = 3
    heat_scheme: str = "trbdf2"
    z_scheme: str = "fct"
    boundary_compatible: bool = True

    def __post_init__(self):
        problems = self.violations()
        if problems:
            raise ValueError("; ".join(problems))

    def violations(self) -> list[str]:
        out = []
        if not 0 < self.cfl_hyper <= 1:
            out.append("cfl_hyper must lie in (0, 1]")
        if not self.newton_tol > 0:
            out.append("newton_tol must be > 0")
        if self.newton_max_iter < 1:
            out.append("newton_max_iter must be >= 1")
        if not 0 < self.dt_min <= self.dt_max:
            out.append("need 0 < dt_min <= dt_max")
        if self.splitting not in ("strang", "lie"):
            out.append("splitting must be 'strang' or 'lie'")
        if self.fixed_dt is not None and not self.fixed_dt > 0:
            out.append("fixed_dt must be > 0")
        if self.hydro_passes < 1:
            out.append("hydro_passes must be >= 1")
        if not self.diff_theta_impl:
            out.append("explicit heat conduction is not supported; diff_theta_impl must be true")
        if self.heat_scheme not in HEAT_SCHEMES:
            out.append(f"heat_scheme must be one of {sorted(HEAT_SCHEMES)}")
        if self.z_scheme not in Z_SCHEMES:
            out.append(f"z_scheme must be one of {sorted(Z_SCHEMES)}")
        return out

    def replace(self, **changes) -> "StepperConfig":
        return replace(self, **changes)


@dataclass
class StepTally:
    """Per-step bookkeeping of quantities that never appear in a single state.

    ``burn`` and ``burn_sq`` are the space-time integrals of ``phi z`` and
    ``phi z^2``; ``z_dissipation`` that of ``d r^{2n-2} z_x^2 / v^2``.  The
    inflows are time-integrated boundary fluxes at ``x_max``.
    """

    burn: float = 0.0
    burn_sq: float = 0.0
    z_dissipation: float = 0.0
    z_inflow: float = 0.0
    heat_inflow: float = 0.0
    z_min: float = math.inf
    z_max: float = -math.inf
    limited_faces: int = 0
    newton_iterations: int = 0

    def merge(self, other: "StepTally") -> None:
        self.burn += other.burn
        self.burn_sq += other.burn_sq
        self.z_dissipation += other.z_dissipation
        self.z_inflow += other.z_inflow
        self.heat_inflow += other.heat_inflow
        self.z_min = min(self.z_min, other.z_min)
        self.z_max = max(self.z_max, other.z_max)
        self.limited_faces += other.limited_faces
        self.newton_iterations = max(self.newton_iterations, other.newton_iterations)

    def watch_z(self, z: np.ndarray) -> None:
        self.z_min = min(self.z_min, float(z.min()))
        self.z_max = max(self.z_max, float(z.max()))


def _geometry_weights(p: PhysParams, rf: RadiusField):
    n = p.n_dim
    area = rf.rn ** ((n - 1) / n)
    return area, area * area


def effective_stress(p: PhysParams, s: State, rf: RadiusField, dx: float) -> np.ndarray:
    """sigma = -P + alpha (r^{n-1} u)_x / v on cells."""
    return -pressure_formula(p.R_gas, p.a_rad, s.v, s.theta) + p.alpha * mass_flux(p, s, rf, dx) / s.v


def mass_flux(p: PhysParams, s: State, rf: RadiusField, dx: float) -> np.ndarray:
    """Cell differences of r^{n-1} u."""
    area, _ = _geometry_weights(p, rf)
    flux = area * s.u
    return (flux[1:] - flux[:-1]) / dx


def momentum_rhs(p: PhysParams, s: State, rf: RadiusField, dx: float) -> np.ndarray:
    """r^{n-1} sigma_x at interior nodes; both boundary rows are zero."""
    area, _ = _geometry_weights(p, rf)
    sig = effective_stress(p, s, rf, dx)
    out = np.zeros(s.u.size)
    out[1:-1] = area[1:-1] * (sig[1:] - sig[:-1]) / dx
    return out


def mass_step(p: PhysParams, grid: Grid, v, u, dt: float) -> np.ndarray:
    """Conservative volume update with frozen node velocities.

    The flux area is the exact mean of r^{n-1} along the straight radius path,
    so the recomputed radii move by exactly ``dt * u``.
    """
    v = np.asarray(v, dtype=float)
    u = np.asarray(u, dtype=float)
    r0 = radius_from_volume(p, grid, v).r
    r1 = r0 + dt * u
    area = K.secant_area(r0, r1, p.n_dim)
    flux = area * u
    return v + dt * (flux[1:] - flux[:-1]) / grid.dx


def _status(code: int, where: str):
    if code == K.POSITIVITY_LOSS:
        raise PositivityLoss(f"{where}: positivity lost")
    if code == K.NEWTON_DIVERGENCE:
        raise NewtonDivergence(f"{where}: Newton iteration did not converge")


def energy_step_implicit(
    p: PhysParams,
    s: State,
    rf: RadiusField,
    dt: float,
    dx: float,
    bc: BoundaryConditions = BoundaryConditions(),
    scheme: str = "be",
    newton_tol: float = 1e-10,
    newton_max_iter: int = 25,
):
    """Implicit conduction step for theta (``scheme`` is "be", "cn" or "trbdf2").

    Returns ``(theta, mean outer heat flux, Newton iterations)``.
    """
    _, G = _geometry_weights(p, rf)
    th, code, it, qN, _ = K.heat_diffusion(
        s.theta, s.v, G, dx, dt, p.as_vector(), bc.dirichlet, bc.theta_far,
        HEAT_SCHEMES[scheme], newton_tol, newton_max_iter, np.zeros(s.v.size),
    )
    _status(code, "heat conduction")
    return th, qN, it


def reaction_step(p: PhysParams, s: State, dt: float, frozen_theta: bool = False):
    """Arrhenius decay over ``dt`` with its heat release.

    Returns ``(z, theta, heat)`` where ``heat`` is the released energy rate
    ``lambda * phi_m * (z0 + z1)/2`` per cell.  With ``frozen_theta`` the rate
    uses the initial temperature and temperature is left untouched.
    """
    z, th, burn, _, code = K.reaction(s.z, s.theta, s.v, dt, p.as_vector(), frozen_theta)
    _status(code, "reaction")
    if frozen_theta:
        th = s.theta.copy()
    return z, th, p.lambda_heat * burn / dt


def compute_dt(p: PhysParams, s: State, rf: RadiusField, cfg: StepperConfig, dx: float) -> float:
    """CFL step from the Lagrangian adiabatic sound speed r^{n-1} sqrt(-dP/dv|_s)."""
    if cfg.fixed_dt is not None:
        return float(cfg.fixed_dt)
    speed = K.max_sound_speed(s.v, s.theta, rf.rn, p.as_vector())
    dt = cfg.cfl_hyper * dx / speed
    return float(min(max(dt, cfg.dt_min), cfg.dt_max))


class Integrator:
    """Owns the model, grid and boundary data; advances states by split steps."""

    def __init__(
        self,
        p: PhysParams,
        grid: Grid,
        cfg: StepperConfig = StepperConfig(),
        bc: BoundaryConditions = BoundaryConditions(),
        forcing: Optional[Forcing] = None,
    ):
        self.p = p
        self.grid = grid
        self.cfg = cfg
        self.bc = bc
        self.forcing = forcing
        self.pv = p.as_vector()
        self.z_scheme = Z_SCHEMES[cfg.z_scheme]
        self.heat_scheme = HEAT_SCHEMES[cfg.heat_scheme]
        width = min(1.0, 0.25 * grid.x_max)
        self._psi = np.exp(-(((grid.x_max - grid.centers) / width) ** 2))
        self._zero = np.zeros(grid.n_cells)
        self._rf_cache = None

    def radius(self, v) -> RadiusField:
        # compute_dt and try_step ask for the same state back to back
        hit = self._rf_cache
        if hit is not None and hit[0].shape == v.shape and np.array_equal(hit[0], v):
            return hit[1]
        rf = radius_from_volume(self.p, self.grid, v)
        self._rf_cache = (np.array(v, dtype=float), rf)
        return rf

    def compute_dt(self, s: State) -> float:
        if self.cfg.fixed_dt is not None:
            return float(self.cfg.fixed_dt)
        return compute_dt(self.p, s, self.radius(s.v), self.cfg, self.grid.dx)

    # substeps; each mutates ``st`` in place and books into ``tally``

    def _react(self, st: State, tau: float, tally: StepTally) -> None:
        z, th, burn, burn_sq, code = K.reaction(st.z, st.theta, st.v, tau, self.pv, False)
        _status(code, "reaction")
        dx = self.grid.dx
        tally.burn += float(np.sum(burn)) * dx
        tally.burn_sq += float(np.sum(burn_sq)) * dx
        st.z = z
        st.theta = th

    def _forcing(self, t_mid: float):
        N = self.grid.n_cells
        if self.forcing is None:
            return np.zeros(N + 1), np.zeros(N), None
        fu, fe, fz = self.forcing(t_mid)
        return np.ascontiguousarray(fu, dtype=float), np.ascontiguousarray(fe, dtype=float), fz

    def _compatibility_source(self, st: State, rf: RadiusField, fe: np.ndarray, fz) -> tuple:
        """Sources shuttled from the hydro substep to the diffusion substeps.

        With pinned outer values, splitting loses order unless the
        non-diffusive rates of theta and z vanish at the outer face.  Those
        rates, extrapolated from the last two cells, are moved into diffusion
        through a smooth profile of fixed physical width; the same arrays are
        removed from hydro so the totals are untouched.  Returns the energy
        source and the reactant source (``None`` without reactant forcing).
        """
        p, dx = self.p, self.grid.dx
        n = p.n_dim
        rn = rf.rn[-3:]
        u, v, th = st.u, st.v, st.theta
        area = rn ** ((n - 1) / n)
        w = (area[1:] * u[-2:] - area[:-1] * u[-3:-1]) / dx
        m = rn ** ((n - 2) / n) * u[-3:] ** 2
        vv, tt = v[-2:], th[-2:]
        sig = -pressure_formula(p.R_gas, p.a_rad, vv, tt) + p.alpha * w / vv
        edot = sig * w - 2.0 * p.mu * (n - 1) * np.diff(m) / dx + fe[-2:]
        et = p.c_v + 4.0 * p.a_rad * vv * tt**3
        rate = (edot - p.a_rad * tt**4 * w) / et
        gamma = 1.5 * rate[1] - 0.5 * rate[0]
        psi = self._psi
        src_e = (p.c_v + 4.0 * p.a_rad * v * th**3) * psi * gamma
        src_z = None
        if fz is not None:
            fz = np.asarray(fz, dtype=float)
            src_z = psi * (1.5 * fz[-1] - 0.5 * fz[-2])
        return src_e, src_z

    def _diffuse(self, st: State, rf: RadiusField, tau: float, tally: StepTally, sources=(None, None)) -> None:
        p, cfg, bc, dx = self.p, self.cfg, self.bc, self.grid.dx
        _, G = _geometry_weights(p, rf)
        source = self._zero if sources[0] is None else sources[0]
        src_z = self._zero if sources[1] is None else sources[1]
        th, code, it, qN, _ = K.heat_diffusion(
            st.theta, st.v, G, dx, tau, self.pv, bc.dirichlet, bc.theta_far,
            self.heat_scheme, cfg.newton_tol, cfg.newton_max_iter, source,
        )
        _status(code, "heat conduction")
        tally.heat_inflow += tau * qN
        tally.newton_iterations = max(tally.newton_iterations, it)
        if p.d_diff > 0:
            z, inflow, diss, limited = K.species_diffusion(
                st.z, st.v, G, p.d_diff, dx, tau, bc.dirichlet, bc.z_far, self.z_scheme, src_z
            )
            st.z = z
            tally.z_inflow += inflow
            tally.z_dissipation += diss
            tally.limited_faces += limited
        st.theta = th

    def _hydro(self, st: State, rf: RadiusField, h: float, forcing) -> None:
        grid = self.grid
        fu, fe, fz = forcing
        u, v, th, _, code = K.hydro(
            rf.r, st.v, st.u, st.theta, self.pv, grid.dx, h, self.cfg.hydro_passes, fu, fe,
        )
        _status(code, "hydrodynamics")
        st.u, st.v, st.theta = u, v, th
        if fz is not None:
            st.z = st.z + h * np.asarray(fz)

    def try_step(self, s: State, dt: float, tally: Optional[StepTally] = None) -> State:
        """One split step of exactly ``dt``; raises on substep failure."""
        st = s.copy()
        local = StepTally()
        fu, fe, fz = self._forcing(s.t + 0.5 * dt)
        rf = self.radius(s.v)
        src = (None, None)
        if self.bc.dirichlet and self.cfg.boundary_compatible:
            src = self._compatibility_source(s, rf, fe, fz)
            fe = fe - src[0]
            if src[1] is not None and self.p.d_diff > 0:
                fz = np.asarray(fz) - src[1]
            else:
                src = (src[0], None)
        if self.cfg.splitting == "strang":
            half = 0.5 * dt
            self._react(st, half, local)
            self._diffuse(st, rf, half, local, src)
            self._hydro(st, rf, dt, (fu, fe, fz))
            self._diffuse(st, self.radius(st.v), half, local, src)
            self._react(st, half, local)
        else:
            self._react(st, dt, local)
            self._diffuse(st, rf, dt, local, src)
            self._hydro(st, rf, dt, (fu, fe, fz))
        local.watch_z(st.z)
        st.t = s.t + dt
        if tally is not None:
            tally.merge(local)
        return st

    def step(self, s: State, dt: Optional[float] = None, tally: Optional[StepTally] = None):
        """Advance with step halving on failure; returns ``(state, dt_taken)``."""
        if dt is None:
            dt = self.compute_dt(s)
        trial = dt
        last = None
        while trial >= self.cfg.dt_min * (1 - 1e-12):
            try:
                return self.try_step(s, trial, tally), trial
            except (PositivityLoss, NewtonDivergence) as exc:
                last = exc
                trial *= 0.5
        dump = {
            "t": s.t,
            "dt_attempted": dt,
            "reason": str(last),
            "min_v": float(s.v.min()),
            "min_theta": float(s.theta.min()),
            "max_theta": float(s.theta.max()),
        }
        raise StepFailure(f"step rejected below dt_min={self.cfg.dt_min}: {last}", dump=dump)

    def advance(self, s: State, t_end: float, callback=None) -> State:
        """Step from ``s.t`` to ``t_end``.

        A fixed step is rounded so that equal steps land exactly on ``t_end``;
        CFL steps clip the final step.  ``callback(state, dt, tally)`` runs
        after every accepted step.
        """
        fixed = self.cfg.fixed_dt
        if fixed is not None:
            span = t_end - s.t
            nsteps = max(1, int(math.ceil(span / fixed - 1e-9)))
            h = span / nsteps
            t0 = s.t
            for k in range(nsteps):
                target = t0 + (k + 1) * h
                # a rejected step is retried with halved dt until the target is reached
                while target - s.t > 1e-12 * max(1.0, abs(target)):
                    tally = StepTally()
                    s, dt = self.step(s, target - s.t, tally)
                    if abs(s.t - target) <= 1e-12 * max(1.0, abs(target)):
                        s.t = target
                    if callback is not None:
                        callback(s, dt, tally)
            return s
        while s.t < t_end * (1 - 1e-14) and t_end - s.t > 1e-14:
            tally = StepTally()
            dt = min(self.compute_dt(s), t_end - s.t)
            s, dt = self.step(s, dt, tally)
            if callback is not None:
                callback(s, dt, tally)
        return s


def step(
    p: PhysParams,
    s: State,
    cfg: StepperConfig,
    grid: Grid,
    bc: BoundaryConditions = BoundaryConditions(),
    dt: Optional[float] = None,
    tally: Optional[StepTally] = None,
) -> State:
    """Convenience wrapper around :class:`Integrator` for a single step."""
    return Integrator(p, grid, cfg, bc).step(s, dt, tally)[0]


def total_energy(p: PhysParams, s: State, dx: float) -> float:
    """H = sum of (e + lambda z) over cells plus u^2/2 over nodes, times dx."""
    e = energy_formula(p.c_v, p.a_rad, s.v, s.theta)
    return float((np.sum(e) + p.lambda_heat * np.sum(s.z) + 0.5 * np.sum(s.u * s.u)) * dx)
