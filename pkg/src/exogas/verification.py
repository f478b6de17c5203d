"""Manufactured solutions, convergence studies and a brute-force reference integrator."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import sympy as sp

from . import _kernels as K
from .constitutive import PhysParams
from .errors import OracleUnstable, PositivityLoss, StatePositivityViolation
from .geometry import radius_from_volume
from .grid_state import BoundaryConditions, Grid, State
from .solver import Integrator, StepperConfig

CASES = ("smooth", "equilibrium", "static-heat")


@dataclass
class MmsCase:
    """Closed-form targets on [0, L] and the forcing that makes them exact.

    The targets are built from r^n = 1 + n x + eps g(t) sin^2(pi x / L), so
    the mass equation holds identically (zero volume forcing) and the velocity
    vanishes at both ends.  Temperature and reactant are even at x = 0 and
    take their far-field values at x = L.
    """

    name: str
    length: float
    p: PhysParams
    exprs: dict
    funcs: dict = field(repr=False)

    def targets(self, t: float, grid: Grid) -> State:
        xc = grid.centers
        xn = grid.nodes
        f = self.funcs
        return State(
            np.broadcast_to(f["v"](t, xc), xc.shape).astype(float),
            np.broadcast_to(f["theta"](t, xc), xc.shape).astype(float),
            np.broadcast_to(f["z"](t, xc), xc.shape).astype(float),
            np.broadcast_to(f["u"](t, xn), xn.shape).astype(float),
            t,
        )

    def evaluate(self, key: str, t, x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(self.funcs[key](t, x), x.shape).astype(float)


def make_case(name: str, p: PhysParams, length: float = 4.0) -> MmsCase:
    if name not in CASES:
        raise ValueError(f"unknown manufactured case {name!r}; choose from {CASES}")
    t, x = sp.symbols("t x", real=True)
    n = p.n_dim
    L = sp.nsimplify(length)
    bump = (1 + sp.cos(sp.pi * x / L)) / 2
    if name == "equilibrium":
        s_n = 1 + n * x
        theta = sp.Integer(1)
        z = sp.Integer(0)
    elif name == "static-heat":
        s_n = 1 + n * x
        theta = 1 + sp.Rational(1, 5) * bump
        z = sp.Integer(0)
    else:
        s_n = 1 + n * x + sp.Rational(1, 10) * sp.sin(t + 1) * sp.sin(sp.pi * x / L) ** 2
        theta = 1 + sp.Rational(1, 5) * (1 + sp.sin(2 * t) / 2) * bump
        z = sp.Rational(3, 10) * sp.exp(-t / 2) * bump
    r = s_n ** sp.Rational(1, n)
    v = sp.diff(s_n, x) / n
    u = sp.diff(s_n, t) / (n * r ** (n - 1))
    f = {k: sp.Float(val) if not isinstance(val, int) else sp.Integer(val)
         for k, val in vars(p).items()}
    R, cv, a, alpha, mu = f["R_gas"], f["c_v"], f["a_rad"], sp.Float(p.alpha), f["mu"]
    P = R * theta / v + a / 3 * theta**4
    e = cv * theta + a * v * theta**4
    w = sp.diff(r ** (n - 1) * u, x)
    sigma = -P + alpha * w / v
    kappa = f["kappa1"] + f["kappa2"] * v * theta ** f["b_exp"]
    phi = f["K_rate"] * theta ** f["beta"] * sp.exp(-f["A_act"] / theta)
    lam = f["lambda_heat"]
    G = r ** (2 * n - 2)
    f_u = sp.diff(u, t) - r ** (n - 1) * sp.diff(sigma, x)
    f_e = (
        sp.diff(e, t)
        - sigma * w
        + 2 * mu * (n - 1) * sp.diff(r ** (n - 2) * u**2, x)
        - sp.diff(G * kappa * sp.diff(theta, x) / v, x)
        - lam * phi * z
    )
    f_z = sp.diff(z, t) - sp.diff(f["d_diff"] * G * sp.diff(z, x) / v**2, x) + phi * z
    f_v = sp.diff(v, t) - w
    exprs = {"v": v, "u": u, "theta": theta, "z": z, "r": r,
             "f_v": f_v, "f_u": f_u, "f_e": f_e, "f_z": f_z}
    funcs = {k: sp.lambdify((t, x), ex, "numpy") for k, ex in exprs.items()}
    return MmsCase(name=name, length=float(length), p=p, exprs=exprs, funcs=funcs)


def mms_forcing(case: MmsCase, p: PhysParams, grid: Grid, t: float):
    """(f_v, f_u, f_e, f_z): volume and energy forcing on cells, momentum on nodes."""
    xc, xn = grid.centers, grid.nodes
    return (
        case.evaluate("f_v", t, xc),
        case.evaluate("f_u", t, xn),
        case.evaluate("f_e", t, xc),
        case.evaluate("f_z", t, xc),
    )


def _fd(fn, at, h):
    # fourth-order central difference, then one Richardson refinement
    def d(hh):
        return (-fn(at + 2 * hh) + 8 * fn(at + hh) - 8 * fn(at - hh) + fn(at - 2 * hh)) / (12 * hh)

    return (16 * d(h / 2) - d(h)) / 15


def substitution_residual(case: MmsCase, t: float, x: float, h: float = 1e-3) -> dict:
    """Residual of every balance law at (t, x) using numerical derivatives of the
    targets and the closed-form forcing; independent of the symbolic forcing path."""
    p = case.p
    n = p.n_dim
    F = case.funcs

    def val(k, tt, xx):
        return float(F[k](tt, xx))

    def at_x(k):
        return lambda xx: val(k, t, xx)

    def at_t(k):
        return lambda tt: val(k, tt, x)

    def P(tt, xx):
        return p.R_gas * val("theta", tt, xx) / val("v", tt, xx) + p.a_rad / 3 * val("theta", tt, xx) ** 4

    def area_u(xx, tt=t):
        return val("r", tt, xx) ** (n - 1) * val("u", tt, xx)

    def w(xx, tt=t):
        return _fd(lambda y: area_u(y, tt), xx, h)

    def sigma(xx):
        return -P(t, xx) + p.alpha * w(xx) / val("v", t, xx)

    def energy(tt):
        th = val("theta", tt, x)
        return p.c_v * th + p.a_rad * val("v", tt, x) * th**4

    def heat_flux(xx):
        th = val("theta", t, xx)
        v = val("v", t, xx)
        kap = p.kappa1 + p.kappa2 * v * th**p.b_exp
        return val("r", t, xx) ** (2 * n - 2) * kap * _fd(at_x("theta"), xx, h) / v

    def z_flux(xx):
        v = val("v", t, xx)
        return p.d_diff * val("r", t, xx) ** (2 * n - 2) * _fd(at_x("z"), xx, h) / v**2

    def m(xx):
        return val("r", t, xx) ** (n - 2) * val("u", t, xx) ** 2

    th = val("theta", t, x)
    phi = p.K_rate * th**p.beta * math.exp(-p.A_act / th)
    z = val("z", t, x)
    res_v = _fd(at_t("v"), t, h) - w(x) - val("f_v", t, x)
    res_u = _fd(at_t("u"), t, h) - val("r", t, x) ** (n - 1) * _fd(sigma, x, h) - val("f_u", t, x)
    res_e = (
        _fd(energy, t, h)
        - sigma(x) * w(x)
        + 2 * p.mu * (n - 1) * _fd(m, x, h)
        - _fd(heat_flux, x, h)
        - p.lambda_heat * phi * z
        - val("f_e", t, x)
    )
    res_z = _fd(at_t("z"), t, h) - _fd(z_flux, x, h) + phi * z - val("f_z", t, x)
    return {"v": res_v, "u": res_u, "e": res_e, "z": res_z}


def _forcing_callback(case: MmsCase, grid: Grid) -> Callable[[float], tuple]:
    def forcing(t):
        _, fu, fe, fz = mms_forcing(case, case.p, grid, t)
        return fu, fe, fz

    return forcing


def run_case(case: MmsCase, n_cells: int, dt: float, t_end: float, splitting: str = "strang",
             cfg: Optional[StepperConfig] = None) -> tuple[State, Grid]:
    grid = Grid.over(case.length, n_cells)
    cfg = (cfg or StepperConfig(z_scheme="unlimited")).replace(fixed_dt=dt, splitting=splitting, dt_min=min(dt, 1e-9) * 1e-3)
    integ = Integrator(case.p, grid, cfg, BoundaryConditions(), _forcing_callback(case, grid))
    s = integ.advance(case.targets(0.0, grid), t_end)
    return s, grid


def field_errors(a: State, b: State, dx: float) -> dict:
    out = {}
    for name in ("v", "u", "theta", "z"):
        d = getattr(a, name) - getattr(b, name)
        out[name] = (float(np.sqrt(np.sum(d * d) * dx)), float(np.max(np.abs(d))))
    return out


@dataclass
class ConvergenceReport:
    kind: str
    rows: list
    orders: dict
    status: str
    notes: list = field(default_factory=list)

    COLUMNS = ("level", "n_cells", "dx", "dt", "error_v", "error_u", "error_theta", "error_z")

    def table(self) -> list[list]:
        return [list(r) for r in self.rows]


def _orders(errors: list[dict], key: str) -> list[float]:
    out = []
    for a, b in zip(errors[:-1], errors[1:]):
        if a[key][0] == 0 or b[key][0] == 0:
            out.append(float("nan"))
        else:
            out.append(math.log2(a[key][0] / b[key][0]))
    return out


def convergence_study(
    case: MmsCase,
    p: PhysParams,
    cfg: Optional[StepperConfig] = None,
    levels: int = 3,
    kind: str = "space",
    splitting: str = "strang",
    n0: int = 64,
    t_end: float = 0.5,
    dt_over_dx2: float = 0.25,
    dt0: float = 0.005,
    exact_tol: float = 1e-11,
) -> ConvergenceReport:
    """Observed orders from successive halving.

    ``space``: n0 * 2^l cells with dt proportional to dx^2, errors against the
    targets.  ``time``: n0 cells, dt0 / 2^l, errors against a reference run
    with a 64 times smaller step on the same grid (self-convergence).
    """
    if levels < 3:
        raise ValueError("a convergence study needs at least 3 levels")
    if case.p != p:
        case = make_case(case.name, p, case.length)
    rows = []
    errors = []
    if kind == "space":
        for lvl in range(levels):
            N = n0 * 2**lvl
            dx = case.length / N
            dt = dt_over_dx2 * dx * dx
            s, grid = run_case(case, N, dt, t_end, splitting, cfg)
            err = field_errors(s, case.targets(t_end, grid), grid.dx)
            errors.append(err)
            rows.append((lvl, N, dx, dt, *(err[k][0] for k in ("v", "u", "theta", "z"))))
    elif kind == "time":
        ref, grid = run_case(case, n0, dt0 / 2 ** (levels + 5), t_end, splitting, cfg)
        for lvl in range(levels):
            dt = dt0 / 2**lvl
            s, grid = run_case(case, n0, dt, t_end, splitting, cfg)
            err = field_errors(s, ref, grid.dx)
            errors.append(err)
            rows.append((lvl, n0, grid.dx, dt, *(err[k][0] for k in ("v", "u", "theta", "z"))))
    else:
        raise ValueError("kind must be 'space' or 'time'")
    orders = {k: _orders(errors, k) for k in ("v", "u", "theta", "z")}
    notes = []
    largest = max(e[k][0] for e in errors for k in e)
    if largest <= exact_tol:
        status = "exact"
    else:
        status = "ok"
        for k in ("v", "u", "theta", "z"):
            seq = [e[k][0] for e in errors]
            if any(b > a for a, b in zip(seq[:-1], seq[1:])) and max(seq) > exact_tol:
                status = "anomaly"
                notes.append(f"non-monotone {k} errors: {seq}")
    return ConvergenceReport(kind=kind, rows=rows, orders=orders, status=status, notes=notes)


def semi_discrete_rhs(p: PhysParams, grid: Grid, s: State, bc: BoundaryConditions = BoundaryConditions(),
                      forcing: Optional[tuple] = None):
    """Right-hand sides (v', u', e', z') of the spatially discrete system."""
    n = p.n_dim
    dx = grid.dx
    rf = radius_from_volume(p, grid, s.v)
    r = rf.r
    area = rf.rn / r
    G = area * area
    w = (area[1:] * s.u[1:] - area[:-1] * s.u[:-1]) / dx
    P = p.R_gas * s.theta / s.v + p.a_rad / 3 * s.theta**4
    sigma = -P + p.alpha * w / s.v
    du = np.zeros_like(s.u)
    du[1:-1] = area[1:-1] * (sigma[1:] - sigma[:-1]) / dx
    m = r ** (n - 2) * s.u**2
    q = K.heat_fluxes(s.theta, s.v, G, dx, p.kappa1, p.kappa2, p.b_exp, bc.dirichlet, bc.theta_far)
    D = K.species_coeffs(s.v, G, p.d_diff, dx, bc.dirichlet)
    flux_z = K.species_fluxes(s.z, D, dx, bc.dirichlet, bc.z_far)
    phi = p.K_rate * s.theta**p.beta * np.exp(-p.A_act / s.theta)
    de = (sigma * w - 2 * p.mu * (n - 1) * (m[1:] - m[:-1]) / dx
          + (q[1:] - q[:-1]) / dx + p.lambda_heat * phi * s.z)
    dz = (flux_z[1:] - flux_z[:-1]) / dx - phi * s.z
    if forcing is not None:
        fu, fe, fz = forcing
        du[1:-1] += fu[1:-1]
        de = de + fe
        dz = dz + fz
    return w, du, de, dz


def oracle_step(p: PhysParams, s: State, dt_tiny: float, grid: Grid,
                bc: BoundaryConditions = BoundaryConditions(), forcing: Optional[tuple] = None) -> State:
    """One forward-Euler step of the semi-discrete system."""
    dv, du, de, dz = semi_discrete_rhs(p, grid, s, bc, forcing)
    v = s.v + dt_tiny * dv
    u = s.u + dt_tiny * du
    e = p.c_v * s.theta + p.a_rad * s.v * s.theta**4 + dt_tiny * de
    z = s.z + dt_tiny * dz
    finite = np.all(np.isfinite(v)) and np.all(np.isfinite(e)) and np.all(np.isfinite(u))
    if not finite or not np.all(v > 0) or not np.all(e > 0):
        raise OracleUnstable(f"forward Euler lost positivity at dt={dt_tiny}")
    th, code = K.theta_from_energy(e, v, p.c_v, p.a_rad, s.theta)
    if code != K.OK:
        raise OracleUnstable(f"forward Euler lost positivity at dt={dt_tiny}")
    return State(v, th, z, u, s.t + dt_tiny)


def oracle_integrate(p: PhysParams, s: State, t_end: float, dt_tiny: float, grid: Grid,
                     bc: BoundaryConditions = BoundaryConditions(), max_halvings: int = 8) -> State:
    """Forward Euler to ``t_end``; halves ``dt_tiny`` and restarts on instability."""
    for _ in range(max_halvings + 1):
        try:
            nsteps = max(1, int(math.ceil((t_end - s.t) / dt_tiny - 1e-9)))
            h = (t_end - s.t) / nsteps
            cur = s
            for _ in range(nsteps):
                cur = oracle_step(p, cur, h, grid, bc)
                if np.max(np.abs(cur.u)) > 1e6:
                    raise OracleUnstable("forward Euler blew up")
            cur.t = t_end
            return cur
        except (OracleUnstable, StatePositivityViolation, PositivityLoss, FloatingPointError):
            dt_tiny *= 0.5
    raise OracleUnstable(f"forward Euler unstable even at dt={dt_tiny}")
