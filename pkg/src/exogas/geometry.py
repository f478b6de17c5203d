"""Node radii from the specific volume and the Eulerian-to-Lagrangian initial map."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import _kernels
from .constitutive import PhysParams
from .errors import InvalidDensity, StatePositivityViolation


@dataclass(frozen=True)
class RadiusField:
    """Radii at the N+1 nodes.  ``rn`` is primary; ``r`` is derived from it."""

    rn: np.ndarray
    n_dim: int

    @property
    def r(self) -> np.ndarray:
        return self.rn ** (1.0 / self.n_dim)


def radius_from_volume(p: PhysParams, grid, v) -> RadiusField:
    """r^n = 1 + n * prefix-sum of v dx, with compensated summation."""
    v = np.ascontiguousarray(v, dtype=float)
    if not np.all(v > 0):
        raise StatePositivityViolation(f"specific volume must be > 0 (min {v.min()})")
    rn = 1.0 + p.n_dim * _kernels.compensated_prefix(v, float(grid.dx))
    rn[0] = 1.0
    return RadiusField(rn=rn, n_dim=p.n_dim)


def node_average(cell):
    """Cell values to nodes; end nodes take the adjacent cell."""
    cell = np.asarray(cell, dtype=float)
    out = np.empty(cell.size + 1)
    out[1:-1] = 0.5 * (cell[:-1] + cell[1:])
    out[0] = cell[0]
    out[-1] = cell[-1]
    return out


def radius_jacobian(p: PhysParams, rf: RadiusField, v) -> np.ndarray:
    """dr/dx = r^{1-n} v at the nodes."""
    return rf.r ** (1 - p.n_dim) * node_average(v)


def radius_ode_residual(rf_old: RadiusField, rf_new: RadiusField, u, dt: float) -> float:
    """max |(r_new - r_old)/dt - u| over nodes."""
    u = np.asarray(u, dtype=float)
    if rf_old.rn.shape != rf_new.rn.shape or u.shape != rf_old.rn.shape:
        raise ValueError("radius fields and velocity must share the node grid")
    return float(np.max(np.abs((rf_new.r - rf_old.r) / dt - u)))


def rn_ode_residual(p: PhysParams, rf_old: RadiusField, rf_new: RadiusField, area_u, dt: float) -> float:
    """max |(r^n_new - r^n_old)/dt - n * area_u| where ``area_u`` is the node flux r^{n-1}u."""
    return float(np.max(np.abs((rf_new.rn - rf_old.rn) / dt - p.n_dim * np.asarray(area_u))))


@dataclass(frozen=True)
class MassMap:
    """Sampled mass coordinate x(r) and its inverse r0(x)."""

    radius: np.ndarray
    mass: np.ndarray
    rho0: Callable
    n_dim: int

    def x_of_r(self, r):
        return np.interp(r, self.radius, self.mass)

    def r_of_x(self, x, tol: float = 1e-12):
        """Invert x(r) by bisection on the sampled-then-refined quadrature."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if np.any(x < 0) or np.any(x > self.mass[-1]):
            raise ValueError("mass coordinate outside the sampled range")
        idx = np.clip(np.searchsorted(self.mass, x, side="right") - 1, 0, self.mass.size - 2)
        lo = self.radius[idx].copy()
        hi = self.radius[idx + 1].copy()
        base = self.mass[idx]
        n = self.n_dim
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            val = base + _simpson(lambda y: y ** (n - 1) * self.rho0(y), self.radius[idx], mid, 16)
            below = val < x
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
            if np.all(hi - lo <= tol * np.maximum(1.0, hi)):
                break
        out = 0.5 * (lo + hi)
        return out if out.size > 1 else float(out[0])


def _simpson(f, a, b, panels):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    h = (b - a) / panels
    s = f(a) + f(b)
    for j in range(1, panels):
        s = s + (4.0 if j % 2 else 2.0) * f(a + j * h)
    return s * h / 3.0


def eulerian_to_lagrangian_ic(p: PhysParams, rho0: Callable, r_max: float, panels: int = 4096) -> MassMap:
    """Tabulate x(r) = int_1^r y^{n-1} rho0(y) dy by composite Simpson."""
    if panels < 4096 or panels % 2:
        panels = max(4096, panels + panels % 2)
    n = p.n_dim
    radius = np.linspace(1.0, float(r_max), panels + 1)
    dens = np.asarray(rho0(radius), dtype=float) * np.ones_like(radius)
    if not np.all(dens > 0):
        raise InvalidDensity("initial density must be positive on [1, r_max]")
    f = radius ** (n - 1) * dens
    h = radius[1] - radius[0]
    # Per-panel Simpson with the panel midpoint evaluated directly.
    mid = 0.5 * (radius[:-1] + radius[1:])
    dmid = np.asarray(rho0(mid), dtype=float) * np.ones_like(mid)
    if not np.all(dmid > 0):
        raise InvalidDensity("initial density must be positive on [1, r_max]")
    fm = mid ** (n - 1) * dmid
    pieces = h / 6.0 * (f[:-1] + 4.0 * fm + f[1:])
    mass = np.concatenate([[0.0], np.cumsum(pieces)])
    if not np.all(np.diff(mass) > 0):
        raise InvalidDensity("mass map is not strictly increasing")
    return MassMap(radius=radius, mass=mass, rho0=lambda y: np.asarray(rho0(y), dtype=float) * np.ones_like(y), n_dim=n)
