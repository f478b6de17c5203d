"""Mass grid, state container, initial-condition families and state checks."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import StatePositivityViolation

FAMILIES = ("equilibrium", "gaussian-bump", "reactant-slab", "random")


@dataclass(frozen=True)
class Grid:
    """Uniform mass mesh on [0, x_max]; cell c spans [c dx, (c+1) dx]."""

    n_cells: int = 512
    dx: float = 50.0 / 512

    def __post_init__(self):
        if int(self.n_cells) != self.n_cells or self.n_cells < 8:
            raise ValueError("n_cells must be an integer >= 8")
        if not self.dx > 0:
            raise ValueError("dx must be > 0")

    @classmethod
    def over(cls, x_max: float, n_cells: int) -> "Grid":
        return cls(n_cells=n_cells, dx=x_max / n_cells)

    @property
    def x_max(self) -> float:
        return self.n_cells * self.dx

    @property
    def centers(self) -> np.ndarray:
        return (np.arange(self.n_cells) + 0.5) * self.dx

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.n_cells + 1) * self.dx


@dataclass(frozen=True)
class BoundaryConditions:
    """Inner face: u = 0 with zero heat and reactant flux.

    ``outer = "dirichlet"`` pins (v, u, theta, z) = (1, 0, 1, 0) at x_max;
    ``outer = "closed"`` keeps u = 0 there but closes the heat and reactant
    fluxes, which makes the box energy-isolated.
    """

    outer: str = "dirichlet"
    theta_far: float = 1.0
    z_far: float = 0.0

    def __post_init__(self):
        if self.outer not in ("dirichlet", "closed"):
            raise ValueError(f"unknown outer boundary {self.outer!r}")

    @property
    def dirichlet(self) -> bool:
        return self.outer == "dirichlet"


@dataclass
class State:
    v: np.ndarray
    theta: np.ndarray
    z: np.ndarray
    u: np.ndarray
    t: float = 0.0

    def copy(self) -> "State":
        return State(self.v.copy(), self.theta.copy(), self.z.copy(), self.u.copy(), self.t)

    @property
    def n_cells(self) -> int:
        return self.v.size


def equilibrium_state(grid: Grid) -> State:
    N = grid.n_cells
    return State(np.ones(N), np.ones(N), np.zeros(N), np.zeros(N + 1), 0.0)


def _even_bump(x, center, width):
    # Mirrored about x = 0 so every profile is even there.
    return np.exp(-(((x - center) / width) ** 2)) + np.exp(-(((x + center) / width) ** 2))


def make_initial_condition(
    grid: Grid,
    family: str = "gaussian-bump",
    amplitude: float = 0.1,
    width: float = 1.0,
    seed: int = 0,
) -> State:
    """Localized perturbation of (1, 0, 1, 0) sampled at cell centres.

    Velocity starts at rest.  Profiles are even in x so the inner zero-flux
    conditions hold for the continuous data as well as the discrete data.
    """
    if family not in FAMILIES:
        raise ValueError(f"unknown initial-condition family {family!r}; choose from {FAMILIES}")
    if not width > 0:
        raise ValueError("width must be > 0")
    x = grid.centers
    N = grid.n_cells
    u = np.zeros(N + 1)
    if family == "equilibrium" or (amplitude == 0.0 and family != "reactant-slab"):
        return equilibrium_state(grid)
    if family == "gaussian-bump":
        g = _even_bump(x, 2.0, width)
        v = 1.0 + amplitude * g
        th = 1.0 + amplitude * g
        z = 0.5 * np.exp(-(x**2))
    elif family == "reactant-slab":
        g = _even_bump(x, 2.0, width)
        v = 1.0 + amplitude * g
        th = 1.0 + amplitude * g
        delta = 0.1 * width
        # Smoothed indicator of [0, 1], even about the origin.
        z = np.clip(0.5 * (np.tanh((1.0 + x) / delta) - np.tanh((x - 1.0) / delta)), 0.0, 1.0)
    else:
        rng = np.random.default_rng(seed)
        v = np.ones(N)
        th = np.ones(N)
        z = np.zeros(N)
        span = min(10.0, 0.5 * grid.x_max)
        for _ in range(4):
            c = rng.uniform(0.5, span)
            w = width * rng.uniform(0.5, 1.5)
            v += amplitude * rng.uniform(-1.0, 1.0) * _even_bump(x, c, w)
            th += amplitude * rng.uniform(-1.0, 1.0) * _even_bump(x, c, w)
            z += 0.25 * rng.uniform(0.0, 1.0) * _even_bump(x, c, w)
        z = np.clip(z, 0.0, 1.0)
    if not np.all(v > 0) or not np.all(th > 0):
        raise StatePositivityViolation("amplitude too large: initial v or theta not positive")
    return State(v, th, z, u, 0.0)


@dataclass
class ValidationReport:
    passed: bool
    ranges: dict
    failures: list = field(default_factory=list)
    far_field_deviation: float = 0.0


def validate_state(s: State, tol_far: float = np.inf) -> ValidationReport:
    """Range report; failures carry the field name and first offending index."""
    ranges = {
        name: (float(np.min(arr)), float(np.max(arr)))
        for name, arr in (("v", s.v), ("u", s.u), ("theta", s.theta), ("z", s.z))
    }
    failures = []

    def first(mask):
        idx = np.flatnonzero(mask)
        return int(idx[0]) if idx.size else None

    for name, mask in (
        ("v<=0", ~(s.v > 0)),
        ("theta<=0", ~(s.theta > 0)),
        ("z<0", ~(s.z >= 0)),
        ("z>1", ~(s.z <= 1)),
    ):
        i = first(mask)
        if i is not None:
            failures.append((name, i))
    if s.u[0] != 0.0:
        failures.append(("u[0]!=0", 0))
    far = max(abs(s.v[-1] - 1.0), abs(s.theta[-1] - 1.0), abs(s.z[-1]), abs(s.u[-1]))
    if far > tol_far:
        failures.append(("far-field", s.v.size - 1))
    return ValidationReport(passed=not failures, ranges=ranges, failures=failures, far_field_deviation=float(far))
