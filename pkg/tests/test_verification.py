import math

import numpy as np
import pytest

from exogas.constitutive import PhysParams
from exogas.grid_state import Grid, make_initial_condition
from exogas.solver import Integrator, StepperConfig
from exogas.verification import (
    convergence_study, make_case, mms_forcing, oracle_integrate, substitution_residual,
)

P = PhysParams()


def test_equilibrium_targets_need_no_forcing():
    case = make_case("equilibrium", P)
    for f in mms_forcing(case, P, Grid.over(4.0, 32), 0.3):
        assert np.max(np.abs(f)) < 1e-14


def test_static_heat_forcing_matches_hand_formula():
    # v = 1, u = 0, kappa = kappa1: f_e = -(G theta_x)_x with G = (1 + 3x)^(4/3)
    p = P.replace(kappa2=0.0)
    case = make_case("static-heat", p)
    L = case.length
    x = np.linspace(0.05, 3.95, 40)
    th_x = -0.1 * (math.pi / L) * np.sin(math.pi * x / L)
    th_xx = -0.1 * (math.pi / L) ** 2 * np.cos(math.pi * x / L)
    G = (1 + 3 * x) ** (4 / 3)
    G_x = 4 * (1 + 3 * x) ** (1 / 3)
    hand = -(G_x * th_x + G * th_xx)
    assert np.max(np.abs(case.evaluate("f_e", 0.7, x) - hand)) < 1e-8


def test_symbolic_forcing_agrees_with_numerical_substitution():
    case = make_case("smooth", P)
    for t, x in ((0.1, 0.7), (0.4, 2.2), (0.3, 3.5)):
        res = substitution_residual(case, t, x)
        assert max(abs(v) for v in res.values()) < 1e-7, res


def test_study_needs_three_levels():
    with pytest.raises(ValueError):
        convergence_study(make_case("equilibrium", P), P, levels=2)


def test_equilibrium_study_is_flagged_exact():
    rep = convergence_study(make_case("equilibrium", P), P, levels=3, kind="time", n0=16, t_end=0.05, dt0=0.01)
    assert rep.status == "exact"


def test_unknown_case():
    with pytest.raises(ValueError):
        make_case("tornado", P)


def test_integrator_agrees_with_forward_euler_reference():
    # the remaining gap is the reference's own first-order error, so it halves
    # with the reference step
    g = Grid.over(6.0, 24)
    s0 = make_initial_condition(g, "reactant-slab", amplitude=0.05)
    s = Integrator(P, g, StepperConfig(fixed_dt=1e-3)).advance(s0.copy(), 0.1)

    def gap(h):
        ref = oracle_integrate(P, s0.copy(), 0.1, h, g)
        return max(float(np.max(np.abs(getattr(s, k) - getattr(ref, k)))) for k in ("v", "u", "theta", "z"))

    coarse, fine = gap(4e-5), gap(2e-5)
    assert fine < 5e-5
    assert 1.7 < coarse / fine < 2.3
