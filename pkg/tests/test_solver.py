import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from exogas import _kernels as K
from exogas.constitutive import PhysParams
from exogas.errors import StepFailure
from exogas.geometry import radius_from_volume
from exogas.grid_state import BoundaryConditions, Grid, equilibrium_state, make_initial_condition
from exogas.solver import (
    Integrator, StepperConfig, StepTally, Z_SCHEMES, reaction_step, total_energy,
)

P = PhysParams()


@settings(max_examples=50, deadline=None)
@given(arrays(float, 12, elements=st.floats(-1, 1)), arrays(float, 12, elements=st.floats(-1, 1)),
       arrays(float, 12, elements=st.floats(-5, 5)))
def test_thomas_matches_dense_solve(a, c, d):
    b = 3.0 + np.abs(a) + np.abs(c)  # diagonally dominant
    A = np.diag(b) + np.diag(a[1:], -1) + np.diag(c[:-1], 1)
    x = K.thomas(a, b, c, d)
    assert np.allclose(x, np.linalg.solve(A, d), rtol=1e-12, atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.2, 5.0), st.floats(0.1, 20.0))
def test_temperature_inversion(v, th):
    e = np.array([P.c_v * th + P.a_rad * v * th**4])
    out, code = K.theta_from_energy(e, np.array([v]), P.c_v, P.a_rad, np.array([1.0]))
    assert code == K.OK
    assert out[0] == pytest.approx(th, rel=1e-13)


def test_stepper_config_collects_problems():
    with pytest.raises(ValueError) as exc:
        StepperConfig(cfl_hyper=2.0, splitting="none", diff_theta_impl=False)
    msg = str(exc.value)
    assert "cfl_hyper" in msg and "splitting" in msg and "diff_theta_impl" in msg


@pytest.mark.parametrize("splitting", ["strang", "lie"])
@pytest.mark.parametrize("outer", ["dirichlet", "closed"])
def test_equilibrium_is_a_fixed_point(splitting, outer):
    g = Grid.over(20.0, 64)
    integ = Integrator(P, g, StepperConfig(splitting=splitting), BoundaryConditions(outer))
    s = integ.advance(equilibrium_state(g), 0.5)
    assert np.max(np.abs(s.v - 1)) < 1e-14 and np.max(np.abs(s.theta - 1)) < 1e-14
    assert np.max(np.abs(s.u)) < 1e-14 and np.all(s.z == 0)


def test_fixed_step_lands_on_end_time():
    g = Grid.over(12.0, 48)
    seen = []
    Integrator(P, g, StepperConfig(fixed_dt=0.003)).advance(
        make_initial_condition(g), 0.1, lambda s, dt, t: seen.append((s.t, dt)))
    assert seen[-1][0] == 0.1
    assert len(seen) == math.ceil(0.1 / 0.003)


def test_rejected_step_reports_failure():
    g = Grid.over(12.0, 48)
    integ = Integrator(P, g, StepperConfig(fixed_dt=10.0, dt_min=5.0, dt_max=10.0))
    with pytest.raises(StepFailure) as exc:
        integ.advance(make_initial_condition(g, amplitude=0.5), 20.0)
    assert exc.value.dump["dt_attempted"] == 10.0


def test_reaction_is_exact_decay_with_frozen_temperature():
    g = Grid.over(5.0, 20)
    s = make_initial_condition(g, "reactant-slab")
    z, th, _ = reaction_step(P, s, 0.1, frozen_theta=True)
    phi = P.K_rate * s.theta**P.beta * np.exp(-P.A_act / s.theta)
    assert np.allclose(z, s.z * np.exp(-phi * 0.1), rtol=1e-13, atol=0)
    assert np.array_equal(th, s.theta)


def test_reaction_releases_heat_and_stays_in_bounds():
    g = Grid.over(5.0, 20)
    s = make_initial_condition(g, "reactant-slab")
    z, th, _ = reaction_step(P, s, 0.5)
    assert np.all((z >= 0) & (z <= s.z)) and np.all(th >= s.theta)


def _geometry(g, v):
    rf = radius_from_volume(P, g, v)
    area = rf.rn / rf.r
    return area * area


def test_closed_heat_substep_conserves_energy():
    g = Grid.over(10.0, 80)
    s = make_initial_condition(g, amplitude=0.5)
    G = _geometry(g, s.v)
    e0 = np.sum(P.c_v * s.theta + P.a_rad * s.v * s.theta**4)
    for scheme in (K.HEAT_BE, K.HEAT_CN, K.HEAT_TRBDF2):
        th, code, *_ = K.heat_diffusion(s.theta, s.v, G, g.dx, 0.2, P.as_vector(), False, 1.0,
                                        scheme, 1e-12, 30, np.zeros(80))
        assert code == K.OK
        e1 = np.sum(P.c_v * th + P.a_rad * s.v * th**4)
        assert abs(e1 - e0) < 1e-12 * e0


@settings(max_examples=40, deadline=None)
@given(arrays(float, 40, elements=st.floats(0.0, 1.0)), st.sampled_from(["implicit", "fct"]))
def test_species_substep_keeps_unit_interval_and_mass(z0, scheme):
    g = Grid.over(4.0, 40)
    v = np.ones(40)
    G = _geometry(g, v)
    z, inflow, diss, _ = K.species_diffusion(z0, v, G, 1.0, g.dx, 0.05, False, 0.0,
                                             Z_SCHEMES[scheme], np.zeros(40))
    assert np.all(z >= 0.0) and np.all(z <= 1.0)
    assert abs(np.sum(z) - np.sum(z0)) < 1e-12 * max(1.0, np.sum(z0))
    assert inflow == 0.0 and diss >= 0.0


def test_closed_box_energy_balance_without_reaction():
    g = Grid.over(20.0, 128)
    p = P.replace(K_rate=0.0)
    bc = BoundaryConditions("closed")
    s0 = make_initial_condition(g)
    tally = StepTally()
    s = Integrator(p, g, bc=bc).advance(s0.copy(), 0.5, lambda st, dt, t: tally.merge(t))
    assert tally.heat_inflow == 0.0
    h0 = total_energy(p, s0, g.dx)
    assert abs(total_energy(p, s, g.dx) - h0) < 1e-11 * h0
