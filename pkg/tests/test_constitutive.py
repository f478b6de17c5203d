from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from exogas.constitutive import (
    PhysParams, ThermoPoint, conductivity, dissipation_decomposition, energy_temp_deriv,
    internal_energy, maxwell_residuals, normalized_entropy, pressure, pressure_temp_deriv,
    reaction_rate,
)
from exogas.errors import DegenerateStencil, InvalidParameters, StatePositivityViolation

P = PhysParams()
positive = st.floats(0.2, 5.0, allow_nan=False)


def test_defaults_are_admissible():
    assert P.violations() == []
    assert P.alpha == 2.0
    assert P.theorem_regime


@pytest.mark.parametrize("changes, fragment", [
    ({"mu": 0.0}, "mu>0"),
    ({"lambda1": -1.0}, "n*lambda1+2*mu>0"),
    ({"a_rad": -0.1}, "a_rad"),
    ({"n_dim": 1}, "n_dim"),
])
def test_parameter_rules_are_named(changes, fragment):
    with pytest.raises(InvalidParameters, match=fragment.replace("*", r"\*").replace("+", r"\+")):
        P.replace(**changes)


def test_beta_outside_range_warns():
    with pytest.warns(RuntimeWarning):
        P.replace(beta=20.0)


def test_pressure_and_energy_against_exact_fractions():
    # v = 2, theta = 3 with a = 1/100
    v, th = Fraction(2), Fraction(3)
    a = Fraction(1, 100)
    p_exact = th / v + a / 3 * th**4
    e_exact = th + a * v * th**4
    pt = ThermoPoint(2.0, 3.0)
    assert pressure(P, pt) == pytest.approx(float(p_exact), rel=1e-15)
    assert internal_energy(P, pt) == pytest.approx(float(e_exact), rel=1e-15)
    assert energy_temp_deriv(P, pt) == pytest.approx(float(1 + 4 * a * v * th**3), rel=1e-15)
    assert pressure_temp_deriv(P, pt) == pytest.approx(float(1 / v + 4 * a / 3 * th**3), rel=1e-15)


def test_state_must_be_positive():
    with pytest.raises(StatePositivityViolation):
        ThermoPoint(-1.0, 1.0)


@settings(max_examples=200, deadline=None)
@given(positive, positive)
def test_normalized_entropy_is_nonnegative(v, th):
    assert normalized_entropy(P, ThermoPoint(v, th)) >= -1e-14


def test_normalized_entropy_vanishes_at_rest_state():
    assert normalized_entropy(P, ThermoPoint(1.0, 1.0)) == pytest.approx(0.0, abs=1e-15)


def test_conductivity_and_rate():
    assert conductivity(P, ThermoPoint(1.0, 2.0)) == pytest.approx(1.0 + 2.0**5)
    assert reaction_rate(P, 1.0) == pytest.approx(np.exp(-1.0))
    assert reaction_rate(P, 0.0) == 0.0
    with pytest.raises(StatePositivityViolation):
        reaction_rate(P, -1.0)


def test_maxwell_rejects_bad_step():
    with pytest.raises(DegenerateStencil):
        maxwell_residuals(P, ThermoPoint(1.0, 1.0), h=0.0)
    with pytest.raises(DegenerateStencil):
        maxwell_residuals(P, ThermoPoint(0.01, 1.0), h=0.1)


@settings(max_examples=200, deadline=None)
@given(positive, positive, st.floats(-2, 2), st.floats(1.0, 5.0), st.floats(-2, 2), st.sampled_from([2, 3]))
def test_dissipation_pieces_are_nonnegative(v, th, u, r, ux, n):
    lhs, t1, t2 = dissipation_decomposition(P.replace(n_dim=n), v, th, u, r, ux)
    assert t1 >= 0 and t2 >= 0
    assert abs(lhs - t1 - t2) <= 1e-12 * max(abs(lhs), 1e-300)


def test_dissipation_needs_exterior_radius():
    with pytest.raises(StatePositivityViolation):
        dissipation_decomposition(P, 1.0, 1.0, 0.1, 0.5, 0.1)
