import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from exogas.constitutive import PhysParams
from exogas.diagnostics import (
    FunctionalRecord, History, decay_metric, dissipation_rate, entropy_roots, gplus_envelope,
    lyapunov_functional, unit_interval_means,
)
from exogas.errors import HistoryGap, InvalidArgument
from exogas.geometry import radius_from_volume
from exogas.grid_state import Grid, equilibrium_state, make_initial_condition
from exogas.solver import Integrator

P = PhysParams()


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-6, 30.0))
def test_entropy_roots_solve_the_equation(c):
    a1, a2 = entropy_roots(c)
    assert 0 < a1 < 1 < a2

    def f(y):
        return y - math.log(y) - 1 - c

    # each root is located to 1e-12 relative: f changes sign across the bracket
    tol = 1e-12
    assert f(a1 - tol * a1) > 0 > f(a1 + tol * a1) or f(a1) == 0
    assert f(a2 - tol * a2) < 0 < f(a2 + tol * a2) or f(a2) == 0


def test_entropy_roots_reject_negative():
    with pytest.raises(InvalidArgument):
        entropy_roots(-0.1)
    with pytest.raises(InvalidArgument):
        entropy_roots(float("nan"))


def test_equilibrium_functionals_vanish():
    g = Grid.over(10.0, 50)
    s = equilibrium_state(g)
    rf = radius_from_volume(P, g, s.v)
    assert lyapunov_functional(P, s, rf, g.dx) == 0.0
    assert dissipation_rate(P, s, rf, g.dx) == 0.0
    assert decay_metric(s) == 0.0


@pytest.mark.parametrize("family", ["gaussian-bump", "reactant-slab", "random"])
def test_lyapunov_and_dissipation_nonnegative(family):
    g = Grid.over(10.0, 100)
    s = make_initial_condition(g, family, amplitude=0.3, seed=2)
    s.u[1:-1] = 0.1 * np.sin(g.nodes[1:-1])
    rf = radius_from_volume(P, g, s.v)
    assert lyapunov_functional(P, s, rf, g.dx) > 0
    assert dissipation_rate(P, s, rf, g.dx) >= 0


def test_interval_means_bracketed_at_start():
    g = Grid.over(10.0, 100)
    rows = unit_interval_means(P, make_initial_condition(g, amplitude=0.3), g)
    assert len(rows) == 10 and all(r[-1] for r in rows)


def test_gplus_slope_of_a_line():
    t = np.linspace(0, 3, 31)
    assert gplus_envelope(t, 2.0 - 0.5 * t) == pytest.approx(-0.5)
    assert gplus_envelope([0.0], [1.0]) == 0.0


def test_history_must_start_at_zero_and_follow_steps():
    g = Grid.over(10.0, 40)
    s = make_initial_condition(g)
    s.t = 1.0
    with pytest.raises(HistoryGap):
        History(P, g, s)
    s.t = 0.0
    h = History(P, g, s)
    nxt = s.copy()
    nxt.t = 0.5
    with pytest.raises(HistoryGap):
        h.observe(nxt, 0.1)


def test_history_records_and_monotone_accumulators():
    g = Grid.over(10.0, 80)
    s = make_initial_condition(g, "reactant-slab")
    h = History(P, g, s)
    burns, xs = [], []

    def cb(st, dt, tally):
        h.observe(st, dt, tally)
        rec = h.record()
        burns.append(rec.burn_integral)
        xs.append(rec.X)

    Integrator(P, g).advance(s, 0.3, cb)
    assert np.all(np.diff(burns) >= 0) and np.all(np.diff(xs) >= 0)
    rec = h.records[-1]
    assert len(rec.values()) == len(FunctionalRecord.columns())
    assert math.isnan(rec.audit_residual)


def test_audit_needs_room_for_the_cutoff():
    g = Grid.over(2.5, 10)
    with pytest.raises(ValueError):
        History(P, g, make_initial_condition(g), audit_k=1)
