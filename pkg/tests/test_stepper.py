import numpy as np
import pytest
from numpy.testing import assert_allclose

from kslogistic.grid import Field, NonFiniteFieldError, divergence, make_grid
from kslogistic.helmholtz import grad_potential, solve
from kslogistic.params import Params
from kslogistic.reference import logistic_exact
from kslogistic.stepper import (
    BlowupError,
    NegativityError,
    StepControl,
    initial_state,
    nonlinearity,
    stability_warnings,
    step,
)

from oracles import rk4_reaction_diffusion


def gaussian_ic(grid, amp=1.2, width=1.5):
    x = grid.axes[0]
    return Field(grid, amp * np.exp(-(x**2) / (2 * width**2)))


def run_steps(u0, p, dt, nsteps, **ctrl):
    s = initial_state(u0)
    c = StepControl(dt=dt, t_end=dt * nsteps, **ctrl).resolved(u0, p)
    for _ in range(nsteps):
        s = step(s, p, c)
    return s


def test_uniform_field_follows_logistic_closed_form():
    # chemotaxis is inert on constants (v = u, grad v = 0), so the
    # trajectory must track m' = m (a - b m); expected value from the
    # closed form, budget 1e-8 at dt = 1e-3 over unit time
    g = make_grid(1, 32, 5.0)
    p = Params(chi=0.5, a=1.0, b=1.0, dim=1)
    s = run_steps(Field(g, np.full(32, 3.0)), p, 1e-3, 1000)
    expect = logistic_exact(3.0, 1.0, 1.0, 1.0)
    spread = np.ptp(s.u.values)
    assert spread < 1e-12
    assert abs(float(s.u.values[0]) - expect) <= 1e-8


def test_uniform_subcapacity_follows_logistic_closed_form():
    g = make_grid(1, 32, 5.0)
    p = Params(chi=0.2, a=1.0, b=1.0, dim=1)
    s = run_steps(Field(g, np.full(32, 0.3)), p, 1e-4, 10000)
    assert abs(float(s.u.values[0]) - logistic_exact(0.3, 1.0, 1.0, 1.0)) <= 1e-8


def test_carrying_capacity_is_exact_fixed_point():
    g = make_grid(2, 16, 3.0)
    p = Params(chi=0.4, a=2.0, b=0.5, dim=2)
    s = run_steps(Field(g, np.full(g.shape, 4.0)), p, 0.05, 100)
    assert np.max(np.abs(s.u.values - 4.0)) < 1e-12


def test_single_step_exact_on_near_linear_problem():
    # a = 0, b ~ 0: F(u) = u cancels the propagator's -u, so one step
    # of a constant returns the constant
    g = make_grid(1, 16, 2.0)
    p = Params(chi=0.0, a=0.0, b=1e-14, dim=1)
    s = run_steps(Field(g, np.full(16, 2.0)), p, 0.01, 1)
    assert np.max(np.abs(s.u.values - 2.0)) < 1e-12


def test_matches_fourth_order_reference_at_coarser_step():
    g = make_grid(1, 256, 15.0)
    u0 = gaussian_ic(g)
    p = Params(chi=0.0, a=1.0, b=1.0, dim=1)
    s = run_steps(u0, p, 1e-3, 1000)
    ref = rk4_reaction_diffusion(u0.values, g, 1.0, 1.0, 1e-3 / 16, 1.0)
    assert np.max(np.abs(s.u.values - ref)) <= 1e-6


def test_chi_zero_reduction_matches_independent_stepper():
    g = make_grid(1, 256, 15.0)
    u0 = gaussian_ic(g)
    p = Params(chi=0.0, a=1.0, b=1.0, dim=1)
    s = run_steps(u0, p, 1e-4, 5000)
    ref = rk4_reaction_diffusion(u0.values, g, 1.0, 1.0, 5e-4, 0.5)
    assert np.max(np.abs(s.u.values - ref)) <= 1e-8


def test_exposed_v_is_resolvent_of_u():
    g = make_grid(1, 128, 10.0)
    p = Params(chi=0.6, a=1.0, b=1.0, dim=1)
    s = run_steps(gaussian_ic(g), p, 0.01, 37)
    assert np.max(np.abs(s.v.values - solve(s.u).values)) < 1e-13


def test_richardson_order_at_least_two_ish():
    g = make_grid(1, 128, 15.0)
    u0 = gaussian_ic(g)
    p = Params(chi=0.3, a=1.0, b=1.0, dim=1)
    T = 0.4
    sols = [run_steps(u0, p, dt, round(T / dt)).u.values for dt in (0.02, 0.01, 0.005)]
    e12 = np.max(np.abs(sols[0] - sols[1]))
    e24 = np.max(np.abs(sols[1] - sols[2]))
    assert np.log2(e12 / e24) >= 1.9


def test_negativity_budget_aborts_on_ringing():
    # a raw indicator is not resolvable: its first step rings below any
    # tiny budget, and the run must abort rather than clamp
    g = make_grid(1, 64, 10.0)
    u0 = Field(g, (np.abs(g.axes[0]) <= 2.0).astype(float))
    p = Params(chi=0.0, a=1.0, b=1.0, dim=1)
    with pytest.raises(NegativityError) as exc:
        run_steps(u0, p, 1e-3, 50)
    assert exc.value.value < 0


def test_blowup_threshold_aborts():
    g = make_grid(1, 32, 5.0)
    p = Params(chi=0.0, a=2.0, b=0.5, dim=1)
    with pytest.raises(BlowupError):
        run_steps(Field(g, np.ones(32)), p, 0.01, 200, blowup_threshold=2.0)


def test_non_finite_input_rejected():
    g = make_grid(1, 32, 5.0)
    vals = np.ones(32)
    vals[5] = np.inf
    p = Params(chi=0.0, a=1.0, b=1.0, dim=1)
    s0 = initial_state(Field(g, np.ones(32)))
    bad = type(s0)(t=0.0, u=Field(g, vals), v=s0.v, step_count=0)
    with pytest.raises(NonFiniteFieldError):
        step(bad, p, StepControl(dt=0.01, t_end=1.0).resolved(s0.u, p))


def test_nonlinearity_on_uniform_field():
    g = make_grid(2, 16, 2.0)
    p = Params(chi=0.7, a=1.5, b=0.5, dim=2)
    c = 2.0
    F = nonlinearity(Field(g, np.full(g.shape, c)), p)
    assert_allclose(F.values, (p.a + 1) * c - p.b * c**2, atol=1e-13)


def test_nonlinearity_matches_composed_operators():
    # same formula assembled from the already-tested primitives
    g = make_grid(1, 128, 10.0)
    u = gaussian_ic(g, amp=0.8)
    p = Params(chi=0.9, a=1.0, b=2.0, dim=1)
    got = nonlinearity(u, p, dealias=False).values
    gv = grad_potential(u)
    chem = divergence([Field(g, u.values * c.values) for c in gv]).values
    expect = -p.chi * chem + (p.a + 1) * u.values - p.b * u.values**2
    assert np.max(np.abs(got - expect)) < 1e-12


def test_dealias_transparent_on_resolved_field():
    g = make_grid(1, 256, 15.0)
    u = gaussian_ic(g)  # spectrum is far below rounding at n/3
    p = Params(chi=0.5, a=1.0, b=1.0, dim=1)
    on = nonlinearity(u, p, dealias=True).values
    off = nonlinearity(u, p, dealias=False).values
    assert np.max(np.abs(on - off)) < 1e-12


def test_drift_term_has_zero_mean():
    g = make_grid(1, 128, 10.0)
    u = gaussian_ic(g)
    with_drift = nonlinearity(u, Params(chi=0.8, a=1.0, b=1.0, dim=1))
    without = nonlinearity(u, Params(chi=0.0, a=1.0, b=1.0, dim=1))
    assert abs(np.mean(with_drift.values) - np.mean(without.values)) < 1e-14


def test_mass_stays_under_exponential_envelope():
    g = make_grid(1, 128, 10.0)
    rng = np.random.default_rng(4)
    u0 = Field(g, rng.uniform(0.2, 1.5, 128))
    p = Params(chi=0.4, a=1.0, b=1.0, dim=1)
    s = initial_state(u0)
    c = StepControl(dt=0.01, t_end=1.0).resolved(u0, p)
    mass0 = g.cell_volume * np.sum(u0.values)
    for _ in range(100):
        s = step(s, p, c)
        mass = g.cell_volume * np.sum(s.u.values)
        assert mass <= mass0 * np.exp(p.a * s.t) * (1 + 1e-6)


def test_stability_warnings_fire_and_stay_quiet():
    g = make_grid(1, 64, 5.0)
    p = Params(chi=1.0, a=1.0, b=1.0, dim=1)
    s = initial_state(Field(g, np.full(64, 2.0)))
    assert stability_warnings(s, p, StepControl(dt=1.0, t_end=2.0)) != []
    assert stability_warnings(s, p, StepControl(dt=1e-3, t_end=2.0)) == []


def test_step_control_validation():
    with pytest.raises(ValueError):
        StepControl(dt=0.0, t_end=1.0)
    with pytest.raises(ValueError):
        StepControl(dt=0.1, t_end=-1.0)
    with pytest.raises(ValueError):
        StepControl(dt=0.1, t_end=1.0, negativity_budget=-1e-10)
    with pytest.raises(ValueError):
        StepControl(dt=0.1, t_end=1.0, blowup_threshold=0.0)


def test_dim_mismatch_rejected():
    g = make_grid(1, 32, 5.0)
    s = initial_state(Field(g, np.ones(32)))
    p = Params(chi=0.0, a=1.0, b=1.0, dim=2)
    with pytest.raises(ValueError, match="dim"):
        step(s, p, StepControl(dt=0.01, t_end=1.0).resolved(s.u, p))
