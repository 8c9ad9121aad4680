import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chiralfiber.coupling import Channel
from chiralfiber.dynamics import (GridMismatchError, analytic_decaying, analytic_gaussian,
                                  analytic_rising, analytic_single_photon,
                                  effective_excitation_time, integrate_series, make_grid,
                                  quadrature_single_photon, solve, solve_coherent,
                                  solve_fock_ladder, solve_single_photon)
from chiralfiber.pulses import Coherent, Fock, PulseSpec, Shape

SHAPES = [Shape.GAUSSIAN, Shape.RISING, Shape.DECAYING]


def toy(gamma=1.0, eta=0.3):
    return Channel.simple(gamma, np.sqrt(eta * gamma / (2 * np.pi)) * np.exp(0.4j))


def test_uncoupled_atom_stays_down():
    ch = Channel.simple(1.0, 0j)
    d = solve_single_photon(ch, PulseSpec(Shape.GAUSSIAN))
    assert np.all(d.P == 0) and np.all(d.Q == 0)


@pytest.mark.parametrize("shape", SHAPES)
@pytest.mark.parametrize("D", [0.0, 1.3])
def test_three_routes_agree(channel_plus, shape, D):
    p = PulseSpec(shape, 0.8, D)
    ode = solve_single_photon(channel_plus, p)
    ana = analytic_single_photon(channel_plus, p, ode.t)
    quad = quadrature_single_photon(channel_plus, p, ode.t)
    peak = ana.P.max()
    for other in (ode, quad):
        assert np.max(np.abs(other.P - ana.P)) < 1e-6 * peak
        assert np.max(np.abs(other.Q - ana.Q)) < 1e-8
    assert np.max(np.abs(ode.P - np.abs(ode.Q) ** 2)) < 1e-10


def test_initial_state_and_bounds(channel_plus):
    d = solve_single_photon(channel_plus, PulseSpec(Shape.GAUSSIAN))
    assert d.P[0] < 1e-20 and abs(d.Q[0]) < 1e-10
    assert np.all(d.P >= -1e-14) and np.all(d.P <= 1)


def test_gaussian_reference_peak(channel_plus):
    d = solve_single_photon(channel_plus, PulseSpec(Shape.GAUSSIAN, 1.0))
    assert 0.11 <= d.P.max() <= 0.15


def test_gaussian_far_past_and_small_detuning_continuity():
    ch = toy()
    P, _ = analytic_gaussian(ch, 1.0, 0.0, np.array([-40.0]))
    assert P[0] < 1e-200
    t = np.linspace(-3, 5, 50)
    a = analytic_gaussian(ch, 1.0, 0.0, t)[0]
    b = analytic_gaussian(ch, 1.0, 1e-12, t)[0]
    assert np.max(np.abs(a - b)) < 1e-12


def test_rising_optimum():
    ch = toy(1.7, 0.35)
    P, _ = analytic_rising(ch, 1 / ch.gamma, 0.0, np.array([0.0]))
    assert abs(P[0] - ch.eta_L) < 1e-14
    t = np.array([-1e-13, 0.0, 1 / ch.gamma])
    P, _ = analytic_rising(ch, 1 / ch.gamma, 0.0, t)
    assert abs(P[0] - P[1]) < 1e-12
    assert abs(P[2] - P[1] * np.exp(-1)) < 1e-14


def test_decaying_limits():
    ch = toy(1.5)
    P, _ = analytic_decaying(ch, 0.9, 0.4, np.array([-1.0, 0.0, 200.0]))
    assert P[0] == 0 and P[1] == 0 and P[2] < 1e-90


def test_decaying_series_branch_matches_ode():
    ch = toy(1.5)
    p = PulseSpec(Shape.DECAYING, 1 / ch.gamma, 0.0)
    ode = solve_single_photon(ch, p)
    ana = analytic_single_photon(ch, p, ode.t)
    assert np.max(np.abs(ode.P - ana.P)) < 1e-8
    # nearly singular neighbour stays continuous
    near = analytic_decaying(ch, (1 + 1e-9) / ch.gamma, 0.0, ode.t)[0]
    assert np.max(np.abs(near - ana.P)) < 1e-8


@settings(max_examples=15, deadline=None)
@given(g=st.floats(0.2, 3), eta=st.floats(0.01, 0.9), T=st.floats(0.2, 3), D=st.floats(-3, 3),
       shape=st.sampled_from(SHAPES))
def test_closed_forms_against_quadrature(g, eta, T, D, shape):
    ch = toy(g, eta)
    p = PulseSpec(shape, T, D)
    t = np.linspace(-3 * T, 4 * T + 5 / g, 120)
    if shape is Shape.DECAYING:
        t = t[t >= 0]
    ana = analytic_single_photon(ch, p, t)
    quad = quadrature_single_photon(ch, p, t)
    assert np.max(np.abs(ana.Q - quad.Q)) < 1e-8


def test_fock_ladder_reduces_to_single_photon(channel_plus):
    p = PulseSpec(Shape.GAUSSIAN, 1.0)
    one = solve_single_photon(channel_plus, p)
    lad = solve_fock_ladder(channel_plus, p, one.t)
    assert np.max(np.abs(lad.P - one.P)) < 1e-10
    assert np.all(lad.ladder_sz[0] == -1)


def test_fock_zero_and_two(channel_plus):
    zero = solve(channel_plus, PulseSpec(Shape.GAUSSIAN, statistics=Fock(0)))
    assert np.all(zero.excited == 0)
    one = solve(channel_plus, PulseSpec(Shape.GAUSSIAN, 1.0))
    two = solve(channel_plus, PulseSpec(Shape.GAUSSIAN, 1.0, statistics=Fock(2)))
    assert two.excited.max() > one.excited.max()


def test_coherent_weak_limit(channel_plus):
    p1 = PulseSpec(Shape.GAUSSIAN, 1.0)
    one = solve_single_photon(channel_plus, p1)
    alpha = 0.01
    coh = solve_coherent(channel_plus, PulseSpec(Shape.GAUSSIAN, 1.0, statistics=Coherent(alpha)), one.t)
    i = np.argmax(one.P)
    assert abs(coh.excited[i] / (alpha**2 * one.P[i]) - 1) < 1e-3


def test_coherent_zero_and_unit(channel_plus):
    z = solve(channel_plus, PulseSpec(Shape.GAUSSIAN, statistics=Coherent(0)))
    assert np.all(z.excited == 0)
    one = solve(channel_plus, PulseSpec(Shape.GAUSSIAN))
    coh = solve(channel_plus, PulseSpec(Shape.GAUSSIAN, statistics=Coherent(1.0)))
    assert abs(coh.excited.max() - one.excited.max()) > 1e-3


def test_effective_excitation_time(channel_plus):
    ch = channel_plus
    g = ch.gamma
    assert effective_excitation_time(ch, 1 / g, 0.0) == pytest.approx(2 * ch.gamma_L / g**2, rel=1e-14)
    for s in (Shape.RISING, Shape.DECAYING):
        num = solve_single_photon(ch, PulseSpec(s, 0.7, 0.5)).summary().tau_e
        assert abs(num / effective_excitation_time(ch, 0.7, 0.5) - 1) < 1e-6
    assert effective_excitation_time(ch, 0.7, 1e3 * g) < 1e-5 * effective_excitation_time(ch, 0.7, 0)
    gnum = solve_single_photon(ch, PulseSpec(Shape.GAUSSIAN, 1.0)).summary().tau_e
    assert abs(gnum / effective_excitation_time(ch, 1.0, 0.0, Shape.GAUSSIAN) - 1) < 1e-6


def test_grid_edge_node_and_validation(channel_plus):
    p = PulseSpec(Shape.RISING, 1.0)
    t = make_grid(channel_plus, p)
    assert 0.0 in t
    # a grid starting late still integrates from the pulse start
    late = solve_single_photon(channel_plus, PulseSpec(Shape.DECAYING), np.array([0.5, 1.0]))
    full = analytic_single_photon(channel_plus, PulseSpec(Shape.DECAYING), np.array([0.5, 1.0]))
    assert np.max(np.abs(late.P - full.P)) < 1e-10
    with pytest.raises(GridMismatchError):
        solve_single_photon(channel_plus, p, np.array([1.0, 0.0]))


def test_integrate_series_with_jump():
    t = np.linspace(-2, 2, 401)
    y = np.where(t <= 0, 1.0, 0.0)
    assert integrate_series(t, y, 0.0, right_value=0.0) == pytest.approx(2.0, abs=1e-14)
    y = np.exp(-t)
    assert integrate_series(t, y, tail_rate=1.0) == pytest.approx(np.exp(2), rel=1e-9)
