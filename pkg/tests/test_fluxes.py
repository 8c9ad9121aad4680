import numpy as np
import pytest

from chiralfiber.coupling import Channel
from chiralfiber.dynamics import (SQRT2PI, GridMismatchError, effective_excitation_time,
                                  solve, solve_fock_ladder, solve_single_photon)
from chiralfiber.fluxes import (detuning_spectrum, flux, flux_coherent, flux_fock,
                                flux_single_photon)
from chiralfiber.pulses import Coherent, Fock, PulseSpec, Shape, envelope

SHAPES = [Shape.GAUSSIAN, Shape.RISING, Shape.DECAYING]


def run(ch, pulse):
    return flux(solve(ch, pulse))


def test_transparent_atom():
    ch = Channel.simple(1.0, 0j)
    p = PulseSpec(Shape.GAUSSIAN)
    fx = run(ch, p)
    assert np.array_equal(fx.I_T, np.abs(envelope(p, fx.t)) ** 2)
    assert np.all(fx.I_R == 0) and np.all(fx.I_rad == 0)


def test_transmitted_flux_is_a_modulus_square(channel_plus):
    # with gamma_fw = gamma_L the forward field is F + sqrt(2 pi) G* Q
    p = PulseSpec(Shape.GAUSSIAN, 1.0, 0.6)
    d = solve_single_photon(channel_plus, p)
    fx = flux_single_photon(d, p)
    F = envelope(p, d.t)
    field = F + SQRT2PI * np.conj(channel_plus.G_L) * d.Q
    assert np.max(np.abs(fx.I_T - np.abs(field) ** 2)) < 1e-10


@pytest.mark.parametrize("shape", SHAPES)
@pytest.mark.parametrize("D", [0.0, 2.0])
def test_conservation_and_budget(channel_plus, shape, D):
    fx = run(channel_plus, PulseSpec(shape, 1.0, D))
    assert np.max(np.abs(fx.residual)) < 1e-6 * np.max(fx.incident)
    assert abs(fx.budget - 1) < 1e-4
    # the stepper's absolute tolerance sets a round-off floor far below 1e-14
    assert fx.I_R.min() >= -1e-14 and fx.I_rad.min() >= -1e-14 and fx.I_T.min() >= -1e-12
    assert fx.P_ext == pytest.approx(fx.P_R + fx.P_rad, abs=1e-4)


def test_reflection_equals_backward_rate_times_tau(channel_plus):
    for shape in (Shape.RISING, Shape.DECAYING):
        fx = run(channel_plus, PulseSpec(shape, 0.8, 0.3))
        tau = effective_excitation_time(channel_plus, 0.8, 0.3)
        assert abs(fx.P_R / (channel_plus.gamma_bw * tau) - 1) < 1e-6


def test_fock_fluxes(channel_plus):
    p1 = PulseSpec(Shape.GAUSSIAN)
    one = flux_single_photon(solve_single_photon(channel_plus, p1), p1)
    lad = flux_fock(solve_fock_ladder(channel_plus, p1, one.t), p1)
    assert np.max(np.abs(lad.I_T - one.I_T)) < 1e-9
    zero = run(channel_plus, PulseSpec(Shape.GAUSSIAN, statistics=Fock(0)))
    assert np.all(zero.I_T == 0) and np.all(zero.I_R == 0)
    for n in (2, 3):
        fx = run(channel_plus, PulseSpec(Shape.GAUSSIAN, statistics=Fock(n)))
        assert abs(fx.budget - n) < 1e-4


def test_coherent_fluxes(channel_plus):
    p1 = PulseSpec(Shape.GAUSSIAN)
    one = run(channel_plus, p1)
    zero = run(channel_plus, PulseSpec(Shape.GAUSSIAN, statistics=Coherent(0)))
    assert np.all(zero.I_T == 0) and np.all(zero.I_R == 0) and np.all(zero.I_rad == 0)
    a = 0.01
    weak = flux_coherent(solve(channel_plus, PulseSpec(Shape.GAUSSIAN, statistics=Coherent(a)), one.t),
                         PulseSpec(Shape.GAUSSIAN, statistics=Coherent(a)))
    i = np.argmax(one.I_R)
    assert abs(weak.I_R[i] / (a**2 * one.I_R[i]) - 1) < 1e-3
    strong = run(channel_plus, PulseSpec(Shape.GAUSSIAN, statistics=Coherent(1.5)))
    assert np.max(np.abs(strong.residual)) < 1e-5 * np.max(strong.incident)


def test_mismatched_pulse_rejected(channel_plus):
    d = solve(channel_plus, PulseSpec(Shape.GAUSSIAN))
    with pytest.raises(GridMismatchError):
        flux_single_photon(d, PulseSpec(Shape.GAUSSIAN, 2.0))
    with pytest.raises(ValueError):
        flux_coherent(d, d.pulse)


def test_timing_signatures(channel_plus):
    fx = run(channel_plus, PulseSpec(Shape.GAUSSIAN, 1.0))
    assert fx.t_peak_T < 0 < fx.t_peak_R


def test_spectrum_properties(bundle, fiber, sol):
    D = np.linspace(-3, 3, 7)
    plus = detuning_spectrum(bundle.channel(1), Shape.RISING, 1.0, D)
    minus = detuning_spectrum(bundle.channel(-1), Shape.RISING, 1.0, D)
    assert np.allclose(plus[:, 2], minus[:, 2], rtol=1e-9, atol=0)
    assert np.argmax(plus[:, 2]) == 3
    assert np.allclose(plus[:, 2], plus[::-1, 2], rtol=0, atol=1e-8)
    dec = detuning_spectrum(bundle.channel(1), Shape.DECAYING, 1.0, D)
    assert np.max(np.abs(dec[:, 1:3] - plus[:, 1:3])) < 1e-4
    par = detuning_spectrum(bundle.channel(1), Shape.RISING, 1.0, D, workers=2)
    assert np.array_equal(par, plus)


def _fwhm(D, y):
    half = y.max() / 2
    above = D[y >= half]
    return above.max() - above.min()


def test_linewidth_grows_closer_to_the_fiber(fiber, sol):
    from chiralfiber.coupling import rate_bundle
    from conftest import make_atom
    D = np.linspace(-4, 4, 41)
    widths = []
    for r in (1.0, 2.0):
        ch = rate_bundle(make_atom(r), fiber, sol).channel(1)
        widths.append(_fwhm(D, detuning_spectrum(ch, Shape.RISING, 1.0, D)[:, 2]))
    assert widths[0] > widths[1]
