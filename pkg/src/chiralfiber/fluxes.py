"""Transmitted, reflected and radiated photon fluxes and their integrals.

Group delay between the atom and the detection planes is neglected, so all
fluxes are local functions of the atomic state at the same time.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .coupling import Channel
from .dynamics import (SQRT2PI, DynamicsResult, GridMismatchError, integrate_series, solve)
from .pulses import Coherent, Fock, PulseSpec, Shape, envelope


@dataclass(frozen=True, eq=False)
class FluxResult:
    t: np.ndarray
    incident: np.ndarray
    I_T: np.ndarray
    I_R: np.ndarray
    I_rad: np.ndarray
    residual: np.ndarray
    P_T: float
    P_R: float
    P_rad: float
    photons: float

    @property
    def P_ext(self) -> float:
        return self.photons - self.P_T

    @property
    def t_peak_T(self) -> float:
        return float(self.t[np.argmax(self.I_T)])

    @property
    def t_peak_R(self) -> float:
        return float(self.t[np.argmax(self.I_R)])

    @property
    def budget(self) -> float:
        return self.P_T + self.P_R + self.P_rad


def _fluxes(dyn: DynamicsResult, pulse: PulseSpec, photons: float) -> FluxResult:
    if dyn.pulse != pulse:
        raise GridMismatchError("dynamics were computed for a different pulse")
    ch = dyn.channel
    F = envelope(pulse, dyn.t)
    incident = photons * np.abs(F) ** 2
    inter = 2 * (SQRT2PI * dyn.drive * ch.G_L * F * np.conj(dyn.coherence)).real
    I_T = incident + ch.gamma_fw * dyn.excited + inter
    I_R = ch.gamma_bw * dyn.excited
    I_rad = ch.gamma_r * dyn.excited
    residual = I_T + I_R + I_rad + dyn.excited_rate - incident
    edge = pulse.hard_edge
    right = None
    if edge is not None and dyn.t[0] < edge < dyn.t[-1]:
        k = int(np.argmin(np.abs(dyn.t - edge)))
        Fr = envelope(pulse, np.nextafter(edge, np.inf))
        right = (photons * abs(Fr) ** 2 + ch.gamma_fw * dyn.excited[k]
                 + 2 * (SQRT2PI * dyn.drive * ch.G_L * Fr * np.conj(dyn.coherence[k])).real)
    probs = integrate_probabilities(dyn.t, I_T, I_R, I_rad, dyn.excited, ch, edge,
                                    I_T_right=right)
    return FluxResult(dyn.t, incident, I_T, I_R, I_rad, residual, *probs, photons=photons)


def integrate_probabilities(t, I_T, I_R, I_rad, excited, channel: Channel, edge=None,
                            I_T_right=None):
    """``(P_T, P_R, P_rad)``: Simpson over the series plus the free-decay tail.

    Past the end of the grid the drive is gone and the population decays as
    ``exp(-gamma t)``, so each channel gains ``rate * P(t_end) / gamma``.
    """
    g = channel.gamma
    tail = excited[-1] / g if g > 0 else 0.0
    P_T = integrate_series(t, I_T, edge, right_value=I_T_right) + channel.gamma_fw * tail
    P_R = integrate_series(t, I_R, edge) + channel.gamma_bw * tail
    P_rad = integrate_series(t, I_rad, edge) + channel.gamma_r * tail
    return P_T, P_R, P_rad


def flux_single_photon(dyn: DynamicsResult, pulse: PulseSpec) -> FluxResult:
    if not (isinstance(pulse.statistics, Fock) and pulse.statistics.n == 1):
        raise ValueError("flux_single_photon needs a one-photon Fock pulse")
    return _fluxes(dyn, pulse, 1.0)


def flux_fock(dyn: DynamicsResult, pulse: PulseSpec) -> FluxResult:
    if not isinstance(pulse.statistics, Fock):
        raise ValueError("flux_fock needs Fock statistics")
    return _fluxes(dyn, pulse, float(pulse.statistics.n))


def flux_coherent(dyn: DynamicsResult, pulse: PulseSpec) -> FluxResult:
    if not isinstance(pulse.statistics, Coherent):
        raise ValueError("flux_coherent needs Coherent statistics")
    return _fluxes(dyn, pulse, pulse.statistics.mean_photons)


def flux(dyn: DynamicsResult) -> FluxResult:
    stats = dyn.pulse.statistics
    if isinstance(stats, Coherent):
        return flux_coherent(dyn, dyn.pulse)
    return flux_fock(dyn, dyn.pulse)


def _spectrum_point(args):
    channel, pulse = args
    res = flux(solve(channel, pulse))
    return pulse.detuning, res.P_T, res.P_R, res.P_rad


def detuning_spectrum(channel: Channel, shape, T: float, detunings, statistics=None,
                      workers: int = 1):
    """Rows ``(Delta, P_T, P_R, P_rad)`` in the order of ``detunings``."""
    stats = Fock(1) if statistics is None else statistics
    jobs = [(channel, PulseSpec(Shape(shape), T, float(D), stats)) for D in detunings]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_spectrum_point, jobs))
    else:
        rows = [_spectrum_point(j) for j in jobs]
    return np.array(rows, dtype=float).reshape(-1, 4)
