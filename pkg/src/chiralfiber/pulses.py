"""Temporal envelopes and photon statistics of the probe pulse.

Times are in units of ``1/gamma0`` and detunings in units of ``gamma0``.
Envelopes are normalised so that ``int |F_t|^2 dt = 1``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import integrate
from scipy.interpolate import PchipInterpolator

SUPPORT_EPS = 1e-12


class Shape(str, enum.Enum):
    GAUSSIAN = "gaussian"
    RISING = "rising"
    DECAYING = "decaying"
    CUSTOM = "custom"


@dataclass(frozen=True)
class Fock:
    n: int = 1

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 0:
            raise ValueError(f"photon number must be a non-negative integer, got {self.n}")

    @property
    def mean_photons(self) -> float:
        return float(self.n)


@dataclass(frozen=True)
class Coherent:
    alpha: complex = 1.0

    @property
    def mean_photons(self) -> float:
        return abs(self.alpha) ** 2


@dataclass(frozen=True)
class CustomTable:
    """Tabulated envelope; interpolated in modulus and unwrapped phase."""

    t: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, float)
        v = np.asarray(self.values, complex)
        if t.ndim != 1 or t.shape != v.shape or t.size < 2:
            raise ValueError("custom table needs matching 1-D time and value columns")
        if np.any(np.diff(t) <= 0):
            raise ValueError("custom table times must be strictly increasing")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "values", v)

    def __hash__(self):
        return hash((self.t.tobytes(), self.values.tobytes()))

    def __eq__(self, other):
        return (isinstance(other, CustomTable) and np.array_equal(self.t, other.t)
                and np.array_equal(self.values, other.values))

    def interpolant(self):
        mag = PchipInterpolator(self.t, np.abs(self.values), extrapolate=False)
        phase = PchipInterpolator(self.t, np.unwrap(np.angle(self.values)), extrapolate=False)

        def f(t):
            t = np.asarray(t, float)
            m = np.nan_to_num(mag(t), nan=0.0)
            ph = np.nan_to_num(phase(t), nan=0.0)
            return m * np.exp(1j * ph)

        return f

    @classmethod
    def load(cls, path) -> "CustomTable":
        """Read ``t  Re F  [Im F]`` columns; ``#`` starts a comment."""
        data = np.loadtxt(Path(path), comments="#", ndmin=2)
        if data.shape[1] not in (2, 3):
            raise ValueError(f"{path}: expected 2 or 3 columns, found {data.shape[1]}")
        vals = data[:, 1] + (1j * data[:, 2] if data.shape[1] == 3 else 0)
        return cls(data[:, 0], vals)


@dataclass(frozen=True)
class PulseSpec:
    shape: Shape
    T: float = 1.0
    detuning: float = 0.0
    statistics: object = field(default_factory=Fock)
    table: CustomTable | None = None

    def __post_init__(self):
        object.__setattr__(self, "shape", Shape(self.shape))
        if self.shape is not Shape.CUSTOM and not self.T > 0:
            raise ValueError(f"pulse duration must be positive, got {self.T}")
        if self.shape is Shape.CUSTOM and self.table is None:
            raise ValueError("custom pulse needs a table")
        if not isinstance(self.statistics, (Fock, Coherent)):
            raise TypeError("statistics must be Fock or Coherent")

    @property
    def hard_edge(self):
        """Time of the envelope's discontinuity, if any."""
        return 0.0 if self.shape in (Shape.RISING, Shape.DECAYING) else None


def envelope(pulse: PulseSpec, t):
    """Complex envelope ``F_t`` at times ``t``."""
    t = np.asarray(t, float)
    T, D = pulse.T, pulse.detuning
    if pulse.shape is Shape.GAUSSIAN:
        out = (2 * np.pi * T**2) ** -0.25 * np.exp(-t**2 / (4 * T**2) - 1j * D * t)
    elif pulse.shape is Shape.RISING:
        arg = np.where(t <= 0, t, 0.0)
        out = np.where(t <= 0, T**-0.5 * np.exp(arg / (2 * T) - 1j * D * arg), 0j)
    elif pulse.shape is Shape.DECAYING:
        arg = np.where(t >= 0, t, 0.0)
        out = np.where(t >= 0, T**-0.5 * np.exp(-arg / (2 * T) - 1j * D * arg), 0j)
    else:
        out = pulse.table.interpolant()(t) * np.exp(-1j * D * t)
    return out[()] if out.ndim == 0 else out


def effective_support(pulse: PulseSpec, eps: float = SUPPORT_EPS):
    """Smallest interval outside which ``|F|^2 < eps * max |F|^2``."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    T = pulse.T
    if pulse.shape is Shape.GAUSSIAN:
        half = T * np.sqrt(2 * np.log(1 / eps))
        return -half, half
    if pulse.shape is Shape.RISING:
        return T * np.log(eps), 0.0
    if pulse.shape is Shape.DECAYING:
        return 0.0, -T * np.log(eps)
    tab = pulse.table
    mag2 = np.abs(tab.values) ** 2
    keep = np.nonzero(mag2 >= eps * mag2.max())[0]
    return float(tab.t[keep[0]]), float(tab.t[keep[-1]])


def normalization_check(pulse: PulseSpec) -> float:
    """``|int |F_t|^2 dt - 1|`` by adaptive quadrature over the support."""
    if pulse.shape is Shape.CUSTOM:
        f = pulse.table.interpolant()
        lo, hi = pulse.table.t[0], pulse.table.t[-1]
        pts = pulse.table.t[1:-1] if pulse.table.t.size < 50 else None
        val, _ = integrate.quad(lambda t: abs(f(t)) ** 2, lo, hi, points=pts, limit=2000,
                                epsabs=0, epsrel=1e-12)
        return abs(val - 1)
    lo, hi = effective_support(pulse, 1e-30)
    val, _ = integrate.quad(lambda t: abs(envelope(pulse, t)) ** 2, lo, hi,
                            epsabs=0, epsrel=1e-13, limit=500)
    return abs(val - 1)


def tabulate(pulse: PulseSpec, t) -> CustomTable:
    """Sample an analytic envelope (at zero detuning) into a custom table."""
    base = PulseSpec(pulse.shape, pulse.T, 0.0, pulse.statistics)
    return CustomTable(np.asarray(t, float), envelope(base, t))
