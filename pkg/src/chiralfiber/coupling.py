"""Chiral coupling of an atom to the HE11 mode and the resulting decay rates.

Rates are reported in units of the free-space linewidth ``gamma0``; coupling
coefficients ``G`` in units of ``sqrt(gamma0)`` so that ``gamma_L = 2 pi |G_L|^2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.constants import c as C_LIGHT, epsilon_0, hbar

from . import radiation
from .fiber_modes import (FiberSpec, ModeSolution, mode_profile_quasicircular,
                          mode_profile_quasilinear, omega_from_wavelength)

ROUTE_TOL = 1e-12

# sigma_+ dipole rotating in the zx plane, (i x - z)/sqrt(2)
DEFAULT_DIPOLE = (1j / np.sqrt(2), 0.0, -1 / np.sqrt(2))


class CouplingRouteMismatch(RuntimeError):
    """The two constructions of the quasilinear coupling disagree."""


class UndefinedAsymmetry(ZeroDivisionError):
    pass


@dataclass(frozen=True)
class AtomSpec:
    """Two-level atom outside the fiber.

    ``dipole`` is a complex unit vector in Cartesian components; ``r`` (metres),
    ``phi`` (radians) and ``z`` (metres) give its cylindrical position.
    """

    wavelength: float
    gamma0: float
    dipole: tuple = DEFAULT_DIPOLE
    r: float = 200e-9
    phi: float = 0.0
    z: float = 0.0

    def __post_init__(self):
        if not (self.wavelength > 0 and self.gamma0 > 0):
            raise ValueError("wavelength and gamma0 must be positive")
        d = np.asarray(self.dipole, complex)
        if d.shape != (3,):
            raise ValueError("dipole must have three components")
        norm = np.vdot(d, d).real
        if abs(norm - 1) > 1e-9:
            raise ValueError(f"dipole direction must be a unit vector, |d|^2 = {norm}")
        object.__setattr__(self, "dipole", tuple(complex(x) for x in d))

    @property
    def omega(self) -> float:
        return omega_from_wavelength(self.wavelength)

    def dipole_cylindrical(self) -> np.ndarray:
        dx, dy, dz = self.dipole
        c, s = np.cos(self.phi), np.sin(self.phi)
        return np.array([dx * c + dy * s, -dx * s + dy * c, dz])

    def check_outside(self, fiber: FiberSpec):
        if self.r < fiber.a * (1 - 1e-12):
            raise ValueError(f"atom at r={self.r:g} m lies inside the fiber (a={fiber.a:g} m)")


def dipole_magnitude(atom: AtomSpec) -> float:
    """Dipole matrix element (C m) reproducing the free-space linewidth."""
    w0 = atom.omega
    return np.sqrt(3 * np.pi * epsilon_0 * hbar * C_LIGHT**3 * atom.gamma0 / w0**3)


def _prefactor(atom: AtomSpec, sol: ModeSolution) -> float:
    # sqrt(omega beta' / 4 pi eps0 hbar) * d, then scaled to sqrt(gamma0)
    d = dipole_magnitude(atom)
    return np.sqrt(atom.omega * sol.beta1 / (4 * np.pi * epsilon_0 * hbar)) * d / np.sqrt(atom.gamma0)


def coupling_quasicircular(atom: AtomSpec, sol: ModeSolution, f: int, p: int) -> complex:
    """Coupling to the quasicircular mode ``(f, p)``, in units of sqrt(gamma0)."""
    e = np.array(mode_profile_quasicircular(sol, atom.r, f=f, p=p), complex)
    u = atom.dipole_cylindrical()
    phase = np.exp(1j * (f * sol.beta * atom.z + p * atom.phi))
    return complex(_prefactor(atom, sol) * (u @ e) * phase)


def coupling_quasilinear(atom: AtomSpec, sol: ModeSolution, f: int, phi_pol: float = 0.0) -> complex:
    """Coupling to the quasilinear mode with polarisation angle ``phi_pol``.

    Computed from the quasilinear profile directly and cross-checked against
    the superposition of the two quasicircular couplings.
    """
    comps = mode_profile_quasicircular(sol, atom.r)
    e = mode_profile_quasilinear(comps, atom.phi, phi_pol, f=f)
    u = atom.dipole_cylindrical()
    direct = _prefactor(atom, sol) * (u @ e) * np.exp(1j * f * sol.beta * atom.z)
    via_circ = (np.exp(-1j * phi_pol) * coupling_quasicircular(atom, sol, f, +1)
                + np.exp(1j * phi_pol) * coupling_quasicircular(atom, sol, f, -1)) / np.sqrt(2)
    scale = max(abs(direct), abs(via_circ), 1e-300)
    if abs(direct - via_circ) > ROUTE_TOL * max(scale, _prefactor(atom, sol) * np.max(np.abs(comps))):
        raise CouplingRouteMismatch(f"{direct} vs {via_circ}")
    return complex(direct)


def coupling_even_odd_magnitudes(atom: AtomSpec, sol: ModeSolution, f: int):
    """``|G_L|`` for the even (phi_pol = 0) and odd (phi_pol = pi/2) modes, atom at phi = 0."""
    er, ep, ez = mode_profile_quasicircular(sol, atom.r)
    dx, dy, dz = atom.dipole
    pre = _prefactor(atom, sol) * np.sqrt(2)
    return abs(pre * (dx * er + f * dz * ez)), abs(pre * dy * ep)


def gamma_guided_directional(atom: AtomSpec, sol: ModeSolution):
    """Decay rates ``(gamma_g(+), gamma_g(-))`` into the HE11 modes of each direction."""
    out = []
    for f in (1, -1):
        out.append(sum(2 * np.pi * abs(coupling_quasicircular(atom, sol, f, p)) ** 2 for p in (1, -1)))
    return tuple(out)


def gamma_radiation(atom: AtomSpec, fiber: FiberSpec, backend: str = "exact", lmax=None) -> float:
    """Decay rate into radiation modes, units of gamma0.

    ``backend="approx"`` returns the free-space value 1.
    """
    if backend == "approx":
        return 1.0
    if backend != "exact":
        raise ValueError(f"unknown radiation backend {backend!r}")
    atom.check_outside(fiber)
    k = 2 * np.pi / atom.wavelength
    return radiation.radiation_rate(fiber.n1, fiber.n2, k * fiber.a, k * atom.r,
                                    atom.dipole_cylindrical(), lmax=lmax)


@dataclass(frozen=True)
class RateBundle:
    """Decay and coupling rates at one atom position, in units of gamma0."""

    gamma: float
    gamma_r: float
    gamma_g_plus: float
    gamma_g_minus: float
    gamma_L_plus: float
    gamma_L_minus: float
    G_L_plus: complex
    G_L_minus: complex
    gamma0: float = field(default=1.0, repr=False)
    backend: str = "exact"

    def gamma_g(self, f: int) -> float:
        return self.gamma_g_plus if f > 0 else self.gamma_g_minus

    def gamma_L(self, f: int) -> float:
        return self.gamma_L_plus if f > 0 else self.gamma_L_minus

    def G_L(self, f: int) -> complex:
        return self.G_L_plus if f > 0 else self.G_L_minus

    def eta_L(self, f: int) -> float:
        return self.gamma_L(f) / self.gamma

    @property
    def eta_asym(self) -> float:
        tot = self.gamma_L_plus + self.gamma_L_minus
        if tot == 0:
            raise UndefinedAsymmetry("gamma_L(+) + gamma_L(-) = 0")
        return (self.gamma_L_plus - self.gamma_L_minus) / tot

    def channel(self, f: int) -> "Channel":
        return Channel(gamma=self.gamma, G_L=self.G_L(f), gamma_fw=self.gamma_g(f),
                       gamma_bw=self.gamma_g(-f), gamma_r=self.gamma_r)

    def raw(self, name: str) -> float:
        """A rate in rad/s."""
        return getattr(self, name) * self.gamma0


@dataclass(frozen=True)
class Channel:
    """Rates seen by a probe travelling in one direction (units of gamma0)."""

    gamma: float
    G_L: complex
    gamma_fw: float
    gamma_bw: float
    gamma_r: float

    @property
    def gamma_L(self) -> float:
        return 2 * np.pi * abs(self.G_L) ** 2

    @property
    def eta_L(self) -> float:
        return self.gamma_L / self.gamma

    @classmethod
    def simple(cls, gamma: float, G_L: complex, gamma_fw=None, gamma_bw: float = 0.0):
        """A channel with the guided forward rate equal to gamma_L by default."""
        gL = 2 * np.pi * abs(G_L) ** 2
        fw = gL if gamma_fw is None else gamma_fw
        return cls(gamma=gamma, G_L=G_L, gamma_fw=fw, gamma_bw=gamma_bw,
                   gamma_r=gamma - fw - gamma_bw)


def rate_bundle(atom: AtomSpec, fiber: FiberSpec, sol: ModeSolution, phi_pol: float = 0.0,
                backend: str = "exact", lmax=None) -> RateBundle:
    atom.check_outside(fiber)
    gp, gm = gamma_guided_directional(atom, sol)
    gr = gamma_radiation(atom, fiber, backend=backend, lmax=lmax)
    Gp = coupling_quasilinear(atom, sol, +1, phi_pol)
    Gm = coupling_quasilinear(atom, sol, -1, phi_pol)
    return RateBundle(
        gamma=gr + gp + gm,
        gamma_r=gr,
        gamma_g_plus=gp,
        gamma_g_minus=gm,
        gamma_L_plus=2 * np.pi * abs(Gp) ** 2,
        gamma_L_minus=2 * np.pi * abs(Gm) ** 2,
        G_L_plus=Gp,
        G_L_minus=Gm,
        gamma0=atom.gamma0,
        backend=backend,
    )
