"""HE11 guided mode of a two-layer step-index cylinder.

Everything here is SI (metres, rad/s).  Mode functions follow the usual
quasicircular convention: for direction ``f`` and circulation ``p`` the
profile is ``e_r r + p e_phi phi + f e_z z`` times ``exp(i(f beta z + p phi))``,
with ``e_r`` imaginary and ``e_phi``, ``e_z`` real.  The amplitude is fixed
by ``int n(r)^2 |e|^2 dA = 1`` over the whole transverse plane.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import integrate, optimize
from scipy.constants import c as C_LIGHT
from scipy.special import jv, kv

from .specfun import bessel_j, bessel_k

#: First zero of J_0; single-mode cutoff of a step-index fiber.
SINGLE_MODE_CUTOFF = 2.404825557695773

SCAN_POINTS = 2000
EDGE = 1e-9


class ModeSolverError(RuntimeError):
    pass


class NoRootError(ModeSolverError):
    pass


class MultiRootError(ModeSolverError):
    pass


@dataclass(frozen=True)
class FiberSpec:
    """Step-index fiber: radius ``a`` in metres, core and cladding indices."""

    a: float
    n1: float
    n2: float = 1.0

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError(f"fiber radius must be positive, got {self.a}")
        if not self.n2 >= 1:
            raise ValueError(f"cladding index must be >= 1, got {self.n2}")
        if not self.n1 >= self.n2:
            raise ValueError(f"need n1 >= n2, got n1={self.n1}, n2={self.n2}")

    def index(self, r):
        return np.where(np.asarray(r) < self.a, self.n1, self.n2)


@dataclass(frozen=True)
class ModeSolution:
    omega: float
    beta: float
    beta1: float  # d beta / d omega
    V: float
    h: float
    q: float
    s: float
    fiber: FiberSpec = field(repr=False)

    @property
    def k(self) -> float:
        return self.omega / C_LIGHT

    @property
    def group_velocity(self) -> float:
        return 1.0 / self.beta1

    @property
    def group_index(self) -> float:
        return C_LIGHT * self.beta1

    @property
    def neff(self) -> float:
        return self.beta / self.k

    @cached_property
    def amplitude(self) -> float:
        """Normalisation constant of the profile (see :func:`normalize_profile`)."""
        return normalize_profile(self)


def v_number(fiber: FiberSpec, omega: float) -> float:
    """Normalised frequency ``V = (omega a / c) sqrt(n1^2 - n2^2)``."""
    if not omega > 0:
        raise ValueError("omega must be positive")
    return omega * fiber.a / C_LIGHT * np.sqrt(fiber.n1**2 - fiber.n2**2)


def omega_from_wavelength(lam: float) -> float:
    return 2 * np.pi * C_LIGHT / lam


def hybrid_parameter(fiber: FiberSpec, k: float, beta: float) -> float:
    """The hybrid-mode parameter ``s`` for l = 1."""
    a = fiber.a
    ha = a * np.sqrt(fiber.n1**2 * k**2 - beta**2)
    qa = a * np.sqrt(beta**2 - fiber.n2**2 * k**2)
    j, jp = bessel_j(1, ha)
    kk, kp = bessel_k(1, qa)
    num = 1 / ha**2 + 1 / qa**2
    den = jp / (ha * j) + kp / (qa * kk)
    return num / den


def eigen_residual(fiber: FiberSpec, k: float, beta):
    """Residual of the l = 1 hybrid-mode dispersion relation.

    ``(J'/(hJ) + K'/(qK)) (n1^2 J'/(hJ) + n2^2 K'/(qK)) - (beta/k)^2 (1/h^2 + 1/q^2)^2``
    with all transverse wavenumbers scaled by ``a``.  Zero at guided-mode
    propagation constants.
    """
    beta = np.asarray(beta, dtype=float)
    a = fiber.a
    ha = a * np.sqrt(fiber.n1**2 * k**2 - beta**2)
    qa = a * np.sqrt(beta**2 - fiber.n2**2 * k**2)
    j, jp = bessel_j(1, ha)
    kk, kp = bessel_k(1, qa)
    fj = jp / (ha * j)
    fk = kp / (qa * kk)
    rhs = (beta / k) ** 2 * (1 / ha**2 + 1 / qa**2) ** 2
    return (fj + fk) * (fiber.n1**2 * fj + fiber.n2**2 * fk) - rhs


def _solve_beta(fiber: FiberSpec, k: float) -> float:
    if fiber.n1 <= fiber.n2 * (1 + 1e-12):
        raise NoRootError("no index contrast: the mode is not guided")
    lo = fiber.n2 * k * (1 + EDGE)
    hi = fiber.n1 * k * (1 - EDGE)
    grid = np.linspace(lo, hi, SCAN_POINTS)
    res = eigen_residual(fiber, k, grid)
    sign = np.sign(res)
    idx = np.nonzero(sign[:-1] * sign[1:] < 0)[0]
    # drop sign flips across poles (J_1(ha) = 0): the residual blows up there
    roots = []
    for i in idx:
        b = optimize.brentq(lambda x: eigen_residual(fiber, k, x),
                            grid[i], grid[i + 1], xtol=1e-300, rtol=1e-15,
                            maxiter=500)
        if abs(eigen_residual(fiber, k, b)) < 1e-6 * (1 + np.max(np.abs(res[i:i + 2]))):
            roots.append(b)
    if not roots:
        raise NoRootError(f"no HE11 root in ({lo:g}, {hi:g})")
    if len(roots) > 1:
        raise MultiRootError(f"{len(roots)} roots found; fiber is not single-mode")
    b = roots[0]
    # one Newton polish step with a numerical slope
    d = 1e-7 * b
    slope = (eigen_residual(fiber, k, b + d) - eigen_residual(fiber, k, b - d)) / (2 * d)
    if slope != 0:
        step = eigen_residual(fiber, k, b) / slope
        if abs(step) < d:
            b -= step
    return float(b)


def propagation_constant(fiber: FiberSpec, omega: float) -> float:
    return _solve_beta(fiber, omega / C_LIGHT)


def group_delay_derivative(fiber: FiberSpec, omega: float, rel_step: float = 1e-6) -> float:
    """``d beta / d omega`` by a centred difference, Richardson-extrapolated once."""
    h = rel_step * omega

    def central(step):
        return (propagation_constant(fiber, omega + step)
                - propagation_constant(fiber, omega - step)) / (2 * step)

    return (4 * central(h / 2) - central(h)) / 3


def solve_he11(fiber: FiberSpec, omega: float) -> ModeSolution:
    """Solve the fundamental mode at angular frequency ``omega``.

    Raises :class:`MultiRootError` when the fiber is not single mode and
    :class:`NoRootError` when nothing is guided.
    """
    V = v_number(fiber, omega)
    if V >= SINGLE_MODE_CUTOFF:
        raise MultiRootError(f"V = {V:.4f} >= {SINGLE_MODE_CUTOFF:.4f}: not single-mode")
    k = omega / C_LIGHT
    beta = _solve_beta(fiber, k)
    h = np.sqrt(fiber.n1**2 * k**2 - beta**2)
    q = np.sqrt(beta**2 - fiber.n2**2 * k**2)
    return ModeSolution(
        omega=omega,
        beta=beta,
        beta1=group_delay_derivative(fiber, omega),
        V=V,
        h=float(h),
        q=float(q),
        s=float(hybrid_parameter(fiber, k, beta)),
        fiber=fiber,
    )


def _raw_components(sol: ModeSolution, r):
    """Unnormalised (A = 1) quasicircular components for f = +1, p = +1."""
    fib = sol.fiber
    r = np.asarray(r, dtype=float)
    beta, h, q, s = sol.beta, sol.h, sol.q, sol.s
    inside = r < fib.a
    ri = np.where(inside, r, fib.a)
    ro = np.where(inside, fib.a, r)
    # inside the core
    j0, j1, j2 = jv(0, h * ri), jv(1, h * ri), jv(2, h * ri)
    er_in = 1j * beta / (2 * h) * ((1 - s) * j0 - (1 + s) * j2)
    ep_in = -beta / (2 * h) * ((1 - s) * j0 + (1 + s) * j2)
    ez_in = j1 + 0j
    # in the cladding
    ratio = jv(1, h * fib.a) / kv(1, q * fib.a)
    k0, k1, k2 = kv(0, q * ro), kv(1, q * ro), kv(2, q * ro)
    er_out = 1j * ratio * beta / (2 * q) * ((1 - s) * k0 + (1 + s) * k2)
    ep_out = -ratio * beta / (2 * q) * ((1 - s) * k0 - (1 + s) * k2)
    ez_out = ratio * k1 + 0j
    return (np.where(inside, er_in, er_out),
            np.where(inside, ep_in, ep_out),
            np.where(inside, ez_in, ez_out))


def normalize_profile(sol: ModeSolution, tail: float = 20.0, raw_scale: float = 1.0) -> float:
    """Constant ``A`` making ``2 pi int n^2 |e|^2 r dr = 1``.

    The raw profile (times ``raw_scale``) is integrated by adaptive quadrature
    split at ``r = a`` and truncated at ``a + tail/q``.
    """
    fib = sol.fiber

    def density(r):
        er, ep, ez = _raw_components(sol, r)
        n2 = fib.index(r) ** 2
        return raw_scale**2 * n2 * (abs(er) ** 2 + abs(ep) ** 2 + abs(ez) ** 2) * r

    core, err1 = integrate.quad(density, 0.0, fib.a, epsabs=0, epsrel=1e-12, limit=200)
    clad, err2 = integrate.quad(density, fib.a, fib.a + tail / sol.q,
                                epsabs=0, epsrel=1e-12, limit=200)
    total = 2 * np.pi * (core + clad)
    if not np.isfinite(total) or total <= 0 or (err1 + err2) > 1e-8 * (core + clad):
        raise ModeSolverError("profile normalisation quadrature did not converge")
    return 1.0 / np.sqrt(total)


def mode_profile_quasicircular(sol: ModeSolution, r, f: int = 1, p: int = 1):
    """Normalised components ``(e_r, p e_phi, f e_z)`` at radius ``r``.

    The azimuthal and axial phase ``exp(i(f beta z + p phi))`` is not included.
    """
    er, ep, ez = _raw_components(sol, r)
    A = sol.amplitude
    return A * er, p * A * ep, f * A * ez


def mode_profile_quasilinear(components, phi: float, phi_pol: float, f: int = 1, l: int = 1):
    """Quasilinear superposition in the cylindrical basis ``(r, phi, z)``.

    ``components`` are the quasicircular ``(e_r, e_phi, e_z)`` for ``f = p = +1``.
    """
    er, ep, ez = components
    cs = np.cos(l * phi - phi_pol)
    sn = np.sin(l * phi - phi_pol)
    return np.sqrt(2) * np.array([er * cs, 1j * ep * sn, f * ez * cs])
