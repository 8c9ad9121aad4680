"""Spontaneous emission into the radiation modes of a step-index fiber.

Radiation modes are labelled by ``(beta, l, polarisation)`` with
``|beta| < k n2``.  For each ``(beta, l)`` the four interface conditions at
``r = a`` leave a two-dimensional solution space; the rate only needs the
trace of the dipole projector over that space, so no explicit polarisation
basis is chosen.  Modes are normalised per unit frequency at fixed ``beta``,
which in dimensionless units (lengths times ``k``) gives

    gamma_r / gamma_0 = 3/8 * sum_l  int dbeta  q^2  u^T F M^-1 F^H u*

with ``F`` the field at the atom per unit interior amplitude and ``M`` the
Gram matrix of the far-field amplitudes.
"""

from __future__ import annotations

import warnings

import numpy as np
from scipy import integrate
from scipy.special import jv, jvp, yv, yvp

DEFAULT_LMAX = 10


class RadiationQuadratureError(RuntimeError):
    pass


class TruncationWarning(UserWarning):
    pass


def transverse_fields(n, beta, kappa, l, rho, a_z, b_z, Z, dZ):
    """Transverse components from the axial ones in a homogeneous layer.

    Dimensionless units: ``rho = k r``, ``beta``/``kappa`` divided by ``k``,
    ``b_z`` is the impedance-scaled H_z amplitude.  ``Z`` and ``dZ`` are the
    radial function and its derivative evaluated at ``kappa rho``.  Returns
    ``(E_r, E_phi, E_z, H_r, H_phi, H_z)`` for fields ``~ exp(i(beta z + l phi - omega t))``.
    """
    pre = 1j / kappa**2
    Ez = a_z * Z
    Hz = b_z * Z
    Er = pre * (beta * kappa * a_z * dZ + 1j * l / rho * b_z * Z)
    Ep = pre * (1j * beta * l / rho * a_z * Z - kappa * b_z * dZ)
    Hr = pre * (beta * kappa * b_z * dZ - 1j * n**2 * l / rho * a_z * Z)
    Hp = pre * (1j * beta * l / rho * b_z * Z + n**2 * kappa * a_z * dZ)
    return Er, Ep, Ez, Hr, Hp, Hz


def _exterior_map(n1, n2, rho_a, beta, l):
    """Map interior amplitudes ``(a, b)`` to exterior ``(cJ, cY, dJ, dY)``.

    ``beta`` and ``l`` broadcast; returns an array of shape ``(..., 4, 2)``.
    """
    beta, l = np.broadcast_arrays(np.asarray(beta, float), np.asarray(l, float))
    h = np.sqrt(n1**2 - beta**2)
    q = np.sqrt(n2**2 - beta**2)
    xi, xo = h * rho_a, q * rho_a
    J, dJ = jv(l, xi), jvp(l, xi)
    Jo, dJo = jv(l, xo), jvp(l, xo)
    Yo, dYo = yv(l, xo), yvp(l, xo)
    il = 1j * beta * l / rho_a

    shape = beta.shape
    L = np.zeros(shape + (4, 4), complex)
    R = np.zeros(shape + (4, 2), complex)
    # E_z continuity
    L[..., 0, 0], L[..., 0, 1] = Jo, Yo
    R[..., 0, 0] = J
    # H_z continuity
    L[..., 1, 2], L[..., 1, 3] = Jo, Yo
    R[..., 1, 1] = J
    # E_phi continuity (common factor i dropped)
    L[..., 2, 0], L[..., 2, 1] = il * Jo / q**2, il * Yo / q**2
    L[..., 2, 2], L[..., 2, 3] = -dJo / q, -dYo / q
    R[..., 2, 0] = il * J / h**2
    R[..., 2, 1] = -dJ / h
    # H_phi continuity
    L[..., 3, 2], L[..., 3, 3] = il * Jo / q**2, il * Yo / q**2
    L[..., 3, 0], L[..., 3, 1] = n2**2 * dJo / q, n2**2 * dYo / q
    R[..., 3, 1] = il * J / h**2
    R[..., 3, 0] = n1**2 * dJ / h
    return np.linalg.solve(L, R)


def _integrand(n1, n2, rho_a, rho, u_cyl, beta, ls):
    """``q^2 u^T F M^-1 F^H u*`` for every order in ``ls`` at one ``beta``."""
    q = np.sqrt(n2**2 - beta**2)
    T = _exterior_map(n1, n2, rho_a, beta, ls)  # (nl, 4, 2)
    x = q * rho
    Jr, dJr = jv(ls, x), jvp(ls, x)
    Yr, dYr = yv(ls, x), yvp(ls, x)
    cJ, cY, dJc, dYc = T[:, 0], T[:, 1], T[:, 2], T[:, 3]  # each (nl, 2)
    l2 = ls[:, None]
    f1 = transverse_fields(n2, beta, q, l2, rho, cJ, dJc, Jr[:, None], dJr[:, None])
    f2 = transverse_fields(n2, beta, q, l2, rho, cY, dYc, Yr[:, None], dYr[:, None])
    F = np.stack([f1[0] + f2[0], f1[1] + f2[1], f1[2] + f2[2]], axis=1)  # (nl, 3, 2)
    W = np.array([n2**2, n2**2, 1.0, 1.0]) / 2
    M = np.einsum("lia,i,lib->lab", T.conj(), W, T)
    w = np.einsum("i,lia->la", u_cyl, F)  # (nl, 2)
    val = np.einsum("la,lab,lb->l", w, np.linalg.inv(M), w.conj()).real
    val = np.where(np.isfinite(val), val, 0.0)
    return q**2 * val


def auto_lmax(n2: float, rho: float) -> int:
    return max(DEFAULT_LMAX, int(np.ceil(n2 * rho)) + 10)


def radiation_rate(n1, n2, ka, kr, u_cyl, lmax=None, epsrel=1e-6, full_output=False):
    """Radiation-mode decay rate in units of the free-space rate.

    ``ka`` and ``kr`` are the fiber radius and atom radius times the free-space
    wavenumber; ``u_cyl`` is the unit dipole in the cylindrical basis at the
    atom.  ``beta = n2 sin(theta)`` removes the square-root edges at
    ``|beta| = n2``.  Orders ``-lmax..lmax`` are summed; ``lmax=None`` picks
    enough orders for the atom radius.
    """
    if kr < ka:
        raise ValueError("atom must sit outside the fiber")
    if lmax is None:
        lmax = auto_lmax(n2, kr)
    ls = np.arange(-lmax, lmax + 1, dtype=float)
    u = np.asarray(u_cyl, complex)

    def f(theta):
        beta = n2 * np.sin(theta)
        return n2 * np.cos(theta) * _integrand(n1, n2, ka, kr, u, beta, ls)

    vals, err = integrate.quad_vec(f, -np.pi / 2, np.pi / 2, epsrel=epsrel, epsabs=0,
                                   norm="max", limit=500)
    total = 0.375 * vals.sum()
    if not np.isfinite(total) or err > 10 * epsrel * max(np.max(np.abs(vals)), 1e-300):
        raise RadiationQuadratureError(f"beta integral failed to converge (err={err:g})")
    tail = 0.375 * (vals[0] + vals[1] + vals[-1] + vals[-2])
    if abs(tail) > 1e-4 * abs(total):
        warnings.warn(f"l_max={lmax} truncation: last two orders carry "
                      f"{abs(tail / total):.2e} of the rate", TruncationWarning)
    if full_output:
        return total, dict(zip(ls.astype(int), 0.375 * vals))
    return total
