"""Special-function kernels used by the mode solver and the analytic dynamics.

Bessel functions of integer order and real argument come from
:mod:`scipy.special`; derivatives are formed from the recurrence identities
rather than by differencing.  The complex error function is built on the
Faddeeva function ``w(z) = exp(-z**2) erfc(-i z)``.
"""

from __future__ import annotations

import numpy as np
from scipy import special

#: Largest |Im z| accepted by :func:`erf_complex`.
ERF_IM_GUARD = 30.0


class DomainError(ValueError):
    """Argument outside the domain of a special function."""


def _check_nonneg(x, strict: bool, name: str):
    x = np.asarray(x, dtype=float)
    bad = (x <= 0) if strict else (x < 0)
    if np.any(bad) or np.any(~np.isfinite(x)):
        rel = ">" if strict else ">="
        raise DomainError(f"{name} requires x {rel} 0, got {x!r}")
    return x


def bessel_j(n: int, x):
    """Return ``(J_n(x), J_n'(x))`` for integer ``n`` and ``x >= 0``."""
    x = _check_nonneg(x, False, "bessel_j")
    val = special.jv(n, x)
    der = 0.5 * (special.jv(n - 1, x) - special.jv(n + 1, x))
    return val, der


def bessel_y(n: int, x):
    """Return ``(Y_n(x), Y_n'(x))`` for integer ``n`` and ``x > 0``."""
    x = _check_nonneg(x, True, "bessel_y")
    val = special.yv(n, x)
    der = 0.5 * (special.yv(n - 1, x) - special.yv(n + 1, x))
    return val, der


def bessel_k(n: int, x):
    """Return ``(K_n(x), K_n'(x))`` for integer ``n`` and ``x > 0``."""
    x = _check_nonneg(x, True, "bessel_k")
    val = special.kv(n, x)
    der = -0.5 * (special.kv(n - 1, x) + special.kv(n + 1, x))
    return val, der


def bessel_i(n: int, x):
    """Return ``(I_n(x), I_n'(x))`` for integer ``n`` and ``x >= 0``."""
    x = _check_nonneg(x, False, "bessel_i")
    val = special.iv(n, x)
    der = 0.5 * (special.iv(n - 1, x) + special.iv(n + 1, x))
    return val, der


def faddeeva(z):
    """Faddeeva function ``w(z) = exp(-z**2) erfc(-iz)``."""
    return special.wofz(np.asarray(z, dtype=complex))


def erf_complex(z):
    """Error function of a complex argument.

    Uses ``erf(z) = 1 - exp(-z**2) w(iz)`` in the right half-plane and odd
    symmetry in the left half-plane, so that ``w`` is only ever evaluated in
    the upper half-plane where it is bounded.
    """
    z = np.asarray(z, dtype=complex)
    if np.any(np.abs(z.imag) > ERF_IM_GUARD):
        raise OverflowError(f"|Im z| exceeds {ERF_IM_GUARD}")
    sign = np.where(z.real < 0, -1.0, 1.0)
    zz = sign * z
    out = sign * (1.0 - np.exp(-zz * zz) * special.wofz(1j * zz))
    # erf is real on the real axis; drop round-off imaginary parts there
    out = np.where(z.imag == 0, out.real + 0j, out)
    return out[()] if out.ndim == 0 else out


def one_plus_erf(z):
    """Return ``(log_scale, rest)`` with ``1 + erf(z) = exp(log_scale) * rest``.

    For ``Re z < 0`` the sum cancels catastrophically; there
    ``1 + erf(z) = erfc(-z) = exp(-z**2) w(-iz)`` and the exponential is
    returned separately so callers can merge it with their own prefactors.
    """
    z = np.asarray(z, dtype=complex)
    left = z.real < 0
    log_scale = np.where(left, -(z * z), 0.0 + 0.0j)
    rest = np.where(left, special.wofz(-1j * z), 0.0j)
    if np.any(~left):
        rest = np.where(left, rest, 1.0 + erf_complex(np.where(left, 0.0, z)))
    return log_scale, rest
