import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, optimize

from chiralfiber.specfun import (DomainError, bessel_i, bessel_j, bessel_k, bessel_y,
                                 erf_complex, faddeeva, one_plus_erf)


def j0_series(x, terms=60):
    # power series, independent of scipy
    return sum((-1) ** m * (x / 2) ** (2 * m) / math.factorial(m) ** 2 for m in range(terms))


def erf_maclaurin(z, terms=80):
    s = sum((-1) ** n * z ** (2 * n + 1) / (math.factorial(n) * (2 * n + 1)) for n in range(terms))
    return 2 / math.sqrt(math.pi) * s


def test_j_at_origin():
    assert bessel_j(0, 0.0)[0] == 1.0
    assert bessel_j(1, 0.0)[0] == 0.0


def test_first_zero_of_j0_against_series_oracle():
    root = optimize.bisect(j0_series, 2.0, 3.0, xtol=1e-15)
    assert abs(root - 2.4048255577) < 1e-9
    assert abs(bessel_j(0, 2.4048255577)[0]) < 1e-9


def test_k1_against_integral_representation():
    oracle, _ = integrate.quad(lambda t: np.exp(-np.cosh(t)) * np.cosh(t), 0, 8.0,
                               epsabs=0, epsrel=1e-13)
    assert abs(bessel_k(1, 1.0)[0] - oracle) < 1e-12
    assert abs(oracle - 0.6019072302) < 1e-10


def test_k_asymptotic_and_recurrence():
    x = 40.0
    assert abs(bessel_k(0, x)[0] / (np.sqrt(np.pi / (2 * x)) * np.exp(-x)) - 1) < 1e-2
    x = 0.5
    k2 = bessel_k(0, x)[0] + 2 / x * bessel_k(1, x)[0]
    assert abs(bessel_k(2, x)[0] - k2) < 1e-10 * k2


@pytest.mark.parametrize("x", [1.0, 5.0, 10.0])
def test_wronskian(x):
    j0, j1 = bessel_j(0, x)[0], bessel_j(1, x)[0]
    y0, y1 = bessel_y(0, x)[0], bessel_y(1, x)[0]
    assert abs(j1 * y0 - j0 * y1 - 2 / (np.pi * x)) < 1e-10


def test_y0_zero_and_log_divergence():
    assert abs(bessel_y(0, 0.8935769663)[0]) < 1e-8
    xs = np.array([1e-1, 1e-3, 1e-6, 1e-9])
    vals = bessel_y(0, xs)[0]
    assert np.all(np.diff(vals) < 0) and vals[-1] < -10


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 6), x=st.floats(0.1, 30.0))
def test_recurrences(n, x):
    for fn in (bessel_j, bessel_y):
        lhs = fn(n - 1, x)[0] + fn(n + 1, x)[0]
        rhs = 2 * n / x * fn(n, x)[0]
        assert abs(lhs - rhs) <= 1e-10 * max(abs(rhs), abs(fn(n - 1, x)[0]), 1e-3)


@settings(max_examples=30, deadline=None)
@given(n=st.integers(0, 4), x=st.floats(0.05, 20.0))
def test_k_positive_decreasing_and_derivative(n, x):
    k, dk = bessel_k(n, x)
    assert k > 0 and dk < 0
    h = 1e-6 * x
    fd = (bessel_k(n, x + h)[0] - bessel_k(n, x - h)[0]) / (2 * h)
    assert abs(dk - fd) < 1e-6 * abs(dk)


def test_derivatives_by_finite_difference():
    x, h = 1.7, 1e-6
    for fn in (bessel_j, bessel_y, bessel_i):
        fd = (fn(1, x + h)[0] - fn(1, x - h)[0]) / (2 * h)
        assert abs(fn(1, x)[1] - fd) < 1e-8


def test_domain_errors():
    with pytest.raises(DomainError):
        bessel_j(0, -1.0)
    with pytest.raises(DomainError):
        bessel_k(0, 0.0)
    with pytest.raises(DomainError):
        bessel_y(1, 0.0)


def test_erf_values():
    assert erf_complex(0) == 0
    assert abs(erf_complex(1.0) - erf_maclaurin(1.0)) < 1e-14
    assert abs(erf_maclaurin(1.0) - 0.8427007929) < 1e-10
    z = 0.5 + 0.5j
    assert abs(erf_complex(np.conj(z)) - np.conj(erf_complex(z))) < 1e-15
    assert abs(erf_complex(z) - erf_maclaurin(z)) < 1e-14


def test_erf_guard():
    with pytest.raises(OverflowError):
        erf_complex(1 + 40j)


@settings(max_examples=50, deadline=None)
@given(re=st.floats(-3, 3), im=st.floats(-3, 3))
def test_erf_odd_and_series(re, im):
    z = complex(re, im)
    assert abs(erf_complex(-z) + erf_complex(z)) < 1e-14 * max(1, abs(erf_complex(z)))
    assert abs(erf_complex(z) - erf_maclaurin(z, 120)) < 1e-9 * max(1, abs(erf_maclaurin(z, 120)))


def test_one_plus_erf_deep_left_half_plane():
    # 1 + erf(-6) = erfc(6), far below double-precision cancellation
    ls, rest = one_plus_erf(-6.0 + 0.0j)
    assert abs(np.exp(ls) * rest - math.erfc(6.0)) < 1e-14 * math.erfc(6.0)
    ls, rest = one_plus_erf(np.array([0.3 + 0.2j, -0.3 - 0.2j]))
    direct = 1 + erf_complex(np.array([0.3 + 0.2j, -0.3 - 0.2j]))
    assert np.allclose(np.exp(ls) * rest, direct, rtol=1e-13)


def test_faddeeva_on_imaginary_axis():
    # w(iy) = exp(y^2) erfc(y)
    y = 1.3
    assert abs(faddeeva(1j * y) - math.exp(y * y) * math.erfc(y)) < 1e-14
