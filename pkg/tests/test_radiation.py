import warnings

import numpy as np
import pytest

from chiralfiber.radiation import TruncationWarning, auto_lmax, radiation_rate

KA = 2 * np.pi * 200 / 852


@pytest.mark.parametrize("u", [(1, 0, 0), (0, 1, 0), (0, 0, 1), (1j / np.sqrt(2), 0, -1 / np.sqrt(2))])
def test_free_space_limit(u):
    # no index contrast: the "radiation modes" are plane waves and gamma_r = gamma0
    g = radiation_rate(1.0, 1.0, KA, 1.3 * KA, np.array(u, complex))
    assert abs(g - 1) < 1e-5


def test_positive_and_far_field():
    u = np.array([1j, 0, -1]) / np.sqrt(2)
    near = radiation_rate(1.45, 1.0, KA, KA, u)
    far = radiation_rate(1.45, 1.0, KA, 10 * KA, u)
    assert near > 0 and far > 0
    assert 0.95 <= far <= 1.05


def test_orders_are_nonnegative():
    u = np.array([1j, 0, -1]) / np.sqrt(2)
    total, parts = radiation_rate(1.45, 1.0, KA, 1.5 * KA, u, full_output=True)
    assert min(parts.values()) > -1e-12
    assert abs(sum(parts.values()) - total) < 1e-12


def test_truncation_warning_for_too_few_orders():
    u = np.array([1, 0, 0], complex)
    with pytest.warns(TruncationWarning):
        radiation_rate(1.45, 1.0, KA, 10 * KA, u, lmax=2)
    with warnings.catch_warnings():
        warnings.simplefilter("error", TruncationWarning)
        radiation_rate(1.45, 1.0, KA, 10 * KA, u)


def test_auto_lmax_grows_with_radius():
    assert auto_lmax(1.0, 0.1) == 11
    assert auto_lmax(1.0, 20.0) > auto_lmax(1.0, 5.0)


def test_atom_inside_rejected():
    with pytest.raises(ValueError):
        radiation_rate(1.45, 1.0, KA, 0.5 * KA, np.array([1, 0, 0], complex))
