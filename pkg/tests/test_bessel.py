"""The production J1 (series + asymptotic) is checked against a slow
arbitrary-precision power-series oracle."""

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sonocaustics.field import bessel_j1, directivity

mpmath.mp.dps = 40


def j1_oracle(x: float) -> float:
    """Power series summed in arbitrary precision until it stops moving."""
    x = mpmath.mpf(x)
    half = x / 2
    term = half
    total = term
    k = 0
    while True:
        k += 1
        term = -term * half * half / (k * (k + 1))
        new = total + term
        if new == total:
            return float(total)
        total = new


def test_odd_at_zero():
    assert bessel_j1(0.0) == 0.0


def test_global_maximum():
    assert bessel_j1(1.8412) == pytest.approx(0.5819, abs=1e-4)
    assert bessel_j1(1.8412) == pytest.approx(j1_oracle(1.8412), rel=1e-12)


def test_first_positive_root():
    assert abs(bessel_j1(3.8317)) < 1e-4


def test_accuracy_against_series_oracle():
    xs = np.linspace(-50.0, 50.0, 2001)
    ref = np.array([j1_oracle(x) for x in xs])
    got = bessel_j1(xs)
    err = np.abs(got - ref)
    # Relative where the function is not near a zero, absolute at the zeros.
    big = np.abs(ref) > 1e-3
    assert np.all(err[big] / np.abs(ref[big]) < 1e-10)
    assert np.all(err[~big] < 1e-10)


@given(st.floats(min_value=1e-6, max_value=50.0))
@settings(max_examples=50, deadline=None)
def test_odd_function(x):
    assert bessel_j1(-x) == -bessel_j1(x)


def test_directivity_limit_is_exact():
    assert directivity(0.0, 726.38, 0.005) == 1.0


def test_directivity_even():
    k, r = 726.38, 0.005
    for theta in (0.1, 0.5, 1.2):
        assert directivity(-theta, k, r) == pytest.approx(directivity(theta, k, r), rel=1e-14)


def test_directivity_zero_at_first_root():
    # k*r must exceed the first J1 root for the null to be reachable
    k, r = 726.38, 0.010
    theta = np.arcsin(3.8317 / (k * r))
    assert abs(directivity(theta, k, r)) < 1e-4


def test_directivity_bounded():
    k, r = 726.38, 0.005
    thetas = np.linspace(-np.pi / 2, np.pi / 2, 2001)
    assert np.all(np.abs(directivity(thetas, k, r)) <= 1.0)
