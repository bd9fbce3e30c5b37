import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hardedge.errors import DivergenceError, DomainError
from hardedge.specfun import bessel_j, bessel_j_prime, laguerre, ln_gamma, rising_factorial


def mp_bessel_series(nu, x, terms=80, dps=60):
    """Ascending series summed in big-float arithmetic."""
    with mpmath.workdps(dps):
        nu, x = mpmath.mpf(nu), mpmath.mpf(x)
        tot = mpmath.mpf(0)
        for k in range(terms):
            tot += (-1) ** k * (x / 2) ** (nu + 2 * k) / (mpmath.factorial(k) * mpmath.gamma(nu + k + 1))
        return float(tot)


def test_bessel_zero_order_at_origin():
    assert bessel_j(0, 0.0) == 1.0


def test_bessel_half_order_vanishes_at_pi():
    assert abs(bessel_j(0.5, math.pi)) < 1e-15


@pytest.mark.parametrize("nu,x", [(1, 2.0), (0, 7.5), (2.5, 12.0), (-3.3, 4.0), (4, 30.0), (1.7, 45.0)])
def test_bessel_against_bigfloat_series(nu, x):
    assert abs(bessel_j(nu, x) - mp_bessel_series(nu, x, terms=120, dps=80)) < 1e-13


def test_bessel_half_integer_closed_form():
    x = np.linspace(0.1, 40, 50)
    ref = np.sqrt(2 / (np.pi * x)) * (np.sin(x) / x - np.cos(x))
    assert np.max(np.abs(bessel_j(1.5, x) - ref)) < 1e-13


def test_bessel_negative_integer_order():
    assert bessel_j(-3, 2.2) == pytest.approx(-bessel_j(3, 2.2), abs=1e-15)


def test_bessel_domain_errors():
    with pytest.raises(DomainError):
        bessel_j(1, -0.1)
    with pytest.raises(DivergenceError):
        bessel_j(-0.5, 0.0)
    with pytest.raises(DomainError):
        bessel_j(float("nan"), 1.0)
    with pytest.raises(DomainError):
        bessel_j(-5.0, 1.0)


def test_bessel_prime_small_argument():
    x = 1e-4
    assert bessel_j_prime(0, x) == pytest.approx(-x / 2, rel=1e-8)


def test_bessel_prime_against_richardson_difference():
    def d(h):
        return (mp_bessel_series(1, 2 + h) - mp_bessel_series(1, 2 - h)) / (2 * h)

    ref = (4 * d(1e-3) - d(2e-3)) / 3
    assert bessel_j_prime(1, 2.0) == pytest.approx(ref, abs=1e-9)


def test_bessel_prime_recurrence_identity():
    nu, x = 1.5, 1.0
    # J'_nu = J_{nu-1} - (nu/x) J_nu
    assert bessel_j_prime(nu, x) == pytest.approx(bessel_j(nu - 1, x) - nu / x * bessel_j(nu, x), abs=1e-14)


def test_bessel_prime_domain():
    with pytest.raises(DomainError):
        bessel_j_prime(1, 0.0)


@settings(max_examples=1000, deadline=None)
@given(st.floats(-3.99, 10), st.floats(0.01, 50))
def test_bessel_three_term_recurrence(nu, x):
    lhs = 2 * nu / x * bessel_j(nu, x)
    jm, jp = bessel_j(nu - 1, x), bessel_j(nu + 1, x)
    # negative orders grow like x^nu near 0; the residual is relative to the terms
    assert abs(lhs - jm - jp) < 1e-11 * max(1.0, abs(lhs), abs(jm), abs(jp))


@settings(max_examples=100, deadline=None)
@given(st.floats(0.05, 3.95).filter(lambda v: abs(v - round(v)) > 1e-3), st.floats(0.5, 40))
def test_bessel_wronskian(nu, x):
    w = bessel_j(nu, x) * bessel_j_prime(-nu, x) - bessel_j(-nu, x) * bessel_j_prime(nu, x)
    assert w == pytest.approx(-2 * math.sin(nu * math.pi) / (math.pi * x), abs=1e-10)


def test_laguerre_base_cases():
    assert laguerre(0, 0.3, 2.0) == 1.0
    assert laguerre(1, 0.3, 2.0) == pytest.approx(1.3 - 2.0)


def test_laguerre_at_zero_is_binomial():
    assert laguerre(5, 1.0, 0.0) == pytest.approx(6.0)


def test_laguerre_against_mpmath():
    for n, a, x in [(10, 0.5, 3.0), (40, 2.0, 17.0), (7, -0.5, 0.2)]:
        assert laguerre(n, a, x) == pytest.approx(float(mpmath.laguerre(n, a, x)), rel=1e-11)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 200), st.sampled_from([0.0, 0.5, 1.0, 2.0]), st.floats(0.0, 5.0))
def test_laguerre_contiguous_relation(n, a, x):
    lhs = laguerre(n, a - 1, x) + laguerre(n - 1, a, x)
    rhs = laguerre(n, a, x)
    scale = max(abs(rhs), abs(laguerre(n, a - 1, x)), abs(laguerre(n - 1, a, x)), 1e-300)
    assert abs(lhs - rhs) <= 1e-11 * scale


def test_ln_gamma_values():
    assert ln_gamma(1.0) == 0.0
    assert ln_gamma(0.5) == pytest.approx(0.5 * math.log(math.pi), rel=1e-15)
    assert ln_gamma(101.0) == pytest.approx(math.log(math.factorial(100)), rel=1e-14)
    with pytest.raises(DomainError):
        ln_gamma(0.0)


def test_rising_factorial():
    assert rising_factorial(2.0, 3) == 24.0
    assert rising_factorial(-3.0, 4) == 0.0
