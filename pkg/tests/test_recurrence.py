import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, special

from hardedge.errors import DomainError, PrecisionError
from hardedge.exactseries import finiteN_gap_torus, gap_a1_finiteN
from hardedge.jack import finite_gap_jack
from hardedge.kernels import EnsembleParams, kn_finite_kernel
from hardedge.recurrence import (
    RecurrenceParams,
    char_moment,
    density_difference_curve,
    density_recurrence,
    gap_recurrence,
    limit_difference_curve,
    log_selberg_norm,
)


def _coeffs(P):
    return [float(c.mid()) for c in P.coeffs]


def test_recurrence_coefficients():
    p = RecurrenceParams(7, 1.5, 0.5, 2)
    assert p.B(3) == (3 - 7) * (0.5 + 2 + 1.5 * (7 - 3 - 1))
    assert p.D(3) == 3 * (1.5 * (7 - 3) + 2)
    assert p.D(0) == 0


@pytest.mark.parametrize("N,n", [(1, 1), (5, 3), (12, 2), (30, 4)])
def test_moment_degree(N, n):
    assert char_moment(N, 2.0, n).degree == n * N


def test_single_variable_moment():
    # < (x - t)^2 > over t^l e^{-beta t/2}: x^2 - 2 m1 x + m2
    lam1, beta = 0.5, 3.0
    c = _coeffs(char_moment(1, beta, 2, lam1))
    m1 = (lam1 + 1) * 2 / beta
    m2 = (lam1 + 1) * (lam1 + 2) * (2 / beta) ** 2
    assert np.allclose(np.array(c) / c[-1], [m2, -2 * m1, 1], rtol=1e-14)


@pytest.mark.parametrize("N,beta,lam1", [(4, 2.0, 0.0), (10, 1.0, 1.5), (25, 6.0, 2.0)])
def test_mean_trace(N, beta, lam1):
    c = _coeffs(char_moment(N, beta, 1, lam1))
    ref = N * (lam1 + 1) * 2 / beta + N * (N - 1)
    assert -c[-2] / c[-1] == pytest.approx(ref, rel=1e-13)


def test_single_variable_gap_is_incomplete_gamma():
    for beta, a in ((2.0, 1), (3.0, 2), (0.5, 4)):
        for s in (0.3, 2.0, 7.0):
            ref = special.gammaincc(a + 1, beta * s / 2)
            assert gap_recurrence(1, beta, a, s) == pytest.approx(ref, rel=1e-13)


@pytest.mark.parametrize("beta,a", [(2.0, 1), (3.0, 2), (1.0, 1)])
def test_two_variable_gap_by_quadrature(beta, a):
    def w(x, y):
        return abs(x - y) ** beta * (x * y) ** a * math.exp(-beta * (x + y) / 2)

    # integrate below the diagonal only, where |x - y|^beta is smooth
    def tri(s):
        return integrate.dblquad(w, s, 80, s, lambda x: x, epsabs=1e-14, epsrel=1e-12)[0]

    Z = tri(0.0)
    for s in (0.5, 2.0):
        num = tri(s)
        assert gap_recurrence(2, beta, a, s) == pytest.approx(num / Z, rel=1e-8)


def test_selberg_norm_two_variables():
    beta, a = 2.0, 1.0
    def w(x, y):
        return (x - y) ** 2 * x * y * math.exp(-x - y)
    Z = integrate.dblquad(w, 0, 80, 0, 80, epsabs=1e-13, epsrel=1e-11)[0]
    assert math.exp(log_selberg_norm(a, beta, 2)) == pytest.approx(Z, rel=1e-9)


def test_zero_charge_is_exponential():
    for beta in (1.0, 2.0, 5.0):
        assert gap_recurrence(40, beta, 0, 0.1) == pytest.approx(math.exp(-40 * beta * 0.05), rel=1e-15)


def test_gap_at_origin():
    assert gap_recurrence(30, 2.0, 3, 0.0) == pytest.approx(1.0, rel=1e-13)


@pytest.mark.parametrize("N,beta,a", [(20, 4.0, 2), (50, 6.0, 2), (30, 3.0, 1)])
def test_agrees_with_series_routes(N, beta, a):
    s = np.array([0.5, 3.0, 10.0, 20.0]) / (4 * (N + a / beta))
    rec = gap_recurrence(N, beta, a, s)
    jack = [finite_gap_jack(beta, a, N, t) for t in s]
    assert np.allclose(rec, jack, atol=1e-10, rtol=0)
    if a == 1:
        ser = [gap_a1_finiteN(beta, N, t, scaling="raw") for t in s]
        assert np.allclose(rec, ser, atol=1e-10, rtol=0)
    if (2 / beta).is_integer():
        tor = [finiteN_gap_torus(beta, a, N, t) for t in s]
        assert np.allclose(rec, tor, atol=1e-8, rtol=0)


def test_precision_doubling_stable():
    s = np.linspace(0.01, 0.2, 5)
    g1 = gap_recurrence(60, 6.0, 3, s, precision_bits=256)
    g2 = gap_recurrence(60, 6.0, 3, s, precision_bits=512)
    assert np.max(np.abs(g1 - g2)) < 1e-14


def test_error_estimate_returned():
    v, rel = gap_recurrence(20, 2.0, 2, 0.1, return_error=True)
    assert 0 <= rel < 1e-40 and 0 < v < 1


def test_low_precision_is_detected():
    with pytest.raises(PrecisionError):
        gap_recurrence(200, 6.0, 6, 0.005, precision_bits=30)


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 40), st.sampled_from([1.0, 2.0, 4.0]), st.integers(0, 3), st.floats(0.01, 2.0))
def test_gap_is_decreasing(N, beta, a, t):
    e1, e2 = gap_recurrence(N, beta, a, [t, 1.1 * t])
    assert 0 <= e2 <= e1 <= 1


@pytest.mark.parametrize("N,a", [(6, 0.0), (10, 1.0), (8, 2.5)])
def test_density_matches_kernel_diagonal(N, a):
    K = kn_finite_kernel(EnsembleParams(N, 2.0, a))
    x = np.array([0.2, 1.5, 6.0, 20.0])
    assert np.allclose(density_recurrence(N, 2, a, x), K.diag(x), rtol=1e-11, atol=0)


@pytest.mark.parametrize("N,beta,a", [(4, 2, 1.0), (6, 4, 0.5)])
def test_density_integrates_to_n(N, beta, a):
    val, _ = integrate.quad(lambda x: density_recurrence(N, beta, a, x), 0, 200, limit=400)
    assert val == pytest.approx(N, rel=1e-9)


def test_density_single_variable():
    a = 1.5
    ref = 0.7**a * math.exp(-0.7) / math.gamma(a + 1)
    assert density_recurrence(1, 2, a, 0.7) == pytest.approx(ref, rel=1e-13)


def test_density_domain():
    with pytest.raises(DomainError):
        density_recurrence(5, 3, 1.0, 1.0)
    with pytest.raises(DomainError):
        gap_recurrence(5, 2.0, 1.5, 1.0)
    with pytest.raises(DomainError):
        gap_recurrence(5, 2.0, 1, -1.0)


def test_difference_curve_vanishes_for_zero_charge():
    s = np.linspace(0.5, 20, 9)
    d = limit_difference_curve(30, 600, 2.0, 0, s)
    assert np.max(np.abs(d)) < 1e-10


def test_difference_curve_needs_large_reference():
    with pytest.raises(DomainError):
        limit_difference_curve(30, 100, 2.0, 1, [1.0])
    with pytest.raises(DomainError):
        density_difference_curve(30, 100, 2, 1, [1.0])
