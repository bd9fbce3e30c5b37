import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from hardedge.errors import DomainError
from hardedge.exactseries import gap_a1_exact, hard_gap_torus
from hardedge.fredholm import (
    fredholm_det,
    gap_with_correction,
    omega_trace,
    quadrature_rule,
    smallest_pdf,
)
from hardedge.kernels import KernelFn, EnsembleParams, bessel_kernel, kn_finite_kernel, l2hat_kernel_fn
from hardedge.recurrence import gap_recurrence

zero_kernel = KernelFn(eval=lambda x, y: 0.0 * x, diag=lambda x: 0.0 * x)


def test_legendre_rule_weights_sum_to_length():
    r = quadrature_rule(7.0, 32)
    assert r.weights.sum() == pytest.approx(7.0, rel=1e-13)
    assert np.all(np.diff(r.nodes) > 0) and r.nodes[0] > 0 and r.nodes[-1] < 7.0


def test_rule_exact_for_polynomials():
    m, s = 12, 3.0
    r = quadrature_rule(s, m)
    for k in (0, 5, 2 * m - 1):
        assert np.sum(r.weights * r.nodes**k) == pytest.approx(s ** (k + 1) / (k + 1), rel=1e-12)


def test_jacobi_rule_exact_for_weighted_polynomials():
    g, m, s = 0.5, 10, 2.0
    r = quadrature_rule(s, m, g)
    for k in (0, 3, 2 * m - 1):
        ref = s ** (k + g + 1) / (k + g + 1)
        assert np.sum(r.weights * r.nodes ** (k + g)) == pytest.approx(ref, rel=1e-12)


def test_zero_thinning_gives_one():
    assert fredholm_det(bessel_kernel(1.0), 5.0, 0.0).value == 1.0


@pytest.mark.parametrize("s", [0.5, 1, 5, 10, 20, 50])
def test_exact_exponential_law_for_a0(s):
    r = fredholm_det(bessel_kernel(0.0), s)
    assert r.value == pytest.approx(math.exp(-s / 4), abs=1e-10)
    assert r.est_error >= 0


@pytest.mark.parametrize("a", [0.5, 1.0, 2.0])
def test_quadrature_doubling_stable(a):
    K = bessel_kernel(a)
    for s in (1.0, 20.0, 50.0):
        assert abs(fredholm_det(K, s, m=64).value - fredholm_det(K, s, m=128).value) < 1e-10


def test_a1_matches_torus_route():
    assert fredholm_det(bessel_kernel(1.0), 10.0).value == pytest.approx(
        hard_gap_torus(2.0, 1, 10.0).value, abs=1e-10)


def test_omega_of_zero_kernel():
    assert omega_trace(bessel_kernel(1.0), zero_kernel, 5.0) == 0.0


def test_omega_linear_in_small_xi():
    K, L = bessel_kernel(1.0), l2hat_kernel_fn(1.0)
    xi = 1e-6
    trace, _ = integrate.quad(lambda x: L(x, x), 0, 5.0)
    assert omega_trace(K, L, 5.0, xi) == pytest.approx(-xi * trace, rel=1e-5)


def test_correction_matches_a1_closed_form():
    for s in (5.0, 8.0):
        E, c2 = gap_with_correction(1.0, s)
        V, c2x = gap_a1_exact(2.0, s)
        assert E == pytest.approx(V, abs=1e-10)
        assert c2 == pytest.approx(c2x, abs=1e-8)


def test_gap_empty_interval():
    assert gap_with_correction(1.0, 0.0) == (1.0, 0.0)


def test_domain_errors():
    with pytest.raises(DomainError):
        fredholm_det(bessel_kernel(1.0), -1.0)
    with pytest.raises(DomainError):
        fredholm_det(bessel_kernel(1.0), 1.0, xi=1.5)
    with pytest.raises(DomainError):
        fredholm_det(bessel_kernel(1.0), 1.0, m=4)


@settings(max_examples=15, deadline=None)
@given(st.sampled_from([0.0, 0.5, 1.0, 2.0]), st.floats(0.1, 25), st.floats(0.1, 1.0))
def test_gap_is_a_decreasing_probability(a, s, xi):
    K = bessel_kernel(a)
    e1 = fredholm_det(K, s, xi).value
    e2 = fredholm_det(K, s * 1.1, xi).value
    assert 0 < e2 < e1 <= 1


def test_finite_kernel_determinant_matches_recurrence():
    for N, a in ((10, 1), (25, 2)):
        K = kn_finite_kernel(EnsembleParams(N, 2.0, float(a)))
        for s in (0.05, 0.3, 1.0):
            assert fredholm_det(K, s).value == pytest.approx(gap_recurrence(N, 2.0, a, s), abs=1e-7)


def test_pdf_of_exponential_law():
    for s in (0.5, 4.0, 12.0):
        p0, p2 = smallest_pdf(0.0, s)
        assert p0 == pytest.approx(0.25 * math.exp(-s / 4), abs=1e-9)
        assert abs(p2) < 1e-8


def test_pdf_normalized():
    assert 1.0 - fredholm_det(bessel_kernel(1.0), 100.0).value == pytest.approx(1.0, abs=1e-7)
    s = np.linspace(0, 100, 201)
    # the density vanishes like s at the origin for a = 1
    p = np.array([0.0] + [smallest_pdf(1.0, x)[0] for x in s[1:]])
    assert np.all(p >= 0)
    assert integrate.simpson(p, x=s) == pytest.approx(1.0, abs=1e-4)


def test_pdf_correction_is_derivative_of_closed_form():
    h = 1e-4
    for s in (2.0, 10.0, 30.0):
        ref = -(gap_a1_exact(2.0, s + h)[1] - gap_a1_exact(2.0, s - h)[1]) / (2 * h)
        assert smallest_pdf(1.0, s)[1] == pytest.approx(ref, abs=1e-7)
