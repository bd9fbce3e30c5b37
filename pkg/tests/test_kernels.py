import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from hardedge.errors import DomainError
from hardedge.kernels import (
    EnsembleParams,
    bessel_kernel,
    k_bessel,
    kn_finite,
    kn_finite_kernel,
    l1_kernel,
    l2hat_kernel,
    l2_kernel,
    rho_hat2,
    rho_inf0,
    scaled_kernel_expansion_residual,
)

pos = st.floats(0.5, 20)


def mpJ(a, x):
    return mpmath.besselj(a, x)


def test_params_validation():
    for bad in [dict(N=0), dict(N=3, beta=0), dict(N=3, a=-1), dict(N=3, xi=0), dict(N=2.5)]:
        with pytest.raises(DomainError):
            EnsembleParams(**bad)


def test_finite_kernel_single_particle():
    p = EnsembleParams(1, 2.0, 0.0)
    assert kn_finite(p, 0.7, 1.9) == pytest.approx(math.exp(-(0.7 + 1.9) / 2), rel=1e-14)
    assert kn_finite(p, 1.3, 1.3) == pytest.approx(math.exp(-1.3), rel=1e-14)


def test_finite_kernel_symmetry():
    p = EnsembleParams(12, 2.0, 1.5)
    assert kn_finite(p, 1.0, 2.0) == pytest.approx(kn_finite(p, 2.0, 1.0), rel=1e-12)


@pytest.mark.parametrize("N,a", [(5, 0.0), (10, 1.0), (8, 0.5)])
def test_finite_kernel_integrates_to_n(N, a):
    K = kn_finite_kernel(EnsembleParams(N, 2.0, a))
    val, _ = integrate.quad(lambda x: K(x, x), 0, 200, limit=400)
    assert val == pytest.approx(N, rel=1e-9)


def test_finite_kernel_large_n_no_overflow():
    p = EnsembleParams(10000, 2.0, 2.0)
    v = kn_finite(p, 1e-4, 2e-4)
    assert math.isfinite(v) and v > 0


def test_bessel_diag_at_origin():
    assert rho_inf0(0, 0.0) == 0.25
    assert k_bessel(0, 1e-12, 1e-12) == pytest.approx(0.25, rel=1e-9)


def test_bessel_half_order_closed_form():
    # J_{1/2}(u) = sqrt(2/(pi u)) sin u, so u J'_{1/2}(u) = sqrt(2/(pi u)) (u cos u - sin u / 2)
    def J(u):
        return math.sqrt(2 / (math.pi * u)) * math.sin(u)

    def P(u):
        return math.sqrt(2 / (math.pi * u)) * (u * math.cos(u) - 0.5 * math.sin(u))

    x, y = 1.0, 4.0
    ref = (J(1) * P(2) - P(1) * J(2)) / (2 * (x - y))
    assert k_bessel(0.5, x, y) == pytest.approx(ref, rel=1e-13)


@settings(max_examples=50, deadline=None)
@given(st.sampled_from([0.0, 0.5, 1.0, 2.0, 3.5]), pos, pos)
def test_kernels_symmetric(a, x, y):
    for f in (k_bessel, l1_kernel, l2hat_kernel, l2_kernel):
        assert f(a, x, y) == pytest.approx(f(a, y, x), rel=1e-12, abs=1e-15)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from([0.0, 0.5, 1.0, 2.0]), pos)
def test_bessel_diag_is_confluent_limit(a, x):
    K = bessel_kernel(a)
    xs = np.array([x, x])
    off = K.eval(xs, xs * np.array([1 + 1e-5, 1 - 1e-5]))
    # the symmetric average cancels the first-order term in the offset
    assert off.mean() == pytest.approx(K.diag(np.array([x]))[0], abs=1e-8)
    assert np.max(np.abs(off - K.diag(xs))) < 1e-5


def test_finite_diag_is_confluent_limit():
    K = kn_finite_kernel(EnsembleParams(20, 2.0, 1.0))
    x = 3.0
    off = K.eval(np.array([x]), np.array([x * (1 + 1e-6)]))[0]
    assert off == pytest.approx(K.diag(np.array([x]))[0], rel=1e-5)


def test_l1_values():
    assert l1_kernel(0, 2.0, 3.0) == 0.0
    assert l1_kernel(1, 1.0, 1.0) == pytest.approx(float(mpJ(1, 1)) ** 2 / 8, rel=1e-14)


def test_l2hat_origin_a0():
    # J_0(0) = 1 and sqrt(x) J_0'(sqrt x) = 0 at the origin, leaving -a^2/192 = 0
    assert l2hat_kernel(0, 0.0, 0.0) == 0.0
    assert abs(l2hat_kernel(0, 1e-10, 1e-10)) < 1e-11


def test_l2hat_reference_value():
    a, x, y = 1, 2.0, 3.0
    with mpmath.workdps(40):
        u, v = mpmath.sqrt(x), mpmath.sqrt(y)
        Ju, Jv = mpJ(a, u), mpJ(a, v)
        Pu, Pv = u * mpmath.besselj(a, u, derivative=1), v * mpmath.besselj(a, v, derivative=1)
        ref = -((a * a + x + y) * Ju * Jv + Pu * Pv + 2 * Ju * Pv + 2 * Pu * Jv) / 192
    assert l2hat_kernel(a, x, y) == pytest.approx(float(ref), rel=1e-13)


def test_rho_hat2_reference_value():
    J, Jp = float(mpJ(0, 1)), float(mpmath.besselj(0, 1, derivative=1))
    ref = -(2 * J * J + 4 * J * Jp + Jp * Jp) / 192
    assert rho_hat2(0, 1.0) == pytest.approx(ref, rel=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from([0.0, 0.5, 1.0, 2.0]), pos)
def test_density_terms_are_kernel_diagonals(a, x):
    assert rho_inf0(a, x) == pytest.approx(k_bessel(a, x, x), rel=1e-14)
    assert rho_hat2(a, x) == pytest.approx(l2hat_kernel(a, x, x), rel=1e-12, abs=1e-16)


@pytest.mark.parametrize("a", [0.5, 1.0, 2.0])
def test_derivative_identity_gives_first_correction(a):
    rng = np.random.default_rng(0)
    pts = rng.uniform(0.5, 20, size=(50, 2))
    h = 1e-3
    for x, y in pts:
        def g(t):
            return k_bessel(a, t * x, t * y)

        # (x d/dx + y d/dy) K = d/dt K(tx, ty) at t = 1
        dt = (-g(1 + 2 * h) + 8 * g(1 + h) - 8 * g(1 - h) + g(1 - 2 * h)) / (12 * h)
        lhs = a / 2 * (dt + k_bessel(a, x, y))
        assert lhs == pytest.approx(l1_kernel(a, x, y), abs=1e-6)


def test_expansion_residual_symmetric():
    p = EnsembleParams(50, 2.0, 1.0)
    r1 = scaled_kernel_expansion_residual(p, 1.0, 3.0, 2)
    r2 = scaled_kernel_expansion_residual(p, 3.0, 1.0, 2)
    assert r1 == pytest.approx(r2, rel=1e-10)


def _fit_exponent(a, order, scaling="optimal", Ns=(40, 80, 160)):
    x = np.array([0.5, 2.0, 7.0, 15.0, 30.0])
    X, Y = np.meshgrid(x, x)
    r = [np.max(np.abs(scaled_kernel_expansion_residual(EnsembleParams(N, 2.0, a), X, Y, order, scaling)))
         for N in Ns]
    return -np.polyfit(np.log(Ns), np.log(r), 1)[0]


def test_optimal_scaling_removes_first_order_term():
    assert _fit_exponent(1.0, 0) == pytest.approx(2.0, abs=0.15)
    assert _fit_exponent(1.0, 0, "naive") == pytest.approx(1.0, abs=0.15)


@pytest.mark.parametrize("a", [0.5, 1.0, 2.0])
def test_second_order_residual_decays_cubically(a):
    assert 2.8 <= _fit_exponent(a, 2) <= 3.2
    assert 2.8 <= _fit_exponent(a, 2, "naive") <= 3.2


def test_second_order_residual_bounded_under_doubling():
    p = [EnsembleParams(N, 2.0, 1.0) for N in (50, 100, 200)]
    v = [N.N**3 * abs(scaled_kernel_expansion_residual(N, 2.0, 5.0, 2)) for N in p]
    assert max(v) / min(v) < 1.5
