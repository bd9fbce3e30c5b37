import math

import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from hardedge.errors import ConvergenceError, DomainError
from hardedge.exactseries import f01_scalar, gap_a1_finiteN
from hardedge.jack import (
    density_hard_jack,
    finite_gap_jack,
    hard_gap_jack,
    hypergeom_equal,
    jack_at_ones,
    partitions,
)
from hardedge.kernels import rho_inf0
from hardedge.recurrence import density_recurrence, gap_recurrence


def test_partition_counts():
    assert sum(1 for _ in partitions(6, 6)) == 11
    assert sum(1 for _ in partitions(6, 2)) == 4
    assert list(partitions(0, 3)) == [()]


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(1, 4), st.floats(0.3, 4.0))
def test_jack_polynomials_sum_to_power(k, m, alpha):
    # sum_kappa C_kappa(x_1..x_m) = (x_1 + ... + x_m)^k
    total = sum(jack_at_ones(kap, alpha, m) for kap in partitions(k, m))
    assert total == pytest.approx(m**k, rel=1e-12)


def test_single_variable_reduces_to_scalar_series():
    for b in (0.5, 2.0, 3.3):
        assert hypergeom_equal([], [b], 2.5, 1, 1.7) == pytest.approx(f01_scalar(b, 2.5), rel=1e-14)


def test_one_f_one_single_variable():
    ref = float(mpmath.hyp1f1(0.7, 1.9, -1.3))
    assert hypergeom_equal([0.7], [1.9], -1.3, 1, 2.0, dps=30) == pytest.approx(ref, rel=1e-13)


def test_cancellation_guard():
    with pytest.raises(ConvergenceError):
        hypergeom_equal([], [1.0], -400.0, 1, 1.0)


def test_hard_gap_zero_charge():
    assert hard_gap_jack(3.0, 0, 5.0) == pytest.approx(math.exp(-15 / 8))


def test_hard_gap_derivative():
    beta, a, s, h = 3.0, 2, 6.0, 1e-4
    _, sdE = hard_gap_jack(beta, a, s, derivative=True)
    d = (hard_gap_jack(beta, a, s + h) - hard_gap_jack(beta, a, s - h)) / (2 * h)
    assert sdE == pytest.approx(s * d, rel=1e-7)


def test_finite_gap_matches_a1_series():
    for beta in (1.0, 3.0, 5.0):
        assert finite_gap_jack(beta, 1, 25, 0.07) == pytest.approx(
            gap_a1_finiteN(beta, 25, 0.07, scaling="raw"), rel=1e-13)


@pytest.mark.parametrize("N,beta,a", [(20, 4.0, 2), (50, 6.0, 2), (30, 3.0, 1), (15, 0.5, 3)])
def test_finite_gap_matches_recurrence(N, beta, a):
    for s in (2.0, 8.0, 20.0):
        t = s / (4 * (N + a / beta))
        assert finite_gap_jack(beta, a, N, t) == pytest.approx(gap_recurrence(N, beta, a, t), abs=1e-10)


def test_density_beta2_matches_kernel():
    for a in (0.0, 0.5, 1.0):
        for s in (0.3, 2.0, 9.0):
            assert density_hard_jack(2, a, s) == pytest.approx(rho_inf0(a, s), rel=1e-10)


def test_density_beta4_limit_of_recurrence():
    a, s, N = 1.0, 3.0, 400
    c = 1 / (4 * (N + a / 4))
    finite = c * density_recurrence(N, 4, a, s * c)
    assert finite == pytest.approx(density_hard_jack(4, a, s), rel=1e-4)


def test_density_domain():
    with pytest.raises(DomainError):
        density_hard_jack(3, 1.0, 1.0)
    with pytest.raises(DomainError):
        hard_gap_jack(2.0, 1.5, 1.0)
