"""Closed forms and torus integrals for gap probabilities and densities.

The torus integrals are contour integrals over ``|z_l| = r``.  Their
integrands are single valued only when ``c = 2/beta - 1`` is an integer, i.e.
``2/beta`` in {1, 2, 3, ...}; for other ``beta`` the angular integral of the
factor ``z^c`` does not reproduce the hypergeometric function and the
routines raise :class:`DomainError` (use :mod:`hardedge.jack` instead).
The radius is ``r = 2/sqrt(s)``, the saddle point of ``exp(s z/4 + 1/z)``,
which avoids the cancellation the unit circle suffers for finite N.
"""

from dataclasses import dataclass
import itertools
import math

import numpy as np
from scipy.special import gammaln

from .errors import ConvergenceError, DomainError
from .jack import density_hard_jack, finite_gap_jack, hard_gap_jack

__all__ = [
    "HardGapResult",
    "f01_scalar",
    "gap_a1_exact",
    "gap_a1_finiteN",
    "hard_gap_torus",
    "finiteN_gap_torus",
    "c_a_correction",
    "c_a_correction_average",
    "density_hard_torus",
    "density_correction_average",
    "hard_gap",
    "finite_gap",
    "torus_valid",
]

GRID_BUDGET = 10**8
IMAG_TOL = 1e-9


@dataclass(frozen=True)
class HardGapResult:
    """Hard-edge gap with its ``1/N`` coefficient under the ``s/4N`` scaling.

    Attributes
    ----------
    value : float
        ``E_hard(s)``.
    c1 : float
        ``(a/beta) s dE_hard/ds``.
    M_used : int
        Torus points per dimension.
    est_error : float
        Change from ``M/2`` points.
    """

    value: float
    c1: float
    M_used: int
    est_error: float


def f01_scalar(b, z):
    """Confluent limit series ``0F1(; b; z) = sum_p z^p / (p! (b)_p)``."""
    if not b > 0:
        raise DomainError("f01_scalar requires b > 0")
    terms = [1.0]
    t = 1.0
    p = 0
    while True:
        p += 1
        t *= z / (p * (b + p - 1))
        terms.append(t)
        if p > abs(z) and abs(t) < 1e-17 * abs(math.fsum(terms)):
            break
    return math.fsum(terms)


def gap_a1_exact(beta, s):
    """Hard-edge gap for ``a = 1`` and its ``1/N^2`` coefficient.

    Under ``s_{N,beta} = s / (4(N + 1/beta))``,
    ``E_N = V(s) + c2(s)/N^2 + O(N^-3)`` with ``V = exp(-beta s/8) 0F1(2/beta; s/4)``
    and ``c2 = (s/48) exp(-beta s/8) [(1/beta - 1) 0F1(2/beta; s/4)
    + (1 - 1/beta + beta s/8) 0F1(2/beta + 1; s/4)]``.

    Returns
    -------
    (V, c2) : tuple of float
    """
    if not beta > 0:
        raise DomainError("beta must be positive")
    if s < 0:
        raise DomainError("s must be nonnegative")
    e = math.exp(-beta * s / 8.0)
    f0 = f01_scalar(2.0 / beta, s / 4.0)
    f1 = f01_scalar(2.0 / beta + 1.0, s / 4.0)
    c2 = s / 48.0 * e * ((-1.0 + 1.0 / beta) * f0 + ((1.0 - 1.0 / beta) + s * beta / 8.0) * f1)
    return e * f0, c2


def gap_a1_finiteN(beta, N, s, scaling="naive"):
    """Finite-N gap for ``a = 1`` at hard-edge argument ``s``.

    ``E_N(0; (0, t)) = exp(-beta N t/2) sum_{p=0}^N (-N)_p / (p! (2/beta)_p) (-t)^p``
    with ``t = s/(4N)`` (``scaling="naive"``) or ``t = s/(4(N + 1/beta))``
    (``"optimal"``).  Every term is positive.
    """
    if int(N) != N or N < 1:
        raise DomainError("N must be a positive integer")
    N = int(N)
    t = _scaled_t(s, N, beta, 1, scaling)
    b = 2.0 / beta
    terms = [1.0]
    tp = 1.0
    for p in range(1, N + 1):
        tp *= (N - p + 1) * t / (p * (b + p - 1))
        terms.append(tp)
    return math.exp(-beta * N * t / 2.0) * math.fsum(terms)


def _scaled_t(s, N, beta, a, scaling):
    if scaling == "naive":
        return s / (4.0 * N)
    if scaling == "optimal":
        return s / (4.0 * (N + a / beta))
    if scaling == "raw":
        return float(s)
    raise DomainError(f"unknown scaling {scaling!r}")


# --- torus integrals ---------------------------------------------------------

def torus_valid(beta):
    """True when ``2/beta`` is a positive integer."""
    q = 2.0 / beta
    return abs(q - round(q)) < 1e-12 and round(q) >= 1


def _require_torus(beta, a):
    if not torus_valid(beta):
        raise DomainError(
            f"torus integrals need 2/beta to be an integer, got beta={beta}; use the Jack series"
        )
    if int(a) != a or not 1 <= a <= 4:
        raise DomainError(f"torus integrals need integer a in 1..4, got {a}")
    return int(round(2.0 / beta)), int(a)


def _radius(s):
    return 2.0 / math.sqrt(max(s, 4.0))


def _torus_mean(d, M, r, log_single, power, insertions):
    """Mean over the ``M^d`` torus grid of the symmetric integrand.

    ``log_single(z)`` is the log of the one-variable factor, ``power`` the
    integer exponent of ``prod_{j<k} (1 - z_k/z_j)(1 - z_j/z_k)``, and each
    insertion ``g`` contributes ``sum_l g(z_l)`` as an extra factor.
    Returns one complex mean per insertion (``None`` means no insertion).
    """
    if M**d > GRID_BUDGET:
        raise DomainError(f"torus grid {M}^{d} exceeds budget {GRID_BUDGET}")
    theta = 2.0 * np.pi * np.arange(M) / M
    z1 = r * np.exp(1j * theta)
    f1 = np.exp(log_single(z1))
    sums = np.zeros(len(insertions), dtype=complex)
    # loop over the first angle, vectorize the rest
    rest = d - 1
    if rest:
        grids = np.meshgrid(*([np.arange(M)] * rest), indexing="ij")
        idx_rest = [g.ravel() for g in grids]
    else:
        idx_rest = []
    for i0 in range(M):
        idx = [np.full(M**rest, i0)] + idx_rest
        val = np.ones(M**rest, dtype=complex)
        for ix in idx:
            val = val * f1[ix]
        if power:
            for j, k in itertools.combinations(range(d), 2):
                zj, zk = z1[idx[j]], z1[idx[k]]
                val = val * ((1 - zk / zj) * (1 - zj / zk)) ** power
        for n, g in enumerate(insertions):
            if g is None:
                sums[n] += val.sum()
            else:
                gv = g(z1)
                sums[n] += (val * sum(gv[ix] for ix in idx)).sum()
    return sums / M**d


def _torus_pair(d, M, r, log_single, power, insertions):
    fine = _torus_mean(d, M, r, log_single, power, insertions)
    coarse = _torus_mean(d, M // 2, r, log_single, power, insertions)
    scale = max(abs(fine[0]), 1e-300)
    if np.max(np.abs(fine.imag)) > IMAG_TOL * max(scale, np.max(np.abs(fine))):
        raise ConvergenceError(f"torus integral has imaginary part {np.max(np.abs(fine.imag)):.3g}")
    return fine.real, np.abs(fine - coarse)


def _default_M(a):
    return {1: 64, 2: 64, 3: 48, 4: 40}[a]


def hard_gap_torus(beta, a, s, M=None):
    """Hard-edge gap ``exp(-beta s/8) 0F1^{(beta/2)}(2a/beta; (s/4)^a)`` as an ``a``-fold torus integral.

    Parameters
    ----------
    beta : float
        Dyson index with ``2/beta`` a positive integer.
    a : int
        In 1..4.
    s : float
        Scaled interval length.
    M : int, optional
        Trapezoidal points per angle (even).

    Returns
    -------
    HardGapResult
    """
    q, a = _require_torus(beta, a)
    M = M or _default_M(a)
    if s == 0:
        return HardGapResult(1.0, 0.0, M, 0.0)
    c = q - 1
    r = _radius(s)

    def log_single(z):
        return c * np.log(z) + s * z / 4.0 + 1.0 / z

    vals, errs = _torus_pair(a, M, r, log_single, q, [None, lambda z: z / 4.0])
    norm = math.exp(a * math.lgamma(q) - math.lgamma(1 + a))
    e = math.exp(-beta * s / 8.0)
    A, dA = norm * vals[0], norm * vals[1]
    value = e * A
    c1 = e * (-a * s / 8.0 * A + a / beta * s * dA)
    return HardGapResult(value, c1, M, e * norm * float(errs[0]))


def _log_inv_M(a, N, beta):
    """``log(1 / M_a(2/beta - 1, N, 2/beta))``."""
    j = np.arange(1, a + 1)
    q = 2.0 / beta
    return float(np.sum(
        gammaln(j * q) + gammaln(1 + N + (j - 1) * q) + gammaln(1 + q)
        - gammaln(N + j * q) - gammaln(1 + j * q)
    ))


def finiteN_gap_torus(beta, a, N, s, M=None):
    """Finite-N gap probability ``E_N(0; (0, s))`` by an ``a``-fold torus integral.

    ``s`` is the unscaled interval length; callers apply ``s/(4N)`` or
    ``s/(4(N + a/beta))`` themselves.
    """
    q, a = _require_torus(beta, a)
    if int(N) != N or N < 1:
        raise DomainError("N must be a positive integer")
    N = int(N)
    M = M or _default_M(a)
    if s == 0:
        return 1.0
    c = q - 1
    sh = 4.0 * N * s
    r = _radius(sh)

    def log_single(z):
        return c * np.log(z) + (N + c) * np.log1p(1.0 / (N * z)) + sh * z / 4.0

    vals, _ = _torus_pair(a, M, r, log_single, q, [None])
    lognorm = a * c * math.log(N) + _log_inv_M(a, N, beta)
    return math.exp(-beta * N * s / 2.0 + lognorm) * float(vals[0])


def c_a_correction(beta, a, s, M=None):
    """``C_a(s) = -(a/8) s A_a(s) + (a/beta) s A_a'(s)``, ``A_a = 0F1^{(beta/2)}(2a/beta; (s/4)^a)``.

    Computed from the torus integral of ``A_a`` and of its analytic
    ``s``-derivative.  ``exp(-beta s/8) C_a(s)`` is the ``1/N`` coefficient
    of the gap under ``s/(4N)``.
    """
    if a == 0:
        return 0.0
    res = hard_gap_torus(beta, a, s, M)
    return res.c1 * math.exp(beta * s / 8.0)


def c_a_correction_average(beta, a, s, M=None):
    """``C_a(s)`` from its defining torus averages.

    ``(a^2/beta)(1 - 2/beta)<1> - (1 - 2/beta)<sum 1/z_l> - (1/2)<sum 1/z_l^2>``
    """
    q, a = _require_torus(beta, a)
    M = M or _default_M(a)
    c = q - 1
    r = _radius(s)

    def log_single(z):
        return c * np.log(z) + s * z / 4.0 + 1.0 / z

    vals, _ = _torus_pair(a, M, r, log_single, q, [None, lambda z: 1 / z, lambda z: 1 / z**2])
    vals = vals * math.exp(a * math.lgamma(q) - math.lgamma(1 + a))
    g = 1.0 - 2.0 / beta
    return a * a / beta * g * vals[0] - g * vals[1] - 0.5 * vals[2]


# --- density -----------------------------------------------------------------

def _density_torus_parts(a, s, M):
    """Torus averages for the beta = 2 hard-edge density, unnormalized."""
    # exponent 2a/beta + 2/beta - 1 = a, Vandermonde power 4/beta = 2 -> 1 after squaring
    r = _radius(s)

    def log_single(z):
        return a * np.log(z) - s * z / 4.0 + 1.0 / z

    return _torus_pair(2, M, r, log_single, 1,
                       [None, lambda z: -z / 4.0, lambda z: 1 / z, lambda z: 1 / z**2])


def _density_prefactor(beta, a):
    return math.exp(
        -(1 + a) * math.log(4.0) + (1 + 2 * a) * math.log(beta / 2.0)
        + math.lgamma(1 + beta / 2.0) - math.lgamma(1 + a) - math.lgamma(1 + a + beta / 2.0)
    )


def density_hard_torus(beta, a, s, M=64):
    """Hard-edge density and its ``1/N`` coefficient under ``s/(4N)``.

    Returns ``(rho0, c1)`` with ``rho0 = s^a A(s)`` and
    ``c1 = s^a (a/beta)(s A'(s) + (1 + a) A(s))``.  The normalization of
    ``A`` is fixed by its value at ``s = 0``.

    Only ``beta = 2`` with integer ``a >= 0`` has a single-valued integrand.
    """
    if beta != 2:
        raise DomainError("density torus integral is single valued only for beta = 2")
    if int(a) != a or a < 0:
        raise DomainError("density torus integral needs integer a >= 0")
    a = int(a)
    pref = _density_prefactor(beta, a)
    vals, _ = _density_torus_parts(a, s, M)
    at0, _ = _density_torus_parts(a, 0.0, M)
    A = pref * vals[0] / at0[0]
    dA = pref * vals[1] / at0[0]
    rho0 = s**a * A
    c1 = s**a * a / beta * (s * dA + (1 + a) * A)
    return float(rho0), float(c1)


def density_correction_average(a, s, M=64):
    """``1/N`` density coefficient at beta = 2 from its defining averages.

    ``s^a [(a - a/beta - a^2/beta - beta s/8)<1> + (2a/beta + 2/beta - 2)<sum 1/z>
    - (1/2)<sum 1/z^2>]``
    """
    beta = 2
    a = int(a)
    pref = _density_prefactor(beta, a)
    vals, _ = _density_torus_parts(a, s, M)
    at0, _ = _density_torus_parts(a, 0.0, M)
    v = pref * vals / at0[0]
    ct = (a - a / beta - a * a / beta - beta * s / 8.0) * v[0] \
        + (2 * a / beta + 2 / beta - 2) * v[2] - 0.5 * v[3]
    return float(s**a * ct)


# --- dispatchers -------------------------------------------------------------

def hard_gap(beta, a, s):
    """Hard-edge gap for integer ``a``: torus when single valued, else Jack series."""
    if a == 0:
        return math.exp(-beta * s / 8.0)
    if torus_valid(beta) and a <= 4:
        return hard_gap_torus(beta, a, s).value
    return hard_gap_jack(beta, a, s)


def finite_gap(beta, a, N, s):
    """Finite-N gap ``E_N(0; (0, s))`` for integer ``a`` (unscaled ``s``)."""
    if a == 0:
        return math.exp(-beta * N * s / 2.0)
    if a == 1:
        return gap_a1_finiteN(beta, N, s, scaling="raw")
    return finite_gap_jack(beta, a, N, s)


def hard_density(beta, a, s):
    """Hard-edge density ``rho_hard(s; a)`` for even ``beta``."""
    return density_hard_jack(beta, a, s)
