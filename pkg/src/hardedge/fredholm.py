"""Nystrom discretization of Fredholm determinants on ``(0, s)``.

Kernels here behave like ``(xy)^{g/2}`` times an analytic function near the
origin.  Plain Gauss-Legendre loses its exponential convergence when ``g`` is
not an integer, so the nodes are Gauss-Jacobi with weight ``x^g`` on
``(0, s)``, and the weights are divided by ``x_i^g`` so that the rule
integrates the unweighted kernel.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy import linalg
from scipy.special import roots_jacobi

from .errors import ConvergenceError, DomainError
from .kernels import bessel_kernel, l2hat_kernel_fn

__all__ = [
    "QuadratureRule",
    "DetResult",
    "quadrature_rule",
    "fredholm_det",
    "omega_trace",
    "gap_with_correction",
    "smallest_pdf",
]

M_DEFAULT = 64
M_MAX = 256
DOUBLING_TOL = 1e-10
FAIL_TOL = 1e-8
COND_MAX = 1e6


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and weights on ``(0, s)``.

    ``sum(weights * nodes**exponent * f(nodes))`` is exact for ``f`` a
    polynomial of degree ``2m - 1`` times ``x^exponent``; with
    ``exponent == 0`` this is Gauss-Legendre and the weights sum to ``s``.
    """

    nodes: np.ndarray
    weights: np.ndarray
    m: int
    s: float
    exponent: float = 0.0


def quadrature_rule(s, m, exponent=0.0):
    """Gauss-Jacobi rule on ``(0, s)`` adapted to endpoint behaviour ``x^exponent``."""
    t, w = roots_jacobi(int(m), 0.0, float(exponent))
    x = 0.5 * s * (1.0 + t)
    # weight (1+t)^g = (2x/s)^g; divide it out so the rule acts on f itself
    wx = (0.5 * s) * w * (2.0 * x / s) ** (-exponent)
    return QuadratureRule(nodes=x, weights=wx, m=int(m), s=float(s), exponent=float(exponent))


@dataclass(frozen=True)
class DetResult:
    """Fredholm determinant with its discretization error estimate.

    Attributes
    ----------
    value : float
        ``det(I - xi K)`` on ``(0, s)``.
    correction : float or None
        Coefficient of ``1/N^2`` when computed alongside.
    quadrature_order : int
        Number of nodes used.
    est_error : float
        ``|value(m) - value(m/2)|``.
    """

    value: float
    correction: float | None
    quadrature_order: int
    est_error: float


def _nystrom(K, rule):
    sw = np.sqrt(rule.weights)
    return sw[:, None] * K.matrix(rule.nodes) * sw[None, :]


def _det_and_omega(K, L, s, xi, m):
    rule = quadrature_rule(s, m, K.exponent)
    A = np.eye(m) - xi * _nystrom(K, rule)
    lu, piv = linalg.lu_factor(A)
    d = np.prod(np.diag(lu)) * (-1) ** np.count_nonzero(piv != np.arange(m))
    if L is None:
        return float(d), None
    rcond = 1.0 / np.linalg.cond(A)
    if rcond < 1.0 / COND_MAX:
        raise ConvergenceError(
            f"resolvent ill-conditioned (cond {1.0 / rcond:.3g}) at s={s:g}, xi={xi:g}"
        )
    Lm = xi * _nystrom(L, rule)
    tr = np.trace(linalg.lu_solve((lu, piv), Lm))
    return float(d), float(-d * tr)


def _check_args(s, xi, m):
    if not (s >= 0 and math.isfinite(s)):
        raise DomainError(f"s must be nonnegative, got {s}")
    if not (0 <= xi <= 1):
        raise DomainError(f"xi must lie in [0, 1], got {xi}")
    if m is not None and m < 8:
        raise DomainError(f"quadrature order must be at least 8, got {m}")


def _adaptive(K, L, s, xi, m):
    """Values at order ``m`` with error estimates from order ``m/2``.

    With ``m=None`` the order doubles from the default until both estimates
    fall below the doubling tolerance or the maximum order is reached.
    """
    fixed = m is not None
    m = m if fixed else M_DEFAULT
    prev = _det_and_omega(K, L, s, xi, m // 2)
    while True:
        cur = _det_and_omega(K, L, s, xi, m)
        err_d = abs(cur[0] - prev[0])
        err_o = 0.0 if L is None else abs(cur[1] - prev[1])
        err = max(err_d, err_o)
        if fixed or err < DOUBLING_TOL:
            return cur, err, m
        if m >= M_MAX:
            if err > FAIL_TOL:
                raise ConvergenceError(
                    f"Nystrom estimate {err:.3g} exceeds {FAIL_TOL:g} at m={m}, s={s:g}"
                )
            return cur, err, m
        prev = cur
        m *= 2


def fredholm_det(K, s, xi=1.0, m=None):
    """Fredholm determinant ``det(I - xi K)`` on ``L^2(0, s)``.

    Parameters
    ----------
    K : KernelFn
        Symmetric kernel, analytic on ``[0, s]^2`` up to the factor
        ``(xy)^{K.exponent/2}``.
    s : float
        Interval length.
    xi : float
        Thinning parameter in ``[0, 1]``.
    m : int, optional
        Quadrature order.  By default it doubles from 64 until the change
        is below 1e-10, up to 256.

    Returns
    -------
    DetResult

    Raises
    ------
    ConvergenceError
        If the estimate still exceeds 1e-8 at ``m = 256``.
    """
    _check_args(s, xi, m)
    if s == 0 or xi == 0:
        return DetResult(1.0, None, 0, 0.0)
    (d, _), err, m_used = _adaptive(K, None, s, xi, m)
    return DetResult(d, None, m_used, err)


def omega_trace(K, L, s, xi=1.0, m=None):
    """``-det(I - xi K) Tr((I - xi K)^{-1} xi L)`` on ``(0, s)``.

    This is the first-order change of ``det(I - xi K)`` when ``K`` is
    perturbed in the direction ``L``.
    """
    _check_args(s, xi, m)
    if s == 0 or xi == 0:
        return 0.0
    (_, om), _, _ = _adaptive(K, L, s, xi, m)
    return om


def gap_with_correction(a, s, xi=1.0, m=None, l2hat=None, full=False):
    """Hard-edge gap probability and its ``1/N^2`` coefficient at beta = 2.

    Under the scaling ``s / (4N + 2a)``,
    ``E_N(s) = E_hard(s) + c2(s) / N^2 + O(N^-3)``.

    Parameters
    ----------
    a : float
        Laguerre exponent.
    s : float
        Scaled interval length.
    xi : float
        Thinning parameter.
    m : int, optional
        Fixed quadrature order.
    l2hat : KernelFn, optional
        Override for the correction kernel (used by mutation tests).
    full : bool
        Return a :class:`DetResult` instead of the pair.

    Returns
    -------
    (E_hard, c2) or DetResult
    """
    _check_args(s, xi, m)
    if s == 0 or xi == 0:
        res = DetResult(1.0, 0.0, 0, 0.0)
    else:
        K = bessel_kernel(a)
        L = l2hat_kernel_fn(a) if l2hat is None else l2hat
        (d, om), err, m_used = _adaptive(K, L, s, xi, m)
        res = DetResult(d, om, m_used, err)
    return res if full else (res.value, res.correction)


def _richardson_derivative(f, s, h):
    """Five-point derivative at steps ``h`` and ``h/2`` with one Richardson level."""

    def d5(hh):
        return (f(s - 2 * hh) - 8 * f(s - hh) + 8 * f(s + hh) - f(s + 2 * hh)) / (12 * hh)

    coarse = d5(h)
    fine = d5(h / 2)
    return fine + (fine - coarse) / 15.0, np.abs(fine - coarse)


def smallest_pdf(a, s, xi=1.0, m=None):
    """Smallest-eigenvalue density and its ``1/N^2`` correction at beta = 2.

    ``p0 = -dE_hard/ds`` and ``p2 = -dc2/ds`` by five-point differences
    with ``h = max(1e-3, 1e-4 s)`` and one Richardson level.

    Raises
    ------
    ConvergenceError
        If the two step sizes disagree by more than 1e-6.
    """
    if not s > 0:
        raise DomainError("smallest_pdf requires s > 0")
    h = max(1e-3, 1e-4 * s)
    h = min(h, s / 4.0)

    def f(t):
        return np.array(gap_with_correction(a, t, xi, m))

    d, gap = _richardson_derivative(f, s, h)
    if np.max(gap) > 1e-6:
        raise ConvergenceError(f"derivative steps disagree by {np.max(gap):.3g} at s={s:g}")
    return float(-d[0]), float(-d[1])
