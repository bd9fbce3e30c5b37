"""Special functions: Bessel J of real order, Laguerre polynomials, log-gamma.

The Bessel function is summed from its ascending series.  For moderate
arguments the sum is done in double precision with compensated (Neumaier)
accumulation; beyond ``_DOUBLE_SERIES_MAX`` the terms grow large enough to
cancel catastrophically, so the same series is summed with an mpmath
accumulator whose working precision grows with ``x``.
"""

import math

import mpmath
import numpy as np
from scipy import special

from .errors import DivergenceError, DomainError

__all__ = [
    "check_order",
    "bessel_j",
    "bessel_j_prime",
    "laguerre",
    "ln_gamma",
    "rising_factorial",
]

ORDER_MIN = -5.0
_DOUBLE_SERIES_MAX = 8.0
_DOUBLE_SERIES_TERMS = 48


def check_order(nu):
    """Validate a Bessel/Laguerre order and return it as a float.

    Orders must be finite and larger than -5.
    """
    nu = float(nu)
    if not math.isfinite(nu):
        raise DomainError(f"order must be finite, got {nu}")
    if nu <= ORDER_MIN:
        raise DomainError(f"order must exceed {ORDER_MIN}, got {nu}")
    return nu


def _is_int(nu):
    return float(nu).is_integer()


def _series_double(nu, x):
    """Ascending series in double precision, vectorized over ``x``."""
    q = -0.25 * x * x
    with np.errstate(divide="ignore", invalid="ignore"):
        term = np.power(0.5 * x, nu) * special.rgamma(nu + 1.0)
    total = term.copy()
    comp = np.zeros_like(total)
    for k in range(1, _DOUBLE_SERIES_TERMS):
        term = term * q / (k * (nu + k))
        t = total + term
        # Neumaier compensation
        big = np.abs(total) >= np.abs(term)
        comp += np.where(big, (total - t) + term, (term - t) + total)
        total = t
    return total + comp


def _series_mp(nu, x):
    """Ascending series summed with an mpmath accumulator."""
    # largest term is about exp(x); keep ~20 digits beyond it
    dps = 25 + int(0.45 * x)
    with mpmath.workdps(dps):
        xm = mpmath.mpf(x)
        nu = mpmath.mpf(nu)
        q = -(xm * xm) / 4
        term = (xm / 2) ** nu * mpmath.rgamma(nu + 1)
        total = term
        k = 0
        tol = mpmath.mpf(10) ** (-(dps - 2))
        while True:
            k += 1
            term = term * q / (k * (nu + k))
            total += term
            if k > x and abs(term) <= tol * abs(total):
                break
        return float(total)


def _bessel_j_nonneg_x(nu, x):
    out = np.empty_like(x)
    small = x <= _DOUBLE_SERIES_MAX
    if small.any():
        out[small] = _series_double(nu, x[small])
    if (~small).any():
        uniq, inv = np.unique(x[~small], return_inverse=True)
        vals = np.array([_series_mp(nu, xi) for xi in uniq])
        out[~small] = vals[inv]
    return out


def _bessel_j(nu, x):
    """Unchecked Bessel J for any real order, ``x >= 0`` array."""
    if nu < 0 and _is_int(nu):
        n = int(-nu)
        return (-1.0) ** n * _bessel_j_nonneg_x(float(n), x)
    if nu < 0 and np.any(x == 0):
        raise DivergenceError(f"J_{nu}(0) diverges for non-integer negative order")
    return _bessel_j_nonneg_x(nu, x)


def _scalar_or_array(x, out):
    return float(out) if np.ndim(x) == 0 else out


def bessel_j(nu, x):
    """Bessel function of the first kind of real order.

    Parameters
    ----------
    nu : float
        Order, ``nu > -5``.
    x : float or array_like
        Nonnegative argument(s).

    Returns
    -------
    float or ndarray
        ``J_nu(x)``, absolute error below 1e-13 for ``x <= 50``.

    Raises
    ------
    DomainError
        If any ``x < 0``.
    DivergenceError
        If ``x == 0`` and ``nu`` is a negative non-integer.
    """
    nu = check_order(nu)
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(~np.isfinite(xa)) or np.any(xa < 0):
        raise DomainError("bessel_j requires finite x >= 0")
    out = _bessel_j(nu, xa).reshape(np.shape(x))
    return _scalar_or_array(x, out)


def _bessel_j_prime(nu, x):
    return 0.5 * (_bessel_j(nu - 1.0, x) - _bessel_j(nu + 1.0, x))


def bessel_j_prime(nu, x):
    """Derivative ``J_nu'(x) = (J_{nu-1}(x) - J_{nu+1}(x)) / 2`` for ``x > 0``."""
    nu = check_order(nu)
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(~np.isfinite(xa)) or np.any(xa <= 0):
        raise DomainError("bessel_j_prime requires finite x > 0")
    out = _bessel_j_prime(nu, xa).reshape(np.shape(x))
    return _scalar_or_array(x, out)


def laguerre(n, a, x):
    """Generalized Laguerre polynomial ``L_n^{(a)}(x)`` by three-term recurrence.

    Any real ``a`` is accepted: the kernel formulas need ``L_n^{(a-1)}``
    with ``a - 1`` down to -2, where the polynomial is still well defined.

    Parameters
    ----------
    n : int
        Degree, ``n >= 0``.
    a : float
        Parameter.
    x : float or array_like
        Evaluation point(s).
    """
    if int(n) != n or n < 0:
        raise DomainError(f"degree must be a nonnegative integer, got {n}")
    n = int(n)
    a = float(a)
    xa = np.asarray(x, dtype=float)
    prev = np.ones_like(xa)
    if n == 0:
        return _scalar_or_array(x, prev)
    cur = 1.0 + a - xa
    for k in range(1, n):
        prev, cur = cur, ((2 * k + 1 + a - xa) * cur - (k + a) * prev) / (k + 1)
    return _scalar_or_array(x, cur)


def ln_gamma(x):
    """Natural log of the gamma function for ``x > 0``."""
    xa = np.asarray(x, dtype=float)
    if np.any(~(xa > 0)):
        raise DomainError("ln_gamma requires x > 0")
    if xa.ndim == 0:
        return math.lgamma(float(xa))
    return special.gammaln(xa)


def rising_factorial(a, p):
    """Pochhammer symbol ``(a)_p = a (a+1) ... (a+p-1)`` for integer ``p >= 0``."""
    out = 1.0
    for k in range(int(p)):
        out *= a + k
    return out
