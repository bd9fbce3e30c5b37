"""Hypergeometric functions of matrix argument at equal arguments.

``pFq^{(alpha)}(a; b; (x)^m)`` is summed as a series over partitions with at
most ``m`` parts.  At equal arguments the Jack polynomials reduce to

    C_kappa(1^m) = alpha^k k! / j_kappa * prod_{(i,j) in kappa} (m - (i-1) + alpha (j-1))

with ``j_kappa`` the product of upper and lower hook lengths, so each term is
a product over the cells of ``kappa`` of ratios of order one.  This gives
the hard-edge gap probability for any ``beta > 0`` and integer ``a`` (and the
finite-N gap through ``1F1(-N; ...)``), which the torus integrals only cover
when ``2/beta`` is an integer.
"""

import math

import mpmath

from .errors import ConvergenceError, DomainError

__all__ = [
    "partitions",
    "jack_at_ones",
    "hypergeom_equal",
    "hard_gap_jack",
    "finite_gap_jack",
    "density_hard_jack",
]


def partitions(k, max_parts, max_part=None):
    """Partitions of ``k`` into at most ``max_parts`` parts, each at most ``max_part``."""
    if max_part is None:
        max_part = k
    if k == 0:
        yield ()
        return
    if max_parts == 0:
        return
    for first in range(min(k, max_part), 0, -1):
        if first * max_parts < k:
            break
        for rest in partitions(k - first, max_parts - 1, first):
            yield (first,) + rest


def _conjugate(kappa):
    if not kappa:
        return ()
    return tuple(sum(1 for part in kappa if part > j) for j in range(kappa[0]))


def jack_at_ones(kappa, alpha, m):
    """``C_kappa^{(alpha)}(1, ..., 1)`` with ``m`` ones."""
    k = sum(kappa)
    conj = _conjugate(kappa)
    val = float(math.factorial(k)) * alpha**k
    for i, row in enumerate(kappa, start=1):
        for j in range(1, row + 1):
            upper = conj[j - 1] - i + alpha * (row - j + 1)
            lower = conj[j - 1] - i + 1 + alpha * (row - j)
            val *= (m - (i - 1) + alpha * (j - 1)) / (upper * lower)
    return val


def _term(kappa, conj, a_params, b_params, x, m, alpha):
    """Series term for one partition, accumulated cell by cell."""
    t = 1
    for i, row in enumerate(kappa, start=1):
        for j in range(1, row + 1):
            f = alpha * x * (m - (i - 1) + alpha * (j - 1))
            f /= (conj[j - 1] - i + alpha * (row - j + 1)) * (conj[j - 1] - i + 1 + alpha * (row - j))
            shift = -(i - 1) / alpha + j - 1
            for ap in a_params:
                f *= ap + shift
            for bq in b_params:
                f /= bq + shift
            t *= f
    return t


def hypergeom_equal(a_params, b_params, x, m, alpha, tol=1e-17, kmax=600, dps=None,
                    max_part=None, weight_by_degree=False):
    """``pFq^{(alpha)}(a; b; x, ..., x)`` with ``m`` equal arguments.

    Parameters
    ----------
    a_params, b_params : sequence of float
        Upper and lower parameters.
    x : float
        Common argument.
    m : int
        Number of arguments.
    alpha : float
        Jack parameter.
    tol : float
        Stop once three consecutive degree blocks are below ``tol`` times
        the running absolute sum.
    kmax : int
        Maximum degree.
    dps : int, optional
        If given, sum in mpmath with this many digits.  Needed for
        alternating series with large arguments.
    max_part : int, optional
        Largest admissible part; a terminating series with upper parameter
        ``-N`` vanishes beyond ``N`` anyway.
    weight_by_degree : bool
        Also return ``sum_k k * (degree-k block)``, which is ``x d/dx`` of
        the series.

    Returns
    -------
    float or (float, float)
    """
    if m < 1 or int(m) != m:
        raise DomainError(f"number of arguments must be a positive integer, got {m}")
    m = int(m)
    ctx = mpmath.workdps(dps) if dps else _NullCtx()
    with ctx:
        conv = mpmath.mpf if dps else float
        xv = conv(x)
        al = conv(alpha)
        ap = [conv(v) for v in a_params]
        bq = [conv(v) for v in b_params]
        total = conv(1)
        dtotal = conv(0)
        abs_total = conv(1)
        quiet = 0
        for k in range(1, kmax + 1):
            block = conv(0)
            abs_block = conv(0)
            for kappa in partitions(k, m, max_part):
                t = _term(kappa, _conjugate(kappa), ap, bq, xv, m, al)
                block += t
                abs_block += abs(t)
            total += block
            dtotal += k * block
            abs_total += abs_block
            if abs_block <= tol * abs_total:
                quiet += 1
                if quiet >= 3:
                    break
            else:
                quiet = 0
        else:
            if max_part is None or k < max_part * m:
                raise ConvergenceError(f"hypergeometric series not converged by degree {kmax}")
        if dps is None and abs_total > 1e8 * abs(total):
            raise ConvergenceError(
                "cancellation in alternating series exceeds 8 digits; pass dps"
            )
        if weight_by_degree:
            return float(total), float(dtotal)
        return float(total)


class _NullCtx:
    def __enter__(self):
        return self

    def __exit__(self, *exc):
        return False


def _check_int_a(a):
    if int(a) != a or a < 0:
        raise DomainError(f"a must be a nonnegative integer, got {a}")
    return int(a)


def hard_gap_jack(beta, a, s, derivative=False):
    """Hard-edge gap ``exp(-beta s/8) 0F1^{(beta/2)}(2a/beta; (s/4)^a)``.

    Parameters
    ----------
    beta : float
        Dyson index.
    a : int
        Nonnegative integer exponent.
    s : float
        Scaled interval length.
    derivative : bool
        Also return ``s dE/ds``.
    """
    a = _check_int_a(a)
    if not beta > 0:
        raise DomainError("beta must be positive")
    e = math.exp(-beta * s / 8.0)
    if a == 0 or s == 0:
        f, xdf = 1.0, 0.0
    else:
        f, xdf = hypergeom_equal([], [2.0 * a / beta], s / 4.0, a, beta / 2.0,
                                 weight_by_degree=True)
    if derivative:
        return e * f, e * (xdf - beta * s / 8.0 * f)
    return e * f


def finite_gap_jack(beta, a, N, t):
    """Finite-N gap ``E_N(0; (0, t))`` for weight ``x^a exp(-beta x/2)``.

    ``exp(-beta N t/2) 1F1^{(beta/2)}(-N; 2a/beta; (-t)^a)``; all terms are
    positive, so double precision suffices.
    """
    a = _check_int_a(a)
    if a == 0 or t == 0:
        return math.exp(-beta * N * t / 2.0)
    f = hypergeom_equal([-float(N)], [2.0 * a / beta], -t, a, beta / 2.0,
                        max_part=int(N), kmax=int(N) * a + 3)
    return math.exp(-beta * N * t / 2.0) * f


def density_hard_jack(beta, a, s, dps=40):
    """Hard-edge density ``s^a A(s)`` for even ``beta``, any ``a > -1``.

    ``A(s) = 4^{-1-a} (beta/2)^{1+2a} Gamma(1+beta/2)
    / (Gamma(1+a) Gamma(1+a+beta/2)) * 0F1^{(beta/2)}(2a/beta + 2; (-s/4)^beta)``.
    The series alternates, so it is summed in mpmath.
    """
    if int(beta) != beta or beta <= 0 or int(beta) % 2:
        raise DomainError("density_hard_jack requires even integer beta")
    if not a > -1:
        raise DomainError("a must exceed -1")
    beta = int(beta)
    pref = (
        -(1 + a) * math.log(4.0)
        + (1 + 2 * a) * math.log(beta / 2.0)
        + math.lgamma(1 + beta / 2.0)
        - math.lgamma(1 + a)
        - math.lgamma(1 + a + beta / 2.0)
    )
    f = hypergeom_equal([], [2.0 * a / beta + 2.0], -s / 4.0, beta, beta / 2.0,
                        dps=dps + int(2 * beta * math.sqrt(max(s, 0.0))))
    return s**a * math.exp(pref) * f
