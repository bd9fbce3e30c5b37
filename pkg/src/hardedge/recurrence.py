"""Characteristic-polynomial moments of the Laguerre beta ensemble by recurrence.

For fixed ``(lambda1, lambda, alpha)`` the polynomials

    L_p(x) proportional to < t^{lambda1} e^{-lambda t} |x - t|^{alpha-1} e_p(x - t) >

obey the differential-difference equation

    lambda (N-p) L_{p+1} = (lambda (N-p) x + B_p) L_p + x L_p' - D_p x L_{p-1},
    B_p = (p - N)(lambda1 + alpha + lambda (N-p-1)),  D_p = p (lambda (N-p) + alpha),

and ``L_N`` at exponent ``alpha`` is ``L_0`` at ``alpha + 1``.  Starting from
``L_0 = 1`` at ``alpha = 1`` and lifting ``n`` times yields
``< prod_l (x - x_l)^n >`` exactly.  Arithmetic uses arb balls from
python-flint, so precision loss is measured rather than guessed.
"""

from dataclasses import dataclass
import math
import os
import threading

import numpy as np
from flint import arb, arb_poly, ctx

from .errors import DomainError, PrecisionError

__all__ = [
    "ScaledPolynomial",
    "RecurrenceParams",
    "lp_sweep",
    "char_moment",
    "log_selberg_norm",
    "gap_recurrence",
    "density_recurrence",
    "limit_difference_curve",
    "density_difference_curve",
    "DEFAULT_PRECISION",
]

DEFAULT_PRECISION = int(os.environ.get("HARDEDGE_PRECISION_BITS", "256"))
_RENORM_LO, _RENORM_HI = 1e-8, 1e8
# flint's working precision is process global
_PREC_LOCK = threading.RLock()


class _workprec:
    def __init__(self, bits):
        self.bits = int(bits)

    def __enter__(self):
        _PREC_LOCK.acquire()
        self.saved = ctx.prec
        ctx.prec = self.bits

    def __exit__(self, *exc):
        ctx.prec = self.saved
        _PREC_LOCK.release()
        return False


@dataclass(frozen=True)
class ScaledPolynomial:
    """Polynomial ``exp(log_scale) * sum_k coeffs[k] x^k`` with arb coefficients.

    Attributes
    ----------
    poly : flint.arb_poly
        Coefficients in ascending powers.
    log_scale : float
        Natural-log common factor, an exact multiple of ``log 2``.
    precision_bits : int
        Working precision used to build ``poly``.
    """

    poly: arb_poly
    log_scale: float
    precision_bits: int

    @property
    def degree(self):
        return self.poly.degree()

    @property
    def coeffs(self):
        return self.poly.coeffs()

    def max_relative_radius(self):
        """Largest ``radius / |midpoint|`` over nonzero coefficients."""
        worst = 0.0
        for c in self.poly.coeffs():
            mid = abs(float(c.mid()))
            if mid > 0:
                worst = max(worst, float(c.rad()) / mid)
        return worst

    def log_abs_eval(self, x):
        """``(log |P(x)|, sign, relative radius)`` at a real point."""
        with _workprec(self.precision_bits):
            v = self.poly(arb(x))
            mid = v.mid()
            if mid == 0:
                return -math.inf, 0.0, math.inf
            rel = float(v.rad() / abs(mid))
            return float(abs(mid).log()) + self.log_scale, (1.0 if mid > 0 else -1.0), rel


def _renormalize(p, log_scale):
    mags = [abs(float(c.mid())) for c in p.coeffs()]
    big = max(mags) if mags else 0.0
    if big == 0.0 or _RENORM_LO <= big <= _RENORM_HI:
        return p, log_scale
    k = int(round(math.log2(big)))
    return p * arb(2) ** (-k), log_scale + k * math.log(2.0)


@dataclass(frozen=True)
class RecurrenceParams:
    """Parameters of one sweep ``p = 0 .. N-1``.

    Attributes
    ----------
    N : int
        Number of variables.
    lam : float
        ``beta / 2``.
    lambda1 : float
        Exponent of ``t`` in the weight.
    alpha : int
        Current power ``alpha`` of ``|x - t|``.
    """

    N: int
    lam: float
    lambda1: float
    alpha: int

    def B(self, p):
        return (p - self.N) * (self.lambda1 + self.alpha + self.lam * (self.N - p - 1))

    def D(self, p):
        return p * (self.lam * (self.N - p) + self.alpha)


def _exact(v):
    """Exact arb for a float; floats of the form k/2 etc. stay exact."""
    return arb(float(v)) if not isinstance(v, arb) else v


def lp_sweep(L0, params):
    """Run the recurrence from ``L_0`` to ``L_N``.

    Parameters
    ----------
    L0 : ScaledPolynomial
    params : RecurrenceParams

    Returns
    -------
    ScaledPolynomial
        ``L_N``; its log scale absorbs the common magnitude.
    """
    N, lam = params.N, params.lam
    prec = L0.precision_bits
    with _workprec(prec):
        X = arb_poly([0, 1])
        log_scale = L0.log_scale
        prev = arb_poly([])
        cur = L0.poly
        for p in range(N):
            B, D = params.B(p), params.D(p)
            lnp = _exact(lam) * (N - p)
            new = (lnp * X + _exact(B)) * cur + X * cur.derivative() - _exact(D) * X * prev
            new = new * (arb(1) / lnp)
            # rescale the pair together so the three-term relation stays consistent
            mags = [abs(float(c.mid())) for c in new.coeffs()]
            big = max(mags) if mags else 0.0
            if big and not (_RENORM_LO <= big <= _RENORM_HI):
                k = int(round(math.log2(big)))
                f = arb(2) ** (-k)
                new, cur = new * f, cur * f
                log_scale += k * math.log(2.0)
            prev, cur = cur, new
        cur, log_scale = _renormalize(cur, log_scale)
    return ScaledPolynomial(cur, log_scale, prec)


def char_moment(N, beta, n_target, lambda1=0.0, precision_bits=None):
    """``< prod_{l=1}^N (x - x_l)^{n} >`` over weight ``t^{lambda1} exp(-beta t/2)``.

    Parameters
    ----------
    N : int
        Number of eigenvalues.
    beta : float
        Dyson index.
    n_target : int
        Power ``n`` (1..8).
    lambda1 : float
        Weight exponent, ``> -1``.
    precision_bits : int, optional
        arb precision; default 256 or ``HARDEDGE_PRECISION_BITS``.

    Returns
    -------
    ScaledPolynomial
        Degree ``n N``, normalized so that the leading coefficient is 1.
    """
    if int(N) != N or N < 0:
        raise DomainError("N must be a nonnegative integer")
    if int(n_target) != n_target or not 1 <= n_target <= 8:
        raise DomainError("n_target must be an integer in 1..8")
    if not lambda1 > -1:
        raise DomainError("lambda1 must exceed -1")
    prec = int(precision_bits or DEFAULT_PRECISION)
    L = ScaledPolynomial(arb_poly([1]), 0.0, prec)
    if N == 0:
        return L
    for alpha in range(1, int(n_target) + 1):
        L = lp_sweep(L, RecurrenceParams(int(N), beta / 2.0, lambda1, alpha))
    _check_precision(L.max_relative_radius(), prec, "char_moment coefficients")
    return L


def _check_precision(rel, prec, what):
    # a quarter of the working bits must survive, far beyond double precision
    limit = 2.0 ** (-prec / 4.0)
    if not rel <= limit:
        raise PrecisionError(
            f"{what}: relative radius {rel:.3g} exceeds {limit:.3g}; raise precision_bits"
        )


def log_selberg_norm(a, beta, N):
    """``log W`` for the weight ``x^a exp(-beta x/2)`` with ``N`` variables.

    ``W = (2/beta)^{N(a + 1 + beta(N-1)/2)} prod_{j=1}^N
    Gamma(1 + j beta/2) Gamma(1 + a + (j-1) beta/2) / Gamma(1 + beta/2)``.
    """
    lg = math.lgamma
    lam = beta / 2.0
    out = N * (a + 1 + lam * (N - 1)) * math.log(2.0 / beta)
    for j in range(1, N + 1):
        out += lg(1 + j * lam) + lg(1 + a + (j - 1) * lam) - lg(1 + lam)
    return out


def _log_w_ratio(a, beta, N):
    """``log(W_a / W_0)``; only the a-dependent factors survive."""
    lam = beta / 2.0
    out = N * a * math.log(2.0 / beta)
    for j in range(N):
        out += math.lgamma(1 + a + j * lam) - math.lgamma(1 + j * lam)
    return out


def gap_recurrence(N, beta, a, s, precision_bits=None, return_error=False):
    """Finite-N gap probability ``E_N(0; (0, s))`` for integer ``a``.

    ``E = exp(-N beta s/2) (W_0 / W_a) (-1)^{aN} P(-s)`` with
    ``P(x) = < prod (x - x_l)^a >`` over weight ``exp(-beta x/2)``.

    Parameters
    ----------
    N : int
    beta : float
    a : int
        ``0 <= a <= 8``.
    s : float or array_like
        Unscaled interval length(s).
    precision_bits : int, optional
    return_error : bool
        Also return the relative ball radius of each value.
    """
    if int(a) != a or a < 0:
        raise DomainError("gap_recurrence needs integer a >= 0")
    a = int(a)
    s_arr = np.atleast_1d(np.asarray(s, float))
    if np.any(s_arr < 0):
        raise DomainError("s must be nonnegative")
    out = np.empty(s_arr.shape)
    rels = np.zeros(s_arr.shape)
    if a == 0:
        out[:] = np.exp(-N * beta * s_arr / 2.0)
    else:
        prec = int(precision_bits or DEFAULT_PRECISION)
        P = char_moment(N, beta, a, 0.0, prec)
        lw = _log_w_ratio(a, beta, N)
        for i, si in enumerate(s_arr):
            lv, sign, rel = P.log_abs_eval(-si)
            _check_precision(rel, prec, f"gap at s={si:g}")
            out[i] = sign * (-1.0) ** (a * N) * math.exp(lv - lw - N * beta * si / 2.0)
            rels[i] = rel
    res = float(out[0]) if np.ndim(s) == 0 else out
    if return_error:
        return res, (float(rels[0]) if np.ndim(s) == 0 else rels)
    return res


def density_recurrence(N, beta, a, s, precision_bits=None):
    """Finite-N spectral density ``rho_N(s)`` for even ``beta``.

    ``rho_N(s) = N (W_{a, N-1} / W_{a, N}) s^a exp(-beta s/2) P(s)``
    with ``P(x) = < prod_{l=1}^{N-1} (x - x_l)^beta >`` over weight
    ``x^a exp(-beta x/2)``.
    """
    if int(beta) != beta or int(beta) % 2 or beta <= 0:
        raise DomainError("density_recurrence needs even integer beta")
    if not a > -1:
        raise DomainError("a must exceed -1")
    beta = int(beta)
    s_arr = np.atleast_1d(np.asarray(s, float))
    if np.any(s_arr < 0):
        raise DomainError("s must be nonnegative")
    prec = int(precision_bits or DEFAULT_PRECISION)
    P = char_moment(N - 1, beta, beta, a, prec) if N > 1 else None
    lw = log_selberg_norm(a, beta, N - 1) - log_selberg_norm(a, beta, N)
    out = np.empty(s_arr.shape)
    for i, si in enumerate(s_arr):
        if si == 0:
            if a > 0:
                out[i] = 0.0
                continue
            if a < 0:
                raise DomainError("density diverges at s = 0 for a < 0")
        if P is None:
            lv, sign = 0.0, 1.0
        else:
            lv, sign, rel = P.log_abs_eval(si)
            _check_precision(rel, prec, f"density at s={si:g}")
        log_sa = a * math.log(si) if si > 0 else 0.0
        out[i] = sign * N * math.exp(lw + lv + log_sa - beta * si / 2.0)
    return float(out[0]) if np.ndim(s) == 0 else out


def limit_difference_curve(N, N0, beta, a, s_grid, precision_bits=None):
    """``N^2 (E_N(s_{N,beta}) - E_{N0}(s_{N0,beta}))`` on a grid.

    ``s_{N,beta} = s / (4(N + a/beta))``.  With ``N0`` much larger than
    ``N`` this approximates the ``1/N^2`` coefficient of the gap.
    """
    if N0 < 20 * N:
        raise DomainError("N0 must be at least 20 N")
    s = np.asarray(s_grid, float)
    e_n = gap_recurrence(N, beta, a, s / (4.0 * (N + a / beta)), precision_bits)
    e_0 = gap_recurrence(N0, beta, a, s / (4.0 * (N0 + a / beta)), precision_bits)
    return N * N * (np.asarray(e_n) - np.asarray(e_0))


DENSITY_VALID_S_MAX = 10.0


def density_difference_curve(N, N0, beta, a, s_grid, precision_bits=None):
    """Density analogue of :func:`limit_difference_curve`.

    ``N^2 (c_N rho_N(s c_N) - c_{N0} rho_{N0}(s c_{N0}))`` with
    ``c_N = 1 / (4(N + a/beta))``.  Only meaningful for ``s <= 10``.
    """
    if N0 < 20 * N:
        raise DomainError("N0 must be at least 20 N")
    s = np.asarray(s_grid, float)
    cn = 1.0 / (4.0 * (N + a / beta))
    c0 = 1.0 / (4.0 * (N0 + a / beta))
    r_n = cn * np.asarray(density_recurrence(N, beta, a, s * cn, precision_bits))
    r_0 = c0 * np.asarray(density_recurrence(N0, beta, a, s * c0, precision_bits))
    return N * N * (r_n - r_0)
