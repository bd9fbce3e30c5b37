"""Hard-edge gap probabilities from the sigma-form of Painleve III.

``sigma0`` solves

    (x s'')^2 + s'(1 + 4 s')(x s' - s) = (a s')^2,    s ~ -xi x K_inf(x, x)  (x -> 0+),

and the gap is ``exp(int_0^s sigma0 dx/x)``.  Rather than solving for
``s''`` through a square root (whose branch is ambiguous wherever the
radicand touches zero), we integrate the differentiated equation

    s''' = -[2x s'' + (1 + 8s')(x s' - s) + x s'(1 + 4s') - 2a^2 s'] / (2x^2),

which is regular; the original equation is then a conserved first integral
and serves as an accuracy check.

The ``1/N`` and ``1/N^2`` corrections solve the linear equation
``A h'' + B h' + C h = D`` with ``A = 4x^2 s''``,
``B = 24x s'^2 - 16 s s' + 4(x - a^2) s' - 2s``, ``C = -2s'(4s' + 1)`` and
``D = -a s'(x s' - s)`` (``sigma1``) or ``D = (x s' - s)^2 / 8`` (``sigma2hat``).

Near the origin every solution is seeded by a series in the exponents
``j(1+a) + k`` (``j >= 1, k >= 0``), solved order by order.
"""

from dataclasses import dataclass, field
from functools import lru_cache
import math

import numpy as np
from scipy.integrate import solve_ivp

from .errors import ConvergenceError, DomainError, SeriesMatchError

__all__ = [
    "SeriesCoeffs",
    "SigmaTrajectory",
    "LinearODECoeffs",
    "sigma0_series",
    "correction_series",
    "solve_sigma0",
    "solve_linear_correction",
    "gap_tau",
    "sigma_piii_residual",
    "sigma_pv_residual",
    "finite_sigma_pv_residual",
]

RTOL = 1e-12
ATOL = 1e-14
RESIDUAL_TOL = 1e-8
N_TERMS_DEFAULT = 40
TAIL_TOL = 1e-15


def _key(e):
    return round(float(e), 9)


def _lattice(a, n_terms):
    """First ``n_terms`` distinct exponents ``j(1+a) + k``, ``j >= 1``, ``k >= 0``."""
    base = 1.0 + a
    found = set()
    jmax = 1
    # enough layers that the smallest n_terms exponents are all present
    while True:
        pts = {_key(j * base + k) for j in range(1, jmax + 1) for k in range(0, n_terms + 1)}
        cand = sorted(pts)[:n_terms]
        if cand[-1] < (jmax + 1) * base:
            return np.array(cand)
        jmax += 1
        if jmax > 10 * n_terms:
            found = cand
            return np.array(found)


def _mul(A, B, emax):
    out = {}
    for ea, ca in A.items():
        for eb, cb in B.items():
            e = ea + eb
            if e <= emax + 1e-9:
                k = _key(e)
                out[k] = out.get(k, 0.0) + ca * cb
    return out


def _add(*terms):
    out = {}
    for coef, S in terms:
        for e, c in S.items():
            out[e] = out.get(e, 0.0) + coef * c
    return out


def _pieces(S):
    """``s'``, ``x s''`` and ``x s' - s`` as exponent dictionaries."""
    d1 = {_key(e - 1): c * e for e, c in S.items()}
    xd2 = {_key(e - 1): c * e * (e - 1) for e, c in S.items()}
    t = {e: c * (e - 1) for e, c in S.items()}
    return d1, xd2, t


def _piii_series(S, a, emax):
    d1, xd2, t = _pieces(S)
    d1sq = _mul(d1, d1, emax + 2)
    return _add(
        (1.0, _mul(xd2, xd2, emax)),
        (1.0, _mul(d1, t, emax)),
        (4.0, _mul(d1sq, t, emax)),
        (-a * a, d1sq),
    )


@dataclass(frozen=True)
class SeriesCoeffs:
    """Small-x expansion ``sum_i coeffs[i] x^{exponents[i]}``."""

    exponents: np.ndarray
    coeffs: np.ndarray
    a: float
    xi: float

    def __call__(self, x, deriv=0):
        x = np.asarray(x, float)
        e = self.exponents
        c = self.coeffs.copy()
        p = e.copy()
        for _ in range(deriv):
            c = c * p
            p = p - 1
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = c * np.power.outer(x, p) if x.ndim else c * x**p
        terms = np.where(c == 0, 0.0, terms)
        return terms.sum(axis=-1)

    def tau_integral(self, x):
        """``int_0^x sigma(t) dt/t`` term by term."""
        return float(np.sum(self.coeffs / self.exponents * x**self.exponents))

    def tail(self, x, k=4):
        """Size of the last ``k`` terms of the second derivative, a truncation proxy."""
        e, c = self.exponents[-k:], self.coeffs[-k:]
        return float(np.sum(np.abs(c) * np.maximum(1.0, e * e) * x ** np.maximum(e - 2, 0)))

    def as_dict(self):
        return {_key(e): float(c) for e, c in zip(self.exponents, self.coeffs)}


def _pivot(a, xi, e, c1):
    """Coefficient of ``c_e`` in the lowest order of the equation, and that order."""
    if a != 0:
        return 2.0 * c1 * a * (1 + a) * e * (e - 1 - a), _key(e + a - 1)
    return xi * (1 - xi) * (e - 1) ** 2 / 4.0, _key(e)


def _leading_bessel_diag(a):
    """``lim x^{-a} K_inf(x, x) = 1 / (4^{1+a} Gamma(1+a) Gamma(2+a))``."""
    return math.exp(-(1 + a) * math.log(4.0) - math.lgamma(1 + a) - math.lgamma(2 + a))


def sigma0_series(a, xi, n_terms=N_TERMS_DEFAULT):
    """Small-x series of ``sigma0`` solved order by order.

    Parameters
    ----------
    a : float
        ``a > -1``.
    xi : float
        Thinning parameter in ``(0, 1]``.
    n_terms : int
        Number of exponents kept (at least 8).

    Returns
    -------
    SeriesCoeffs

    Raises
    ------
    SeriesMatchError
        If an order has zero pivot but nonzero residual.
    """
    if not a > -1:
        raise DomainError("a must exceed -1")
    if not 0 < xi <= 1:
        raise DomainError("xi must lie in (0, 1]")
    if n_terms < 8:
        raise DomainError("n_terms must be at least 8")
    exps = _lattice(a, n_terms)
    c1 = -xi * _leading_bessel_diag(a)
    S = {exps[0]: c1}
    for e in exps[1:]:
        if a == 0 and xi == 1:
            S[e] = 0.0  # sigma0 = -x/4 exactly
            continue
        if a == 0 and e == 2.0:
            # lowest order is quadratic in c_2; take the nonzero root
            S[e] = -c1 * (1 + 4 * c1) / 4.0
            continue
        P, E = _pivot(a, xi, e, c1)
        R = _piii_series(S, a, E).get(E, 0.0)
        if P == 0:
            if abs(R) > 1e-13:
                raise SeriesMatchError(f"order x^{E:g} cannot be matched (residual {R:.3g})")
            S[e] = 0.0
        else:
            S[e] = -R / P
    return SeriesCoeffs(exps, np.array([S[e] for e in exps]), float(a), float(xi))


def _linear_coeff_series(S, a, emax):
    d1, xd2, t = _pieces(S)
    sig = S
    A = {_key(e + 1): 4.0 * c for e, c in xd2.items()}
    x_d1 = {_key(e + 1): c for e, c in d1.items()}
    B = _add(
        (24.0, _mul(x_d1, d1, emax)),
        (-16.0, _mul(sig, d1, emax)),
        (4.0, x_d1),
        (-4.0 * a * a, d1),
        (-2.0, sig),
    )
    C = _add((-8.0, _mul(d1, d1, emax)), (-2.0, d1))
    return A, B, C


def _inhomogeneity_series(S, a, which, emax):
    d1, _, t = _pieces(S)
    if which == "sigma1":
        return {e: -a * c for e, c in _mul(d1, t, emax).items()}
    return {e: c / 8.0 for e, c in _mul(t, t, emax).items()}


def _boundary_leading(a, which):
    """``lim x^{-a} L(x, x)`` for the boundary kernel of each correction."""
    j2 = math.exp(-2 * (a * math.log(2.0) + math.lgamma(1 + a)))
    if which == "sigma1":
        return a / 8.0 * j2
    return -(2 * a * a + 4 * a) / 192.0 * j2


def correction_series(sigma0, which):
    """Small-x series of ``sigma1`` or ``sigma2hat`` on the lattice of ``sigma0``."""
    if which not in ("sigma1", "sigma2hat"):
        raise DomainError("which must be 'sigma1' or 'sigma2hat'")
    a, xi = sigma0.a, sigma0.xi
    exps = sigma0.exponents
    S = sigma0.as_dict()
    c1 = sigma0.coeffs[0]
    emax = exps[-1] + a + 1
    A, B, C = _linear_coeff_series(S, a, emax)
    Dser = _inhomogeneity_series(S, a, which, emax)
    H = {}
    if a == 0 and xi == 1:
        # every coefficient of the equation vanishes; sigma0 = -x/4 means the
        # finite-N gap is exactly exp(-Ns), so the correction is zero
        return SeriesCoeffs(exps, np.zeros(len(exps)), a, xi)
    for i, e in enumerate(exps):
        if i == 0:
            H[e] = -xi * _boundary_leading(a, which)
            continue
        P, E = _pivot(a, xi, e, c1)
        d1 = {_key(k - 1): c * k for k, c in H.items()}
        d2 = {_key(k - 2): c * k * (k - 1) for k, c in H.items()}
        LH = _add((1.0, _mul(A, d2, E)), (1.0, _mul(B, d1, E)), (1.0, _mul(C, H, E)))
        R = LH.get(E, 0.0) - Dser.get(E, 0.0)
        if P == 0:
            if abs(R) > 1e-13:
                raise SeriesMatchError(f"order x^{E:g} cannot be matched (residual {R:.3g})")
            H[e] = 0.0
        else:
            H[e] = -R / (2.0 * P)
    return SeriesCoeffs(exps, np.array([H[e] for e in exps]), a, xi)


def _choose_x0(series_list, x0=None):
    if x0 is not None:
        return float(x0)
    for x in np.geomspace(2.0, 1e-3, 60):
        if all(s.tail(x) < TAIL_TOL for s in series_list):
            return float(x)
    return 1e-3


@dataclass(frozen=True)
class LinearODECoeffs:
    """Coefficients ``A, B, C, D`` of the linear correction equation."""

    a: float
    which: str

    def __call__(self, x, s, s1, s2):
        a = self.a
        A = 4.0 * x * x * s2
        B = 24.0 * x * s1 * s1 - 16.0 * s * s1 + 4.0 * (x - a * a) * s1 - 2.0 * s
        C = -2.0 * s1 * (4.0 * s1 + 1.0)
        t = x * s1 - s
        D = -a * s1 * t if self.which == "sigma1" else t * t / 8.0
        return A, B, C, D


@dataclass(frozen=True)
class SigmaTrajectory:
    """Sampled solution on ``[x0, s_max]`` with its small-x series.

    Attributes
    ----------
    grid : ndarray
        Increasing sample points (integrator steps).
    sigma, sigma_prime : ndarray
        Solution and derivative on ``grid``.
    tau : ndarray
        ``int_0^x sigma(t) dt / t`` on ``grid``.
    x0 : float
        Series/ODE handoff point.
    series : SeriesCoeffs
    which : str
        ``"sigma0"``, ``"sigma1"`` or ``"sigma2hat"``.
    """

    grid: np.ndarray
    sigma: np.ndarray
    sigma_prime: np.ndarray
    tau: np.ndarray
    x0: float
    series: SeriesCoeffs
    which: str
    a: float
    xi: float
    s_max: float
    base: "SigmaTrajectory | None" = None
    _sol: object = field(default=None, repr=False, compare=False)
    _offset: int = field(default=0, repr=False, compare=False)

    @property
    def series_coeffs(self):
        return self.series.coeffs

    def state(self, x):
        """``(sigma, sigma', tau)`` at points ``x`` in ``(0, s_max]``."""
        x = np.atleast_1d(np.asarray(x, float))
        out = np.empty((3, x.size))
        small = x <= self.x0
        if np.any(small):
            xs = x[small]
            out[0, small] = self.series(xs)
            out[1, small] = self.series(xs, 1)
            out[2, small] = [self.series.tau_integral(v) for v in xs]
        if np.any(~small):
            if np.any(x[~small] > self.s_max * (1 + 1e-12)):
                raise DomainError(f"trajectory computed only up to {self.s_max:g}")
            y = self._sol(x[~small])
            o = self._offset
            out[0, ~small] = y[o]
            out[1, ~small] = y[o + 1]
            out[2, ~small] = y[o + 3] if self.which == "sigma0" else y[o + 2]
        return out


def sigma_piii_residual(a, x, s, s1, s2):
    """Residual of ``(x s'')^2 + s'(1+4s')(x s' - s) - (a s')^2``."""
    return (x * s2) ** 2 + s1 * (1 + 4 * s1) * (x * s1 - s) - (a * s1) ** 2


def _third_order(a, x, s, s1, s2):
    return -(2 * x * s2 + (1 + 8 * s1) * (x * s1 - s) + x * s1 * (1 + 4 * s1)
             - 2 * a * a * s1) / (2 * x * x)


def _integrate(a, xi, s_max, which, x0, n_terms):
    base_series = sigma0_series(a, xi, n_terms)
    corr = None if which == "sigma0" else correction_series(base_series, which)
    x0 = _choose_x0([base_series] + ([corr] if corr is not None else []), x0)
    if s_max <= x0:
        s_max = 2.0 * x0
    y0 = [base_series(x0), base_series(x0, 1), base_series(x0, 2), base_series.tau_integral(x0)]
    degenerate = corr is not None and a == 0 and xi == 1
    coeffs = None if corr is None else LinearODECoeffs(a, which)
    if corr is not None:
        y0 += [corr(x0), corr(x0, 1), corr.tau_integral(x0)]

    def rhs(x, y):
        s, s1, s2 = y[0], y[1], y[2]
        out = [s1, s2, _third_order(a, x, s, s1, s2), s / x]
        if coeffs is not None:
            h, h1 = y[4], y[5]
            if degenerate:
                out += [0.0, 0.0, 0.0]
            else:
                A, B, C, D = coeffs(x, s, s1, s2)
                out += [h1, (D - B * h1 - C * h) / A, h / x]
        return out

    def a_zero(x, y):
        return y[2]

    a_zero.terminal = True
    events = None if (coeffs is None or degenerate or xi == 1) else [a_zero]
    sol = solve_ivp(rhs, (x0, s_max), y0, method="DOP853", rtol=RTOL, atol=ATOL,
                    dense_output=True, events=events)
    if not sol.success:
        raise ConvergenceError(f"integration failed: {sol.message}")
    if events and sol.t_events[0].size:
        xs = sol.t_events[0][0]
        raise ConvergenceError(
            f"linear correction equation is singular at x={xs:.6g} where sigma0''=0"
        )
    res = sigma_piii_residual(a, sol.t, sol.y[0], sol.y[1], sol.y[2])
    worst = float(np.max(np.abs(res)))
    if worst > RESIDUAL_TOL:
        raise ConvergenceError(f"Painleve III residual {worst:.3g} exceeds {RESIDUAL_TOL:g}")
    return base_series, corr, x0, sol


@lru_cache(maxsize=64)
def _cached(a, xi, s_max, which, x0, n_terms):
    return _integrate(a, xi, s_max, which, x0, n_terms)


def solve_sigma0(a, xi=1.0, s_max=20.0, x0=None, n_terms=N_TERMS_DEFAULT):
    """Integrate ``sigma0`` from the series handoff ``x0`` to ``s_max``.

    Parameters
    ----------
    a : float
        ``a > -1``.
    xi : float
        Thinning parameter.
    s_max : float
        Right end, at most 60.
    x0 : float, optional
        Handoff point; by default the largest point where the series
        truncation proxy is below 1e-15.
    n_terms : int
        Series length.

    Returns
    -------
    SigmaTrajectory
    """
    if not 0 < s_max <= 60:
        raise DomainError("s_max must lie in (0, 60]")
    series, _, x0v, sol = _cached(float(a), float(xi), float(s_max), "sigma0", x0, int(n_terms))
    return SigmaTrajectory(
        grid=sol.t, sigma=sol.y[0], sigma_prime=sol.y[1], tau=sol.y[3], x0=x0v,
        series=series, which="sigma0", a=float(a), xi=float(xi), s_max=float(sol.t[-1]),
        _sol=sol.sol, _offset=0,
    )


def solve_linear_correction(traj, which="sigma2hat"):
    """Solve the linear correction equation on the range of ``traj``.

    ``which="sigma1"`` reproduces ``(a/2) x sigma0'`` and serves as a check;
    ``which="sigma2hat"`` gives the ``1/N^2`` term under ``4N + 2a`` scaling.

    Raises
    ------
    ConvergenceError
        If ``sigma0''`` vanishes inside the range (possible for ``xi < 1``),
        where the equation is singular.
    """
    if which not in ("sigma1", "sigma2hat"):
        raise DomainError("which must be 'sigma1' or 'sigma2hat'")
    if traj.which != "sigma0":
        raise DomainError("traj must be a sigma0 trajectory")
    base, corr, x0v, sol = _cached(traj.a, traj.xi, traj.s_max, which, traj.x0,
                                   len(traj.series.exponents))
    return SigmaTrajectory(
        grid=sol.t, sigma=sol.y[4], sigma_prime=sol.y[5], tau=sol.y[6], x0=x0v,
        series=corr, which=which, a=traj.a, xi=traj.xi, s_max=float(sol.t[-1]),
        base=traj, _sol=sol.sol, _offset=4,
    )


def gap_tau(a, xi, s, with_correction=True, x0=None):
    """Gap probability and its ``1/N^2`` coefficient from the tau function.

    ``E = exp(int_0^s sigma0 dx/x)`` and ``c2 = E int_0^s sigma2hat dx/x``.

    Parameters
    ----------
    a, xi : float
    s : float or array_like
        Points in ``[0, 60]``.
    with_correction : bool
        If False only ``E`` is computed and ``c2`` is NaN.

    Returns
    -------
    (E, c2) : floats or arrays
    """
    s_arr = np.atleast_1d(np.asarray(s, float))
    if np.any(s_arr < 0) or np.any(s_arr > 60):
        raise DomainError("s must lie in [0, 60]")
    s_max = max(float(np.max(s_arr)), 1.0)
    s_max = min(60.0, math.ceil(s_max))
    traj = solve_sigma0(a, xi, s_max, x0=x0)
    pos = s_arr > 0
    E = np.ones(s_arr.shape)
    c2 = np.zeros(s_arr.shape) if with_correction else np.full(s_arr.shape, np.nan)
    if np.any(pos):
        E[pos] = np.exp(traj.state(s_arr[pos])[2])
        if with_correction:
            corr = solve_linear_correction(traj, "sigma2hat")
            c2[pos] = corr.state(s_arr[pos])[2] * E[pos]
    if np.ndim(s) == 0:
        return float(E[0]), float(c2[0])
    return E, c2


# --- finite N -------------------------------------------------------------------

def sigma_pv_residual(N, a, x, s, s1, s2):
    """Residual of the finite-N sigma-form Painleve V equation.

    ``(x s'')^2 - (s - x s' + 2 s'^2 + (a + 2N) s')^2 + 4 s'^2 (s' + N)(s' + a + N)``
    """
    return (x * s2) ** 2 - (s - x * s1 + 2 * s1**2 + (a + 2 * N) * s1) ** 2 \
        + 4 * s1**2 * (s1 + N) * (s1 + a + N)


def finite_sigma_pv_residual(N, a, x, precision_bits=None):
    """Painleve V residual of ``U = x d/dx log E_N(0; (0, x))`` at beta = 2.

    ``E_N`` comes from the characteristic-polynomial recurrence, so this
    checks the recurrence against the finite-N differential equation.
    Returns the residual scaled by ``N^2 + x^2``.
    """
    from flint import arb

    from .recurrence import _workprec, char_moment

    if int(a) != a or a < 0:
        raise DomainError("finite_sigma_pv_residual needs integer a >= 0")
    a = int(a)
    xs = np.atleast_1d(np.asarray(x, float))
    out = np.empty(xs.shape)
    if a == 0:
        # E = exp(-N x): U = -N x exactly
        for i, xv in enumerate(xs):
            out[i] = sigma_pv_residual(N, 0, xv, -N * xv, -N, 0.0)
        return out if np.ndim(x) else float(out[0])
    P = char_moment(N, 2.0, a, 0.0, precision_bits)
    with _workprec(P.precision_bits):
        p0 = P.poly
        p1 = p0.derivative()
        p2 = p1.derivative()
        p3 = p2.derivative()
        for i, xv in enumerate(xs):
            # Q(x) = P(-x): log-derivatives of E = e^{-Nx} const Q(x)
            t = arb(-float(xv))
            q0, q1, q2, q3 = p0(t), -p1(t), p2(t), -p3(t)
            r1 = q1 / q0
            r2 = q2 / q0 - r1 * r1
            r3 = q3 / q0 - 3 * r1 * q2 / q0 + 2 * r1 ** 3
            X = arb(float(xv))
            U = X * (-N + r1)
            U1 = -N + r1 + X * r2
            U2 = 2 * r2 + X * r3
            res = sigma_pv_residual(N, a, X, U, U1, U2)
            out[i] = float(res.mid()) / (N * N + float(xv) ** 2)
    return out if np.ndim(x) else float(out[0])
