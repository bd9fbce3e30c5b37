"""Two-point kernels of the Laguerre unitary ensemble and its hard-edge limit.

All kernels are written in terms of ``J(u) = J_a(u)`` and
``P(u) = u J_a'(u) = a J_a(u) - u J_{a+1}(u)`` with ``u = sqrt(x)``; the
second form of ``P`` stays finite at ``u = 0`` for every ``a > -1``.
"""

from dataclasses import dataclass, field
import math
from typing import Callable

import numpy as np

from .errors import DivergenceError, DomainError
from .specfun import _bessel_j, check_order, laguerre, ln_gamma

__all__ = [
    "EnsembleParams",
    "KernelFn",
    "kn_finite",
    "k_bessel",
    "l1_kernel",
    "l2_kernel",
    "l2hat_kernel",
    "rho_inf0",
    "rho_hat2",
    "kn_finite_kernel",
    "bessel_kernel",
    "l1_kernel_fn",
    "l2hat_kernel_fn",
    "scaled_kernel_expansion_residual",
    "endpoint_exponent",
]


@dataclass(frozen=True)
class EnsembleParams:
    """Laguerre beta ensemble with weight ``x^a exp(-beta x / 2)``.

    Parameters
    ----------
    N : int
        Number of eigenvalues.
    beta : float
        Dyson index.
    a : float
        Exponent of the weight at the origin, ``a > -1``.
    xi : float
        Thinning parameter in ``(0, 1]``; each eigenvalue is retained with
        probability ``xi``.
    """

    N: int
    beta: float = 2.0
    a: float = 0.0
    xi: float = 1.0

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise DomainError(f"N must be a positive integer, got {self.N}")
        if not (self.beta > 0 and math.isfinite(self.beta)):
            raise DomainError(f"beta must be positive, got {self.beta}")
        if not (self.a > -1 and math.isfinite(self.a)):
            raise DomainError(f"a must exceed -1, got {self.a}")
        if not (0 < self.xi <= 1):
            raise DomainError(f"xi must lie in (0, 1], got {self.xi}")

    @property
    def hard_scale(self):
        """Hard-edge scale ``4 (N + a / beta)``; equals ``4N + 2a`` at beta = 2."""
        return 4.0 * (self.N + self.a / self.beta)


def endpoint_exponent(a):
    """Fractional part of ``a`` that governs kernel regularity at the origin.

    The kernels here behave like ``(xy)^{a/2}`` times an analytic function,
    so with ``g = endpoint_exponent(a)`` the integrand ``K(x, x) / x^g`` is
    smooth on ``[0, s]``.
    """
    return a - math.floor(a) if a >= 0 else a


@dataclass(frozen=True)
class KernelFn:
    """Symmetric kernel with an analytic diagonal.

    Attributes
    ----------
    eval : callable
        ``eval(x, y)`` for ``x != y`` (broadcasting arrays).
    diag : callable
        ``diag(x)``, the confluent limit ``y -> x``.
    exponent : float
        Endpoint exponent ``g``: the kernel is ``(xy)^{g/2}`` times a
        function analytic at the origin.  Quadrature uses it.
    name : str
        Label for reports.
    matrix_fn : callable, optional
        ``matrix_fn(nodes)`` building the full matrix from per-node
        quantities; avoids evaluating special functions on every pair.
    """

    eval: Callable
    diag: Callable
    exponent: float = 0.0
    name: str = field(default="kernel")
    matrix_fn: Callable | None = field(default=None, compare=False)

    def __call__(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        same = x == y
        out = np.empty(x.shape)
        if np.any(~same):
            out[~same] = self.eval(x[~same], y[~same])
        if np.any(same):
            out[same] = self.diag(x[same])
        return float(out) if out.ndim == 0 else out

    def matrix(self, nodes):
        """Kernel matrix on a set of distinct nodes."""
        nodes = np.asarray(nodes, float)
        if self.matrix_fn is not None:
            return self.matrix_fn(nodes)
        X, Y = np.meshgrid(nodes, nodes, indexing="ij")
        off = ~np.eye(len(nodes), dtype=bool)
        K = np.empty(X.shape)
        K[off] = self.eval(X[off], Y[off])
        K[~off] = self.diag(nodes)
        return K

    def scaled(self, factor):
        """Kernel ``factor * K(factor x, factor y)``.

        Its Fredholm determinant on ``(0, s)`` is that of the original on
        ``(0, factor * s)``.
        """
        c = float(factor)
        return KernelFn(
            eval=lambda x, y: c * self.eval(c * x, c * y),
            diag=lambda x: c * self.diag(c * x),
            exponent=self.exponent,
            name=f"{self.name}*{c:g}",
            matrix_fn=None if self.matrix_fn is None else (lambda n: c * self.matrix_fn(c * n)),
        )

    def times(self, factor):
        """Kernel multiplied by a constant."""
        c = float(factor)
        return KernelFn(
            eval=lambda x, y: c * self.eval(x, y),
            diag=lambda x: c * self.diag(x),
            exponent=self.exponent,
            name=f"{c:g}*{self.name}",
            matrix_fn=None if self.matrix_fn is None else (lambda n: c * self.matrix_fn(n)),
        )


def _pos(x, what="x"):
    x = np.asarray(x, float)
    if np.any(~(x > 0)):
        raise DomainError(f"{what} must be positive")
    return x


def _nonneg(x, what="x"):
    x = np.asarray(x, float)
    if np.any(~(x >= 0)):
        raise DomainError(f"{what} must be nonnegative")
    return x


def _jp(a, x):
    """``J_a(sqrt x)`` and ``sqrt(x) J_a'(sqrt x)`` as flat arrays."""
    x = np.atleast_1d(x)
    u = np.sqrt(x)
    j = _bessel_j(a, u)
    p = a * j - u * _bessel_j(a + 1.0, u)
    return j, p


def _shaped(template, out):
    return float(out.reshape(-1)[0]) if np.ndim(template) == 0 else out.reshape(np.shape(template))


def _check_a(a):
    a = check_order(a)
    if a <= -1:
        raise DomainError(f"a must exceed -1, got {a}")
    return a


# --- finite N ---------------------------------------------------------------

def _kn_log_pref(N, a):
    return ln_gamma(N + 1.0) - ln_gamma(a + N)


def _kn_offdiag(N, a, x, y):
    lp = _kn_log_pref(N, a)
    w = np.exp(lp - 0.5 * (x + y) + 0.5 * a * (np.log(x) + np.log(y)))
    num = laguerre(N, a, x) * laguerre(N, a - 1, y) - laguerre(N, a - 1, x) * laguerre(N, a, y)
    return w * num / (x - y)


def _kn_diag(N, a, x):
    lp = _kn_log_pref(N, a)
    w = np.exp(lp - x + a * np.log(x))
    f, g = laguerre(N, a, x), laguerre(N, a - 1, x)
    df, dg = -laguerre(N - 1, a + 1, x), -laguerre(N - 1, a, x)
    return w * (df * g - dg * f)


def kn_finite(p, x, y):
    """Finite-N Laguerre unitary kernel ``K_N(x, y)``.

    Christoffel-Darboux form with the prefactor ``N!/Gamma(a+N)`` handled
    in log space; coincident points use the analytic confluent limit.

    Parameters
    ----------
    p : EnsembleParams
        Must have ``beta == 2``.
    x, y : float or array_like
        Positive arguments.
    """
    if p.beta != 2:
        raise DomainError("kn_finite is defined for beta = 2 only")
    return kn_finite_kernel(p)(_pos(x), _pos(y, "y"))


def kn_finite_kernel(p):
    """:class:`KernelFn` for the finite-N kernel of ``p``."""
    if p.beta != 2:
        raise DomainError("kn_finite is defined for beta = 2 only")
    N, a = int(p.N), float(p.a)
    return KernelFn(
        eval=lambda x, y: _kn_offdiag(N, a, x, y),
        diag=lambda x: _kn_diag(N, a, x),
        exponent=endpoint_exponent(a),
        name=f"K_{N}",
    )


# --- hard-edge limit and corrections ----------------------------------------

def _kb_offdiag(a, x, y):
    jx, px = _jp(a, x)
    jy, py = _jp(a, y)
    return (jx * py - px * jy) / (2.0 * (x - y))


def _kb_diag(a, x):
    x = np.atleast_1d(x)
    out = np.empty(x.shape)
    zero = x == 0
    if np.any(zero):
        if a < 0:
            raise DivergenceError("Bessel kernel diagonal diverges at 0 for a < 0")
        out[zero] = 0.25 if a == 0 else 0.0
    u = np.sqrt(x[~zero])
    ja = _bessel_j(a, u)
    out[~zero] = 0.25 * (ja * ja - _bessel_j(a + 1.0, u) * _bessel_j(a - 1.0, u))
    return out


def _kb_matrix(a, x):
    j, p = _jp(a, x)
    d = x[:, None] - x[None, :]
    np.fill_diagonal(d, 1.0)
    K = (j[:, None] * p[None, :] - p[:, None] * j[None, :]) / (2.0 * d)
    np.fill_diagonal(K, _kb_diag(a, x))
    return K


def bessel_kernel(a):
    """:class:`KernelFn` for the hard-edge Bessel kernel ``K_inf^{(a)}``."""
    a = _check_a(a)
    return KernelFn(
        eval=lambda x, y: _kb_offdiag(a, x, y),
        diag=lambda x: _kb_diag(a, x),
        exponent=endpoint_exponent(a),
        name=f"K_inf(a={a:g})",
        matrix_fn=lambda x: _kb_matrix(a, x),
    )


def k_bessel(a, x, y):
    """Hard-edge Bessel kernel.

    ``[sqrt(y) J_a(sqrt x) J_a'(sqrt y) - sqrt(x) J_a'(sqrt x) J_a(sqrt y)] / (2(x - y))``
    with diagonal ``(J_a^2 - J_{a+1} J_{a-1}) / 4`` at ``sqrt x``.
    """
    return bessel_kernel(a)(_pos(x), _pos(y, "y"))


def _l1(a, x, y):
    jx, _ = _jp(a, x)
    jy, _ = _jp(a, y)
    return 0.125 * a * jx * jy


def l1_kernel_fn(a):
    """:class:`KernelFn` for ``L_1 = (a/8) J_a(sqrt x) J_a(sqrt y)``."""
    a = _check_a(a)
    return KernelFn(
        eval=lambda x, y: _l1(a, x, y),
        diag=lambda x: _l1(a, x, x),
        exponent=endpoint_exponent(a),
        name=f"L1(a={a:g})",
        matrix_fn=lambda x: _l1(a, x[:, None], x[None, :]),
    )


def l1_kernel(a, x, y):
    """First correction kernel under the ``4N`` scaling."""
    x, y = _nonneg(x), _nonneg(y, "y")
    xb, yb = np.broadcast_arrays(x, y)
    return _shaped(xb, _l1(_check_a(a), xb.ravel(), yb.ravel()))


def _l2hat(a, x, y):
    jx, px = _jp(a, x)
    jy, py = _jp(a, y)
    return -(
        (a * a + x + y) * jx * jy + px * py + 2.0 * jx * py + 2.0 * px * jy
    ) / 192.0


def _l2hat_matrix(a, x):
    j, p = _jp(a, x)
    J = np.outer(j, j)
    return -((a * a + x[:, None] + x[None, :]) * J + np.outer(p, p)
             + 2.0 * np.outer(j, p) + 2.0 * np.outer(p, j)) / 192.0


def _l2(a, x, y):
    jx, px = _jp(a, x)
    jy, py = _jp(a, y)
    return -(
        (a * a + x + y) * jx * jy + px * py - (3.0 * a * a - 2.0) * (jx * py + px * jy)
    ) / 192.0


def l2hat_kernel_fn(a):
    """:class:`KernelFn` for the ``1/N^2`` kernel under the ``4N + 2a`` scaling."""
    a = _check_a(a)
    return KernelFn(
        eval=lambda x, y: _l2hat(a, x, y),
        diag=lambda x: _l2hat(a, x, x),
        exponent=endpoint_exponent(a),
        name=f"L2hat(a={a:g})",
        matrix_fn=lambda x: _l2hat_matrix(a, x),
    )


def l2hat_kernel(a, x, y):
    """Second-order correction kernel under the ``4N + 2a`` scaling.

    ``-(1/192)[(a^2+x+y) J J + sqrt(xy) J'J' + 2 sqrt(y) J J' + 2 sqrt(x) J' J]``
    """
    x, y = _nonneg(x), _nonneg(y, "y")
    xb, yb = np.broadcast_arrays(x, y)
    return _shaped(xb, _l2hat(_check_a(a), xb.ravel(), yb.ravel()))


def l2_kernel(a, x, y):
    """Second-order correction kernel under the plain ``4N`` scaling."""
    x, y = _nonneg(x), _nonneg(y, "y")
    xb, yb = np.broadcast_arrays(x, y)
    return _shaped(xb, _l2(_check_a(a), xb.ravel(), yb.ravel()))


def rho_inf0(a, x):
    """Hard-edge density ``(J_a^2 - J_{a+1} J_{a-1}) / 4`` at ``sqrt x``."""
    x = _nonneg(x)
    return _shaped(x, _kb_diag(_check_a(a), x.ravel()))


def rho_hat2(a, x):
    """``1/N^2`` density correction under the ``4N + 2a`` scaling.

    ``-(1/192)[(2x + a^2) J_a^2 + 4 sqrt(x) J_a J_a' + x J_a'^2]``
    """
    x = _nonneg(x)
    a = _check_a(a)
    j, p = _jp(a, x.ravel())
    out = -((2.0 * x.ravel() + a * a) * j * j + 4.0 * j * p + p * p) / 192.0
    return _shaped(x, out)


def scaled_kernel_expansion_residual(p, x, y, order, scaling="optimal"):
    """Finite-N kernel at hard-edge scaling minus its truncated large-N expansion.

    Parameters
    ----------
    p : EnsembleParams
        ``beta == 2``.
    x, y : float or array_like
        Scaled arguments.
    order : {0, 1, 2}
        Highest power of ``1/N`` retained in the expansion.
    scaling : {"optimal", "naive"}
        ``"optimal"`` uses ``c = 4N + 2a`` and the expansion
        ``K_inf + L2hat / N^2``; ``"naive"`` uses ``c = 4N`` and
        ``K_inf + L1 / N + L2 / N^2``.

    Returns
    -------
    float or ndarray
        ``K_N(x/c, y/c)/c`` minus the expansion through ``order``.
    """
    if order not in (0, 1, 2):
        raise DomainError("order must be 0, 1 or 2")
    if p.beta != 2:
        raise DomainError("kernel expansion is defined for beta = 2 only")
    N, a = p.N, p.a
    x, y = np.broadcast_arrays(_pos(x), _pos(y, "y"))
    if scaling == "optimal":
        c = 4.0 * N + 2.0 * a
        terms = [None, None, lambda: l2hat_kernel_fn(a)(x, y)]
    elif scaling == "naive":
        c = 4.0 * N
        terms = [None, lambda: l1_kernel_fn(a)(x, y), lambda: l2_kernel(a, x, y)]
    else:
        raise DomainError(f"unknown scaling {scaling!r}")
    res = kn_finite_kernel(p)(x / c, y / c) / c - bessel_kernel(a)(x, y)
    for k in range(1, order + 1):
        if terms[k] is not None:
            res = res - terms[k]() / N**k
    return res
