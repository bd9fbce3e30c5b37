"""Monte Carlo sampling of the Laguerre beta ensemble.

Eigenvalues with joint density proportional to
``prod x_i^a exp(-beta x_i/2) prod |x_j - x_k|^beta`` are the squared singular
values, divided by ``beta``, of the lower bidiagonal matrix with diagonal
``chi_{2a + 2 + beta(N - i)}`` (``i = 1..N``) and subdiagonal
``chi_{beta(N - i)}`` (``i = 1..N-1``), all independent.

Sampling runs in fixed-size chunks, each with its own stream spawned from one
``SeedSequence``; per-chunk results are integer counts, so the merged output
does not depend on the number of worker threads.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import math
import os
import warnings

import numpy as np
from scipy.linalg import eigvalsh_tridiagonal

from .errors import ConfigError, DomainError
from .kernels import EnsembleParams

__all__ = [
    "SampleConfig",
    "HistogramResult",
    "GapEstimate",
    "bidiagonal_dof",
    "sample_tridiagonal",
    "sample_bidiagonal",
    "sturm_count",
    "kth_smallest_eigenvalue",
    "smallest_eigenvalue",
    "hard_edge_factor",
    "sample_smallest",
    "smallest_histogram",
    "figure1_statistic",
    "empirical_gap",
]

CHUNK = 65536
BISECT_RTOL = 1e-12


@dataclass(frozen=True)
class SampleConfig:
    """Monte Carlo job description.

    Attributes
    ----------
    params : EnsembleParams
    n_samples : int
        At least 1000.
    seed : int
        Root seed.
    bins : int
        Histogram bins on ``(0, s_max)``, at least 10.
    s_max : float
        Right end of the histogram in scaled units.
    """

    params: EnsembleParams
    n_samples: int = 10**6
    seed: int = 0
    bins: int = 100
    s_max: float = 100.0

    def __post_init__(self):
        if int(self.n_samples) != self.n_samples or self.n_samples < 1000:
            raise ConfigError("n_samples must be an integer of at least 1000")
        if int(self.bins) != self.bins or self.bins < 10:
            raise ConfigError("bins must be an integer of at least 10")
        if not self.s_max > 0:
            raise ConfigError("s_max must be positive")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class HistogramResult:
    """Histogram of scaled smallest eigenvalues.

    ``normalized_density`` is ``counts / (n_samples * width)``, so it
    integrates to the fraction of samples inside ``(0, s_max)``;
    ``mass_beyond`` is the remainder.
    """

    bin_edges: np.ndarray
    counts: np.ndarray
    normalized_density: np.ndarray
    std_error: np.ndarray
    n_samples: int
    mass_beyond: float


@dataclass(frozen=True)
class GapEstimate:
    """Empirical survival function ``P(scaled minimum > s)`` with binomial errors."""

    s: np.ndarray
    survival: np.ndarray
    std_error: np.ndarray
    n_samples: int


def bidiagonal_dof(N, beta, a):
    """Chi degrees of freedom ``(diagonal, subdiagonal)`` of the bidiagonal model."""
    i = np.arange(1, N + 1)
    return 2.0 * a + 2.0 + beta * (N - i), beta * (N - i[:-1])


def sample_tridiagonal(params, rng, size):
    """``size`` draws of ``B^T B / beta`` as (diagonal, off-diagonal) arrays.

    Returns arrays of shape ``(size, N)`` and ``(size, N - 1)``.
    """
    N, beta, a = params.N, params.beta, params.a
    kd, ks = bidiagonal_dof(N, beta, a)
    # chi_k^2 = 2 Gamma(k/2)
    x2 = 2.0 * rng.standard_gamma(kd / 2.0, size=(size, N))
    y2 = 2.0 * rng.standard_gamma(ks / 2.0, size=(size, N - 1)) if N > 1 else np.zeros((size, 0))
    d = x2.copy()
    d[:, :-1] += y2
    e = np.sqrt(y2 * x2[:, 1:])
    return d / beta, e / beta


def sample_bidiagonal(params, rng):
    """One draw of the ``N`` eigenvalues, in increasing order."""
    if not params.beta > 0 or not params.a > -1:
        raise DomainError("need beta > 0 and a > -1")
    d, e = sample_tridiagonal(params, rng, 1)
    if params.N == 1:
        return d[0].copy()
    return eigvalsh_tridiagonal(d[0], e[0])


def sturm_count(d, e, x):
    """Number of eigenvalues below ``x`` for each symmetric tridiagonal in a batch.

    Parameters
    ----------
    d : ndarray, shape (n, N)
    e : ndarray, shape (n, N - 1)
    x : ndarray, shape (n,)
    """
    n, N = d.shape
    tiny = np.finfo(float).tiny
    count = np.zeros(n, dtype=np.int64)
    q = d[:, 0] - x
    for i in range(N):
        if i:
            q = d[:, i] - x - e[:, i - 1] ** 2 / q
        q = np.where(q == 0.0, -tiny, q)
        count += q < 0
    return count


def kth_smallest_eigenvalue(d, e, k, rtol=BISECT_RTOL):
    """``k``-th smallest eigenvalue (1-based) of positive semidefinite tridiagonals.

    Bisection on the Sturm count, from ``[0, upper]`` with ``upper`` the
    smallest diagonal entry for ``k = 1`` and the Gershgorin bound otherwise.
    """
    d = np.atleast_2d(np.asarray(d, float))
    e = np.asarray(e, float).reshape(d.shape[0], -1)
    n, N = d.shape
    k = np.broadcast_to(np.asarray(k, dtype=np.int64), (n,))
    off = np.zeros((n, N))
    if N > 1:
        off[:, :-1] += np.abs(e)
        off[:, 1:] += np.abs(e)
    hi = np.where(k == 1, d.min(axis=1), (d + off).max(axis=1))
    lo = np.zeros(n)
    for _ in range(2000):
        mid = 0.5 * (lo + hi)
        up = sturm_count(d, e, mid) >= k
        hi = np.where(up, mid, hi)
        lo = np.where(up, lo, mid)
        if np.all(hi - lo <= rtol * hi):
            break
    return 0.5 * (lo + hi)


def smallest_eigenvalue(d, e=None):
    """Smallest eigenvalue of a positive semidefinite symmetric tridiagonal.

    Parameters
    ----------
    d : array_like
        Diagonal, or a square tridiagonal matrix when ``e`` is None.
    e : array_like, optional
        Off-diagonal.
    """
    d = np.asarray(d, float)
    if e is None:
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise DomainError("expected a square matrix or (diagonal, off-diagonal)")
        e = np.diag(d, 1)
        d = np.diag(d)
    return float(kth_smallest_eigenvalue(d[None, :], np.asarray(e, float)[None, :], 1)[0])


def hard_edge_factor(params):
    """Scale ``4(N + a/beta)`` mapping eigenvalues to hard-edge units."""
    return 4.0 * (params.N + params.a / params.beta)


def _chunk_smallest(params, seed_seq, size):
    rng = np.random.default_rng(seed_seq)
    d, e = sample_tridiagonal(params, rng, size)
    if params.xi == 1:
        k = np.ones(size, dtype=np.int64)
    else:
        # first surviving eigenvalue after independent deletions
        k = rng.geometric(params.xi, size=size)
    out = np.full(size, np.inf)
    live = k <= params.N
    if np.any(live):
        out[live] = kth_smallest_eigenvalue(d[live], e[live], k[live])
    return out * hard_edge_factor(params)


def _chunks(n_samples, seed):
    sizes = [CHUNK] * (n_samples // CHUNK)
    if n_samples % CHUNK:
        sizes.append(n_samples % CHUNK)
    return sizes, np.random.SeedSequence(seed).spawn(len(sizes))


def _threads(threads):
    if threads is None:
        threads = int(os.environ.get("HARDEDGE_THREADS", os.cpu_count() or 1))
    return max(1, int(threads))


def _map_chunks(cfg, reduce_chunk, threads=None):
    sizes, seqs = _chunks(cfg.n_samples, cfg.seed)

    def job(i):
        return reduce_chunk(_chunk_smallest(cfg.params, seqs[i], sizes[i]))

    nt = _threads(threads)
    if nt == 1:
        return [job(i) for i in range(len(sizes))]
    with ThreadPoolExecutor(nt) as pool:
        return list(pool.map(job, range(len(sizes))))


def sample_smallest(cfg, threads=None):
    """All scaled (and thinned) smallest eigenvalues, in deterministic order."""
    return np.concatenate(_map_chunks(cfg, lambda v: v, threads))


def smallest_histogram(cfg, threads=None):
    """Histogram of scaled smallest eigenvalues on ``(0, s_max)``."""
    edges = np.linspace(0.0, cfg.s_max, cfg.bins + 1)
    parts = _map_chunks(cfg, lambda v: np.histogram(v, edges)[0].astype(np.int64), threads)
    counts = np.sum(parts, axis=0)
    n = cfg.n_samples
    width = np.diff(edges)
    p = counts / n
    return HistogramResult(
        bin_edges=edges,
        counts=counts,
        normalized_density=p / width,
        std_error=np.sqrt(p * (1 - p) / n) / width,
        n_samples=n,
        mass_beyond=float(1.0 - counts.sum() / n),
    )


def _default_gap_curve(params):
    from .exactseries import gap_a1_exact
    from .fredholm import gap_with_correction

    if params.beta != 2:
        raise DomainError("the finite-N correction curve is available at beta = 2 only")
    if params.a == 1 and params.xi == 1:
        return lambda s: gap_a1_exact(2.0, s)
    return lambda s: gap_with_correction(params.a, s, params.xi)


def figure1_statistic(cfg, theory=None, threads=None, histogram=None):
    """Compare ``N^2 (p_N - p_inf)`` from samples with the predicted correction.

    Parameters
    ----------
    cfg : SampleConfig
    theory : callable, optional
        ``theory(s) -> (E_hard(s), c2(s))``.  Bin averages of the densities
        ``-dE/ds`` and ``-dc2/ds`` are taken as differences over bin edges.
        Defaults to the exact ``a = 1`` series or the Fredholm route.
    threads : int, optional
    histogram : HistogramResult, optional
        Reuse a histogram instead of sampling.

    Returns
    -------
    hist : HistogramResult
    difference : ndarray
        Empirical ``N^2 (p_N - p_inf)`` per bin.
    predicted : ndarray
        Bin average of ``-dc2/ds``.
    z : ndarray
        ``(difference - predicted) / se`` with ``se`` the binomial standard
        error at the predicted bin probability.
    """
    if theory is None:
        theory = _default_gap_curve(cfg.params)
    hist = smallest_histogram(cfg, threads) if histogram is None else histogram
    edges = hist.bin_edges
    width = np.diff(edges)
    vals = np.array([theory(float(s)) for s in edges])
    E, c2 = vals[:, 0], vals[:, 1]
    N2 = float(cfg.params.N) ** 2
    p_inf = -np.diff(E) / width
    predicted = -np.diff(c2) / width
    difference = N2 * (hist.normalized_density - p_inf)
    prob = np.clip(-np.diff(E + c2 / N2), 0.0, 1.0)
    se = N2 * np.sqrt(prob * (1 - prob) / hist.n_samples) / width
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(se > 0, (difference - predicted) / se, 0.0)
        rel = np.abs(se / difference)
    if np.nanmedian(rel) > 0.5:
        warnings.warn("insufficient samples: median relative standard error exceeds 50%",
                      RuntimeWarning, stacklevel=2)
    return hist, difference, predicted, z


def empirical_gap(cfg, s_grid, threads=None):
    """Empirical ``P(scaled, thinned minimum > s)`` on ``s_grid``.

    Returns
    -------
    GapEstimate
    """
    s = np.asarray(s_grid, float)
    order = np.sort(s)

    def survivors(v):
        v = np.sort(v)
        return v.size - np.searchsorted(v, order, side="right")

    counts = np.sum(_map_chunks(cfg, survivors, threads), axis=0)
    n = cfg.n_samples
    surv = np.empty_like(s)
    surv[np.argsort(s, kind="stable")] = counts / n
    surv = np.where(s <= 0, 1.0, surv)
    return GapEstimate(s=s, survival=surv, std_error=np.sqrt(surv * (1 - surv) / n), n_samples=n)


def theoretical_binomial_se(p, n):
    """Standard error of a proportion ``p`` estimated from ``n`` draws."""
    return math.sqrt(max(p * (1 - p), 0.0) / n)
