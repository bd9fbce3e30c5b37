"""Command-line front end.

Every subcommand writes a CSV (17 significant digits, header row) to
``--out`` or standard output, and, with ``--out``, a JSON sidecar
``<out>.json`` holding the configuration, version, start time, wall time and
warnings.

Grids are given as ``min:max:count`` or ``min:max:count:log``; a single
number is a one-point grid.

Exit codes: 0 success, 1 cross-validation breach, 2 configuration error,
3 numerical failure.
"""

import argparse
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
import datetime
import io
import json
import math
import os
import sys
import time
import warnings

import numpy as np

from . import __version__
from .errors import ConfigError, DomainError, HardEdgeError
from .kernels import EnsembleParams

__all__ = ["GridSpec", "JobConfig", "parse_grid", "run", "cross_validate", "main"]

COMMANDS = ("gap", "pdf", "density", "correction", "painleve", "recurrence", "mc", "convergence")
ROUTES = ("fredholm", "painleve", "torus", "recurrence", "exact-a1", "jack", "auto")


@dataclass(frozen=True)
class GridSpec:
    lo: float
    hi: float
    count: int
    log: bool = False

    def points(self):
        if self.count == 1:
            return np.array([self.lo])
        if self.log:
            return np.geomspace(self.lo, self.hi, self.count)
        return np.linspace(self.lo, self.hi, self.count)


def parse_grid(text):
    """Parse ``min:max:count[:log]`` or a single number."""
    parts = str(text).split(":")
    try:
        if len(parts) == 1:
            v = float(parts[0])
            return GridSpec(v, v, 1)
        if len(parts) not in (3, 4):
            raise ValueError
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ConfigError(f"grid {text!r} is not of the form min:max:count[:log]") from None
    log = len(parts) == 4
    if log and parts[3] != "log":
        raise ConfigError(f"grid {text!r}: fourth field must be 'log'")
    if n < 2:
        raise ConfigError("grid count must be at least 2")
    if hi < lo:
        raise ConfigError("grid max must not be below min")
    if log and lo <= 0:
        raise ConfigError("log grid needs a positive minimum")
    return GridSpec(lo, hi, n, log)


@dataclass(frozen=True)
class JobConfig:
    """One batch job."""

    command: str
    params: EnsembleParams
    s_grid: GridSpec
    route: str = "auto"
    output: str | None = None
    precision_bits: int | None = None
    seed: int = 0
    Ns: tuple = ()
    N0: int | None = None
    samples: int = 10**6
    bins: int = 100
    s_max: float = 100.0
    threads: int | None = None
    plot: bool = False
    warnings: list = field(default_factory=list, compare=False)


def _threads(n):
    if n is None:
        n = int(os.environ.get("HARDEDGE_THREADS", "1"))
    return max(1, int(n))


def _pmap(fn, items, threads):
    items = list(items)
    if threads == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(threads) as pool:
        return list(pool.map(fn, items))


def _is_int(v):
    return float(v) == int(v)


def _resolve_route(job):
    p, route = job.params, job.route
    from .exactseries import torus_valid

    if route == "auto":
        if p.beta == 2:
            return "fredholm"
        if p.a == 1 and p.xi == 1:
            return "exact-a1"
        if p.xi == 1 and _is_int(p.a):
            return "torus" if torus_valid(p.beta) and p.a <= 4 else "jack"
        raise ConfigError("no route covers beta != 2 with thinning or non-integer a")
    if route in ("fredholm", "painleve") and p.beta != 2:
        raise ConfigError(f"route {route} requires beta = 2")
    if route == "torus":
        if not (_is_int(p.a) and 0 <= p.a <= 4):
            raise ConfigError("route torus requires integer a in 0..4")
        if not torus_valid(p.beta):
            raise ConfigError("route torus requires 2/beta to be a positive integer")
    if route == "exact-a1" and p.a != 1:
        raise ConfigError("route exact-a1 requires a = 1")
    if route in ("torus", "exact-a1", "jack", "recurrence") and p.xi != 1:
        raise ConfigError(f"route {route} does not support thinning")
    if route in ("jack", "recurrence") and not _is_int(p.a):
        raise ConfigError(f"route {route} requires integer a")
    return route


def _gap_rows(job, route, s):
    """Rows (s, value, correction_n2, route, est_error)."""
    p = job.params
    if route == "fredholm":
        from .fredholm import gap_with_correction

        def one(x):
            if p.xi < 1:
                from .fredholm import fredholm_det
                from .kernels import bessel_kernel
                r = fredholm_det(bessel_kernel(p.a), x, p.xi)
                try:
                    c2 = gap_with_correction(p.a, x, p.xi)[1]
                except HardEdgeError:
                    c2 = math.nan
                return (x, r.value, c2, route, r.est_error)
            r = gap_with_correction(p.a, x, p.xi, full=True)
            return (x, r.value, r.correction, route, r.est_error)

        return _pmap(one, s, _threads(job.threads))
    if route == "painleve":
        from .painleve import gap_tau

        try:
            E, c2 = gap_tau(p.a, p.xi, s)
        except HardEdgeError as exc:
            job.warnings.append(f"correction unavailable: {exc}")
            E, c2 = gap_tau(p.a, p.xi, s, with_correction=False)
        return [(x, e, c, route, "") for x, e, c in zip(s, E, c2)]
    if route == "exact-a1":
        from .exactseries import gap_a1_exact

        return [(x, *gap_a1_exact(p.beta, x), route, "") for x in s]
    if route == "torus":
        from .exactseries import hard_gap_torus

        def one(x):
            if p.a == 0:
                return (x, math.exp(-p.beta * x / 8), "", route, 0.0)
            r = hard_gap_torus(p.beta, int(p.a), x)
            return (x, r.value, "", route, r.est_error)

        return _pmap(one, s, _threads(job.threads))
    if route == "jack":
        from .jack import hard_gap_jack

        return [(x, hard_gap_jack(p.beta, int(p.a), x), "", route, "") for x in s]
    if route == "recurrence":
        from .recurrence import gap_recurrence

        t = s / (4.0 * (p.N + p.a / p.beta))
        vals, rel = gap_recurrence(p.N, p.beta, int(p.a), t, job.precision_bits, return_error=True)
        return [(x, v, "", f"recurrence(N={p.N})", r * abs(v)) for x, v, r in zip(s, vals, rel)]
    raise ConfigError(f"unknown route {route}")


def _cmd_gap(job):
    route = _resolve_route(job)
    header = ["s", "value", "correction_n2", "route", "est_error"]
    return header, _gap_rows(job, route, job.s_grid.points())


def _cmd_correction(job):
    route = _resolve_route(job)
    if route not in ("fredholm", "painleve", "exact-a1"):
        raise ConfigError("the 1/N^2 coefficient is available from fredholm, painleve or exact-a1")
    rows = _gap_rows(job, route, job.s_grid.points())
    return ["s", "correction_n2", "value", "route", "est_error"], [
        (r[0], r[2], r[1], r[3], r[4]) for r in rows
    ]


def _cmd_pdf(job):
    from .fredholm import smallest_pdf

    p = job.params
    if p.beta != 2:
        raise ConfigError("pdf requires beta = 2")
    s = job.s_grid.points()
    if np.any(s <= 0):
        raise ConfigError("pdf grid must be positive")
    vals = _pmap(lambda x: smallest_pdf(p.a, x, p.xi), s, _threads(job.threads))
    return ["s", "value", "correction_n2", "route", "est_error"], [
        (x, v[0], v[1], "fredholm", "") for x, v in zip(s, vals)
    ]


def _cmd_density(job):
    p = job.params
    s = job.s_grid.points()
    if job.route == "recurrence":
        from .recurrence import density_recurrence

        c = 1.0 / (4.0 * (p.N + p.a / p.beta))
        vals = np.asarray(density_recurrence(p.N, p.beta, p.a, s * c, job.precision_bits))
        return ["s", "value", "route"], [(x, c * v, f"recurrence(N={p.N})") for x, v in zip(s, vals)]
    if p.beta == 2:
        from .kernels import rho_hat2, rho_inf0

        return ["s", "value", "correction_n2", "route"], [
            (x, float(rho_inf0(p.a, x)), float(rho_hat2(p.a, x)), "kernel") for x in s
        ]
    if _is_int(p.beta) and int(p.beta) % 2 == 0:
        from .jack import density_hard_jack

        return ["s", "value", "route"], [(x, density_hard_jack(p.beta, p.a, x), "jack") for x in s]
    raise ConfigError("density needs beta = 2, even beta, or --route recurrence")


def _cmd_painleve(job):
    from .painleve import gap_tau, solve_sigma0

    p = job.params
    if p.beta != 2:
        raise ConfigError("painleve requires beta = 2")
    s = job.s_grid.points()
    smax = min(60.0, max(1.0, math.ceil(float(np.max(s)))))
    traj = solve_sigma0(p.a, p.xi, smax)
    st = traj.state(np.where(s > 0, s, traj.x0))
    try:
        E, c2 = gap_tau(p.a, p.xi, s)
    except HardEdgeError as exc:
        job.warnings.append(f"correction unavailable: {exc}")
        E, c2 = gap_tau(p.a, p.xi, s, with_correction=False)
    sig = np.where(s > 0, st[0], 0.0)
    dsig = np.where(s > 0, st[1], np.nan)
    return ["s", "sigma0", "sigma0_prime", "value", "correction_n2"], list(zip(s, sig, dsig, E, c2))


def _cmd_recurrence(job):
    from .recurrence import limit_difference_curve

    p = job.params
    if not _is_int(p.a):
        raise ConfigError("recurrence requires integer a")
    N0 = job.N0 or 20 * p.N
    s = job.s_grid.points()
    vals = limit_difference_curve(p.N, N0, p.beta, int(p.a), s, job.precision_bits)
    return ["s", "value", "N", "N0"], [(x, v, p.N, N0) for x, v in zip(s, vals)]


def _hard_gap_value(p, s):
    from .exactseries import hard_gap
    from .fredholm import fredholm_det
    from .kernels import bessel_kernel

    if p.beta == 2 and not _is_int(p.a):
        return fredholm_det(bessel_kernel(p.a), s).value
    return hard_gap(p.beta, int(p.a), s)


def _cmd_convergence(job):
    from .exactseries import finite_gap

    p = job.params
    if not _is_int(p.a):
        raise ConfigError("convergence requires integer a")
    Ns = job.Ns or (p.N,)
    rows = []
    for x in job.s_grid.points():
        Eh = _hard_gap_value(p, x)
        prev = None
        for N in Ns:
            En = finite_gap(p.beta, int(p.a), N, x / (4.0 * (N + p.a / p.beta)))
            d = N * N * (En - Eh)
            ratio = d / prev if prev not in (None, 0.0) else ""
            rows.append((x, N, En, Eh, d, ratio))
            prev = d
    return ["s", "N", "finite_gap", "hard_gap", "scaled_difference", "ratio"], rows


def _cmd_mc(job):
    from .sampler import SampleConfig, figure1_statistic, smallest_histogram

    cfg = SampleConfig(job.params, int(job.samples), int(job.seed), int(job.bins), float(job.s_max))
    if job.params.beta == 2:
        with warnings.catch_warnings(record=True) as w:
            warnings.simplefilter("always")
            hist, diff, pred, z = figure1_statistic(cfg, threads=job.threads)
        job.warnings.extend(str(x.message) for x in w)
    else:
        hist = smallest_histogram(cfg, job.threads)
        diff = pred = z = np.full(cfg.bins, np.nan)
    e = hist.bin_edges
    rows = [
        (e[i], e[i + 1], int(hist.counts[i]), hist.normalized_density[i], hist.std_error[i],
         diff[i], pred[i], z[i])
        for i in range(cfg.bins)
    ]
    return ["bin_lo", "bin_hi", "count", "density", "std_error", "scaled_difference",
            "predicted", "z"], rows


_HANDLERS = {
    "gap": _cmd_gap,
    "pdf": _cmd_pdf,
    "density": _cmd_density,
    "correction": _cmd_correction,
    "painleve": _cmd_painleve,
    "recurrence": _cmd_recurrence,
    "mc": _cmd_mc,
    "convergence": _cmd_convergence,
}


def _fmt(v):
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if v is None:
        return ""
    return format(float(v), ".17g")


def _csv_text(header, rows):
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for r in rows:
        buf.write(",".join(_fmt(v) for v in r) + "\n")
    return buf.getvalue()


_PLOT_TEMPLATE = """\
# plot the columns of {csv}
import csv
import matplotlib.pyplot as plt

with open({csv!r}) as fh:
    rows = list(csv.DictReader(fh))
x = [float(r[{x!r}]) for r in rows]
y = [float(r[{y!r}]) for r in rows]
plt.plot(x, y)
plt.xlabel({x!r})
plt.ylabel({y!r})
plt.savefig({png!r})
"""


def _config_dict(job):
    d = asdict(job)
    d.pop("warnings")
    d["s_grid"] = asdict(job.s_grid)
    d["Ns"] = list(job.Ns)
    return d


def run(job):
    """Execute ``job``; returns the exit code.

    Writes the CSV (and sidecar and optional plot script) when ``job.output``
    is set, otherwise prints the CSV.
    """
    started = datetime.datetime.now(datetime.timezone.utc).isoformat()
    t0 = time.perf_counter()
    try:
        if job.command not in _HANDLERS:
            raise ConfigError(f"unknown command {job.command}")
        header, rows = _HANDLERS[job.command](job)
    except (ConfigError, DomainError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (HardEdgeError, ArithmeticError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    text = _csv_text(header, rows)
    if job.output is None:
        sys.stdout.write(text)
        return 0
    with open(job.output, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    side = {
        "config": _config_dict(job),
        "version": __version__,
        "started_at": started,
        "wall_seconds": time.perf_counter() - t0,
        "warnings": list(job.warnings),
    }
    with open(job.output + ".json", "w", encoding="utf-8") as fh:
        json.dump(side, fh, indent=2, default=str)
    if job.plot:
        stem = os.path.splitext(job.output)[0]
        with open(stem + "_plot.py", "w", encoding="utf-8") as fh:
            fh.write(_PLOT_TEMPLATE.format(csv=job.output, x=header[0],
                                           y="z" if "z" in header else header[1],
                                           png=stem + ".png"))
    return 0


# --- cross validation -------------------------------------------------------------

def _compare(report, name, xs, u, v, tol):
    d = np.abs(np.asarray(u, float) - np.asarray(v, float))
    i = int(np.argmax(d))
    ok = bool(d[i] <= tol)
    report.append((name, float(d[i]), float(xs[i]), tol, ok))
    return ok


def cross_validate(suite="quick", l2hat=None, out=None):
    """Check that independent routes agree.

    Parameters
    ----------
    suite : {"quick", "full"}
        ``full`` uses 40 grid points and adds the finite-N rate checks.
    l2hat : callable, optional
        ``l2hat(a) -> KernelFn`` overriding the correction kernel of the
        Fredholm route (a deliberately wrong kernel must make the check fail).
    out : file-like, optional
        Where the report is printed.

    Returns
    -------
    (ok, report) : bool and list of ``(pair, max_discrepancy, at_s, tol, passed)``
    """
    from .exactseries import finite_gap, gap_a1_exact, hard_gap_torus
    from .fredholm import fredholm_det, gap_with_correction
    from .jack import finite_gap_jack, hard_gap_jack
    from .kernels import bessel_kernel
    from .painleve import gap_tau
    from .recurrence import gap_recurrence

    if suite not in ("quick", "full"):
        raise ConfigError("suite must be 'quick' or 'full'")
    n = 10 if suite == "quick" else 40
    s = np.linspace(20.0 / n, 20.0, n)
    report = []
    ok = True
    for a in (0, 1, 2):
        kw = {} if l2hat is None else {"l2hat": l2hat(a)}
        F = np.array([gap_with_correction(a, x, 1.0, **kw) for x in s])
        E_p, c2_p = gap_tau(a, 1.0, s)
        ok &= _compare(report, f"E fredholm/painleve a={a}", s, F[:, 0], E_p, 1e-6)
        ok &= _compare(report, f"c2 fredholm/painleve a={a}", s, F[:, 1], c2_p, 1e-5)
        T = [math.exp(-x / 4) if a == 0 else hard_gap_torus(2.0, a, x).value for x in s]
        ok &= _compare(report, f"E fredholm/torus a={a}", s, F[:, 0], T, 1e-6)
        if a == 1:
            X = np.array([gap_a1_exact(2.0, x) for x in s])
            ok &= _compare(report, "E fredholm/exact a=1", s, F[:, 0], X[:, 0], 1e-6)
            ok &= _compare(report, "c2 fredholm/exact a=1", s, F[:, 1], X[:, 1], 1e-5)
            ok &= _compare(report, "c2 painleve/exact a=1", s, c2_p, X[:, 1], 1e-5)
    Et = [fredholm_det(bessel_kernel(1.0), x, 0.5).value for x in s]
    Ep, _ = gap_tau(1.0, 0.5, s, with_correction=False)
    ok &= _compare(report, "E fredholm/painleve a=1 xi=0.5", s, Et, Ep, 1e-6)
    for beta, a in ((2.0 / 3.0, 2), (3.0, 1), (6.0, 2)):
        J = [hard_gap_jack(beta, a, x) for x in s]
        if beta == 2.0 / 3.0:
            T = [hard_gap_torus(beta, a, x).value for x in s]
            ok &= _compare(report, f"E torus/jack beta={beta:.4g} a={a}", s, T, J, 1e-6)
        t = s / 200.0
        R = gap_recurrence(20, beta, a, t)
        Fj = [finite_gap_jack(beta, a, 20, x) for x in t]
        ok &= _compare(report, f"E_20 recurrence/jack beta={beta:.4g} a={a}", s, R, Fj, 1e-10)
    if suite == "full":
        for beta, a in ((2.0, 1), (3.0, 1), (6.0, 2)):
            Eh = hard_gap_jack(beta, a, 8.0)
            d = [N * N * abs(finite_gap(beta, a, N, 8.0 / (4 * (N + a / beta))) - Eh)
                 for N in (50, 100, 200)]
            r = np.array([d[1] / d[0], d[2] / d[1]])
            passed = bool(np.all((r >= 0.8) & (r <= 1.25)))
            report.append((f"rate ratios beta={beta:g} a={a}", float(np.max(np.abs(r - 1))),
                           8.0, 0.25, passed))
            ok &= passed
    out = sys.stdout if out is None else out
    for name, d, x, tol, passed in report:
        print(f"{'ok  ' if passed else 'FAIL'} {name}: max |diff| {d:.3g} at s={x:.4g} "
              f"(tol {tol:g})", file=out)
    return bool(ok), report


# --- argument parsing -------------------------------------------------------------

def _build_parser():
    epilog = (
        "grids: min:max:count or min:max:count:log, or a single number. "
        "Environment: HARDEDGE_PRECISION_BITS, HARDEDGE_THREADS (flags win)."
    )
    ap = argparse.ArgumentParser(prog="hardedge", description=__doc__.splitlines()[0],
                                 epilog=epilog)
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, grid="0:20:41"):
        p.add_argument("--beta", type=float, default=2.0)
        p.add_argument("--a", type=float, default=0.0)
        p.add_argument("--xi", type=float, default=1.0)
        p.add_argument("--N", default="20", help="matrix size (comma list for convergence)")
        p.add_argument("--s", default=grid, help="grid min:max:count[:log]")
        p.add_argument("--route", choices=ROUTES, default="auto")
        p.add_argument("--out", default=None, help="CSV path; a .json sidecar is written next to it")
        p.add_argument("--precision-bits", type=int, default=None)
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--plot", action="store_true", help="also write a plotting script")

    for name in COMMANDS:
        p = sub.add_parser(name, epilog=epilog)
        common(p, "8" if name == "convergence" else ("0.5:20:40" if name == "pdf" else "0:20:41"))
        if name == "recurrence":
            p.add_argument("--N0", type=int, default=None)
        if name == "mc":
            p.add_argument("--samples", type=float, default=1e6)
            p.add_argument("--bins", type=int, default=100)
            p.add_argument("--smax", type=float, default=100.0)
            p.add_argument("--seed", type=int, default=0)
    cv = sub.add_parser("cross-validate", epilog=epilog)
    cv.add_argument("--suite", choices=("quick", "full"), default="quick")
    return ap


def _job_from_args(ns):
    Ns = tuple(int(v) for v in str(ns.N).split(",") if v)
    if not Ns:
        raise ConfigError("--N must list at least one size")
    bits = ns.precision_bits
    if bits is None and os.environ.get("HARDEDGE_PRECISION_BITS"):
        bits = int(os.environ["HARDEDGE_PRECISION_BITS"])
    params = EnsembleParams(Ns[0] if len(Ns) == 1 else max(Ns), ns.beta, ns.a, ns.xi)
    samples = getattr(ns, "samples", 1e6)
    if samples != int(samples):
        raise ConfigError("--samples must be an integer")
    return JobConfig(
        command=ns.command,
        params=params,
        s_grid=parse_grid(ns.s),
        route=ns.route,
        output=ns.out,
        precision_bits=bits,
        seed=getattr(ns, "seed", 0),
        Ns=Ns,
        N0=getattr(ns, "N0", None),
        samples=int(samples),
        bins=getattr(ns, "bins", 100),
        s_max=getattr(ns, "smax", 100.0),
        threads=_threads(ns.threads),
        plot=ns.plot,
    )


def main(argv=None):
    ns = _build_parser().parse_args(argv)
    if ns.command == "cross-validate":
        try:
            ok, _ = cross_validate(ns.suite)
        except HardEdgeError as exc:
            print(f"numerical failure: {exc}", file=sys.stderr)
            return 3
        return 0 if ok else 1
    try:
        job = _job_from_args(ns)
    except (ConfigError, DomainError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    return run(job)


if __name__ == "__main__":
    sys.exit(main())
