"""Trade-off (Pareto) curve sampled through penalised solves.

Each fixed-lambda minimiser ``u(lam)`` gives a point ``(g(u), f(u))`` on the
graph of ``phi(tau) = min{f(u) : g(u) <= tau}``; the slope there is ``-lam``.
Between samples the curve is interpolated linearly, which over-estimates the
convex ``phi`` and keeps the "on or above" comparison conservative.
"""

import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError
from .solver import SolverConfig, SolveTrace, solve_fixed

logger = logging.getLogger(__name__)

__all__ = [
    "ParetoPoint",
    "ParetoCurve",
    "SlopeReport",
    "PathReport",
    "log_grid",
    "reference_curve",
    "slope_check",
    "path_vs_curve",
    "lcurve_corner",
]


@dataclass(frozen=True)
class ParetoPoint:
    lam: float
    tau: float
    f_val: float
    solve_iterations: int = 0
    residual_tol: float = math.nan


@dataclass
class ParetoCurve:
    points: list
    lambda_grid: list = field(default_factory=list)
    # minimisers in grid order; kept only when requested
    solutions: list = field(default=None, repr=False)

    def __post_init__(self):
        self.points = sorted(self.points, key=lambda p: p.tau)

    def __len__(self):
        return len(self.points)

    @property
    def taus(self):
        return np.array([p.tau for p in self.points])

    @property
    def fs(self):
        return np.array([p.f_val for p in self.points])

    @property
    def lambdas(self):
        return np.array([p.lam for p in self.points])

    def interpolate(self, tau):
        return np.interp(tau, self.taus, self.fs)

    def monotone_violation(self):
        """Largest increase of f between consecutive points (<= 0 when non-increasing)."""
        d = np.diff(self.fs)
        return float(d.max()) if d.size else -math.inf

    def slopes(self):
        dt = np.diff(self.taus)
        keep = dt > 0
        return np.diff(self.fs)[keep] / dt[keep]

    def convexity_violation(self):
        """Largest decrease between consecutive segment slopes (<= 0 when convex)."""
        d = -np.diff(self.slopes())
        return float(d.max()) if d.size else -math.inf

    def is_monotone(self, slack=1e-10):
        return self.monotone_violation() <= slack

    def is_convex(self, slack=1e-8):
        return self.convexity_violation() <= slack


def log_grid(lo=1e-3, hi=1e-1, num=30):
    """Log-spaced lambda values, largest first."""
    return list(np.geomspace(hi, lo, int(num)))


def reference_curve(problem, lambda_grid, cfg: SolverConfig, warm_start=True, u0=None,
                    workers=1, keep_solutions=False) -> ParetoCurve:
    """One fixed-lambda solve per grid value.

    With ``warm_start`` the grid is traversed from the largest lambda down
    and each solve starts at the previous minimiser. Without it every solve
    starts at ``u0`` and the solves may be spread over ``workers`` threads.
    """
    grid = [float(v) for v in lambda_grid]
    if not grid or any(not v > 0 for v in grid):
        raise ValueError("lambda grid must be non-empty and positive")
    dim = problem.f.dim
    start = np.zeros(dim) if u0 is None else np.asarray(u0, dtype=float)

    def solve(lam, init):
        try:
            return solve_fixed(problem.with_lambda(lam), init, cfg)
        except NumericalError as exc:
            raise NumericalError(f"reference solve diverged at lambda={lam}: {exc}") from exc

    results = []
    if warm_start:
        order = sorted(grid, reverse=True)
        u = start
        for lam in order:
            r = solve(lam, u)
            results.append((lam, r))
            u = r.u_hat
    else:
        if workers > 1:
            with ThreadPoolExecutor(workers) as pool:
                res = list(pool.map(lambda lam: solve(lam, start), grid))
        else:
            res = [solve(lam, start) for lam in grid]
        results = list(zip(grid, res))

    points = []
    for lam, r in results:
        if not r.converged:
            logger.info("reference solve at lambda=%.4g stopped at max_iter", lam)
        last = r.trace[-1] if len(r.trace) else None
        points.append(ParetoPoint(
            lam=lam,
            tau=problem.g.value(r.u_hat),
            f_val=problem.f.value(r.u_hat),
            solve_iterations=r.iterations,
            residual_tol=last.step_norm if last is not None else 0.0,
        ))
    sols = [r.u_hat for _, r in results] if keep_solutions else None
    return ParetoCurve(points, grid, sols)


@dataclass
class SlopeReport:
    tau: np.ndarray
    lam: np.ndarray
    slope: np.ndarray
    abs_deviation: np.ndarray
    rel_deviation: np.ndarray
    skipped: int = 0

    @property
    def max_rel_deviation(self):
        return float(self.rel_deviation.max()) if self.rel_deviation.size else 0.0

    def as_dict(self):
        return {"max_rel_deviation": self.max_rel_deviation,
                "max_abs_deviation": float(self.abs_deviation.max()) if self.abs_deviation.size else 0.0,
                "skipped": self.skipped}


def slope_check(curve: ParetoCurve) -> SlopeReport:
    """Compare centred divided differences at interior points with ``-lam``."""
    if len(curve) < 3:
        raise ValueError("slope check needs at least three points")
    t, f, lam = curve.taus, curve.fs, curve.lambdas
    rows = []
    skipped = 0
    for i in range(1, len(t) - 1):
        dt = t[i + 1] - t[i - 1]
        if dt <= 0:
            warnings.warn(f"degenerate segment around tau={t[i]:.6g}; point skipped", stacklevel=2)
            skipped += 1
            continue
        s = (f[i + 1] - f[i - 1]) / dt
        rows.append((t[i], lam[i], s, abs(s + lam[i]), abs(s + lam[i]) / lam[i]))
    cols = np.array(rows).reshape(-1, 5).T
    return SlopeReport(*cols, skipped=skipped)


@dataclass
class PathReport:
    g: np.ndarray
    f: np.ndarray
    f_curve: np.ndarray
    excess: np.ndarray
    in_range: np.ndarray

    def _stat(self, fn, mask):
        v = self.excess[mask]
        return float(fn(v)) if v.size else math.nan

    @property
    def max_excess(self):
        return self._stat(np.max, self.in_range)

    @property
    def mean_excess(self):
        return self._stat(np.mean, self.in_range)

    @property
    def min_excess(self):
        return self._stat(np.min, self.in_range)

    @property
    def n_clipped(self):
        return int((~self.in_range).sum())

    def as_dict(self, per_point=False):
        d = {"max_excess": self.max_excess, "mean_excess": self.mean_excess,
             "min_excess": self.min_excess, "points": int(self.g.size),
             "clipped": self.n_clipped,
             "max_excess_all": self._stat(np.max, np.ones_like(self.in_range))}
        if per_point:
            d["excess"] = self.excess.tolist()
        return d


def path_vs_curve(trace, curve: ParetoCurve) -> PathReport:
    """Relative f-excess of a path over the curve interpolant at equal g.

    ``trace`` is a :class:`SolveTrace` or an ``(N, 2)`` array of ``(g, f)``.
    Points whose g lies outside the sampled tau range are compared against
    the nearest endpoint (with a warning) and left out of the summary
    statistics.
    """
    if isinstance(trace, SolveTrace):
        g, f = trace.g, trace.f
    else:
        arr = np.asarray(trace, dtype=float).reshape(-1, 2)
        g, f = arr[:, 0], arr[:, 1]
    taus = curve.taus
    in_range = (g >= taus[0]) & (g <= taus[-1])
    if not in_range.all():
        warnings.warn(f"{int((~in_range).sum())} path points outside the curve's g-range; "
                      "clipped", stacklevel=2)
    fc = curve.interpolate(np.clip(g, taus[0], taus[-1]))
    excess = (f - fc) / np.abs(fc)
    return PathReport(g, f, fc, excess, in_range)


def lcurve_corner(curve: ParetoCurve):
    """Lambda at the point of largest Menger curvature of ``(log tau, log f)``."""
    if len(curve) < 3:
        return curve.points[0].lam
    x, y = np.log(curve.taus), np.log(curve.fs)
    best, best_k = None, -math.inf
    for i in range(1, len(x) - 1):
        a = np.array([x[i - 1], y[i - 1]])
        b = np.array([x[i], y[i]])
        c = np.array([x[i + 1], y[i + 1]])
        cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        den = np.linalg.norm(b - a) * np.linalg.norm(c - b) * np.linalg.norm(c - a)
        if den == 0:
            continue
        k = 2.0 * cross / den
        if k > best_k:
            best, best_k = curve.points[i].lam, k
    return best if best is not None else curve.points[len(curve) // 2].lam
