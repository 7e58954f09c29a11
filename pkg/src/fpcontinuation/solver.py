"""Proximal-gradient iteration with a varying penalty weight.

``u_{n+1} = prox_{alpha lam_n g}(u_n - alpha grad f(u_n))``

With a constant schedule this is the plain forward-backward (ISTA) method.
Two optional monitors run alongside the iteration:

* the epsilon certificate: ``u_{n+1}`` is an inexact minimiser of the
  target-lambda prox subproblem, with gap bounded by
  ``alpha * M * |lam - lam_n|``;
* the ergodic rate: ``F(mean(u_1..u_{n+1})) - F(u_ref)`` is bounded by
  ``(||u_0 - u_ref||^2 + M lam_bar) / (2 alpha (n + 1))``.
"""

import logging
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ConfigurationError, NumericalError
from .objective import CompositeProblem
from .schedules import LambdaSchedule, ValidationReport

logger = logging.getLogger(__name__)

__all__ = [
    "SolverConfig",
    "TracePoint",
    "SolveTrace",
    "SolveResult",
    "RateReport",
    "prox_grad_step",
    "solve_continuation",
    "solve_fixed",
    "epsilon_certificate",
    "rate_bound_check",
    "TRACE_COLUMNS",
]

TRACE_COLUMNS = ("n", "lambda_n", "f", "g", "F_lambda", "step_norm", "eps_n", "gap_n", "F_avg")


@dataclass(frozen=True)
class SolverConfig:
    """Iteration settings.

    ``record_every=None`` records every iteration when ``max_iter < 10_000``
    and every tenth otherwise. The solver only stops on ``step_tol`` once
    ``|lam_n - lam| <= lambda_tol * lam``; ``step_tol=None`` always runs
    ``max_iter`` iterations.
    """

    alpha: float
    max_iter: int = 5000
    step_tol: float = 1e-8
    record_every: int = None
    monitor_rate: bool = False
    monitor_eps: bool = False
    lambda_tol: float = 1e-3
    divergence_factor: float = 1e6

    def decimation(self):
        if self.record_every is not None:
            return max(1, int(self.record_every))
        return 1 if self.max_iter < 10_000 else 10

    def as_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class TracePoint:
    """State after iteration ``n``: ``f_val``, ``g_val`` and ``F_lambda_val`` refer to ``u_{n+1}``."""

    n: int
    lambda_n: float
    f_val: float
    g_val: float
    F_lambda_val: float
    step_norm: float
    eps_n: float = math.nan
    gap_n: float = math.nan
    F_avg: float = math.nan


class SolveTrace:
    """Column store of recorded iterations."""

    def __init__(self, capacity):
        self._data = np.full((len(TRACE_COLUMNS), capacity), np.nan)
        self._size = 0

    def append(self, *row):
        if self._size == self._data.shape[1]:
            self._data = np.concatenate([self._data, np.full_like(self._data, np.nan)], axis=1)
        self._data[:, self._size] = row
        self._size += 1

    def __len__(self):
        return self._size

    def column(self, name):
        return self._data[TRACE_COLUMNS.index(name), :self._size].copy()

    def __getattr__(self, name):
        if name in TRACE_COLUMNS:
            return self.column(name)
        raise AttributeError(name)

    def __getitem__(self, i):
        row = self._data[:, :self._size][:, i]
        return TracePoint(int(row[0]), *map(float, row[1:]))

    def __iter__(self):
        return (self[i] for i in range(self._size))

    def as_array(self):
        return self._data[:, :self._size].T.copy()

    @classmethod
    def from_rows(cls, rows):
        rows = np.asarray(rows, dtype=float).reshape(-1, len(TRACE_COLUMNS))
        t = cls(max(1, len(rows)))
        for r in rows:
            t.append(*r)
        return t


@dataclass
class SolveResult:
    u_hat: np.ndarray
    trace: SolveTrace
    converged: bool
    iterations: int
    lam: float
    alpha: float
    u0: np.ndarray = field(repr=False)
    # g(u_i) for every i = 0..iterations
    g_history: np.ndarray = field(repr=False)
    # sup_i |g(u_i) - g(ref)|, ref = u_ref if given else the final iterate
    M_running: float = 0.0
    # sup_n |g(prox_{alpha lam g}(...)) - g(u_{n+1})|; only with monitor_eps
    M_eps: float = math.nan
    # max over all iterations of gap_n - eps_n; only with monitor_eps
    eps_worst_excess: float = math.nan
    rate_monitor: bool = False
    validation: ValidationReport = None
    schedule: LambdaSchedule = None
    config: SolverConfig = None

    def sup_g_deviation(self, u_ref, g):
        """Retroactive ``M = sup_i |g(u_i) - g(u_ref)|`` over the run.

        ``g`` is a :class:`ProxTerm` or a plain callable.
        """
        g_ref = g.value(u_ref) if hasattr(g, "value") else g(u_ref)
        return float(np.max(np.abs(self.g_history - g_ref)))


def prox_grad_step(p: CompositeProblem, u, alpha, lambda_n, grad=None):
    """One forward-backward step ``prox_{alpha lambda_n g}(u - alpha grad f(u))``."""
    if not alpha > 0 or not lambda_n > 0:
        raise ConfigurationError("alpha and lambda_n must be positive")
    if grad is None:
        grad = p.f.gradient(u)
    _check_finite(grad)
    return p.g.prox(u - alpha * grad, alpha * lambda_n)


def _check_finite(v):
    if not np.all(np.isfinite(v)):
        bad = int(np.flatnonzero(~np.isfinite(v))[0])
        raise NumericalError(f"non-finite gradient entry at index {bad}")


def _prox_objective_diff(g, a, b, x, t):
    # phi(a) - phi(b) for phi(z) = 0.5||z - x||^2 + t g(z), written to avoid cancellation
    return 0.5 * float((a - b) @ (a + b - 2.0 * x)) + t * (g.value(a) - g.value(b))


def epsilon_certificate(p: CompositeProblem, u_n, u_next, alpha, lambda_n, M):
    """Inexactness of ``u_next`` for the target-lambda prox subproblem at ``u_n``.

    Returns ``(gap, eps)`` where ``gap = phi(u_next) - min phi`` for
    ``phi(z) = 0.5||z - (u_n - alpha grad f(u_n))||^2 + alpha lam g(z)`` and
    ``eps = alpha * M * |lam - lambda_n|``.
    """
    fwd = u_n - alpha * p.f.gradient(u_n)
    exact = p.g.prox(fwd, alpha * p.lam)
    gap = _prox_objective_diff(p.g, u_next, exact, fwd, alpha * p.lam)
    return gap, alpha * M * abs(p.lam - lambda_n)


def _value_and_gradient(f):
    vg = getattr(f, "value_and_gradient", None)
    if vg is not None:
        return vg
    return lambda u: (f.value(u), f.gradient(u))


def solve_continuation(p: CompositeProblem, s: LambdaSchedule, u0, cfg: SolverConfig,
                       u_ref=None, callback=None) -> SolveResult:
    """Run the continuation iteration from ``u0`` with weights ``s.eval(n)``.

    Parameters
    ----------
    p : CompositeProblem
        Target problem; ``p.lam`` must equal ``s.target``.
    s : LambdaSchedule
    u0 : array
    cfg : SolverConfig
        ``alpha`` must lie in ``(0, 2/L)``. The rate monitor additionally
        needs ``alpha < 1/L`` and is switched off with a warning otherwise.
    u_ref : array, optional
        Reference minimiser used for ``M_running``.
    callback : callable, optional
        Called as ``callback(n, u_next, lambda_n)`` after every iteration;
        ``u_next`` must not be modified.

    Raises
    ------
    ConfigurationError
        Target mismatch, inadmissible step or non-finite start.
    NumericalError
        Non-finite gradient, or the objective grew by ``cfg.divergence_factor``.
    """
    if not math.isclose(s.target, p.lam, rel_tol=1e-12):
        raise ConfigurationError(
            f"schedule target {s.target} differs from problem lambda {p.lam}")
    L = p.lipschitz
    alpha = float(cfg.alpha)
    if not 0 < alpha < 2.0 / L:
        raise ConfigurationError(f"step size {alpha} outside (0, 2/L) = (0, {2.0 / L})")
    u = np.array(u0, dtype=float)
    if u.ndim != 1 or not np.all(np.isfinite(u)):
        raise ConfigurationError("u0 must be a finite 1-D vector")
    if cfg.max_iter < 0:
        raise ConfigurationError("max_iter must be non-negative")

    monitor_rate = cfg.monitor_rate
    if monitor_rate and not alpha < 1.0 / L:
        warnings.warn(f"rate monitor needs alpha < 1/L = {1.0 / L}; disabled", stacklevel=2)
        monitor_rate = False
    monitor_eps = cfg.monitor_eps

    report = s.validate()
    if not report.valid:
        logger.warning("schedule %s: %s", s.kind, "; ".join(report.issues))

    lam = p.lam
    g = p.g
    step_tol = cfg.step_tol
    vg = _value_and_gradient(p.f)
    every = cfg.decimation()
    trace = SolveTrace(cfg.max_iter // every + 2)
    g_hist = np.empty(cfg.max_iter + 1)

    fval, grad = vg(u)
    gval = g.value(u)
    g_hist[0] = gval
    F_start = fval + lam * gval
    blowup = cfg.divergence_factor * max(abs(F_start), np.finfo(float).tiny)
    avg_sum = np.zeros_like(u) if monitor_rate else None
    M_eps = 0.0
    worst = -math.inf
    converged = False
    n = -1
    for n in range(cfg.max_iter):
        lam_n = s.eval(n)
        _check_finite(grad)
        fwd = u - alpha * grad
        u_new = g.prox(fwd, alpha * lam_n)
        diff = u_new - u
        step = math.sqrt(float(diff @ diff))
        fval, grad = vg(u_new)
        gval = g.value(u_new)
        g_hist[n + 1] = gval
        F = fval + lam * gval

        eps_n = gap_n = math.nan
        if monitor_eps:
            if lam_n == lam:
                gap_n, g_exact = 0.0, gval
            else:
                exact = g.prox(fwd, alpha * lam)
                g_exact = g.value(exact)
                gap_n = _prox_objective_diff(g, u_new, exact, fwd, alpha * lam)
            M_eps = max(M_eps, abs(g_exact - gval))
            eps_n = alpha * M_eps * abs(lam - lam_n)
            worst = max(worst, gap_n - eps_n)

        if monitor_rate:
            avg_sum += u_new
        if callback is not None:
            callback(n, u_new, lam_n)

        stop = (step_tol is not None and step <= step_tol
                and abs(lam_n - lam) <= cfg.lambda_tol * lam)
        last = stop or n == cfg.max_iter - 1
        if n % every == 0 or last:
            F_avg = math.nan
            if monitor_rate:
                F_avg = p.value(avg_sum / (n + 1))
            trace.append(n, lam_n, fval, gval, F, step, eps_n, gap_n, F_avg)
            if not math.isfinite(F) or F > blowup:
                raise NumericalError(
                    f"objective diverged at iteration {n}: F = {F:.6g} (start {F_start:.6g})")
        u = u_new
        if stop:
            converged = True
            break

    iterations = n + 1
    g_hist = g_hist[:iterations + 1]
    ref_g = g.value(u_ref) if u_ref is not None else g_hist[-1]
    return SolveResult(
        u_hat=u,
        trace=trace,
        converged=converged,
        iterations=iterations,
        lam=lam,
        alpha=alpha,
        u0=np.array(u0, dtype=float),
        g_history=g_hist,
        M_running=float(np.max(np.abs(g_hist - ref_g))),
        M_eps=M_eps if monitor_eps else math.nan,
        eps_worst_excess=worst if monitor_eps and iterations else math.nan,
        rate_monitor=monitor_rate,
        validation=report,
        schedule=s,
        config=cfg,
    )


def solve_fixed(p: CompositeProblem, u0, cfg: SolverConfig, u_ref=None, callback=None) -> SolveResult:
    """Plain proximal-gradient run at ``p.lam``."""
    from .schedules import constant
    return solve_continuation(p, constant(p.lam), u0, cfg, u_ref=u_ref, callback=callback)


@dataclass
class RateReport:
    n: np.ndarray
    lhs: np.ndarray
    bound: np.ndarray
    slack: float

    @property
    def margin(self):
        return self.bound - self.lhs

    @property
    def passed(self):
        return bool(np.all(self.lhs <= self.bound + self.slack))

    @property
    def worst_margin(self):
        return float(np.min(self.margin)) if self.n.size else math.inf

    def as_dict(self):
        return {"passed": self.passed, "worst_margin": self.worst_margin, "slack": self.slack,
                "checked": int(self.n.size)}


def rate_bound_check(p: CompositeProblem, averaged, u0, u_hat_ref, alpha, lambda_bar, M,
                     slack=1e-9) -> RateReport:
    """Check ``F(u_avg_n) - F(u_ref) <= (||u0 - u_ref||^2 + M lambda_bar) / (2 alpha (n + 1))``.

    ``averaged`` is either a :class:`SolveTrace` recorded with the rate
    monitor on, or an iterable of ``(n, F(u_avg_n))`` pairs, where
    ``u_avg_n`` is the mean of ``u_1, ..., u_{n+1}``.
    """
    if isinstance(averaged, SolveTrace):
        ns, vals = averaged.n, averaged.F_avg
        if np.isnan(vals).any():
            raise ConfigurationError("trace was recorded without the rate monitor")
    else:
        pairs = np.asarray(list(averaged), dtype=float).reshape(-1, 2)
        ns, vals = pairs[:, 0], pairs[:, 1]
    F_ref = p.value(u_hat_ref)
    d0 = np.asarray(u0, dtype=float) - u_hat_ref
    bound = (float(d0 @ d0) + M * lambda_bar) / (2.0 * alpha * (ns + 1.0))
    return RateReport(ns.astype(int), vals - F_ref, bound, slack)
