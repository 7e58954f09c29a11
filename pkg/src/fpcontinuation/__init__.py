"""Proximal-gradient continuation for ``min_u f(u) + lam g(u)``.

The weight ``lam_n`` varies along the iteration and converges to the target
``lam``; the iterates trace an approximation of the trade-off curve
``(g(u), f(u))`` on the way.
"""

from .errors import ConfigurationError, FPCError, MonitorViolation, NonConvergenceError, NumericalError
from .objective import CompositeProblem, ProxTerm, SmoothTerm, l1_term, least_squares_term, soft_threshold
from .pareto import ParetoCurve, path_vs_curve, reference_curve, slope_check
from .schedules import LambdaSchedule, parse_schedule
from .solver import SolverConfig, SolveResult, rate_bound_check, solve_continuation, solve_fixed

__version__ = "0.1.0"
