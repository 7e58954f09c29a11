"""Trade-off curve of a small lasso and the slope identity.

Each fixed-lambda minimiser lands on the curve phi(tau) = min{f : g <= tau},
where the slope equals -lambda. The sampled curve is non-increasing and
convex; centred differences recover the slope to within the grid spacing.
"""

import numpy as np

from fpcontinuation.linops import matrix_operator
from fpcontinuation.objective import CompositeProblem, l1_term, least_squares_term
from fpcontinuation.pareto import lcurve_corner, log_grid, reference_curve, slope_check
from fpcontinuation.solver import SolverConfig

rng = np.random.default_rng(1234)
M = rng.standard_normal((30, 20))
b = M @ (rng.standard_normal(20) * (rng.random(20) < 0.3)) + 0.05 * rng.standard_normal(30)
L = 2 * np.linalg.norm(M, 2) ** 2
f = least_squares_term(matrix_operator(M), b, lipschitz=L)
lam_max = np.abs(2 * M.T @ b).max()
p = CompositeProblem(f, l1_term(), lam_max)

grid = log_grid(1e-3 * lam_max, 0.9 * lam_max, 25)
curve = reference_curve(p, grid, SolverConfig(alpha=1 / L, max_iter=100_000, step_tol=1e-12))
print(f"{'lambda':>10s} {'tau':>10s} {'f':>12s}")
for q in curve.points[::4]:
    print(f"{q.lam:10.4g} {q.tau:10.4f} {q.f_val:12.6f}")
print("monotone violation ", curve.monotone_violation())
print("convexity violation", curve.convexity_violation())
print("max relative slope error", slope_check(curve).max_rel_deviation)
print("L-curve corner lambda", lcurve_corner(curve))
