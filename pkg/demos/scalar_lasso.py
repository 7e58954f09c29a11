"""Continuation on a one-dimensional lasso.

min_u 0.5 (u - 2)^2 + lam |u| has the minimiser u = 2 - lam for lam < 2.
Three decreasing weight sequences all converge to it, at very different
speeds: the geometric ones settle in a few hundred steps, the slowly
decaying power sequence is still visibly off after ten thousand.
"""

import numpy as np

from fpcontinuation import schedules as S
from fpcontinuation.objective import CompositeProblem, SmoothTerm, l1_term
from fpcontinuation.solver import SolverConfig, solve_continuation

lam = 0.5
f = SmoothTerm(lambda u: 0.5 * float((u - 2) @ (u - 2)), lambda u: u - 2.0, 1.0, dim=1)
p = CompositeProblem(f, l1_term(), lam)

print(f"target lambda {lam}, minimiser {2 - lam}")
for name, s in S.standard_schedules(lam).items():
    r = solve_continuation(p, s, np.zeros(1),
                           SolverConfig(alpha=1.0, max_iter=10_000, step_tol=1e-13))
    print(f"{name:17s} lam_0={s.eval(0):.3f}  sum|lam_n - lam|={s.summability():8.3f}  "
          f"iterations={r.iterations:6d}  error={abs(r.u_hat[0] - 1.5):.2e}")

# the error of the power schedule is the weight offset itself
s = S.power(lam)
print(f"power offset at n=9999: {s.eval(9999) - lam:.2e}")
