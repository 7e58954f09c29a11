import math
import warnings

import numpy as np
import pytest

from fpcontinuation import schedules as S
from fpcontinuation.pareto import (ParetoCurve, ParetoPoint, lcurve_corner, log_grid,
                                   path_vs_curve, reference_curve, slope_check)
from fpcontinuation.solver import SolverConfig, solve_continuation

from conftest import scalar_lasso

EXACT = SolverConfig(alpha=1.0, max_iter=1000, step_tol=1e-14)


def analytic_point(lam):
    # minimiser 2 - lam gives tau = 2 - lam, f = lam^2 / 2
    return ParetoPoint(lam, 2.0 - lam, 0.5 * lam * lam)


def test_scalar_curve_matches_closed_form():
    curve = reference_curve(scalar_lasso(1.0), [1.5, 1.0, 0.5], EXACT)
    np.testing.assert_allclose(curve.taus, [0.5, 1.0, 1.5], atol=1e-13)
    np.testing.assert_allclose(curve.fs, [1.125, 0.5, 0.125], atol=1e-13)
    rep = slope_check(curve)
    assert rep.slope[0] == pytest.approx(-1.0, abs=1e-12)
    assert rep.max_rel_deviation <= 1e-12


def test_slope_error_halves_under_refinement():
    # centred differences of the parabola f = (2 - tau)^2 / 2 are exact; use a
    # non-uniform grid so the error is first order in the spacing
    def dev(h):
        lams = [1.0 + 2 * h, 1.0, 1.0 - h]
        return slope_check(ParetoCurve([analytic_point(l) for l in lams])).abs_deviation[0]
    e1, e2 = dev(0.2), dev(0.1)
    assert e2 == pytest.approx(e1 / 2, rel=1e-9)


def test_monotone_and_convex_analytic():
    curve = ParetoCurve([analytic_point(l) for l in np.linspace(0.1, 1.9, 25)])
    assert curve.is_monotone() and curve.is_convex()
    assert curve.monotone_violation() < 0


def test_degenerate_constant_curve():
    pts = [ParetoPoint(l, t, 1.0) for l, t in [(0.3, 1.0), (0.2, 2.0), (0.1, 3.0)]]
    curve = ParetoCurve(pts)
    assert curve.is_monotone() and curve.is_convex()
    np.testing.assert_array_equal(curve.slopes(), [0.0, 0.0])
    assert curve.interpolate(2.5) == 1.0


def test_detects_violations():
    up = ParetoCurve([ParetoPoint(0.1, 1.0, 1.0), ParetoPoint(0.1, 2.0, 1.5)])
    assert not up.is_monotone()
    concave = ParetoCurve([ParetoPoint(0.1, t, 1.0 - t * t / 10) for t in (0.0, 1.0, 2.0)])
    assert concave.is_monotone() and not concave.is_convex()


def test_slope_check_skips_repeated_tau():
    pts = [ParetoPoint(0.3, 1.0, 2.0), ParetoPoint(0.2, 1.0, 2.0), ParetoPoint(0.1, 1.0, 2.0)]
    with pytest.warns(UserWarning, match="degenerate"):
        rep = slope_check(ParetoCurve(pts))
    assert rep.skipped == 1 and rep.slope.size == 0


def test_log_grid():
    g = log_grid(1e-3, 1e-1, 30)
    assert len(g) == 30 and g[0] == pytest.approx(1e-1) and g[-1] == pytest.approx(1e-3)
    assert all(a > b for a, b in zip(g, g[1:]))
    r = np.array(g[:-1]) / np.array(g[1:])
    np.testing.assert_allclose(r, r[0], rtol=1e-12)


def test_warm_and_cold_starts_agree(lasso8):
    p, M, b = lasso8
    grid = log_grid(0.3 * p.lam, 3 * p.lam, 6)
    cfg = SolverConfig(alpha=1.0 / p.lipschitz, max_iter=200_000, step_tol=1e-13)
    warm = reference_curve(p, grid, cfg)
    cold = reference_curve(p, grid, cfg, warm_start=False, workers=2)
    np.testing.assert_allclose(warm.taus, cold.taus, rtol=1e-9)
    np.testing.assert_allclose(warm.fs, cold.fs, rtol=1e-9)
    assert sum(q.solve_iterations for q in warm.points) < sum(q.solve_iterations for q in cold.points)
    assert warm.is_monotone() and warm.is_convex()


def test_curve_slopes_8dim(lasso8):
    p, _, _ = lasso8
    grid = log_grid(0.5 * p.lam, 2 * p.lam, 40)
    curve = reference_curve(p, grid, SolverConfig(alpha=1.0 / p.lipschitz, max_iter=200_000,
                                                  step_tol=1e-13))
    # the curve is piecewise quadratic, so centred slopes are close but not exact
    assert slope_check(curve).max_rel_deviation <= 0.05


def test_path_of_reference_minimisers_has_zero_excess():
    grid = [1.5, 1.2, 1.0, 0.7, 0.5]
    curve = reference_curve(scalar_lasso(1.0), grid, EXACT)
    gf = np.array([[2.0 - l, 0.5 * l * l] for l in grid])
    rep = path_vs_curve(gf, curve)
    assert rep.n_clipped == 0
    assert abs(rep.max_excess) <= 1e-12 and abs(rep.min_excess) <= 1e-12


def test_path_from_far_start_lies_above_curve(lasso8, lasso8_ref):
    p, _, _ = lasso8
    curve = reference_curve(p, log_grid(0.05 * p.lam, 20 * p.lam, 60),
                            SolverConfig(alpha=1.0 / p.lipschitz, max_iter=200_000, step_tol=1e-12))
    u0 = lasso8_ref + 3.0 * np.random.default_rng(9).standard_normal(8)
    r = solve_continuation(p, S.constant(p.lam), u0,
                           SolverConfig(alpha=1.0 / p.lipschitz, max_iter=2000, record_every=1))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rep = path_vs_curve(r.trace, curve)
    # chords over-estimate the convex curve, so points may dip slightly below
    assert rep.min_excess >= -1e-3
    assert rep.excess[rep.in_range][0] > 0.1


def test_path_clipping_warns():
    curve = ParetoCurve([analytic_point(l) for l in (1.5, 1.0, 0.5)])
    with pytest.warns(UserWarning, match="outside"):
        rep = path_vs_curve(np.array([[0.1, 2.0], [1.0, 0.5]]), curve)
    assert rep.n_clipped == 1 and rep.max_excess == pytest.approx(0.0, abs=1e-15)


def test_lcurve_corner_picks_knee():
    # L-shaped: steep drop then flat tail; the knee is at tau = 1
    pts = [ParetoPoint(l, t, f) for l, t, f in
           [(9, 0.1, 100.0), (8, 0.5, 10.0), (7, 1.0, 1.0), (6, 5.0, 0.9), (5, 20.0, 0.8)]]
    assert lcurve_corner(ParetoCurve(pts)) == 7


def test_bad_grid():
    with pytest.raises(ValueError):
        reference_curve(scalar_lasso(1.0), [], EXACT)
    with pytest.raises(ValueError):
        reference_curve(scalar_lasso(1.0), [1.0, -1.0], EXACT)
    assert math.isinf(ParetoCurve([analytic_point(1.0)]).monotone_violation())
