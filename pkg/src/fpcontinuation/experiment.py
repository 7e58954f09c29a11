"""Wavelet-l1 deblurring study.

A seeded piecewise-constant phantom is blurred by a periodic 5x5 Gaussian
and corrupted with additive Gaussian noise. The restoration problem is

    min_u ||A W* u - x0||^2 + lam ||u||_1

with u the db3 wavelet coefficients, started from ``u0 = W x0`` with step
``alpha = alpha_frac / L`` and ``L = 2 ||A||^2``.
"""

import dataclasses
import logging
import os
from dataclasses import dataclass, field

import numpy as np

from . import io, schedules
from .errors import ConfigurationError, FPCError
from .linops import (LIPSCHITZ_SAFETY, conv2d_periodic, convolution_operator,
                     gaussian_kernel, operator_norm_sq, wavelet_operator)
from .objective import CompositeProblem, l1_term, least_squares_term
from .pareto import lcurve_corner, log_grid, path_vs_curve, reference_curve
from .solver import SolverConfig, solve_continuation

logger = logging.getLogger(__name__)

__all__ = [
    "ExperimentConfig",
    "DeblurInstance",
    "make_phantom",
    "degrade",
    "build_instance",
    "continuation_schedules",
    "run_demo_deblur",
]


@dataclass
class ExperimentConfig:
    image_size: int = 128
    kernel_size: int = 5
    kernel_sigma: float = 1.0
    noise_sigma: float = 0.03
    seed: int = 0
    wavelet_levels: int = 3
    alpha_frac: float = 1.0
    # continuation runs
    iters: int = 5000
    tol: float = 1e-8
    # lambda for the three shapes sharing a start; None picks the L-curve corner
    target_lambda: float = None
    wide_target: float = 1e-3
    wide_start: float = 1e-1
    wide_beta: float = 0.9
    # reference curve
    grid_min: float = 1e-3
    grid_max: float = 1e-1
    grid_points: int = 30
    grid_iters: int = 5000
    grid_tol: float = 1e-8
    record_every: int = None
    out: str = "out"

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.image_size < 16:
            raise ConfigurationError("image_size must be at least 16")
        if self.image_size % (2 ** self.wavelet_levels):
            raise ConfigurationError(
                f"image_size {self.image_size} not divisible by 2**{self.wavelet_levels}")
        if self.kernel_size % 2 == 0 or self.kernel_size > self.image_size:
            raise ConfigurationError("kernel_size must be odd and fit the image")
        if self.noise_sigma < 0:
            raise ConfigurationError("noise_sigma must be non-negative")
        if not 0 < self.alpha_frac < 2:
            raise ConfigurationError("alpha_frac must lie in (0, 2)")
        if self.target_lambda is not None and not self.target_lambda > 0:
            raise ConfigurationError("target_lambda must be positive")

    def as_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d):
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    def kernel(self):
        return gaussian_kernel(self.kernel_size, self.kernel_sigma)


def make_phantom(size=128, seed=0):
    """Seeded piecewise-constant test image with values in [0, 1].

    Rectangles and discs of random grey level on a constant background.
    """
    if size < 16:
        raise ConfigurationError("phantom size must be at least 16")
    rng = np.random.default_rng([seed, 0])
    img = np.full((size, size), 0.1)
    yy, xx = np.mgrid[0:size, 0:size] + 0.5
    for _ in range(4):
        h, w = rng.integers(size // 8, size // 2, size=2)
        r0, c0 = rng.integers(0, size - h), rng.integers(0, size - w)
        img[r0:r0 + h, c0:c0 + w] = rng.uniform(0.3, 0.9)
    for _ in range(3):
        rad = rng.uniform(size / 16, size / 6)
        cy, cx = rng.uniform(rad, size - rad, size=2)
        img[(yy - cy) ** 2 + (xx - cx) ** 2 <= rad ** 2] = rng.uniform(0.0, 1.0)
    return np.clip(img, 0.0, 1.0)


def degrade(x, cfg: ExperimentConfig, kernel=None):
    """Blur periodically and add ``noise_sigma * N(0, 1)`` per pixel."""
    kernel = cfg.kernel() if kernel is None else kernel
    blurred = conv2d_periodic(x, kernel)
    rng = np.random.default_rng([cfg.seed, 1])
    return blurred + cfg.noise_sigma * rng.standard_normal(blurred.shape)


@dataclass
class DeblurInstance:
    cfg: ExperimentConfig
    x_true: np.ndarray
    x0: np.ndarray
    A: object
    W: object
    f: object
    norm_sq: float
    g: object = field(default_factory=l1_term)

    @property
    def shape(self):
        return self.x_true.shape

    @property
    def lipschitz(self):
        return self.f.lipschitz

    @property
    def alpha(self):
        return self.cfg.alpha_frac / self.lipschitz

    @property
    def u0(self):
        return self.W(self.x0.ravel())

    def problem(self, lam):
        return CompositeProblem(self.f, self.g, float(lam))

    def image(self, u):
        """Restored image ``W* u``."""
        return self.W.adjoint(u).reshape(self.shape)


def build_instance(cfg: ExperimentConfig) -> DeblurInstance:
    x = make_phantom(cfg.image_size, cfg.seed)
    kernel = cfg.kernel()
    x0 = degrade(x, cfg, kernel)
    shape = x.shape
    A = convolution_operator(kernel, shape)
    W = wavelet_operator(shape, cfg.wavelet_levels)
    # ||A W*|| = ||A|| since W is orthogonal
    norm_sq = operator_norm_sq(A, tol=1e-9, max_iter=10_000, seed=cfg.seed)
    f = least_squares_term(A @ W.H, x0.ravel(), lipschitz=2.0 * norm_sq * LIPSCHITZ_SAFETY)
    return DeblurInstance(cfg, x, x0, A, W, f, norm_sq)


def continuation_schedules(target, cfg: ExperimentConfig):
    """The four schedules of the study: three sharing the start ``10 * target``, one wide sweep."""
    s = schedules.standard_schedules(target)
    s["wide"] = schedules.wide_range_schedule(cfg.wide_target, cfg.wide_start, cfg.wide_beta)
    return s


def _solver_cfg(inst, iters, tol, record_every=None, **kw):
    return SolverConfig(alpha=inst.alpha, max_iter=iters, step_tol=tol,
                        record_every=record_every, **kw)


def run_demo_deblur(cfg: ExperimentConfig, out_dir=None, write=True):
    """Full study: reference curve, four continuation runs, comparison.

    Writes ``curve.csv``, ``trace_<schedule>.csv``/``.json``,
    ``restored_<schedule>.pgm``, ``phantom.pgm``, ``degraded.pgm`` and
    ``summary.json`` into ``out_dir`` (default ``cfg.out``). On failure
    every file written so far is removed.

    Returns the summary dictionary; the solve results and the curve are
    attached under the private keys ``_results`` and ``_curve``.
    """
    out_dir = cfg.out if out_dir is None else out_dir
    inst = build_instance(cfg)
    written = []
    try:
        grid = log_grid(cfg.grid_min, cfg.grid_max, cfg.grid_points)
        grid_cfg = _solver_cfg(inst, cfg.grid_iters, cfg.grid_tol, record_every=cfg.grid_iters)
        curve = reference_curve(inst.problem(grid[0]), grid, grid_cfg, warm_start=True,
                                u0=inst.u0, keep_solutions=True)
        target = cfg.target_lambda if cfg.target_lambda is not None else lcurve_corner(curve)
        logger.info("target lambda %.6g", target)

        results = {}
        for name, sched in continuation_schedules(target, cfg).items():
            p = inst.problem(sched.target)
            try:
                results[name] = solve_continuation(
                    p, sched, inst.u0, _solver_cfg(inst, cfg.iters, cfg.tol, cfg.record_every))
            except FPCError as exc:
                raise type(exc)(f"schedule {name!r} failed: {exc}") from exc

        summary = {
            "config": cfg.as_dict(),
            "lipschitz": inst.lipschitz,
            "alpha": inst.alpha,
            "norm_sq_A": inst.norm_sq,
            "chosen_lambda": target,
            "chosen_lambda_source": "config" if cfg.target_lambda is not None else "lcurve_corner",
            "identity_misfit": inst.f.value(inst.u0),
            "schedules": {},
        }
        for name, r in results.items():
            comp = path_vs_curve(r.trace, curve)
            summary["schedules"][name] = {
                "schedule": r.schedule.as_dict(),
                "lambda_bar": r.schedule.summability(),
                "validation": r.validation.as_dict(),
                "iterations": r.iterations,
                "converged": r.converged,
                "final_f": inst.f.value(r.u_hat),
                "final_g": inst.g.value(r.u_hat),
                "final_F_lambda": r.trace[-1].F_lambda_val,
                "path_vs_curve": comp.as_dict(),
            }

        if write:
            os.makedirs(out_dir, exist_ok=True)

            def target_path(name):
                path = os.path.join(out_dir, name)
                written.append(path)
                return path

            io.write_curve_csv(curve, target_path("curve.csv"))
            io.write_pgm(inst.x_true, target_path("phantom.pgm"))
            io.write_pgm(inst.x0, target_path("degraded.pgm"))
            for name, r in results.items():
                io.write_trace_csv(r.trace, target_path(f"trace_{name}.csv"))
                io.write_trace_json(r, target_path(f"trace_{name}.json"))
                io.write_pgm(inst.image(r.u_hat), target_path(f"restored_{name}.pgm"))
            io.write_json(summary, target_path("summary.json"))
    except BaseException:
        for path in written:
            if os.path.exists(path):
                os.remove(path)
        raise
    summary["_results"] = results
    summary["_curve"] = curve
    summary["_instance"] = inst
    return summary
