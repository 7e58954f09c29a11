"""Smooth and prox-simple terms and the penalised objective ``f + lam * g``."""

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .errors import ConfigurationError
from .linops import LIPSCHITZ_SAFETY, LinearOperator, operator_norm_sq

__all__ = [
    "SmoothTerm",
    "ProxTerm",
    "CompositeProblem",
    "least_squares_term",
    "l1_term",
    "zero_term",
    "soft_threshold",
    "composite_value",
]


@dataclass(frozen=True)
class SmoothTerm:
    """Convex differentiable term with ``lipschitz``-continuous gradient."""

    value: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    lipschitz: float
    dim: int = None
    # optional fused evaluation returning (value, gradient)
    value_and_gradient: Callable = None

    def __post_init__(self):
        if not self.lipschitz > 0:
            raise ConfigurationError("Lipschitz constant must be positive")


@dataclass(frozen=True)
class ProxTerm:
    """Convex term whose proximal map ``prox(a, t) = argmin_u 0.5||u-a||^2 + t g(u)`` is cheap."""

    value: Callable[[np.ndarray], float]
    prox: Callable[[np.ndarray, float], np.ndarray]
    name: str = "g"


@dataclass(frozen=True)
class CompositeProblem:
    f: SmoothTerm
    g: ProxTerm
    lam: float

    def __post_init__(self):
        if not self.lam > 0:
            raise ConfigurationError(f"lambda must be positive, got {self.lam}")

    @property
    def lipschitz(self):
        return self.f.lipschitz

    def value(self, u):
        return composite_value(self, u)

    def with_lambda(self, lam):
        return replace(self, lam=float(lam))


def least_squares_term(op: LinearOperator, target, lipschitz=None) -> SmoothTerm:
    """``f(u) = ||op(u) - target||^2`` (no factor 1/2).

    The gradient is ``2 op*(op(u) - target)``. When ``lipschitz`` is not
    given it is set to ``2 ||op||^2`` with the norm estimated by power
    iteration and inflated by :data:`LIPSCHITZ_SAFETY`.
    """
    target = np.asarray(target, dtype=float).ravel()
    if target.size != op.out_dim:
        raise ConfigurationError(
            f"target length {target.size} != operator output dimension {op.out_dim}")
    if lipschitz is None:
        lipschitz = 2.0 * operator_norm_sq(op) * LIPSCHITZ_SAFETY

    def value(u):
        r = op.apply(u) - target
        return float(r @ r)

    def gradient(u):
        return 2.0 * op.adjoint(op.apply(u) - target)

    def value_and_gradient(u):
        r = op.apply(u) - target
        return float(r @ r), 2.0 * op.adjoint(r)

    return SmoothTerm(value, gradient, float(lipschitz), dim=op.in_dim,
                      value_and_gradient=value_and_gradient)


def soft_threshold(a, t):
    """Componentwise shrinkage ``sign(a) * max(|a| - t, 0)``; ties go to 0."""
    return np.sign(a) * np.maximum(np.abs(a) - t, 0.0)


def _l1_prox(a, t):
    if not t > 0:
        raise ConfigurationError(f"prox threshold must be positive, got {t}")
    return soft_threshold(np.asarray(a, dtype=float), t)


def l1_term() -> ProxTerm:
    return ProxTerm(lambda u: float(np.abs(u).sum()), _l1_prox, name="l1")


def zero_term() -> ProxTerm:
    """g = 0; its prox is the identity."""
    return ProxTerm(lambda u: 0.0, lambda a, t: np.array(a, dtype=float), name="zero")


def composite_value(p: CompositeProblem, u) -> float:
    u = np.asarray(u, dtype=float)
    if p.f.dim is not None and u.shape != (p.f.dim,):
        raise ConfigurationError(f"expected vector of length {p.f.dim}, got {u.shape}")
    return p.f.value(u) + p.lam * p.g.value(u)
