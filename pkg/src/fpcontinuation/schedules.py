"""Sequences of penalty weights ``lam_n -> lam`` for the continuation iteration.

Four shapes are shipped:

* ``constant``          ``lam_n = lam``
* ``power``             ``lam_n = lam * (1 + beta / (n + 1)**theta)``
* ``geometric-floor``   ``lam_n = max(lam, mu * beta**n)``
* ``geometric-offset``  ``lam_n = lam * (1 + mu * beta**n)``

plus ``custom`` (an explicit list, held at the target once exhausted).
The power shape is indexed from ``n + 1`` so that it is defined at ``n = 0``.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError

__all__ = [
    "LambdaSchedule",
    "ValidationReport",
    "constant",
    "power",
    "geometric_floor",
    "geometric_offset",
    "custom",
    "load_custom",
    "standard_schedules",
    "wide_range_schedule",
    "parse_schedule",
]

KINDS = ("constant", "power", "geometric-floor", "geometric-offset", "custom")


@dataclass(frozen=True)
class ValidationReport:
    valid: bool
    issues: tuple = ()

    def as_dict(self):
        return {"valid": self.valid, "issues": list(self.issues)}


@dataclass(frozen=True)
class LambdaSchedule:
    kind: str
    target: float
    beta: float = None
    theta: float = None
    mu: float = None
    values: tuple = field(default=(), repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown schedule kind {self.kind!r}")

    def __call__(self, n):
        return self.eval(n)

    def eval(self, n):
        if n < 0:
            raise ConfigurationError("schedule index must be non-negative")
        lam = self.target
        if self.kind == "constant":
            return lam
        if self.kind == "power":
            return lam * (1.0 + self.beta / (n + 1) ** self.theta)
        if self.kind == "geometric-floor":
            return max(lam, self.mu * self.beta ** n)
        if self.kind == "geometric-offset":
            return lam * (1.0 + self.mu * self.beta ** n)
        return self.values[n] if n < len(self.values) else lam

    def eval_many(self, n):
        """Vectorised :meth:`eval` over an integer array."""
        n = np.asarray(n, dtype=float)
        lam = self.target
        if self.kind == "constant":
            return np.full(n.shape, lam)
        if self.kind == "power":
            return lam * (1.0 + self.beta / (n + 1.0) ** self.theta)
        if self.kind == "geometric-floor":
            return np.maximum(lam, self.mu * self.beta ** n)
        if self.kind == "geometric-offset":
            return lam * (1.0 + self.mu * self.beta ** n)
        return np.array([self.eval(int(k)) for k in n.ravel()]).reshape(n.shape)

    def summability(self):
        """``sum_n |lam_n - lam|``: exact where closed-form, otherwise an upper bound.

        Returns ``inf`` when the series diverges.
        """
        lam = self.target
        if self.kind == "constant":
            return 0.0
        if self.kind == "custom":
            return float(sum(abs(v - lam) for v in self.values))
        if self.kind == "power":
            if self.theta <= 1:
                return math.inf
            # sum_{k>=1} k^-theta <= 1 + int_1^inf x^-theta dx
            return abs(lam * self.beta) * (1.0 + 1.0 / (self.theta - 1.0))
        if not 0 < self.beta < 1:
            return math.inf
        if self.kind == "geometric-offset":
            return abs(lam * self.mu) / (1.0 - self.beta)
        return abs(self.mu) / (1.0 - self.beta)

    def crossover_index(self):
        """First ``n`` at which a geometric-floor schedule sits on its floor."""
        if self.kind != "geometric-floor":
            raise ConfigurationError("crossover index is defined for geometric-floor only")
        if self.mu <= self.target:
            return 0
        return max(0, math.ceil(math.log(self.target / self.mu) / math.log(self.beta)))

    def validate(self):
        issues = []
        if not self.target > 0:
            issues.append(f"target lambda must be positive (got {self.target})")
        if self.kind in ("geometric-floor", "geometric-offset"):
            if self.beta is None or not 0 < self.beta < 1:
                issues.append(f"beta out of range (0, 1) (got {self.beta})")
            if self.mu is None or self.mu < 0:
                issues.append(f"mu must be non-negative (got {self.mu})")
        if self.kind == "power":
            if self.beta is None or self.beta < 0:
                issues.append(f"beta must be non-negative (got {self.beta})")
            if self.theta is None or self.theta <= 1:
                issues.append(f"not summable: theta must exceed 1 (got {self.theta})")
        if self.kind == "custom" and any(not v > 0 for v in self.values):
            issues.append("custom schedule contains non-positive values")
        if not issues and not math.isfinite(self.summability()):
            issues.append("not summable")
        return ValidationReport(not issues, tuple(issues))

    def as_dict(self):
        d = {"kind": self.kind, "target": self.target}
        for key in ("beta", "theta", "mu"):
            if getattr(self, key) is not None:
                d[key] = getattr(self, key)
        if self.kind == "custom":
            d["values"] = list(self.values)
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["values"] = tuple(d.get("values", ()))
        return cls(**d)


def constant(target):
    return LambdaSchedule("constant", float(target))


def power(target, beta=9.0, theta=1.01):
    return LambdaSchedule("power", float(target), beta=float(beta), theta=float(theta))


def geometric_floor(target, mu=None, beta=0.99):
    """``max(target, mu * beta**n)``; ``mu`` defaults to ``10 * target``."""
    mu = 10.0 * target if mu is None else mu
    return LambdaSchedule("geometric-floor", float(target), beta=float(beta), mu=float(mu))


def geometric_offset(target, mu=9.0, beta=0.9):
    return LambdaSchedule("geometric-offset", float(target), beta=float(beta), mu=float(mu))


def custom(values, target=None):
    values = tuple(float(v) for v in values)
    if not values and target is None:
        raise ConfigurationError("custom schedule needs at least one value or a target")
    return LambdaSchedule("custom", float(values[-1] if target is None else target),
                          values=values)


def load_custom(path, target=None):
    """Read one value per line (blank lines and ``#`` comments ignored)."""
    with open(path) as fh:
        values = [float(line.split("#")[0]) for line in fh if line.split("#")[0].strip()]
    return custom(values, target)


def standard_schedules(target):
    """The three shapes sharing the start ``10 * target``, keyed by name."""
    return {
        "power": power(target, beta=9.0, theta=1.01),
        "geometric-floor": geometric_floor(target, mu=10.0 * target, beta=0.99),
        "geometric-offset": geometric_offset(target, mu=9.0, beta=0.9),
    }


def wide_range_schedule(target=1e-3, start=1e-1, beta=0.9):
    """Geometric-offset sweep from ``start`` down to ``target``: ``1e-3 (1 + 99 * 0.9**n)`` by default."""
    return geometric_offset(target, mu=start / target - 1.0, beta=beta)


_ALIASES = {"geometric_floor": "geometric-floor", "geometric_offset": "geometric-offset",
            "floor": "geometric-floor", "offset": "geometric-offset", "const": "constant"}


def parse_schedule(text, default_target=None):
    """Build a schedule from ``kind:key=value,...``.

    Keys: ``lam`` (target), ``beta``, ``theta``, ``mu``; the custom kind
    takes ``file=PATH``. ``wide`` is shorthand for :func:`wide_range_schedule`.
    """
    kind, _, rest = text.partition(":")
    kind = _ALIASES.get(kind.strip(), kind.strip())
    params = {}
    for item in filter(None, (s.strip() for s in rest.split(","))):
        key, sep, val = item.partition("=")
        if not sep:
            raise ConfigurationError(f"malformed schedule parameter {item!r}")
        params[key.strip()] = val.strip()
    try:
        target = float(params.pop("lam", params.pop("target", default_target or "nan")))
        if kind == "wide":
            return wide_range_schedule(target if target == target else 1e-3,
                                       start=float(params.pop("start", 1e-1)),
                                       beta=float(params.pop("beta", 0.9)))
        if kind == "custom":
            return load_custom(params.pop("file"), None if target != target else target)
        if target != target:
            raise ConfigurationError(f"schedule {text!r} needs lam=<target>")
        nums = {k: float(v) for k, v in params.items()}
    except (KeyError, ValueError) as exc:
        raise ConfigurationError(f"cannot parse schedule {text!r}: {exc}") from exc
    builders = {"constant": constant, "power": power, "geometric-floor": geometric_floor,
                "geometric-offset": geometric_offset}
    if kind not in builders:
        raise ConfigurationError(f"unknown schedule kind {kind!r}")
    try:
        return builders[kind](target, **nums)
    except TypeError as exc:
        raise ConfigurationError(f"bad parameters for {kind}: {exc}") from exc
