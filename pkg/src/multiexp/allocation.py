"""Budget-optimal sample allocation across experiments.

Minimises ``sum_j gamma_j / n_j`` subject to ``sum_j c_j n_j <= C``.  The
closed form puts ``n_j`` proportional to ``sqrt(gamma_j / c_j)``; an
independent bisection on the dual multiplier is kept alongside as a check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigError, ConvergenceError

REGIMES = ("expected", "empirical")

ORACLE_MAX_ITER = 200
ORACLE_TOL = 1e-12


@dataclass(frozen=True)
class ExperimentSpec:
    """One experiment: complexity constant ``a`` and per-sample cost ``c``."""

    a: float
    c: float

    def __post_init__(self):
        if not (math.isfinite(self.a) and self.a >= 0):
            raise ConfigError(f"experiment constant a must be >= 0, got {self.a}")
        if not (math.isfinite(self.c) and self.c > 0):
            raise ConfigError(f"per-sample cost c must be > 0, got {self.c}")


@dataclass(frozen=True)
class BudgetProblem:
    experiments: tuple[ExperimentSpec, ...]
    budget: float
    delta: float = 0.1
    regime: str = "expected"
    min_one_sample: bool = False

    def __post_init__(self):
        object.__setattr__(self, "experiments", tuple(self.experiments))
        if len(self.experiments) == 0:
            raise ConfigError("at least one experiment is required")
        if not (math.isfinite(self.budget) and self.budget > 0):
            raise ConfigError(f"budget must be > 0, got {self.budget}")
        check_delta(self.delta)
        if self.regime not in REGIMES:
            raise ConfigError(f"regime must be one of {REGIMES}, got {self.regime!r}")

    @classmethod
    def from_arrays(cls, a: Sequence[float], c: Sequence[float], budget: float,
                    delta: float = 0.1, regime: str = "expected",
                    min_one_sample: bool = False) -> "BudgetProblem":
        if len(a) != len(c):
            raise ConfigError(f"a and c lengths differ ({len(a)} != {len(c)})")
        exps = tuple(ExperimentSpec(float(aj), float(cj)) for aj, cj in zip(a, c))
        return cls(exps, float(budget), float(delta), regime, min_one_sample)

    @property
    def m(self) -> int:
        return len(self.experiments)

    @property
    def a(self) -> np.ndarray:
        return np.array([e.a for e in self.experiments], dtype=float)

    @property
    def c(self) -> np.ndarray:
        return np.array([e.c for e in self.experiments], dtype=float)

    def gamma(self) -> np.ndarray:
        return gamma_weights(self.a, self.delta, self.regime)


@dataclass(frozen=True)
class AllocationPlan:
    n_real: np.ndarray
    n_int: np.ndarray
    objective: float
    gamma: np.ndarray
    c: np.ndarray = field(repr=False)

    @property
    def cost_real(self) -> float:
        return float(np.dot(self.c, self.n_real))

    @property
    def cost_int(self) -> float:
        return float(np.dot(self.c, self.n_int))


def check_delta(delta: float) -> None:
    if not (0.0 < delta < 1.0):
        raise ConfigError(f"delta must lie in (0, 1), got {delta}")


def confidence_term(delta: float, regime: str) -> float:
    """``2 log(2/delta)`` for the expected regime, ``18 log(3/delta)`` for the empirical one."""
    check_delta(delta)
    if regime == "expected":
        return 2.0 * math.log(2.0 / delta)
    if regime == "empirical":
        return 18.0 * math.log(3.0 / delta)
    raise ConfigError(f"regime must be one of {REGIMES}, got {regime!r}")


def gamma_weights(a, delta: float, regime: str) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    return 16.0 * a**2 + confidence_term(delta, regime)


def round_allocation(n_real, c, budget: float) -> np.ndarray:
    """Floor every count, then hand out the leftover budget one sample at a
    time in order of decreasing fractional part (ties by index)."""
    n_real = np.asarray(n_real, dtype=float)
    c = np.asarray(c, dtype=float)
    n_int = np.floor(n_real).astype(np.int64)
    # Guard against floor cost drifting above C by an ulp.
    while n_int.sum() > 0 and float(np.dot(c, n_int)) > budget:
        j = int(np.argmax(np.where(n_int > 0, c, -np.inf)))
        n_int[j] -= 1
    remaining = budget - float(np.dot(c, n_int))
    frac = n_real - np.floor(n_real)
    for j in sorted(range(len(n_real)), key=lambda k: (-frac[k], k)):
        if frac[j] > 0 and c[j] <= remaining:
            n_int[j] += 1
            remaining -= c[j]
    return n_int


def _finish(problem: BudgetProblem, n_real: np.ndarray, gamma: np.ndarray) -> AllocationPlan:
    c = problem.c
    n_int = round_allocation(n_real, c, problem.budget)
    if problem.min_one_sample and np.any(n_int < 1):
        zero = [int(j) for j in np.flatnonzero(n_int < 1)]
        raise ConfigError(
            f"budget {problem.budget} leaves experiments {zero} with no samples "
            "while min_one_sample is set"
        )
    objective = float(np.sum(gamma / n_real))
    return AllocationPlan(n_real=n_real, n_int=n_int, objective=objective, gamma=gamma, c=c)


def optimal_counts(gamma, c, C: float) -> np.ndarray:
    """Continuous minimiser of ``sum gamma_j / n_j`` on ``sum c_j n_j = C``:
    ``n_j = C sqrt(gamma_j) / (sqrt(c_j) * sum_k sqrt(gamma_k c_k))``."""
    gamma = np.asarray(gamma, dtype=float)
    c = np.asarray(c, dtype=float)
    return C * np.sqrt(gamma) / (np.sqrt(c) * float(np.sum(np.sqrt(gamma * c))))


def oracle_counts(gamma, c, C: float) -> np.ndarray:
    """Same minimiser found numerically by bisection on the budget multiplier.

    Stationarity gives ``n_j(lam) = sqrt(gamma_j / (c_j lam))`` and the spend
    ``sum_j c_j n_j(lam)`` is strictly decreasing in ``lam``, so bisection on
    ``log lam`` converges once a bracket is found.
    """
    gamma = np.asarray(gamma, dtype=float)
    c = np.asarray(c, dtype=float)

    def counts(log_lam: float) -> np.ndarray:
        with np.errstate(over="ignore"):
            return np.sqrt(gamma / (c * np.exp(log_lam)))

    def spend(log_lam: float) -> float:
        return float(np.dot(c, counts(log_lam)))

    lo, hi = -1.0, 1.0
    for _ in range(ORACLE_MAX_ITER):
        if spend(lo) >= C:
            break
        lo -= 2.0 * abs(lo)
    for _ in range(ORACLE_MAX_ITER):
        if spend(hi) <= C:
            break
        hi += 2.0 * abs(hi)
    if not (spend(lo) >= C >= spend(hi)):
        raise ConvergenceError("could not bracket the budget multiplier")

    residual = math.inf
    for _ in range(ORACLE_MAX_ITER):
        mid = 0.5 * (lo + hi)
        s = spend(mid)
        residual = abs(s - C) / C
        if residual <= ORACLE_TOL:
            return counts(mid)
        if s > C:
            lo = mid
        else:
            hi = mid
    raise ConvergenceError(
        f"multiplier bisection did not converge in {ORACLE_MAX_ITER} steps", residual=residual
    )


def allocate(problem: BudgetProblem) -> AllocationPlan:
    """Closed-form optimal allocation; the continuous solution spends the
    whole budget and ``n_int`` is its budget-feasible rounding."""
    gamma = problem.gamma()
    return _finish(problem, optimal_counts(gamma, problem.c, problem.budget), gamma)


def allocate_oracle(problem: BudgetProblem) -> AllocationPlan:
    """Independent numerical counterpart of :func:`allocate`."""
    gamma = problem.gamma()
    return _finish(problem, oracle_counts(gamma, problem.c, problem.budget), gamma)


def proportionality_split(X: Sequence[float], c: Sequence[float], C: float) -> np.ndarray:
    """Large-complexity limit of :func:`allocate` with ``a_j`` proportional to ``X_j``.

    ``n_j = C X_j / (sqrt(c_j) * sum_k X_k sqrt(c_k))``.
    """
    X = np.asarray(X, dtype=float)
    c = np.asarray(c, dtype=float)
    if X.size == 0 or c.size == 0:
        raise ConfigError("X and c must be non-empty")
    if X.shape != c.shape:
        raise ConfigError(f"X and c lengths differ ({X.size} != {c.size})")
    if np.any(X <= 0) or np.any(c <= 0) or not C > 0:
        raise ConfigError("X, c and C must all be positive")
    return C * X / (np.sqrt(c) * float(np.sum(X * np.sqrt(c))))
