"""Divergence upper bounds for ERM over several experiments.

All functions are closed-form double-precision arithmetic.  ``expected``
bounds use ``2 log(2/delta)``; ``empirical`` bounds use ``18 log(3/delta)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .allocation import BudgetProblem, confidence_term
from .errors import ConfigError


@dataclass(frozen=True)
class BoundReport:
    tight: float
    loose: float
    per_experiment_a: tuple[float, ...]
    regime: str


def _as_pair(R, n) -> tuple[np.ndarray, np.ndarray]:
    R = np.asarray(R, dtype=float)
    n = np.asarray(n, dtype=float)
    if R.ndim != 1 or R.shape != n.shape:
        raise ConfigError(f"length mismatch: {R.size} complexities vs {n.size} sample counts")
    if R.size == 0:
        raise ConfigError("need at least one experiment")
    if np.any(R < 0):
        raise ConfigError("Rademacher complexities must be >= 0")
    if np.any(n <= 0):
        raise ConfigError("sample counts must be positive")
    return R, n


def _divergence_bound(R, n, delta: float, regime: str) -> float:
    R, n = _as_pair(R, n)
    m = R.size
    kappa = confidence_term(delta, regime)
    return 4.0 / m * float(R.sum()) + math.sqrt(kappa * float(np.sum(1.0 / n))) / m


def bound_thm2(R: Sequence[float], n: Sequence[float], delta: float) -> float:
    """Bound from expected Rademacher complexities:
    ``(4/m) sum R_j + (1/m) sqrt(2 log(2/delta) sum 1/n_j)``."""
    return _divergence_bound(R, n, delta, "expected")


def bound_thm3(Rhat: Sequence[float], n: Sequence[float], delta: float) -> float:
    """Same shape as :func:`bound_thm2` with empirical complexities and
    ``18 log(3/delta)``.  Experiments are weighted uniformly."""
    return _divergence_bound(Rhat, n, delta, "empirical")


def bound_thm45(problem: BudgetProblem) -> BoundReport:
    """Both bound forms at the optimal allocation for ``problem``.

    ``tight`` plugs the optimal ``n_j`` back into the two-term bound;
    ``loose`` is its Cauchy-Schwarz relaxation
    ``sqrt(m+1)/(m sqrt(C)) * sum_j sqrt(gamma_j c_j)``.
    """
    a, c = problem.a, problem.c
    m, C = problem.m, problem.budget
    kappa = confidence_term(problem.delta, problem.regime)
    gamma = 16.0 * a**2 + kappa
    root_sum = float(np.sum(np.sqrt(gamma * c)))
    complexity = float(np.sum(4.0 * a * c**0.25 / gamma**0.25))
    sampling = math.sqrt(kappa * float(np.sum(np.sqrt(c) / np.sqrt(gamma))))
    tight = math.sqrt(root_sum) / (m * math.sqrt(C)) * (complexity + sampling)
    loose = math.sqrt(m + 1) / (m * math.sqrt(C)) * root_sum
    return BoundReport(tight=tight, loose=loose,
                       per_experiment_a=tuple(float(x) for x in a), regime=problem.regime)


# Predictor classes -----------------------------------------------------------

def _positive_list(name: str, values) -> tuple[float, ...]:
    out = tuple(float(v) for v in values)
    if not out:
        raise ConfigError(f"{name} must be non-empty")
    if any(not (v > 0 and math.isfinite(v)) for v in out):
        raise ConfigError(f"{name} entries must be positive")
    return out


def _check_l(l: int) -> int:
    if int(l) != l or l < 2:
        raise ConfigError(f"dimension l must be an integer >= 2, got {l}")
    return int(l)


@dataclass(frozen=True)
class LinearL2:
    """Linear predictors, ``||x||_2 <= X2_j`` and ``||w||_2 <= W2``."""

    X2: tuple[float, ...]
    W2: float
    regime = "empirical"
    name = "linear_l2"

    def __post_init__(self):
        object.__setattr__(self, "X2", _positive_list("X2", self.X2))
        if not self.W2 > 0:
            raise ConfigError("W2 must be positive")

    def constants(self) -> np.ndarray:
        return np.array(self.X2) * self.W2


@dataclass(frozen=True)
class LinearLinfL1:
    """Linear predictors, ``||x||_inf <= Xinf_j`` and ``||w||_1 <= W1`` in R^l."""

    Xinf: tuple[float, ...]
    W1: float
    l: int
    regime = "empirical"
    name = "linear_linf_l1"

    def __post_init__(self):
        object.__setattr__(self, "Xinf", _positive_list("Xinf", self.Xinf))
        object.__setattr__(self, "l", _check_l(self.l))
        if not self.W1 > 0:
            raise ConfigError("W1 must be positive")

    def constants(self) -> np.ndarray:
        return np.array(self.Xinf) * self.W1 * math.sqrt(2.0 * math.log(self.l))


@dataclass(frozen=True)
class TwoLayerNN:
    """Two-layer network with 1-Lipschitz activation.  ``B`` is an absolute
    constant that is not pinned down analytically; callers supply it."""

    Xinf: tuple[float, ...]
    l: int
    B: float = 1.0
    regime = "expected"
    name = "two_layer_nn"

    def __post_init__(self):
        object.__setattr__(self, "Xinf", _positive_list("Xinf", self.Xinf))
        object.__setattr__(self, "l", _check_l(self.l))
        if not self.B > 0:
            raise ConfigError("B must be positive")

    def constants(self) -> np.ndarray:
        return self.B * np.array(self.Xinf) * math.sqrt(math.log(self.l))


@dataclass(frozen=True)
class Kernel:
    """Kernel expansions with RKHS-norm caps ``B_j`` and ``Ek_j = E[k(x, x)]``."""

    B: tuple[float, ...]
    Ek: tuple[float, ...]
    regime = "expected"
    name = "kernel"

    def __post_init__(self):
        object.__setattr__(self, "B", _positive_list("B", self.B))
        ek = tuple(float(v) for v in self.Ek)
        if any(not (v >= 0 and math.isfinite(v)) for v in ek):
            raise ConfigError("Ek entries must be >= 0")
        if len(ek) != len(self.B):
            raise ConfigError(f"B and Ek lengths differ ({len(self.B)} != {len(ek)})")
        object.__setattr__(self, "Ek", ek)

    def constants(self) -> np.ndarray:
        return 2.0 * np.array(self.B) * np.sqrt(np.array(self.Ek))


PredictorClass = Union[LinearL2, LinearLinfL1, TwoLayerNN, Kernel]

PREDICTOR_CLASSES = {cls.name: cls for cls in (LinearL2, LinearLinfL1, TwoLayerNN, Kernel)}


def class_constants(pc: PredictorClass) -> np.ndarray:
    """Per-experiment ``a_j`` such that the class complexity is ``<= a_j / sqrt(n_j)``."""
    return pc.constants()


def table1_bound(pc: PredictorClass, c: Sequence[float], C: float, delta: float) -> float:
    a = class_constants(pc)
    if len(c) != a.size:
        raise ConfigError(f"cost list has {len(c)} entries, class has {a.size} experiments")
    problem = BudgetProblem.from_arrays(a, c, C, delta, regime=pc.regime)
    return bound_thm45(problem).loose


# Geometric-cost example ------------------------------------------------------

def large_constant_bound(a: Sequence[float], c: Sequence[float], C: float, m: int | None = None) -> float:
    """``4 (sum_j sqrt(a_j sqrt(c_j)))^2 / (m sqrt(C))``, the large-``a`` form
    of the expected-regime bound.  ``m`` defaults to ``len(a)``; it can be set
    separately to evaluate truncations of an infinite series."""
    a = np.asarray(a, dtype=float)
    c = np.asarray(c, dtype=float)
    if m is None:
        m = a.size
    s = float(np.sum(np.sqrt(a * np.sqrt(c))))
    return 4.0 * s * s / (m * math.sqrt(C))


def asymptotic_41(A: float, K: float, s: float, m: int, C: float) -> float:
    """Closed form of :func:`large_constant_bound` summed to infinity with
    ``a_j = A j^2`` and ``c_j = K exp(-s j)``."""
    if not s > 0:
        raise ConfigError(f"decay s must be positive (series diverges otherwise), got {s}")
    if not (A > 0 and K > 0 and C > 0) or m < 1:
        raise ConfigError("A, K, C must be positive and m >= 1")
    return 4.0 * A * math.sqrt(K) * math.exp(s / 2) / ((math.exp(s / 4) - 1.0) ** 4 * m * math.sqrt(C))


def truncated_41(A: float, K: float, s: float, m: int, C: float, terms: int) -> float:
    j = np.arange(1, terms + 1, dtype=float)
    return large_constant_bound(A * j**2, K * np.exp(-s * j), C, m=m)
