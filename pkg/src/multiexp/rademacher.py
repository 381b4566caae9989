"""Monte Carlo estimates of empirical Rademacher complexity for norm-ball
linear classes.

For a ball class the supremum over weights has a closed form per sign draw
(the dual norm of ``sum_i sigma_i x_i``), so each draw costs one mat-vec.
Draw ``d`` takes its signs from a Philox stream keyed by ``seed`` with ``d``
in the high counter word; any chunking of the draws gives identical output.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

DEFAULT_DRAWS = 10_000
MIN_DRAWS = 100
_CHUNK = 512


@dataclass(frozen=True)
class RademacherEstimate:
    mean: float
    stderr: float
    draws: int
    class_bound: float
    n: int


def as_sample_set(points) -> np.ndarray:
    X = np.asarray(points, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] == 0:
        raise ConfigError("sample set must be a non-empty (n, l) array")
    if not np.all(np.isfinite(X)):
        raise ConfigError("sample set contains non-finite values")
    return X


def sign_draws(seed: int, n: int, start: int, stop: int) -> np.ndarray:
    """Rademacher vectors for draws ``start..stop-1`` as a ``(stop-start, n)`` array."""
    out = np.empty((stop - start, n), dtype=float)
    for row, d in enumerate(range(start, stop)):
        gen = np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, 0, d]))
        out[row] = 2.0 * gen.integers(0, 2, size=n) - 1.0
    return out


def _per_draw_sups(X: np.ndarray, weight: float, dual_ord: float, K: int, seed: int,
                   threads: int) -> np.ndarray:
    n = X.shape[0]

    def chunk(start: int) -> np.ndarray:
        stop = min(start + _CHUNK, K)
        S = sign_draws(seed, n, start, stop) @ X
        return weight / n * np.linalg.norm(S, ord=dual_ord, axis=1)

    starts = range(0, K, _CHUNK)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(chunk, starts))
    else:
        parts = [chunk(s) for s in starts]
    return np.concatenate(parts)


def _estimate(X, weight, dual_ord, K, seed, threads, class_bound) -> RademacherEstimate:
    if K < MIN_DRAWS:
        raise ConfigError(f"need at least {MIN_DRAWS} sign draws, got {K}")
    if not weight > 0:
        raise ConfigError("weight-ball radius must be positive")
    if seed < 0:
        raise ConfigError("seed must be non-negative")
    vals = _per_draw_sups(X, weight, dual_ord, K, seed, threads)
    return RademacherEstimate(
        mean=float(vals.mean()),
        stderr=float(vals.std(ddof=1) / math.sqrt(K)),
        draws=K,
        class_bound=class_bound,
        n=X.shape[0],
    )


def estimate_linear_l2(S, W2: float, K: int = DEFAULT_DRAWS, seed: int = 0,
                       threads: int = 1) -> RademacherEstimate:
    """Class ``{x -> w.x : ||w||_2 <= W2}``; per draw ``(W2/n) ||sum sigma_i x_i||_2``."""
    X = as_sample_set(S)
    n = X.shape[0]
    bound = W2 * float(np.max(np.linalg.norm(X, axis=1))) / math.sqrt(n)
    return _estimate(X, W2, 2, K, seed, threads, bound)


def estimate_linear_l1(S, W1: float, K: int = DEFAULT_DRAWS, seed: int = 0,
                       threads: int = 1) -> RademacherEstimate:
    """Class ``{x -> w.x : ||w||_1 <= W1}``; per draw ``(W1/n) ||sum sigma_i x_i||_inf``.

    The reported cap ``W1 max||x||_inf sqrt(2 log l) / sqrt(n)`` needs ``l >= 2``.
    """
    X = as_sample_set(S)
    n, l = X.shape
    if l < 2:
        raise ConfigError("the L1-ball bound needs dimension l >= 2")
    bound = W1 * float(np.max(np.abs(X))) * math.sqrt(2.0 * math.log(l)) / math.sqrt(n)
    return _estimate(X, W1, np.inf, K, seed, threads, bound)


def l2_lower_cap(S, W2: float) -> float:
    """``(W2/n) sqrt(sum ||x_i||^2)``; by Khintchine-Kahane the L2 complexity
    lies between this over sqrt(2) and this itself."""
    X = as_sample_set(S)
    return W2 / X.shape[0] * math.sqrt(float(np.sum(X * X)))


def contraction_check(S, labels, W2: float, K: int = DEFAULT_DRAWS, seed: int = 0,
                      threads: int = 1) -> tuple[float, float, float]:
    """Estimate of the predictor-class complexity next to its analytic cap.

    The clamped squared loss ``min(1, (y - y')^2 / 2)`` is 1-Lipschitz on the
    relevant range, so the loss class complexity is dominated by the predictor
    class.  ``labels`` only fixes the sample pairing and must match ``S`` in
    length.  Returns ``(estimate, class_bound, stderr)``.
    """
    X = as_sample_set(S)
    y = np.asarray(labels, dtype=float).ravel()
    if y.size != X.shape[0]:
        raise ConfigError(f"{y.size} labels for {X.shape[0]} points")
    est = estimate_linear_l2(X, W2, K, seed, threads)
    return est.mean, est.class_bound, est.stderr
