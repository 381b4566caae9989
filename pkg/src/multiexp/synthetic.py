"""Synthetic multi-experiment regression study.

Each experiment ``j`` observes ``x = A_j zeta`` where ``zeta`` lives in
``l/2`` dimensions and ``A_j`` is a random sign matrix, so a single
experiment leaves half of weight space invisible.  Outputs are
``y = w*.x + eps``.  ERM is least squares over the ball ``||w||_2 <= W2``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import ConfigError, ConvergenceError

RANK_RTOL = 1e-9
FEASIBILITY_TOL = 1e-9


@dataclass(frozen=True)
class SyntheticConfig:
    l: int
    m: int
    W2: float
    X2: tuple[float, ...]
    s: float = 1.0
    eps_b: float = 0.1
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "X2", tuple(float(x) for x in self.X2))
        if int(self.l) != self.l or self.l < 2 or self.l % 2:
            raise ConfigError(f"l must be an even integer >= 2, got {self.l}")
        if int(self.m) != self.m or self.m < 1:
            raise ConfigError(f"m must be a positive integer, got {self.m}")
        if len(self.X2) != self.m:
            raise ConfigError(f"X2 has {len(self.X2)} entries, expected m={self.m}")
        if any(not x > 0 for x in self.X2):
            raise ConfigError("X2 entries must be positive")
        if not self.W2 > 0:
            raise ConfigError("W2 must be positive")
        if not self.s > 0:
            raise ConfigError("cost decay s must be positive")
        if not self.eps_b >= 0:
            raise ConfigError("eps_b must be >= 0")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")

    def prefix(self, m: int) -> "SyntheticConfig":
        """Same study restricted to the first ``m`` experiments."""
        if not 1 <= m <= self.m:
            raise ConfigError(f"prefix m={m} outside [1, {self.m}]")
        return replace(self, m=m, X2=self.X2[:m])


@dataclass(frozen=True)
class SyntheticWorld:
    A: tuple[np.ndarray, ...]
    w_star: np.ndarray

    @property
    def l(self) -> int:
        return self.w_star.size

    @property
    def m(self) -> int:
        return len(self.A)

    def to_dict(self) -> dict:
        return {
            "l": self.l,
            "m": self.m,
            "A": [a.astype(int).tolist() for a in self.A],
            "w_star": [float(v) for v in self.w_star],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "SyntheticWorld":
        A = tuple(np.asarray(a, dtype=float) for a in doc["A"])
        w = np.asarray(doc["w_star"], dtype=float)
        for a in A:
            if a.shape != (w.size, w.size // 2) or not np.all(np.abs(a) == 1):
                raise ConfigError("projection matrices must be l x l/2 with entries +-1")
        return cls(A, w)


@dataclass(frozen=True)
class Dataset:
    inputs: tuple[np.ndarray, ...]
    outputs: tuple[np.ndarray, ...]

    @property
    def n(self) -> tuple[int, ...]:
        return tuple(x.shape[0] for x in self.inputs)


def _streams(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    world_ss, data_ss = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(world_ss), np.random.default_rng(data_ss)


def generate_world(config: SyntheticConfig) -> SyntheticWorld:
    rng, _ = _streams(config.seed)
    l, half = config.l, config.l // 2
    A = tuple(rng.choice(np.array([-1.0, 1.0]), size=(l, half)) for _ in range(config.m))
    bound = config.W2 / math.sqrt(l)
    w_star = rng.uniform(-bound, bound, size=l)
    return SyntheticWorld(A, w_star)


def zeta_half_width(X2: float, l: int) -> float:
    return 2.0 * X2 / l**1.5


def generate_dataset(world: SyntheticWorld, config: SyntheticConfig, n: Sequence[int]) -> Dataset:
    """Draw ``n_j`` samples per experiment.  Every input satisfies
    ``||x||_2 <= X2_j`` because each coordinate is bounded by ``X2_j/sqrt(l)``."""
    if len(n) != world.m or world.m != config.m:
        raise ConfigError(f"need {world.m} sample counts, got {len(n)}")
    if any(int(k) != k or k < 1 for k in n):
        raise ConfigError(f"sample counts must be positive integers, got {list(n)}")
    _, rng = _streams(config.seed)
    l = world.l
    xs, ys = [], []
    for A, X2, nj in zip(world.A, config.X2, n):
        hw = zeta_half_width(X2, l)
        zeta = rng.uniform(-hw, hw, size=(int(nj), l // 2))
        x = zeta @ A.T
        noise = rng.uniform(-config.eps_b, config.eps_b, size=int(nj)) if config.eps_b > 0 else 0.0
        y = x @ world.w_star + noise
        norms = np.linalg.norm(x, axis=1)
        assert np.all(norms <= X2 * (1 + 1e-12)), "input norm cap violated"
        xs.append(x)
        ys.append(np.asarray(y, dtype=float))
    return Dataset(tuple(xs), tuple(ys))


# ERM -------------------------------------------------------------------------

def quadratic_model(dataset: Dataset, n: Sequence[int] | None = None):
    """Return ``(H, g, const)`` with objective ``0.5 w'Hw - g'w + const``."""
    m = len(dataset.inputs)
    n = dataset.n if n is None else tuple(n)
    l = dataset.inputs[0].shape[1]
    H = np.zeros((l, l))
    g = np.zeros(l)
    const = 0.0
    for x, y, nj in zip(dataset.inputs, dataset.outputs, n):
        H += x.T @ x / nj
        g += x.T @ y / nj
        const += 0.5 * float(y @ y) / nj
    return H / m, g / m, const / m


def erm_objective(w, dataset: Dataset, n: Sequence[int] | None = None) -> float:
    m = len(dataset.inputs)
    n = dataset.n if n is None else tuple(n)
    total = 0.0
    for x, y, nj in zip(dataset.inputs, dataset.outputs, n):
        r = x @ w - y
        total += float(r @ r) / (2.0 * nj)
    return total / m


def _boundary_solution(evals, evecs, gt, radius):
    """Solve ``||(H + lam I)^{-1} g|| = radius`` for ``lam > 0`` in the
    eigenbasis of ``H`` (``gt`` is ``g`` in that basis)."""

    def excess(lam):
        return float(np.linalg.norm(gt / (evals + lam))) - radius

    lo = max(0.0, -float(evals.min())) + 1e-300
    hi = float(np.linalg.norm(gt)) / radius + abs(float(evals.max())) + 1.0
    while excess(hi) > 0:
        hi *= 2.0
    if excess(lo) <= 0:
        return None
    lam = brentq(excess, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    return evecs @ (gt / (evals + lam))


def projected_gradient(H, g, radius, w0=None, max_iter=100_000, tol=1e-13):
    """Projected gradient with backtracking for ``0.5 w'Hw - g'w`` on the ball."""

    def f(w):
        return 0.5 * float(w @ H @ w) - float(g @ w)

    def project(w):
        nrm = float(np.linalg.norm(w))
        return w if nrm <= radius else w * (radius / nrm)

    w = project(np.zeros_like(g) if w0 is None else np.asarray(w0, dtype=float))
    step = 1.0 / max(float(np.linalg.norm(H, 2)), 1e-300)
    fw = f(w)
    for it in range(max_iter):
        grad = H @ w - g
        while True:
            cand = project(w - step * grad)
            fc = f(cand)
            diff = cand - w
            if fc <= fw + float(grad @ diff) + float(diff @ diff) / (2 * step) + 1e-300:
                break
            step *= 0.5
        if float(np.linalg.norm(diff)) <= tol * max(1.0, float(np.linalg.norm(w))):
            return cand
        w, fw = cand, fc
        step *= 1.5
    raise ConvergenceError(
        f"projected gradient hit {max_iter} iterations", residual=float(np.linalg.norm(diff))
    )


def solve_erm(dataset: Dataset, n: Sequence[int] | None, W2: float) -> np.ndarray:
    """Ball-constrained least squares.

    Tries the minimum-norm unconstrained minimiser; if it leaves the ball the
    boundary multiplier is found by root finding on the regularised norm.
    Projected gradient is the fallback if the boundary solve fails.
    """
    if sum(dataset.n) == 0:
        raise ConfigError("ERM needs at least one sample")
    H, g, _ = quadratic_model(dataset, n)
    evals, evecs = np.linalg.eigh(H)
    scale = max(float(evals.max()), 0.0)
    if scale == 0.0:
        return np.zeros_like(g)
    keep = evals > RANK_RTOL * 1e-3 * scale
    gt = evecs.T @ g
    w = evecs[:, keep] @ (gt[keep] / evals[keep])
    if float(np.linalg.norm(w)) <= W2:
        return w
    # g lies in range(H); components on discarded directions are round-off.
    gt = np.where(keep, gt, 0.0)
    w = _boundary_solution(np.clip(evals, 0.0, None), evecs, gt, W2)
    if w is None or not np.all(np.isfinite(w)):
        w = projected_gradient(H, g, W2)
    nrm = float(np.linalg.norm(w))
    if nrm > W2:
        w = w * (W2 / nrm)
    return w


# Diagnostics -----------------------------------------------------------------

def analytic_divergence(world: SyntheticWorld, config: SyntheticConfig, w_hat) -> float:
    """Excess combined squared-loss risk of ``w_hat`` over ``w*``:
    ``2/(3 m l^3) sum_j X2_j^2 ||(w_hat - w*)' A_j||^2``.  The loss is not
    clamped at 1 here."""
    v = np.asarray(w_hat, dtype=float) - world.w_star
    if v.size != world.l:
        raise ConfigError("hypothesis dimension does not match the world")
    l, m = world.l, world.m
    total = sum(X2**2 * float(np.sum((v @ A) ** 2)) for A, X2 in zip(world.A, config.X2))
    return 2.0 / (3.0 * m * l**3) * total


def numerical_rank(M, rtol: float = RANK_RTOL) -> int:
    sv = np.linalg.svd(np.asarray(M, dtype=float), compute_uv=False)
    if sv.size == 0 or sv[0] == 0:
        return 0
    return int(np.sum(sv > rtol * sv[0]))


def identifiability_dimension(world: SyntheticWorld, m: int | None = None) -> int:
    """Dimension of weight directions invisible to the first ``m`` experiments."""
    m = world.m if m is None else m
    stacked = np.hstack(world.A[:m])
    return world.l - numerical_rank(stacked)


def theorem1_grid_oracle(losses: Sequence[Sequence[float]], atol: float = 0.0):
    """Argmin of the averaged loss versus the intersection of per-experiment
    argmins, over a finite hypothesis grid.  Both are returned as frozensets
    of grid indices; they coincide whenever the intersection is non-empty."""
    L = np.asarray(losses, dtype=float)
    if L.ndim != 2 or L.shape[1] == 0:
        raise ConfigError("losses must be m non-empty lists of equal length")
    if not np.all(np.isfinite(L)):
        raise ConfigError("losses must be finite")

    def argmin_set(v):
        return frozenset(int(i) for i in np.flatnonzero(v <= v.min() + atol))

    combined = argmin_set(L.mean(axis=0))
    inter = frozenset.intersection(*(argmin_set(row) for row in L))
    return combined, inter


# Import / export ---------------------------------------------------------------

def save_dataset_csv(dataset: Dataset, path) -> None:
    """One row per sample: experiment index, inputs, output."""
    path = Path(path)
    l = dataset.inputs[0].shape[1]
    try:
        with path.open("w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["experiment"] + [f"x{k}" for k in range(l)] + ["y"])
            for j, (x, y) in enumerate(zip(dataset.inputs, dataset.outputs)):
                for row, yi in zip(x, y):
                    wr.writerow([j] + [repr(float(v)) for v in row] + [repr(float(yi))])
    except OSError as exc:
        raise OSError(f"cannot write dataset to {path}: {exc}") from exc


def load_dataset_csv(path) -> Dataset:
    with Path(path).open(newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd)
        rows = [r for r in rd if r]
    l = len(header) - 2
    groups: dict[int, list[list[float]]] = {}
    for r in rows:
        groups.setdefault(int(r[0]), []).append([float(v) for v in r[1:]])
    xs, ys = [], []
    for j in sorted(groups):
        arr = np.asarray(groups[j], dtype=float)
        xs.append(arr[:, :l])
        ys.append(arr[:, l])
    return Dataset(tuple(xs), tuple(ys))


def save_world_json(world: SyntheticWorld, path) -> None:
    Path(path).write_text(json.dumps(world.to_dict(), indent=2) + "\n")


def load_world_json(path) -> SyntheticWorld:
    return SyntheticWorld.from_dict(json.loads(Path(path).read_text()))
