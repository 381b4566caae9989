"""Success-probability sweeps over (budget, number of experiments)."""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .allocation import proportionality_split, round_allocation
from .errors import ConfigError
from .synthetic import (
    SyntheticConfig,
    analytic_divergence,
    generate_dataset,
    generate_world,
    solve_erm,
)

CSV_HEADER = ("C", "m", "success_dm", "success_w", "reps", "seed")
X2_MODES = ("decreasing", "increasing")


@dataclass(frozen=True)
class CostSchedule:
    """Per-sample costs ``c_j = (e^s - 1) e^{-s j}``, ``j = 1..m``; they sum to
    ``1 - e^{-s m}``."""

    s: float
    m: int

    def __post_init__(self):
        if not self.s > 0:
            raise ConfigError("cost decay s must be positive")
        if self.m < 1:
            raise ConfigError("m must be >= 1")

    @property
    def values(self) -> np.ndarray:
        j = np.arange(1, self.m + 1, dtype=float)
        return math.expm1(self.s) * np.exp(-self.s * j)

    def partial_sum(self) -> float:
        return -math.expm1(-self.s * self.m)


def x2_schedule(l: int, m: int, mode: str) -> tuple[float, ...]:
    """Input caps ``l^{(m-j)/8}`` (decreasing) or ``l^{(j-1)/8}`` (increasing)."""
    if mode == "decreasing":
        return tuple(float(l) ** ((m - j) / 8) for j in range(1, m + 1))
    if mode == "increasing":
        return tuple(float(l) ** ((j - 1) / 8) for j in range(1, m + 1))
    raise ConfigError(f"X2_mode must be one of {X2_MODES}, got {mode!r}")


@dataclass(frozen=True)
class SweepConfig:
    base: SyntheticConfig
    C_grid: tuple[float, ...]
    m_values: tuple[int, ...]
    reps: int = 100
    d_m_thresh: float = 1e-4
    w_thresh: float = 1e-2
    X2_mode: str | None = "decreasing"
    fixed_world: bool = False

    def __post_init__(self):
        object.__setattr__(self, "C_grid", tuple(float(c) for c in self.C_grid))
        object.__setattr__(self, "m_values", tuple(int(m) for m in self.m_values))
        if any(not c > 0 for c in self.C_grid):
            raise ConfigError("budgets must be positive")
        if any(not 1 <= m <= self.base.m for m in self.m_values):
            raise ConfigError(f"m_values must lie in [1, {self.base.m}]")
        if self.reps < 1:
            raise ConfigError("reps must be >= 1")
        if not (self.d_m_thresh > 0 and self.w_thresh > 0):
            raise ConfigError("thresholds must be positive")
        if self.X2_mode is not None:
            x2 = x2_schedule(self.base.l, self.base.m, self.X2_mode)
            object.__setattr__(self, "base", replace(self.base, X2=x2))


@dataclass(frozen=True)
class RepRecord:
    C: float
    m: int
    rep: int
    seed: int
    d_m: float
    w_err: float
    success_dm: bool
    success_w: bool
    failure: str | None = None


@dataclass(frozen=True)
class SweepRow:
    C: float
    m: int
    success_dm: float
    success_w: float
    reps: int
    seed: int


@dataclass
class SweepResult:
    rows: list[SweepRow]
    metadata: dict = field(default_factory=dict)
    records: list[RepRecord] | None = None

    def row(self, C: float, m: int) -> SweepRow:
        for r in self.rows:
            if r.C == C and r.m == m:
                return r
        raise KeyError((C, m))


def derive_seed(*words: int) -> int:
    return int(np.random.SeedSequence([int(w) for w in words]).generate_state(1, np.uint64)[0])


def integer_counts(config: SyntheticConfig, C: float) -> np.ndarray:
    c = CostSchedule(config.s, config.m).values
    n_real = proportionality_split(config.X2, c, C)
    return round_allocation(n_real, c, C)


def simulate(config: SyntheticConfig, C: float, world_seed: int | None = None) -> dict:
    """One draw of the study: world, allocation, data, ERM, diagnostics."""
    world_cfg = config if world_seed is None else replace(config, seed=world_seed)
    world = generate_world(world_cfg)
    n = integer_counts(config, C)
    out = {"n": [int(k) for k in n]}
    if np.any(n < 1):
        out.update(d_m=math.nan, w_err=math.nan, failure="budget leaves an experiment without samples")
        return out
    data = generate_dataset(world, config, n)
    w_hat = solve_erm(data, n, config.W2)
    out.update(
        d_m=analytic_divergence(world, config, w_hat),
        w_err=float(np.linalg.norm(w_hat - world.w_star)),
        failure=None,
        world=world,
        w_hat=w_hat,
    )
    return out


def _run_one(cfg: SweepConfig, ci: int, C: float, m: int, rep: int) -> RepRecord:
    seed = derive_seed(cfg.base.seed, ci, m, rep)
    sub = replace(cfg.base.prefix(m), seed=seed)
    world_seed = derive_seed(cfg.base.seed, ci, m) if cfg.fixed_world else None
    res = simulate(sub, C, world_seed)
    if res["failure"]:
        return RepRecord(C, m, rep, seed, math.nan, math.nan, False, False, res["failure"])
    return RepRecord(
        C, m, rep, seed, res["d_m"], res["w_err"],
        res["d_m"] < cfg.d_m_thresh, res["w_err"] < cfg.w_thresh,
    )


def run_sweep(config: SweepConfig, threads: int = 1, keep_records: bool = False) -> SweepResult:
    """Estimate success frequencies on the (C, m) grid.

    Each repetition draws from its own seed derived from the master seed, the
    budget index, ``m`` and the repetition index, so the result does not
    depend on ``threads``.
    """
    tasks = [
        (ci, C, m, rep)
        for ci, C in sorted(enumerate(config.C_grid), key=lambda t: t[1])
        for m in sorted(config.m_values)
        for rep in range(config.reps)
    ]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(lambda t: _run_one(config, *t), tasks))
    else:
        records = [_run_one(config, *t) for t in tasks]

    counts: dict[tuple[float, int], list[int]] = {}
    for r in records:
        acc = counts.setdefault((r.C, r.m), [0, 0])
        acc[0] += r.success_dm
        acc[1] += r.success_w
    rows = [
        SweepRow(C, m, k_dm / config.reps, k_w / config.reps, config.reps, config.base.seed)
        for (C, m), (k_dm, k_w) in counts.items()
    ]
    rows.sort(key=lambda r: (r.C, r.m))
    metadata = {
        "world": "fixed per (C, m) cell" if config.fixed_world else "redrawn per repetition",
        "failures": sum(r.failure is not None for r in records),
    }
    return SweepResult(rows, metadata, records if keep_records else None)


# Output ------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return repr(float(x))


def emit_csv(result: SweepResult, path) -> None:
    path = Path(path)
    rows = sorted(result.rows, key=lambda r: (r.C, r.m))
    try:
        with path.open("w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(CSV_HEADER)
            for r in rows:
                wr.writerow([_fmt(r.C), r.m, _fmt(r.success_dm), _fmt(r.success_w), r.reps, r.seed])
    except OSError as exc:
        raise OSError(f"cannot write sweep CSV to {path}: {exc}") from exc


def read_csv(path) -> SweepResult:
    with Path(path).open(newline="") as fh:
        rd = csv.DictReader(fh)
        if tuple(rd.fieldnames or ()) != CSV_HEADER:
            raise ConfigError(f"{path}: unexpected header {rd.fieldnames}")
        rows = [
            SweepRow(float(d["C"]), int(d["m"]), float(d["success_dm"]),
                     float(d["success_w"]), int(d["reps"]), int(d["seed"]))
            for d in rd
        ]
    return SweepResult(rows)
