"""JSON config documents -> typed objects.  Every problem raises ConfigError."""

from __future__ import annotations

import json
from pathlib import Path

from .allocation import BudgetProblem, ExperimentSpec
from .bounds import PREDICTOR_CLASSES
from .errors import ConfigError
from .harness import SweepConfig, x2_schedule
from .synthetic import SyntheticConfig


def load(path) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return doc


def _get(doc: dict, key: str, default=...):
    if key in doc:
        return doc[key]
    if default is ...:
        raise ConfigError(f"missing required key {key!r}")
    return default


def _build(factory, **kwargs):
    try:
        return factory(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def budget_problem(doc: dict) -> BudgetProblem:
    exps = _get(doc, "experiments")
    if not isinstance(exps, list):
        raise ConfigError("'experiments' must be a list of {a, c} objects")
    specs = tuple(_build(ExperimentSpec, a=float(_get(e, "a")), c=float(_get(e, "c"))) for e in exps)
    return BudgetProblem(
        specs,
        float(_get(doc, "budget")),
        float(doc.get("delta", 0.1)),
        doc.get("regime", "expected"),
        bool(doc.get("min_one_sample", False)),
    )


def predictor_class(doc: dict):
    kind = _get(doc, "kind")
    if kind not in PREDICTOR_CLASSES:
        raise ConfigError(f"unknown predictor class {kind!r}; known: {sorted(PREDICTOR_CLASSES)}")
    fields = {k: v for k, v in doc.items() if k != "kind"}
    return _build(PREDICTOR_CLASSES[kind], **fields)


def synthetic_config(doc: dict, seed: int | None = None, x2_mode: str | None = None) -> SyntheticConfig:
    fields = dict(doc)
    if seed is not None:
        fields["seed"] = seed
    if x2_mode is None and "X2" not in fields:
        x2_mode = "decreasing"
    if x2_mode is not None:
        fields["X2"] = x2_schedule(int(_get(fields, "l")), int(_get(fields, "m")), x2_mode)
    return _build(SyntheticConfig, **fields)


def sweep_config(doc: dict, seed: int | None = None, reps: int | None = None,
                 fixed_world: bool | None = None) -> SweepConfig:
    mode = doc.get("X2_mode", "decreasing")
    base = synthetic_config(_get(doc, "base"), seed, mode)
    thresholds = doc.get("thresholds", {})
    return SweepConfig(
        base=base,
        C_grid=tuple(_get(doc, "C_grid")),
        m_values=tuple(doc.get("m_values", range(1, base.m + 1))),
        reps=int(reps if reps is not None else doc.get("reps", 100)),
        d_m_thresh=float(thresholds.get("d_m_thresh", 1e-4)),
        w_thresh=float(thresholds.get("w_thresh", 1e-2)),
        X2_mode=mode,
        fixed_world=bool(doc.get("fixed_world", False) if fixed_world is None else fixed_world),
    )
