"""End-to-end evaluation: dataset -> reservoir -> readout -> metric.

Shared by the CLI's single-run command and by every sweep point.  The
ridge penalty is always chosen on the validation split; the washout eats
into the head of the training split, so the train length must exceed it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .mask import Mask
from .readout import (
    DEFAULT_RIDGE_GRID,
    Readout,
    SingularSystemError,
    nmse,
    predict,
    ser,
    train,
)
from .reservoir import ReservoirConfig, run_discrete
from .tasks import TaskDataset

METRIC_FUNCS = {"nmse": nmse, "ser": ser}


@dataclass(frozen=True)
class PipelineResult:
    metric_kind: str
    ridge: float
    validation_value: float
    test_value: float
    train_value: float
    readout: Readout
    y_test: np.ndarray
    d_test: np.ndarray
    validation_by_ridge: dict = field(default_factory=dict)


def run_pipeline(
    dataset: TaskDataset,
    mask: Mask,
    config: ReservoirConfig,
    ridge_grid=DEFAULT_RIDGE_GRID,
    metric: Optional[str] = None,
    fit_bias: bool = True,
    noise_seed: int = 0,
) -> PipelineResult:
    """Train on the train split, pick ridge on validation, score on test.

    For the symbol-error metric, validation ties between ridge values are
    broken by validation NMSE and then by the smaller ridge, so selection
    stays deterministic even when several ridges decode identically.
    """
    if dataset.target is None:
        raise ValueError(f"task {dataset.meta.get('task')!r} has no target sequence")
    metric = metric or dataset.meta.get("metric", "nmse")
    if metric not in METRIC_FUNCS:
        raise ValueError(f"unknown metric {metric!r}; expected one of {sorted(METRIC_FUNCS)}")
    metric_fn = METRIC_FUNCS[metric]

    train_len, val_len, test_len = dataset.split
    w = config.washout
    if train_len <= w:
        raise ValueError(
            f"train split {train_len} must exceed reservoir washout {w}"
        )
    if val_len < 2 or test_len < 2:
        raise ValueError(f"validation/test splits too short: {dataset.split}")

    states = run_discrete(config, mask, dataset.input, seed=noise_seed)
    x = states.states
    d = dataset.target[w:]
    tr = slice(0, train_len - w)
    va = slice(train_len - w, train_len + val_len - w)
    te = slice(train_len + val_len - w, x.shape[1])

    best = None
    val_by_ridge = {}
    for ridge in ridge_grid:
        try:
            readout = train(x[:, tr], d[tr], ridge, fit_bias=fit_bias)
        except SingularSystemError:
            val_by_ridge[ridge] = float("inf")
            continue
        y_va = predict(readout, x[:, va])
        val_value = metric_fn(y_va, d[va])
        val_by_ridge[ridge] = val_value
        tiebreak = nmse(y_va, d[va]) if metric == "ser" else val_value
        key = (val_value, tiebreak, ridge)
        if best is None or key < best[0]:
            best = (key, ridge, readout)
    if best is None:
        raise SingularSystemError(
            "training failed for every ridge value in the grid"
        )

    _, ridge, readout = best
    y_te = predict(readout, x[:, te])
    y_tr = predict(readout, x[:, tr])
    return PipelineResult(
        metric_kind=metric,
        ridge=ridge,
        validation_value=val_by_ridge[ridge],
        test_value=metric_fn(y_te, d[te]),
        train_value=metric_fn(y_tr, d[tr]),
        readout=readout,
        y_test=y_te,
        d_test=d[te],
        validation_by_ridge=val_by_ridge,
    )
