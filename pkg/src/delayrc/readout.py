"""Linear readout: ridge-regularized training, prediction, and task metrics.

The readout is the only trained part of the system.  Training solves the
regularized normal equations for the weights (and an optional constant
bias, which is never regularized); everything downstream is a dot product.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from .util import fmt

DEFAULT_RIDGE_GRID = (0.0, 1e-9, 1e-7, 1e-5, 1e-3, 1e-1)

SYMBOL_LEVELS = np.array([-3.0, -1.0, 1.0, 3.0])
_SYMBOL_THRESHOLDS = np.array([-2.0, 0.0, 2.0])


class SingularSystemError(np.linalg.LinAlgError):
    """Training system is rank-deficient; retry with a ridge penalty > 0."""


class ZeroVarianceError(ValueError):
    """Target sequence has zero variance, so the normalized error is undefined."""


@dataclass(frozen=True)
class Readout:
    weights: np.ndarray
    bias: float
    ridge: float

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if not np.all(np.isfinite(w)) or not np.isfinite(self.bias):
            raise SingularSystemError("training produced non-finite weights")
        object.__setattr__(self, "weights", w)

    def to_csv(self, path, header_comment: str = "") -> None:
        """Weights as ``i,w`` rows (1-based) plus a final ``bias`` row."""
        with open(path, "w", encoding="utf-8") as fh:
            if header_comment:
                fh.write(header_comment)
            fh.write("i,w\n")
            for i, w in enumerate(self.weights, start=1):
                fh.write(f"{i},{fmt(w)}\n")
            fh.write(f"bias,{fmt(self.bias)}\n")


def _as_states(states) -> np.ndarray:
    x = states.states if hasattr(states, "states") else np.asarray(states, dtype=float)
    if x.ndim != 2:
        raise ValueError(f"states must be a 2-D (n_nodes, n_steps) array, got {x.shape}")
    return x


def _solve_ridge(gram, rhs, ridge: float, n_weights: int):
    """Solve (gram + ridge on the weight block) theta = rhs by Cholesky.

    The bias row/column (anything past ``n_weights``) is left unpenalized.
    """
    h = np.array(gram, dtype=float)
    if ridge > 0:
        h[np.arange(n_weights), np.arange(n_weights)] += ridge
    try:
        factor = scipy.linalg.cho_factor(h, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        raise SingularSystemError(
            f"normal equations are singular at ridge={ridge}; retry with ridge > 0"
        ) from exc
    return scipy.linalg.cho_solve(factor, rhs, check_finite=False)


def train(states, targets, ridge: float, fit_bias: bool = True) -> Readout:
    """Fit readout weights by regularized least squares.

    Minimizes sum (d(n) - y(n))^2 + ridge * ||w||^2 over weights w (and the
    unregularized bias when ``fit_bias``).  Deterministic.  With ridge 0 a
    rank-deficient system raises SingularSystemError rather than picking an
    arbitrary minimizer.
    """
    x = _as_states(states)
    d = np.asarray(targets, dtype=float)
    n_nodes, n_steps = x.shape
    if d.shape != (n_steps,):
        raise ValueError(
            f"targets length {d.shape} does not match state columns {n_steps}"
        )
    if ridge < 0:
        raise ValueError(f"ridge must be >= 0, got {ridge}")
    design = x.T
    if fit_bias:
        design = np.hstack([design, np.ones((n_steps, 1))])
    gram = design.T @ design
    rhs = design.T @ d
    theta = _solve_ridge(gram, rhs, ridge, n_nodes)
    bias = float(theta[n_nodes]) if fit_bias else 0.0
    return Readout(weights=theta[:n_nodes], bias=bias, ridge=float(ridge))


def predict(readout: Readout, states) -> np.ndarray:
    """y(n) = bias + sum_i w_i * x_i(n)."""
    x = _as_states(states)
    if x.shape[0] != len(readout.weights):
        raise ValueError(
            f"states have {x.shape[0]} nodes but readout has {len(readout.weights)} weights"
        )
    return readout.weights @ x + readout.bias


def nmse(y, d) -> float:
    """Mean squared error normalized by the population variance of the target."""
    y = np.asarray(y, dtype=float)
    d = np.asarray(d, dtype=float)
    if y.shape != d.shape or y.ndim != 1:
        raise ValueError(f"sequences must be equal-length 1-D, got {y.shape}, {d.shape}")
    if len(d) < 2:
        raise ValueError("need at least two samples")
    var = float(np.var(d))
    if var <= 0.0:
        raise ZeroVarianceError("target sequence has zero variance")
    return float(np.mean((d - y) ** 2) / var)


def quantize_symbols(y) -> np.ndarray:
    """Map real outputs to the nearest 4-level symbol; ties round toward +inf."""
    idx = np.digitize(np.asarray(y, dtype=float), _SYMBOL_THRESHOLDS, right=False)
    return SYMBOL_LEVELS[idx]


def ser(y, d) -> float:
    """Fraction of symbols decoded incorrectly after nearest-symbol quantization."""
    y = np.asarray(y, dtype=float)
    d = np.asarray(d, dtype=float)
    if y.shape != d.shape or y.ndim != 1:
        raise ValueError(f"sequences must be equal-length 1-D, got {y.shape}, {d.shape}")
    return float(np.mean(quantize_symbols(y) != d))


@dataclass(frozen=True)
class CapacityEntry:
    family: str  # linear | quadratic | cross
    lag_i: int
    lag_j: Optional[int]
    raw: float
    floored: float
    ridge: float


@dataclass(frozen=True)
class CapacityResult:
    entries: tuple
    totals_raw: dict
    totals_floored: dict
    total_floored: float
    n_nodes: int

    def to_csv(self, path, header_comment: str = "") -> None:
        with open(path, "w", encoding="utf-8") as fh:
            if header_comment:
                fh.write(header_comment)
            fh.write("family,i,j,raw_c,floored_c\n")
            for e in self.entries:
                j = "" if e.lag_j is None else str(e.lag_j)
                fh.write(f"{e.family},{e.lag_i},{j},{fmt(e.raw)},{fmt(e.floored)}\n")


def capacity_suite(
    config,
    mask,
    input_seq,
    linear_lags=range(1, 51),
    quadratic_lags=range(1, 21),
    cross_max_lag: int = 15,
    split=(3000, 1000, 5000),
    ridge_grid=DEFAULT_RIDGE_GRID,
    fit_bias: bool = True,
    seed: int = 0,
) -> CapacityResult:
    """Measure how well the reservoir recalls functions of past inputs.

    One reservoir run over ``input_seq`` (uniform on [-1, 1]) serves every
    target.  Targets per family at lag i (and j for cross terms):

      linear     d(n) = u(n - i)
      quadratic  d(n) = 3*u(n - i)^2 - 1
      cross      d(n) = u(n - i) * u(n - j),  j > i

    For each target a readout is trained on the train split (ridge chosen
    on the validation split), the test NMSE e is computed, and the capacity
    is 1 - e, reported raw and floored at 0.  Totals are sums per family
    over the lag ranges; the grand floored total cannot meaningfully exceed
    the node count.
    """
    from .reservoir import run_discrete  # local import to avoid cycle at module load

    u = np.asarray(input_seq, dtype=float)
    train_len, val_len, test_len = split
    if train_len + val_len + test_len != len(u):
        raise ValueError(
            f"split {split} does not sum to input length {len(u)}"
        )
    max_lag = max(
        [max(linear_lags, default=0), max(quadratic_lags, default=0), cross_max_lag]
    )
    if config.washout < max_lag:
        raise ValueError(
            f"washout {config.washout} must cover the largest lag {max_lag}"
        )
    if train_len <= config.washout:
        raise ValueError(
            f"train split {train_len} must exceed washout {config.washout}"
        )

    states = run_discrete(config, mask, u, seed=seed)
    x = states.states
    n_nodes = config.n_nodes
    w = config.washout
    tr = slice(0, train_len - w)
    va = slice(train_len - w, train_len + val_len - w)
    te = slice(train_len + val_len - w, len(u) - w)

    design = np.hstack([x.T, np.ones((x.shape[1], 1))]) if fit_bias else x.T
    design_tr = design[tr]
    gram = design_tr.T @ design_tr
    factors = {}
    for ridge in ridge_grid:
        h = np.array(gram)
        if ridge > 0:
            h[np.arange(n_nodes), np.arange(n_nodes)] += ridge
        try:
            factors[ridge] = scipy.linalg.cho_factor(h, check_finite=False)
        except scipy.linalg.LinAlgError:
            factors[ridge] = None
    if all(f is None for f in factors.values()):
        raise SingularSystemError("all ridge values produced singular systems")

    def targets_for(fam: str, i: int, j: Optional[int]):
        # state column t corresponds to input index w + t; lags stay in range
        # because washout >= max lag
        base = np.arange(w, len(u))
        if fam == "linear":
            return u[base - i]
        if fam == "quadratic":
            return 3.0 * u[base - i] ** 2 - 1.0
        return u[base - i] * u[base - j]

    def fit_one(d_full):
        rhs = design_tr.T @ d_full[tr]
        best = None
        for ridge in ridge_grid:
            if factors[ridge] is None:
                continue
            theta = scipy.linalg.cho_solve(factors[ridge], rhs, check_finite=False)
            if not np.all(np.isfinite(theta)):
                continue
            y_va = design[va] @ theta
            err_va = nmse(y_va, d_full[va])
            if best is None or (err_va, ridge) < best[:2]:
                best = (err_va, ridge, theta)
        if best is None:
            raise SingularSystemError("no ridge value produced a finite solution")
        _, ridge, theta = best
        y_te = design[te] @ theta
        return nmse(y_te, d_full[te]), ridge

    jobs = [("linear", i, None) for i in linear_lags]
    jobs += [("quadratic", i, None) for i in quadratic_lags]
    jobs += [
        ("cross", i, j)
        for i in range(1, cross_max_lag + 1)
        for j in range(i + 1, cross_max_lag + 1)
    ]

    entries = []
    for fam, i, j in jobs:
        err, ridge = fit_one(targets_for(fam, i, j))
        raw = 1.0 - err
        entries.append(
            CapacityEntry(
                family=fam, lag_i=i, lag_j=j, raw=raw, floored=max(0.0, raw), ridge=ridge
            )
        )

    totals_raw = {}
    totals_floored = {}
    for fam in ("linear", "quadratic", "cross"):
        fam_entries = [e for e in entries if e.family == fam]
        totals_raw[fam] = float(sum(e.raw for e in fam_entries))
        totals_floored[fam] = float(sum(e.floored for e in fam_entries))
    return CapacityResult(
        entries=tuple(entries),
        totals_raw=totals_raw,
        totals_floored=totals_floored,
        total_floored=float(sum(totals_floored.values())),
        n_nodes=n_nodes,
    )
