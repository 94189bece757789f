"""Benchmark dataset generators.

Every generator is a pure function of its parameters and seed; datasets
are immutable and safe to share.  Targets can be replayed exactly from the
stored input by re-running the defining recursion or filter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .util import fmt

SYMBOL_LEVELS = np.array([-3.0, -1.0, 1.0, 3.0])

# multipath echo taps: coefficient of d(n + j) for j = +2 down to -7
CHANNEL_TAPS = (
    (2, 0.08),
    (1, -0.12),
    (0, 1.0),
    (-1, 0.18),
    (-2, -0.1),
    (-3, 0.091),
    (-4, -0.05),
    (-5, 0.04),
    (-6, 0.03),
    (-7, 0.01),
)
_PAST_SUPPORT = 7   # symbols of look-back the echo filter needs
_FUTURE_SUPPORT = 2  # symbols of look-ahead

NARMA_ORDER = 10
NARMA_DIVERGENCE_LIMIT = 10.0


class SeriesFormatError(ValueError):
    """A series file could not be parsed."""


@dataclass(frozen=True)
class TaskDataset:
    """Paired input/target sequences with a train/validation/test split."""

    input: np.ndarray
    target: Optional[np.ndarray]
    split: tuple
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        u = np.asarray(self.input, dtype=float)
        u.flags.writeable = False
        object.__setattr__(self, "input", u)
        if self.target is not None:
            d = np.asarray(self.target, dtype=float)
            if d.shape != u.shape:
                raise ValueError(
                    f"input and target lengths differ: {u.shape} vs {d.shape}"
                )
            d.flags.writeable = False
            object.__setattr__(self, "target", d)
        if len(self.split) != 3 or any(int(s) < 0 for s in self.split):
            raise ValueError(f"split must be three nonnegative lengths, got {self.split}")
        if sum(self.split) != len(u):
            raise ValueError(
                f"split {self.split} does not sum to sequence length {len(u)}"
            )
        object.__setattr__(self, "split", tuple(int(s) for s in self.split))

    def to_csv(self, path, header_comment: str = "") -> None:
        with open(path, "w", encoding="utf-8") as fh:
            if header_comment:
                fh.write(header_comment)
            fh.write("n,u,d\n")
            for n in range(len(self.input)):
                d = "" if self.target is None else fmt(self.target[n])
                fh.write(f"{n + 1},{fmt(self.input[n])},{d}\n")


def dataset_from_csv(path, split) -> TaskDataset:
    """Read back a ``n,u,d`` CSV written by :meth:`TaskDataset.to_csv`."""
    u, d = [], []
    has_target = True
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#") or line.startswith("n,"):
                continue
            parts = line.split(",")
            try:
                u.append(float(parts[1]))
                if len(parts) > 2 and parts[2] != "":
                    d.append(float(parts[2]))
                else:
                    has_target = False
            except (IndexError, ValueError) as exc:
                raise SeriesFormatError(f"{path}: line {line_no}: {line!r}") from exc
    target = np.array(d) if has_target else None
    return TaskDataset(input=np.array(u), target=target, split=split,
                       meta={"task": "csv", "path": str(path)})


def _default_split(n: int, proposal: tuple) -> tuple:
    train_len, val_len, _ = proposal
    if n <= train_len + val_len:
        raise ValueError(
            f"sequence length {n} too short for default split {proposal}; "
            "pass split explicitly"
        )
    return (train_len, val_len, n - train_len - val_len)


# ---------------------------------------------------------------------------
# nonlinear channel equalization


@dataclass(frozen=True)
class ChannelParams:
    """4-level symbol stream through a multipath echo, a polynomial
    receiver distortion, and additive white Gaussian noise at a target SNR
    (in dB, or inf for the noiseless channel)."""

    snr_db: float
    n_symbols: int
    seed: int = 0

    def __post_init__(self):
        if not (math.isinf(self.snr_db) or 12.0 <= self.snr_db <= 32.0):
            raise ValueError(
                f"task.snr_db must be in [12, 32] or inf, got {self.snr_db}"
            )
        if self.n_symbols <= _PAST_SUPPORT + _FUTURE_SUPPORT:
            raise ValueError(
                f"task.n_symbols must exceed the filter support "
                f"({_PAST_SUPPORT + _FUTURE_SUPPORT}), got {self.n_symbols}"
            )


def channel_distort(symbols, snr_db: float, rng=None):
    """Push a symbol stream through the channel model.

    Returns (received u, aligned clean symbols d).  The echo stage is
    q(n) = sum_j c_j d(n+j) over the taps above; the receiver stage is
    u = q + 0.036 q^2 + 0.011 q^3 + noise.  The noise variance is set
    against the variance of the noiseless received signal so that
    10*log10(Var(u_clean)/Var(noise)) equals ``snr_db``.  Boundary symbols
    without full filter support are dropped.
    """
    d = np.asarray(symbols, dtype=float)
    total = len(d)
    n_valid = total - _PAST_SUPPORT - _FUTURE_SUPPORT
    if n_valid < 1:
        raise ValueError(f"need more than {_PAST_SUPPORT + _FUTURE_SUPPORT} symbols")
    q = np.zeros(n_valid)
    for j, coeff in CHANNEL_TAPS:
        q += coeff * d[_PAST_SUPPORT + j : _PAST_SUPPORT + j + n_valid]
    clean = q + 0.036 * q**2 + 0.011 * q**3
    if math.isinf(snr_db):
        u = clean
    else:
        noise_var = float(np.var(clean)) / (10.0 ** (snr_db / 10.0))
        if rng is None:
            rng = np.random.default_rng(0)
        u = clean + rng.normal(0.0, math.sqrt(noise_var), size=n_valid)
    return u, d[_PAST_SUPPORT : _PAST_SUPPORT + n_valid]


def channel_dataset(params: ChannelParams, split=None) -> TaskDataset:
    """Equalization dataset: input is the received signal, target the sent
    symbols, drawn i.i.d. uniform from {-3, -1, 1, 3}."""
    rng = np.random.default_rng(params.seed)
    raw = rng.choice(SYMBOL_LEVELS, size=params.n_symbols + _PAST_SUPPORT + _FUTURE_SUPPORT)
    u, d = channel_distort(raw, params.snr_db, rng)
    if split is None:
        split = _default_split(params.n_symbols, (3000, 3000, 0))
    return TaskDataset(
        input=u,
        target=d,
        split=split,
        meta={
            "task": "channel",
            "metric": "ser",
            "snr_db": params.snr_db,
            "n_symbols": params.n_symbols,
            "seed": params.seed,
        },
    )


# ---------------------------------------------------------------------------
# NARMA10


def narma10_recursion(u) -> np.ndarray:
    """Tenth-order nonlinear autoregressive moving average, from zero history.

    d(n) = 0.3 d(n-1) + 0.05 d(n-1) * sum_{i=1..10} d(n-i)
         + 1.5 u(n-10) u(n-1) + 0.1

    Entries of u and d before the first sample are taken as zero.
    """
    u = np.asarray(u, dtype=float)
    n = len(u)
    dp = np.zeros(n + NARMA_ORDER)
    up = np.zeros(n + NARMA_ORDER)
    up[NARMA_ORDER:] = u
    for t in range(NARMA_ORDER, n + NARMA_ORDER):
        dp[t] = (
            0.3 * dp[t - 1]
            + 0.05 * dp[t - 1] * np.sum(dp[t - NARMA_ORDER : t])
            + 1.5 * up[t - NARMA_ORDER] * up[t - 1]
            + 0.1
        )
    return dp[NARMA_ORDER:]


def narma10_dataset(n: int, seed: int = 0, split=None) -> TaskDataset:
    """NARMA10 dataset: input i.i.d. uniform on [0, 0.5], target the
    recursion above.

    The recursion diverges for rare input draws; such draws are discarded
    and regenerated with the next seed (recorded in meta).
    """
    if n <= NARMA_ORDER:
        raise ValueError(f"task.n must exceed {NARMA_ORDER}, got {n}")
    attempt = 0
    while True:
        used_seed = seed + attempt
        rng = np.random.default_rng(used_seed)
        u = rng.uniform(0.0, 0.5, size=n)
        d = narma10_recursion(u)
        if np.all(np.abs(d) <= NARMA_DIVERGENCE_LIMIT):
            break
        attempt += 1
    if split is None:
        split = _default_split(n, (3000, 1000, 0))
    return TaskDataset(
        input=u,
        target=d,
        split=split,
        meta={
            "task": "narma10",
            "metric": "nmse",
            "n": n,
            "seed": seed,
            "seed_used": used_seed,
            "regenerations": attempt,
        },
    )


# ---------------------------------------------------------------------------
# memory-capacity input


def memory_input(n: int, seed: int = 0, split=None) -> TaskDataset:
    """Uniform [-1, 1] driving sequence for the capacity suite.

    There is no single target: the capacity suite derives one per lag and
    family, so the target field is left empty.
    """
    rng = np.random.default_rng(seed)
    u = rng.uniform(-1.0, 1.0, size=n)
    if split is None:
        split = _default_split(n, (3000, 1000, 0))
    return TaskDataset(
        input=u,
        target=None,
        split=split,
        meta={"task": "memory", "metric": "nmse", "n": n, "seed": seed},
    )


# ---------------------------------------------------------------------------
# Mackey-Glass


@dataclass(frozen=True)
class MackeyGlassParams:
    """Delay differential equation du/dt = a*u(t-tau)/(1 + u(t-tau)^c) - b*u.

    Note the convention a=2, b=1 here; much of the literature uses the
    time-rescaled a=0.2, b=0.1 variant, so values are not directly
    interchangeable.  ``dt`` must divide both the delay tau and the unit
    sampling period exactly.
    """

    a: float = 2.0
    b: float = 1.0
    tau: float = 17.0
    c: float = 10.0
    dt: float = 0.1
    n_samples: int = 4500
    washout_time: float = 1000.0
    seed: int = 0

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError(f"task.dt must be > 0, got {self.dt}")
        for name, period in (("tau", self.tau), ("unit sampling period", 1.0)):
            ratio = period / self.dt
            if abs(ratio - round(ratio)) > 1e-9:
                raise ValueError(
                    f"task.dt={self.dt} must divide the {name} ({period}) exactly"
                )
        if self.washout_time < 0:
            raise ValueError(f"task.washout_time must be >= 0, got {self.washout_time}")
        if self.n_samples < 2:
            raise ValueError(f"task.n_samples must be >= 2, got {self.n_samples}")


def mackey_glass_series(params: MackeyGlassParams, n_samples: int, x0=None) -> np.ndarray:
    """Integrate the delay equation and sample it with unit period.

    Classical fourth-order Runge-Kutta with step ``dt``; the delayed value
    at half-step stages is the average of the two bracketing stored
    samples.  History before t=0 is constant at the initial value, drawn
    uniformly from (0, 1) when ``x0`` is not given.  The first
    ``washout_time`` time units are discarded before sampling.
    """
    if x0 is None:
        x0 = float(np.random.default_rng(params.seed).uniform(0.0, 1.0))
    delay_steps = round(params.tau / params.dt)
    per_unit = round(1.0 / params.dt)
    washout_steps = round(params.washout_time / params.dt)
    last = washout_steps + (n_samples - 1) * per_unit
    a, b, c, dt = params.a, params.b, params.c, params.dt

    arr = np.empty(delay_steps + last + 1)
    arr[: delay_steps + 1] = x0

    def deriv(x, x_delayed):
        return a * x_delayed / (1.0 + x_delayed**c) - b * x

    for g in range(last):
        x = arr[delay_steps + g]
        d0 = arr[g]
        d1 = arr[g + 1]
        dm = 0.5 * (d0 + d1)
        k1 = deriv(x, d0)
        k2 = deriv(x + 0.5 * dt * k1, dm)
        k3 = deriv(x + 0.5 * dt * k2, dm)
        k4 = deriv(x + dt * k3, d1)
        arr[delay_steps + g + 1] = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    samples = arr[delay_steps + washout_steps :: per_unit][:n_samples]
    if not np.all(np.isfinite(samples)):
        raise FloatingPointError("delay-equation integration diverged")
    return samples


def mackey_glass_dataset(
    params: MackeyGlassParams, horizon: int, split=None
) -> TaskDataset:
    """Prediction dataset: input u(n), target u(n + horizon)."""
    if horizon < 0:
        raise ValueError(f"task.horizon must be >= 0, got {horizon}")
    series = mackey_glass_series(params, params.n_samples + horizon)
    u = series[: params.n_samples]
    d = series[horizon : horizon + params.n_samples]
    if split is None:
        split = _default_split(params.n_samples, (2000, 500, 0))
    return TaskDataset(
        input=u,
        target=d,
        split=split,
        meta={
            "task": "mackey_glass",
            "metric": "nmse",
            "horizon": horizon,
            "n_samples": params.n_samples,
            "dt": params.dt,
            "seed": params.seed,
        },
    )


# ---------------------------------------------------------------------------
# external real-valued series (radar-style prediction)


_COLUMN_ALIASES = {"re": 0, "0": 0, "im": 1, "1": 1}


def series_dataset(path, column, horizon: int, split=None) -> TaskDataset:
    """Prediction dataset from a CSV of one or two real columns.

    ``column`` selects the real ('re'/'0') or imaginary ('im'/'1') part.
    The series is standardized to zero mean and unit variance; the target
    is the series ``horizon`` steps ahead, so the last ``horizon`` samples
    are dropped from the input.
    """
    key = str(column).lower()
    if key not in _COLUMN_ALIASES:
        raise SeriesFormatError(f"unknown column selector {column!r}; use re, im, 0, or 1")
    col = _COLUMN_ALIASES[key]
    if horizon < 1:
        raise ValueError(f"task.horizon must be >= 1, got {horizon}")

    values = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            parts = [p.strip() for p in text.split(",")]
            try:
                row = [float(p) for p in parts if p != ""]
            except ValueError:
                if line_no == 1:  # header row
                    continue
                raise SeriesFormatError(
                    f"{path}: line {line_no}: cannot parse {text!r}"
                ) from None
            if not 1 <= len(row) <= 2:
                raise SeriesFormatError(
                    f"{path}: line {line_no}: expected 1 or 2 columns, got {len(row)}"
                )
            if col >= len(row):
                raise SeriesFormatError(
                    f"{path}: line {line_no}: column {column!r} not present"
                )
            values.append(row[col])

    series = np.array(values, dtype=float)
    if len(series) <= horizon:
        raise ValueError(
            f"series of length {len(series)} too short for horizon {horizon}"
        )
    std = float(np.std(series))
    if std <= 0.0:
        raise ValueError("series has zero variance; cannot standardize")
    series = (series - np.mean(series)) / std

    n = len(series) - horizon
    u = series[:n]
    d = series[horizon:]
    if split is None:
        train_len = max(1, int(0.6 * n))
        val_len = max(0, int(0.2 * n)) if n - train_len >= 2 else 0
        split = (train_len, val_len, n - train_len - val_len)
    return TaskDataset(
        input=u,
        target=d,
        split=split,
        meta={
            "task": "series",
            "metric": "nmse",
            "path": str(path),
            "column": key,
            "horizon": horizon,
        },
    )


# ---------------------------------------------------------------------------
# registry used by sweep and CLI


def make_dataset(name: str, params: dict, seed: int, split=None) -> TaskDataset:
    """Build a dataset by task name; ``seed`` overrides any seed in params."""
    p = dict(params)
    if name == "channel":
        return channel_dataset(
            ChannelParams(
                snr_db=float(p.get("snr_db", math.inf)),
                n_symbols=int(p["n_symbols"]),
                seed=seed,
            ),
            split=split,
        )
    if name == "narma10":
        return narma10_dataset(int(p["n"]), seed=seed, split=split)
    if name == "memory":
        return memory_input(int(p["n"]), seed=seed, split=split)
    if name == "mackey_glass":
        mg = MackeyGlassParams(
            a=float(p.get("a", 2.0)),
            b=float(p.get("b", 1.0)),
            tau=float(p.get("tau", 17.0)),
            c=float(p.get("c", 10.0)),
            dt=float(p.get("dt", 0.1)),
            n_samples=int(p.get("n_samples", 4500)),
            washout_time=float(p.get("washout_time", 1000.0)),
            seed=seed,
        )
        return mackey_glass_dataset(mg, horizon=int(p.get("horizon", 1)), split=split)
    if name == "series":
        return series_dataset(
            p["path"], p.get("column", "re"), int(p.get("horizon", 1)), split=split
        )
    raise ValueError(f"unknown task name {name!r}")
