"""Delay-line reservoir simulation.

Two independent routes compute the same physics and cross-validate each
other:

* ``run_discrete`` — the discrete-time reference model on the virtual-node
  grid.  Node i at step n is driven by node i-k of step n-1; the first k
  nodes wrap around the ring and read node i-k+N of step n-2 instead,
  because the loop delay exceeds the input hold period by k node slots.
* ``run_continuous`` — a continuous-time emulator on a grid of
  ``oversampling`` samples per node slot: zero-order-hold input, the mask
  evaluated as a function of time, feedback delayed by the full loop time,
  and node states extracted by averaging each slot's samples.

With oversampling 1 and a piecewise-constant mask the two coincide sample
for sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
from numba import njit

from .mask import Mask, MaskSpec, continuous_mask_value
from .util import fmt


class Nonlinearity(str, Enum):
    SINE = "sine"
    TANH = "tanh"
    SATURATING_GAIN = "saturating_gain"


_NL_CODE = {
    Nonlinearity.SINE: 0,
    Nonlinearity.TANH: 1,
    Nonlinearity.SATURATING_GAIN: 2,
}


@dataclass(frozen=True)
class NonlinearitySpec:
    """Bounded transfer function applied at every node update.

    sine: f(z) = sin(z + phase).  tanh: f(z) = tanh(z).  saturating_gain:
    f(z) = z / (1 + |z|/saturation), a generic bounded gain stage.
    """

    kind: Nonlinearity = Nonlinearity.SINE
    phase: float = 0.0
    saturation: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", Nonlinearity(self.kind))
        if self.saturation <= 0:
            raise ValueError(f"reservoir.saturation must be > 0, got {self.saturation}")

    def apply(self, z):
        """Vectorized transfer function (used by oracles and diagnostics)."""
        z = np.asarray(z, dtype=float)
        if self.kind is Nonlinearity.SINE:
            return np.sin(z + self.phase)
        if self.kind is Nonlinearity.TANH:
            return np.tanh(z)
        return z / (1.0 + np.abs(z) / self.saturation)

    def bounds(self) -> tuple:
        if self.kind is Nonlinearity.SATURATING_GAIN:
            return (-self.saturation, self.saturation)
        return (-1.0, 1.0)


@dataclass(frozen=True)
class ReservoirConfig:
    """Static parameters of one delay-line reservoir."""

    n_nodes: int
    offset_k: int
    alpha: float
    beta: float
    nonlinearity: NonlinearitySpec = field(default_factory=NonlinearitySpec)
    state_noise_std: float = 0.0
    washout: int = 200

    def __post_init__(self):
        if self.n_nodes < 2:
            raise ValueError(f"reservoir.n_nodes must be >= 2, got {self.n_nodes}")
        if not (1 <= self.offset_k <= self.n_nodes - 1):
            raise ValueError(
                f"reservoir.offset_k must lie in [1, {self.n_nodes - 1}], got {self.offset_k}"
            )
        if self.alpha < 0:
            raise ValueError(f"reservoir.alpha must be >= 0, got {self.alpha}")
        if self.beta < 0:
            raise ValueError(f"reservoir.beta must be >= 0, got {self.beta}")
        if self.state_noise_std < 0:
            raise ValueError(
                f"reservoir.state_noise_std must be >= 0, got {self.state_noise_std}"
            )
        if self.washout < 0:
            raise ValueError(f"reservoir.washout must be >= 0, got {self.washout}")


@dataclass(frozen=True)
class EmulatorConfig:
    """Continuous-emulator settings on top of a base reservoir config.

    ``oversampling`` is the number of grid samples per node slot;
    ``t_prime`` is the input hold period in arbitrary time units (results
    do not depend on its value, only on the grid alignment).
    """

    base: ReservoirConfig
    oversampling: int = 1
    t_prime: float = 1.0

    def __post_init__(self):
        if self.oversampling < 1:
            raise ValueError(
                f"emulator.oversampling must be >= 1, got {self.oversampling}"
            )
        if self.t_prime <= 0:
            raise ValueError(f"emulator.t_prime must be > 0, got {self.t_prime}")


@dataclass(frozen=True)
class StateMatrix:
    """Node states harvested from a run, one column per post-washout step."""

    states: np.ndarray
    config: ReservoirConfig

    def __post_init__(self):
        states = np.asarray(self.states, dtype=float)
        object.__setattr__(self, "states", states)

    @property
    def input_len(self) -> int:
        return self.states.shape[1]

    def to_csv(self, path, header_comment: str = "") -> None:
        """Long-format dump ``n,i,x`` (1-based indices), meant for debugging."""
        n_nodes, n_steps = self.states.shape
        with open(path, "w", encoding="utf-8") as fh:
            if header_comment:
                fh.write(header_comment)
            fh.write("n,i,x\n")
            for n in range(n_steps):
                for i in range(n_nodes):
                    fh.write(f"{n + 1},{i + 1},{fmt(self.states[i, n])}\n")


@njit(cache=True, inline="always")
def _transfer(z, kind, phase, saturation):
    if kind == 0:
        return math.sin(z + phase)
    elif kind == 1:
        return math.tanh(z)
    else:
        return z / (1.0 + abs(z) / saturation)


@njit(cache=True)
def _discrete_update(inj, alpha, offset_k, kind, phase, saturation, x_init, x_init_prev):
    """Reference node update.

    inj[i, n] already holds the masked, scaled input (plus any state
    noise).  x_init and x_init_prev are the states at steps 0 and -1.
    """
    n_nodes, n_steps = inj.shape
    out = np.empty((n_nodes, n_steps))
    prev1 = x_init.copy()
    prev2 = x_init_prev.copy()
    for n in range(n_steps):
        for i in range(n_nodes):
            if i >= offset_k:
                feedback = prev1[i - offset_k]
            else:
                feedback = prev2[i - offset_k + n_nodes]
            out[i, n] = _transfer(alpha * feedback + inj[i, n], kind, phase, saturation)
        tmp = prev2
        prev2 = prev1
        prev1 = tmp
        for i in range(n_nodes):
            prev1[i] = out[i, n]
    return out


@njit(cache=True)
def _flat_delay_update(inj, delay, alpha, kind, phase, saturation):
    """Scalar delay line on the emulator grid: s[p] = f(alpha*s[p-delay] + inj[p])."""
    total = inj.shape[0]
    out = np.empty(total)
    for p in range(total):
        q = p - delay
        prev = out[q] if q >= 0 else 0.0
        out[p] = _transfer(alpha * prev + inj[p], kind, phase, saturation)
    return out


def _check_input(u, washout: int) -> np.ndarray:
    u = np.ascontiguousarray(u, dtype=float)
    if u.ndim != 1:
        raise ValueError(f"input sequence must be 1-D, got shape {u.shape}")
    if not np.all(np.isfinite(u)):
        raise ValueError("input sequence contains non-finite values")
    if len(u) <= washout:
        raise ValueError(
            f"input length {len(u)} must exceed washout {washout}"
        )
    return u


def _initial_states(config: ReservoirConfig, initial_state) -> tuple:
    n = config.n_nodes
    if initial_state is None:
        return np.zeros(n), np.zeros(n)
    if isinstance(initial_state, tuple):
        x0, xm1 = initial_state
    else:
        x0 = xm1 = initial_state
    x0 = np.ascontiguousarray(x0, dtype=float)
    xm1 = np.ascontiguousarray(xm1, dtype=float)
    if x0.shape != (n,) or xm1.shape != (n,):
        raise ValueError(f"initial states must have shape ({n},)")
    return x0, xm1


def run_discrete(
    config: ReservoirConfig,
    mask: Mask,
    input_seq,
    seed: int = 0,
    initial_state=None,
) -> StateMatrix:
    """Run the discrete reference model and return post-washout states.

    The argument of the transfer function is alpha * (delayed state) +
    beta * m_i * u(n), with seeded Gaussian noise added to the argument
    when state_noise_std > 0.  States at steps 0 and -1 are zero unless
    ``initial_state`` (an (N,) array, or an (x0, xm1) pair) overrides them
    for diagnostics.
    """
    if len(mask.coefficients) != config.n_nodes:
        raise ValueError(
            f"mask length {len(mask.coefficients)} does not match "
            f"reservoir n_nodes {config.n_nodes}"
        )
    u = _check_input(input_seq, config.washout)
    n, total = config.n_nodes, len(u)
    scaled = config.beta * mask.coefficients
    inj = scaled[:, None] * u[None, :]
    if config.state_noise_std > 0:
        rng = np.random.default_rng(seed)
        # drawn time-major so the oversampling-1 emulator sees the same stream
        inj = inj + rng.normal(0.0, config.state_noise_std, size=(total, n)).T
    inj = np.ascontiguousarray(inj)
    x0, xm1 = _initial_states(config, initial_state)
    nl = config.nonlinearity
    states = _discrete_update(
        inj, config.alpha, config.offset_k, _NL_CODE[nl.kind], nl.phase, nl.saturation,
        x0, xm1,
    )
    return StateMatrix(states=states[:, config.washout:], config=config)


def run_continuous(
    emu: EmulatorConfig,
    mask_spec: MaskSpec,
    input_seq,
    seed: int = 0,
) -> StateMatrix:
    """Run the continuous-time emulator and return post-washout states.

    Grid sample g sits at time g * theta / oversampling.  The input is held
    constant over each period, the mask is evaluated at the grid times, and
    the feedback arrives after the full loop delay (N + k node slots).
    Each node state is the mean of its slot's samples.
    """
    config = emu.base
    if mask_spec.n_nodes != config.n_nodes:
        raise ValueError(
            f"mask n_nodes {mask_spec.n_nodes} does not match "
            f"reservoir n_nodes {config.n_nodes}"
        )
    u = _check_input(input_seq, config.washout)
    n, sub = config.n_nodes, emu.oversampling
    steps = len(u)
    per_period = n * sub
    theta = emu.t_prime / n

    grid_offsets = np.arange(per_period, dtype=float) * (theta / sub)
    mask_period = np.asarray(
        continuous_mask_value(mask_spec, grid_offsets, emu.t_prime), dtype=float
    )
    inj = (config.beta * np.tile(mask_period, steps)) * np.repeat(u, per_period)
    if config.state_noise_std > 0:
        rng = np.random.default_rng(seed)
        inj = inj + rng.normal(0.0, config.state_noise_std, size=inj.shape)
    inj = np.ascontiguousarray(inj)

    delay = (n + config.offset_k) * sub
    nl = config.nonlinearity
    flat = _flat_delay_update(
        inj, delay, config.alpha, _NL_CODE[nl.kind], nl.phase, nl.saturation
    )
    states = flat.reshape(steps, n, sub).mean(axis=2).T
    return StateMatrix(states=states[:, config.washout:], config=config)


def fading_memory_probe(
    config: ReservoirConfig,
    mask: Mask,
    input_seq,
    initial_a,
    initial_b,
    seed: int = 0,
) -> np.ndarray:
    """Gap between two trajectories started from different states.

    Both runs see the identical input (and identical noise draw, if any);
    only the initial states differ.  Returns delta(n) = max_i |x_i(n) -
    x'_i(n)| for n = 1..len(input), with no washout applied.  No
    contraction is assumed; the probe reports whatever happens.
    """
    probe_config = ReservoirConfig(
        n_nodes=config.n_nodes,
        offset_k=config.offset_k,
        alpha=config.alpha,
        beta=config.beta,
        nonlinearity=config.nonlinearity,
        state_noise_std=config.state_noise_std,
        washout=0,
    )
    run_a = run_discrete(probe_config, mask, input_seq, seed=seed, initial_state=initial_a)
    run_b = run_discrete(probe_config, mask, input_seq, seed=seed, initial_state=initial_b)
    return np.max(np.abs(run_a.states - run_b.states), axis=0)
