"""Input masks for time-multiplexed delay-line reservoirs.

A mask assigns one coefficient per virtual node; it is the only thing that
breaks the symmetry between nodes, so its shape matters.  Two families are
harmonic (one sine, or the sum of two sines, with integer frequency
indices) and can be produced by plain oscillators; two are the usual
random baselines.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .util import fmt


class MaskFamily(str, Enum):
    RANDOM_UNIFORM = "random_uniform"
    RANDOM_BINARY = "random_binary"
    SINGLE_SINE = "single_sine"
    TWO_SINE = "two_sine"

    @property
    def is_random(self) -> bool:
        return self in (MaskFamily.RANDOM_UNIFORM, MaskFamily.RANDOM_BINARY)

    @property
    def is_sine(self) -> bool:
        return not self.is_random


class MaskSpecError(ValueError):
    """A mask specification violates its constraints."""


@dataclass(frozen=True)
class MaskSpec:
    """Recipe for one mask.

    ``f1``/``f2`` are integer frequency indices in [1, n_nodes], used by the
    sine families only; ``seed`` is used by the random families only.
    """

    family: MaskFamily
    n_nodes: int
    f1: Optional[int] = None
    f2: Optional[int] = None
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "family", MaskFamily(self.family))
        if self.n_nodes < 2:
            raise MaskSpecError(f"mask.n_nodes must be >= 2, got {self.n_nodes}")
        if self.family.is_sine:
            self._check_freq("f1", self.f1)
        if self.family is MaskFamily.TWO_SINE:
            self._check_freq("f2", self.f2)
            if self.f1 == self.f2:
                raise MaskSpecError(
                    f"mask.f2: two_sine requires f1 != f2, got f1 = f2 = {self.f1}"
                )

    def _check_freq(self, name: str, value) -> None:
        if value is None:
            raise MaskSpecError(f"mask.{name} is required for family {self.family.value}")
        if not (1 <= value <= self.n_nodes):
            raise MaskSpecError(
                f"mask.{name} must lie in [1, {self.n_nodes}], got {value}"
            )


@dataclass(frozen=True)
class Mask:
    """A generated mask: one coefficient per node, plus the spec it came from."""

    coefficients: np.ndarray
    spec: MaskSpec

    def __post_init__(self):
        coeffs = np.array(self.coefficients, dtype=float)
        if coeffs.shape != (self.spec.n_nodes,):
            raise MaskSpecError(
                f"mask length {coeffs.shape} does not match n_nodes={self.spec.n_nodes}"
            )
        coeffs.flags.writeable = False
        object.__setattr__(self, "coefficients", coeffs)


def generate_mask(spec: MaskSpec) -> Mask:
    """Build the coefficient vector for a mask spec.

    Sine families evaluate sin(2*pi*i*f/N) at node indices i = 1..N (plus
    the second harmonic for two_sine).  Random families draw from the seed:
    uniform over [-1, 1] or fair choices from {-1, +1}.  Same spec, same
    mask, bit for bit.
    """
    n = spec.n_nodes
    if spec.family is MaskFamily.SINGLE_SINE:
        i = np.arange(1, n + 1, dtype=float)
        coeffs = np.sin(2.0 * np.pi * i * spec.f1 / n)
    elif spec.family is MaskFamily.TWO_SINE:
        i = np.arange(1, n + 1, dtype=float)
        coeffs = np.sin(2.0 * np.pi * i * spec.f1 / n) + np.sin(2.0 * np.pi * i * spec.f2 / n)
    elif spec.family is MaskFamily.RANDOM_UNIFORM:
        rng = np.random.default_rng(spec.seed)
        coeffs = rng.uniform(-1.0, 1.0, size=n)
    elif spec.family is MaskFamily.RANDOM_BINARY:
        rng = np.random.default_rng(spec.seed)
        coeffs = rng.choice(np.array([-1.0, 1.0]), size=n)
    else:  # pragma: no cover
        raise MaskSpecError(f"unknown mask family {spec.family}")
    return Mask(coefficients=coeffs, spec=spec)


def continuous_mask_value(spec: MaskSpec, t, t_prime: float):
    """Evaluate the continuous-time mask m(t) with period ``t_prime``.

    Sine families are smooth: sin(2*pi*t*f1/T') (+ the f2 term for
    two_sine).  Random families are the piecewise-constant hold: the slot
    [j*theta, (j+1)*theta) within each period carries the (j+1)-th
    coefficient, theta = T'/N, so the hold over a node's time window equals
    that node's discrete coefficient.

    ``t`` may be a scalar or an array.
    """
    if t_prime <= 0:
        raise ValueError(f"t_prime must be > 0, got {t_prime}")
    t_arr = np.asarray(t, dtype=float)
    if spec.family is MaskFamily.SINGLE_SINE:
        val = np.sin(2.0 * np.pi * t_arr * spec.f1 / t_prime)
    elif spec.family is MaskFamily.TWO_SINE:
        val = np.sin(2.0 * np.pi * t_arr * spec.f1 / t_prime) + np.sin(
            2.0 * np.pi * t_arr * spec.f2 / t_prime
        )
    else:
        coeffs = generate_mask(spec).coefficients
        theta = t_prime / spec.n_nodes
        slot = np.floor(np.mod(t_arr, t_prime) / theta).astype(int)
        # rounding at a period boundary can push the slot index to N
        slot = np.clip(slot, 0, spec.n_nodes - 1)
        val = coeffs[slot]
    if np.isscalar(t) or np.ndim(t) == 0:
        return float(val)
    return val


@dataclass(frozen=True)
class DegeneracyReport:
    """Duplicate-coefficient diagnostics for a mask.

    ``duplicate_pairs`` lists 1-based index pairs (i, j), i < j, whose
    coefficients agree within ``tolerance``.  The gcd fields flag shared
    divisors between the frequency indices (and their sum/difference) and
    the node count; any gcd > 1 forces repeated coefficient values.  They
    are None for families without the corresponding frequency.
    """

    duplicate_pairs: tuple
    gcd_f1: Optional[int]
    gcd_f2: Optional[int]
    gcd_sum: Optional[int]
    gcd_diff: Optional[int]
    tolerance: float

    @property
    def has_duplicates(self) -> bool:
        return len(self.duplicate_pairs) > 0


def mask_degeneracy_report(mask: Mask, tolerance: float = 1e-12) -> DegeneracyReport:
    """Find coefficient collisions and the gcd diagnostics that explain them."""
    c = mask.coefficients
    n = len(c)
    ii, jj = np.triu_indices(n, k=1)
    close = np.abs(c[ii] - c[jj]) < tolerance
    pairs = tuple((int(i) + 1, int(j) + 1) for i, j in zip(ii[close], jj[close]))

    spec = mask.spec
    gcd_f1 = gcd_f2 = gcd_sum = gcd_diff = None
    if spec.family.is_sine:
        gcd_f1 = math.gcd(spec.f1, n)
    if spec.family is MaskFamily.TWO_SINE:
        gcd_f2 = math.gcd(spec.f2, n)
        gcd_sum = math.gcd(spec.f1 + spec.f2, n)
        gcd_diff = math.gcd(abs(spec.f1 - spec.f2), n)
    return DegeneracyReport(
        duplicate_pairs=pairs,
        gcd_f1=gcd_f1,
        gcd_f2=gcd_f2,
        gcd_sum=gcd_sum,
        gcd_diff=gcd_diff,
        tolerance=tolerance,
    )


def mask_to_csv(mask: Mask, path, header_comment: str = "") -> None:
    """Write a mask as CSV with header ``i,m_i``, node indices 1-based."""
    with open(path, "w", encoding="utf-8") as fh:
        if header_comment:
            fh.write(header_comment)
        fh.write("i,m_i\n")
        for i, value in enumerate(mask.coefficients, start=1):
            fh.write(f"{i},{fmt(value)}\n")
