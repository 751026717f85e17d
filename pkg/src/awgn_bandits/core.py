"""Bandit instances, reward families and seeded random streams.

Every random draw in the package goes through :class:`RandomSource`, and every
reward is produced by pushing one uniform variate through the family's
quantile function. One uniform per reward keeps the stream consumption
independent of which family an arm belongs to, so the scalar episode runner
and the vectorised batch engine in :mod:`awgn_bandits.harness` consume the
same numbers in the same order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from scipy.special import ndtri

# Smallest uniform we hand to a quantile function; keeps ndtri finite.
_TINY_UNIFORM = 2.0**-54


class RandomSource:
    """Deterministic uniform stream keyed by ``(seed, stream)``.

    PCG64 seeded through ``SeedSequence(seed, spawn_key=(stream,))``. Equal
    keys give equal sequences on every platform; distinct stream ids give
    independent streams. Normal variates are obtained by inverse CDF
    (``scipy.special.ndtri``) from these uniforms, never from the generator's
    own normal sampler, so a draw is always exactly one uniform.
    """

    def __init__(self, seed: int, stream: int = 0):
        if not (0 <= seed < 2**64 and 0 <= stream < 2**64):
            raise ValueError("seed and stream must be 64-bit unsigned integers")
        self.seed = int(seed)
        self.stream = int(stream)
        seq = np.random.SeedSequence(self.seed, spawn_key=(self.stream,))
        self._gen = np.random.Generator(np.random.PCG64(seq))

    def uniform(self) -> float:
        """One variate in the open interval (0, 1)."""
        return max(float(self._gen.random()), _TINY_UNIFORM)

    def uniforms(self, shape) -> np.ndarray:
        """Array of variates in (0, 1); same values as repeated :meth:`uniform` calls."""
        return np.maximum(self._gen.random(shape), _TINY_UNIFORM)

    def __repr__(self) -> str:
        return f"RandomSource(seed={self.seed}, stream={self.stream})"


@dataclass(frozen=True)
class UnitGaussian:
    """Normal rewards with unit variance."""

    mean: float

    def __post_init__(self):
        if not math.isfinite(self.mean):
            raise ValueError("mean must be finite")

    @property
    def second_moment(self) -> float:
        return self.mean**2 + 1.0

    def quantile(self, u):
        return self.mean + ndtri(u)


@dataclass(frozen=True)
class ShiftedRademacher:
    """Rewards in {-1, +1} with expectation ``mean``."""

    mean: float

    def __post_init__(self):
        if not -1.0 <= self.mean <= 1.0:
            raise ValueError(f"ShiftedRademacher mean must lie in [-1, 1], got {self.mean}")

    @property
    def second_moment(self) -> float:
        return 1.0

    @property
    def p_plus(self) -> float:
        return (1.0 + self.mean) / 2.0

    def quantile(self, u):
        return np.where(u < self.p_plus, 1.0, -1.0)


@dataclass(frozen=True)
class Deterministic:
    """Constant reward ``value``."""

    value: float

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValueError("value must be finite")

    @property
    def mean(self) -> float:
        return self.value

    @property
    def second_moment(self) -> float:
        return self.value**2

    def quantile(self, u):
        return np.full_like(u, self.value, dtype=float) if np.ndim(u) else self.value


RewardFamily = Union[UnitGaussian, ShiftedRademacher, Deterministic]

# Integer codes used by the batch engine to pick a family per pulled arm.
FAMILY_CODES = {UnitGaussian: 0, ShiftedRademacher: 1, Deterministic: 2}


def sample_reward(family: RewardFamily, rng: RandomSource) -> float:
    """Draw one reward; consumes exactly one uniform from ``rng``."""
    return float(family.quantile(rng.uniform()))


@dataclass(frozen=True)
class BanditInstance:
    """K independent arms with a common second-moment bound ``B``.

    Arms are indexed from 0. Construction checks ``E[X^2] <= B^2`` for every
    arm in closed form.
    """

    arms: tuple
    second_moment_bound: float

    def __post_init__(self):
        object.__setattr__(self, "arms", tuple(self.arms))
        if len(self.arms) < 1:
            raise ValueError("an instance needs at least one arm")
        b = self.second_moment_bound
        if not (math.isfinite(b) and b >= 1.0):
            raise ValueError(f"second_moment_bound must be >= 1, got {b}")
        for i, arm in enumerate(self.arms):
            if type(arm) not in FAMILY_CODES:
                raise TypeError(f"arm {i}: unsupported reward family {arm!r}")
            # relative slack absorbs float rounding in mean**2 + 1
            if arm.second_moment > b * b * (1.0 + 1e-12):
                raise ValueError(
                    f"arm {i}: second moment {arm.second_moment:g} exceeds B^2 = {b * b:g}"
                )
        # lookup tables for batch_rewards; plain attributes, not dataclass fields
        codes = np.array([FAMILY_CODES[type(a)] for a in self.arms], dtype=np.intp)
        object.__setattr__(self, "_codes", codes)
        object.__setattr__(self, "_mean_arr", np.array([a.mean for a in self.arms], dtype=float))
        object.__setattr__(
            self, "_p_plus", np.array([(1.0 + a.mean) / 2.0 for a in self.arms], dtype=float)
        )
        distinct = set(codes.tolist())
        object.__setattr__(self, "_homogeneous", distinct.pop() if len(distinct) == 1 else None)

    @property
    def k(self) -> int:
        return len(self.arms)

    @property
    def b(self) -> float:
        return self.second_moment_bound

    @property
    def means(self) -> np.ndarray:
        return np.array([arm.mean for arm in self.arms], dtype=float)

    @property
    def best_arm(self) -> int:
        # np.argmax returns the first maximiser: ties go to the lowest index
        return int(np.argmax(self.means))

    @property
    def gaps(self) -> np.ndarray:
        means = self.means
        return means.max() - means

    def digest(self) -> str:
        parts = [f"{type(a).__name__}({a.mean!r})" for a in self.arms]
        return f"B={self.second_moment_bound!r};" + ",".join(parts)

    def batch_rewards(self, arms: np.ndarray, u: np.ndarray, z: np.ndarray) -> np.ndarray:
        """Rewards for a vector of pulled arms.

        ``u`` holds the uniforms and ``z = ndtri(u)``; the result matches
        :func:`sample_reward` element by element.
        """
        means = self._mean_arr[arms]
        if self._homogeneous is not None:
            code = self._homogeneous
            if code == 0:
                return means + z
            if code == 1:
                return np.where(u < self._p_plus[arms], 1.0, -1.0)
            return means.astype(float, copy=True)
        return np.choose(
            self._codes[arms],
            [means + z, np.where(u < self._p_plus[arms], 1.0, -1.0), means],
        )


def gaussian_instance(means: Sequence[float], b: float) -> BanditInstance:
    return BanditInstance(tuple(UnitGaussian(float(m)) for m in means), float(b))


def rademacher_instance(means: Sequence[float], b: float = 1.0) -> BanditInstance:
    return BanditInstance(tuple(ShiftedRademacher(float(m)) for m in means), float(b))


def deterministic_instance(values: Sequence[float], b: float) -> BanditInstance:
    return BanditInstance(tuple(Deterministic(float(v)) for v in values), float(b))


def gap_instance(k: int, delta: float) -> BanditInstance:
    """Rademacher arms with means ``(delta, 0, ..., 0)`` and ``B = 1``.

    The two-point construction from the lower-bound argument; ``delta`` must
    lie in the open interval (0, 1/4).
    """
    if k < 2:
        raise ValueError("gap_instance needs K >= 2")
    if not 0.0 < delta < 0.25:
        raise ValueError(f"delta must lie in (0, 1/4), got {delta}")
    arms = (ShiftedRademacher(delta),) + tuple(ShiftedRademacher(0.0) for _ in range(k - 1))
    return BanditInstance(arms, 1.0)


def deterministic_hard_instance(k: int, b: float, good_arm: int) -> BanditInstance:
    """Arm ``good_arm`` (0-based) pays ``b``; every other arm pays ``-b``."""
    if not 0 <= good_arm < k:
        raise IndexError(f"good_arm {good_arm} out of range for K={k}")
    arms = tuple(Deterministic(b if i == good_arm else -b) for i in range(k))
    return BanditInstance(arms, float(b))
