"""Learner-side algorithms: the UCB index and the UCB0 / UE-UCB / UE-UCB++ schedules.

All three algorithms share one shape. An optional uniform-exploration phase is
split into ``L`` sub-phases; in each, every arm is pulled ``tau`` times in
round-robin blocks, the client centres on the previous sub-phase's estimate
(zero before the first) and scales by that sub-phase's ``theta``. A UCB phase
follows, centring on the last estimate. UCB0 is the case ``L = 0``, UE-UCB is
``L = 1``.

Arms are 0-based; rounds are 1-based (``t = 1 .. T``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .infotheory import b_sequence, ceil_int, subphase_count, subphase_length
from .link import CasParams, ChannelParams


class Algorithm(str, Enum):
    UCB0 = "ucb0"
    UE_UCB = "ue-ucb"
    UE_UCB_PP = "ue-ucb++"

    @classmethod
    def parse(cls, name: str | "Algorithm") -> "Algorithm":
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("_", "-")
        aliases = {"ucb++": "ue-ucb++", "ue-ucb-pp": "ue-ucb++", "ueucb++": "ue-ucb++"}
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            choices = ", ".join(a.value for a in cls)
            raise ValueError(f"unknown algorithm {name!r}; choose from {choices}") from None


class ScheduleError(ValueError):
    """The horizon is too short for the exploration phase."""

    def __init__(self, message: str, min_horizon: int):
        super().__init__(message)
        self.min_horizon = min_horizon


@dataclass
class UcbState:
    """Pull counts and reward sums for the UCB phase."""

    counts: np.ndarray
    sums: np.ndarray
    eta: float
    horizon: float

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        self.sums = np.asarray(self.sums, dtype=float)
        if self.horizon < 2:
            raise ValueError(f"UCB needs T >= 2 so that ln T > 0, got {self.horizon}")
        if self.eta < 0:
            raise ValueError("eta must be non-negative")

    @classmethod
    def fresh(cls, k: int, eta: float, horizon: float) -> "UcbState":
        return cls(np.zeros(k, dtype=np.int64), np.zeros(k), eta, horizon)

    @property
    def radius_coef(self) -> float:
        return 4.0 * self.eta * math.log(self.horizon)

    @property
    def means(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return self.sums / self.counts

    def update(self, arm: int, reward: float) -> None:
        self.counts[arm] += 1
        self.sums[arm] += reward


def ucb_index(state: UcbState, arm: int) -> float:
    """``mean + sqrt(4 eta ln T / N)``, or ``+inf`` for an unpulled arm."""
    n = int(state.counts[arm])
    if n == 0:
        return math.inf
    return float(state.sums[arm]) / n + math.sqrt(state.radius_coef / n)


def select_arm(state: UcbState) -> int:
    """Arm with the largest index; ties go to the lowest index."""
    indices = [ucb_index(state, k) for k in range(len(state.counts))]
    return int(np.argmax(indices))


@dataclass(frozen=True)
class Schedule:
    """Every derived parameter of one algorithm on one (K, T, B, channel).

    ``thetas[l]`` scales sub-phase ``l + 1``; ``b_squared[l]`` is the bound on
    the centred second moment in sub-phase ``l + 1`` and ``b_squared[-1]``
    the bound used in the UCB phase.
    """

    algorithm: Algorithm
    k: int
    horizon: int
    b: float
    channel: ChannelParams
    snr: float
    n_subphases: int
    tau: int
    thetas: tuple[float, ...]
    b_squared: tuple[float, ...]
    theta_ucb: float
    eta: float

    @property
    def subphase_rounds(self) -> int:
        return self.k * self.tau

    @property
    def phase1_length(self) -> int:
        return self.n_subphases * self.k * self.tau

    @property
    def log_horizon(self) -> float:
        return math.log(self.horizon)

    @property
    def radius_coef(self) -> float:
        return 4.0 * self.eta * math.log(self.horizon)

    def locate(self, t: int) -> tuple[int, int, int]:
        """Map round ``t`` to ``(subphase, arm, position)``; subphase 0 means the UCB phase."""
        if not 1 <= t <= self.horizon:
            raise IndexError(f"round {t} outside 1..{self.horizon}")
        if t > self.phase1_length:
            return 0, -1, -1
        idx = t - 1
        sub, rem = divmod(idx, self.subphase_rounds)
        arm, pos = divmod(rem, self.tau)
        return sub + 1, arm, pos

    def variance_bound(self, t: int) -> float:
        """Analytic bound on ``E[(X - S)^2]`` that the round's ``theta`` is sized for."""
        sub, _, _ = self.locate(t)
        if sub:
            return self.b_squared[sub - 1]
        return self.b_squared[-1]

    def describe(self) -> dict:
        return {
            "algorithm": self.algorithm.value,
            "k": self.k,
            "horizon": self.horizon,
            "b": self.b,
            "snr": self.snr,
            "n_subphases": self.n_subphases,
            "tau": self.tau,
            "phase1_length": self.phase1_length,
            "thetas": list(self.thetas),
            "b_squared": list(self.b_squared),
            "theta_ucb": self.theta_ucb,
            "eta": self.eta,
        }


def build_schedule(
    algorithm: Algorithm | str, k: int, horizon: int, b: float, channel: ChannelParams
) -> Schedule:
    algorithm = Algorithm.parse(algorithm)
    if k < 1:
        raise ValueError("K must be >= 1")
    if horizon < 2:
        raise ScheduleError(f"horizon must be >= 2, got {horizon}", min_horizon=2)
    if b < 1:
        raise ValueError(f"B must be >= 1, got {b}")
    snr = channel.effective_snr()
    root_p = math.sqrt(channel.power)

    if algorithm is Algorithm.UCB0:
        n_sub, tau = 0, 0
        b_sq = (b * b,)
        theta_ucb = root_p / b
        eta = b * b / snr + 1.0
    elif algorithm is Algorithm.UE_UCB:
        n_sub = 1
        tau = ceil_int(b * b / snr + 1.0)
        b_sq = (b * b, 2.0)
        theta_ucb = math.sqrt(channel.power / 2.0)
        eta = 2.0 / snr + 1.0
    else:
        n_sub = subphase_count(b)
        tau = subphase_length(snr) if n_sub else 0
        b_sq = b_sequence(b, snr)
        theta_ucb = root_p / math.sqrt(b_sq[-1])
        eta = b_sq[-1] / snr + 1.0

    thetas = tuple(root_p / math.sqrt(v) for v in b_sq[:n_sub])
    phase1 = n_sub * k * tau
    if phase1 >= horizon:
        raise ScheduleError(
            f"{algorithm.value}: exploration takes {phase1} rounds, horizon {horizon} "
            f"leaves no UCB phase; need T >= {phase1 + 1}",
            min_horizon=phase1 + 1,
        )
    return Schedule(
        algorithm=algorithm, k=k, horizon=int(horizon), b=float(b), channel=channel, snr=snr,
        n_subphases=n_sub, tau=tau, thetas=thetas, b_squared=b_sq,
        theta_ucb=theta_ucb, eta=eta,
    )


@dataclass
class PolicyState:
    """Learner state for one episode.

    ``estimates[l, k]`` is the mean estimate for arm ``k`` after sub-phase
    ``l`` (row 0 is the all-zero initial side information).
    """

    schedule: Schedule
    ucb: UcbState
    estimates: np.ndarray
    accum: np.ndarray
    next_round: int = 1
    _pending: tuple | None = field(default=None, repr=False)

    @classmethod
    def initial(cls, schedule: Schedule) -> "PolicyState":
        return cls(
            schedule=schedule,
            ucb=UcbState.fresh(schedule.k, schedule.eta, schedule.horizon),
            estimates=np.zeros((schedule.n_subphases + 1, schedule.k)),
            accum=np.zeros(schedule.k),
        )


@dataclass(frozen=True)
class Step:
    arm: int
    side_info: float
    cas: CasParams


def learner_step(schedule: Schedule, state: PolicyState, t: int) -> Step:
    """Arm, side information and CAS parameters the learner sends at round ``t``."""
    if t != state.next_round:
        raise ValueError(f"expected round {state.next_round}, got {t}")
    sub, arm, _ = schedule.locate(t)
    if sub:
        side = float(state.estimates[sub - 1, arm])
        theta = schedule.thetas[sub - 1]
    else:
        arm = select_arm(state.ucb)
        side = float(state.estimates[-1, arm])
        theta = schedule.theta_ucb
    state._pending = (t, arm)
    return Step(arm, side, CasParams(theta, side))


def learner_update(
    schedule: Schedule, state: PolicyState, t: int, arm: int, decoded: float
) -> PolicyState:
    """Fold the decoded reward of round ``t`` into the state (in place; also returned)."""
    if state._pending != (t, arm):
        raise ValueError(f"update for round {t}, arm {arm} does not match the last step {state._pending}")
    sub, _, pos = schedule.locate(t)
    if sub:
        state.accum[arm] += decoded
        if pos == schedule.tau - 1:
            state.estimates[sub, arm] = state.accum[arm] / schedule.tau
            state.accum[arm] = 0.0
    else:
        state.ucb.update(arm, decoded)
    state._pending = None
    state.next_round = t + 1
    return state
