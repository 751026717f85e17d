"""Client-side CAS encoding, the AWGN channel, and the power audit."""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.special import ndtri

from .core import RandomSource

DEFAULT_SNR_MAX = 1e12


@dataclass(frozen=True)
class ChannelParams:
    """Power budget ``P`` on the encoded signal and noise variance ``sigma^2``.

    ``noise_variance == 0`` is a noiseless debug channel: :attr:`snr` is then
    infinite and schedule formulas use :meth:`effective_snr`, which clamps to
    ``snr_max``.
    """

    power: float = 1.0
    noise_variance: float = 1.0
    snr_max: float = DEFAULT_SNR_MAX

    def __post_init__(self):
        if not (math.isfinite(self.power) and self.power > 0):
            raise ValueError(f"power budget must be > 0, got {self.power}")
        if not (math.isfinite(self.noise_variance) and self.noise_variance >= 0):
            raise ValueError(f"noise variance must be >= 0, got {self.noise_variance}")
        if not self.snr_max > 0:
            raise ValueError("snr_max must be > 0")

    @classmethod
    def from_snr(cls, snr: float, power: float = 1.0, **kw) -> "ChannelParams":
        if not snr > 0:
            raise ValueError(f"SNR must be > 0, got {snr}")
        noise = 0.0 if math.isinf(snr) else power / snr
        return cls(power=power, noise_variance=noise, **kw)

    @property
    def snr(self) -> float:
        if self.noise_variance == 0:
            return math.inf
        return self.power / self.noise_variance

    @property
    def noise_std(self) -> float:
        return math.sqrt(self.noise_variance)

    def effective_snr(self) -> float:
        return min(self.snr, self.snr_max)


@dataclass(frozen=True)
class CasParams:
    """Scaling factor ``theta`` and centring value (side information)."""

    theta: float
    side_info: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.theta) and self.theta > 0):
            raise ValueError(f"theta must be positive and finite, got {self.theta}")
        if not math.isfinite(self.side_info):
            raise ValueError("side information must be finite")


@dataclass
class PowerAudit:
    """Running second moment of every value put on the channel."""

    budget: float
    sum_sq: float = 0.0
    count: int = 0

    def record(self, encoded: float) -> None:
        self.sum_sq += encoded * encoded
        self.count += 1

    def merge(self, other: "PowerAudit") -> "PowerAudit":
        if other.budget != self.budget:
            raise ValueError("cannot merge audits with different budgets")
        return PowerAudit(self.budget, self.sum_sq + other.sum_sq, self.count + other.count)

    @property
    def empirical_moment(self) -> float:
        if self.count == 0:
            raise ValueError("no transmissions recorded")
        return self.sum_sq / self.count


@dataclass(frozen=True)
class AuditReport:
    passed: bool
    empirical_moment: float
    count: int
    budget: float
    tolerance: float

    def __str__(self) -> str:
        verdict = "pass" if self.passed else "FAIL"
        return (
            f"power audit {verdict}: E[C^2] ~ {self.empirical_moment:.6g} over {self.count} "
            f"transmissions, budget {self.budget:g} (tolerance {self.tolerance:.0%})"
        )


def cas_encode(x: float, params: CasParams, audit: PowerAudit | None = None) -> float:
    """``theta * (x - S)``; the value is also recorded in ``audit`` when given."""
    if not math.isfinite(x):
        raise ValueError(f"cannot encode non-finite reward {x!r}")
    encoded = params.theta * (x - params.side_info)
    if audit is not None:
        audit.record(encoded)
    return encoded


def cas_decode(y: float, params: CasParams) -> float:
    return y / params.theta + params.side_info


def transmit(encoded: float, channel: ChannelParams, rng: RandomSource) -> float:
    """Add ``N(0, sigma^2)`` noise, generated by inverse CDF from one uniform."""
    return encoded + channel.noise_std * float(ndtri(rng.uniform()))


def audit_check(audit: PowerAudit, tolerance: float = 0.1) -> AuditReport:
    """Pass iff the empirical second moment is at most ``P * (1 + tolerance)``."""
    if audit.count == 0:
        raise ValueError("power audit is empty: no transmissions recorded")
    moment = audit.empirical_moment
    return AuditReport(
        passed=moment <= audit.budget * (1.0 + tolerance),
        empirical_moment=moment,
        count=audit.count,
        budget=audit.budget,
        tolerance=tolerance,
    )
