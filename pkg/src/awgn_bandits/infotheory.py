"""Closed-form regret bounds, the sub-phase variance recursion, and the
divergence / channel quantities used by the lower-bound argument.

Units: divergences are in nats, capacity and mutual information in bits.
``log`` below means base 2 and ``ln`` the natural logarithm.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

DEFAULT_C1 = 1.0 / 20.0
DEFAULT_C2 = 1.0
MIN_MI_NODES = 100


class RecursionBoundError(RuntimeError):
    """The last entry of the sub-phase recursion exceeded 4."""


class LowerBoundHorizonWarning(UserWarning):
    """Horizon too short for the minimax lower bound to apply."""


def ceil_int(x: float) -> int:
    """Ceiling that ignores float noise, so ``2 / 0.1`` rounds to 20 and not 21."""
    return int(math.ceil(x - 1e-9 * max(1.0, abs(x))))


# --- sub-phase schedule ------------------------------------------------------


def subphase_count(b: float) -> int:
    """Number of exploration sub-phases, ``ceil(2 log2 B)``; zero when B = 1."""
    if b < 1:
        raise ValueError(f"B must be >= 1, got {b}")
    return max(ceil_int(2.0 * math.log2(b)), 0)


def subphase_length(snr: float) -> int:
    """Pulls per arm in one sub-phase, ``max(ceil(2 / SNR), 2)``."""
    if not snr > 0:
        raise ValueError(f"SNR must be > 0, got {snr}")
    return max(ceil_int(2.0 / snr), 2)


def b_sequence(b: float, snr: float) -> tuple[float, ...]:
    """Squared centred-reward bounds ``B_1^2 .. B_{L+1}^2`` without any checks.

    ``B_1^2 = B^2`` and ``B_{l+1}^2 = (B_l^2 / SNR + 1) / tau + 1``.
    """
    tau = subphase_length(snr)
    seq = [float(b) ** 2]
    for _ in range(subphase_count(b)):
        seq.append((seq[-1] / snr + 1.0) / tau + 1.0)
    return tuple(seq)


def b_recursion(b: float, snr: float) -> tuple[float, ...]:
    """:func:`b_sequence` for ``B >= 2``, certifying that the last entry is <= 4."""
    if b < 2:
        raise ValueError(f"b_recursion needs B >= 2, got {b}")
    if not snr > 0:
        raise ValueError(f"SNR must be > 0, got {snr}")
    seq = b_sequence(b, snr)
    if seq[-1] > 4.0:
        raise RecursionBoundError(
            f"B_(L+1)^2 = {seq[-1]!r} > 4 for B={b}, SNR={snr}; the recursion is broken"
        )
    return seq


def contraction_fixed_point(snr: float) -> float:
    """``2 * ((SNR ^ 1) / 2 + 1)``; each recursion step halves the excess over this."""
    return 2.0 * (min(snr, 1.0) / 2.0 + 1.0)


# --- regret bounds -----------------------------------------------------------


@dataclass(frozen=True)
class BoundReport:
    """A regret bound with its additive terms."""

    algorithm: str
    k: int
    t: float
    b: float
    snr: float
    terms: tuple[tuple[str, float], ...]
    warnings: tuple[str, ...] = field(default=())

    @property
    def value(self) -> float:
        return math.fsum(v for _, v in self.terms)

    def term(self, name: str) -> float:
        return dict(self.terms)[name]

    def __str__(self) -> str:
        parts = " + ".join(f"{name} {v:.6g}" for name, v in self.terms)
        return f"{self.algorithm:<10} {self.value:14.6g}   = {parts}"


def _ucb_term(alpha2: float, k: int, t: float) -> float:
    if t < 2:
        raise ValueError(f"horizon must be >= 2, got {t}")
    return 8.0 * math.sqrt(alpha2 * k * t * math.log(t))


def ucb_lemma_bound(alpha2: float, k: int, t: float, b: float) -> float:
    """Regret of UCB with ``eta = alpha^2``: ``8 sqrt(alpha^2 K T ln T) + 6 K B``."""
    return _ucb_term(alpha2, k, t) + 6.0 * k * b


def ucb0_bound(k: int, t: float, b: float, snr: float) -> BoundReport:
    alpha2 = b * b / snr + 1.0
    return BoundReport(
        "ucb0", k, t, b, snr,
        terms=(("ucb", _ucb_term(alpha2, k, t)), ("constant", 6.0 * k * b)),
    )


def ue_ucb_bound(k: int, t: float, b: float, snr: float) -> BoundReport:
    return BoundReport(
        "ue-ucb", k, t, b, snr,
        terms=(
            ("exploration", 2.0 * k * b**3 / snr),
            ("constant", 8.0 * k * b),
            ("ucb", _ucb_term(2.0 / snr + 1.0, k, t)),
        ),
    )


def ue_ucb_pp_bound(k: int, t: float, b: float, snr: float) -> BoundReport:
    notes = ()
    if b < 2:
        exploration = 0.0
        notes = (f"B={b:g} < 2: L = 2 log B sub-phases is degenerate, exploration term set to 0",)
    else:
        exploration = 8.0 * k * b * math.log2(b) / min(snr, 1.0)
    return BoundReport(
        "ue-ucb++", k, t, b, snr,
        terms=(
            ("exploration", exploration),
            ("constant", 6.0 * k * b),
            ("ucb", _ucb_term(4.0 / snr + 1.0, k, t)),
        ),
        warnings=notes,
    )


def awgn_capacity(snr: float) -> float:
    """``0.5 * log2(1 + SNR)`` bits per channel use."""
    if snr < 0:
        raise ValueError(f"SNR must be >= 0, got {snr}")
    return 0.5 * math.log2(1.0 + snr)


def lower_bound_min_horizon(k: int, snr: float, c2: float = DEFAULT_C2) -> float:
    """Smallest T for which the minimax lower bound is asserted."""
    cap = min(awgn_capacity(snr), 1.0)
    return math.inf if cap == 0 else c2 * k / cap


def minimax_lower_bound(
    k: int, t: float, b: float, snr: float, c1: float = DEFAULT_C1, c2: float = DEFAULT_C2
) -> float:
    """``c1 * (sqrt(K T) / sqrt(SNR ^ 1) + K B)``.

    The constants are not known; ``c1`` and ``c2`` are configuration. Warns
    with :class:`LowerBoundHorizonWarning` when T is below the horizon
    condition.
    """
    need = lower_bound_min_horizon(k, snr, c2)
    if t < need:
        warnings.warn(
            f"T={t:g} < c2 K / (0.5 log(1+SNR) ^ 1) = {need:.4g}; lower bound not guaranteed",
            LowerBoundHorizonWarning,
            stacklevel=2,
        )
    return c1 * (math.sqrt(k * t) / math.sqrt(min(snr, 1.0)) + k * b)


def lower_bound_report(
    k: int, t: float, b: float, snr: float, c1: float = DEFAULT_C1, c2: float = DEFAULT_C2
) -> BoundReport:
    need = lower_bound_min_horizon(k, snr, c2)
    notes = ()
    if t < need:
        notes = (f"horizon condition T >= c2 K / (0.5 log(1+SNR) ^ 1) = {need:.4g} fails",)
    return BoundReport(
        "lower", k, t, b, snr,
        terms=(
            ("channel", c1 * math.sqrt(k * t) / math.sqrt(min(snr, 1.0))),
            ("constant", c1 * k * b),
        ),
        warnings=notes,
    )


def lower_bound_gap(k: int, t: float, snr: float) -> float:
    """Gap ``Delta`` that balances the two-instance lower-bound argument.

    ``Delta^2 = (K - 1) / (16 ln 2 * T * (0.5 log(1 + SNR) ^ 1))``.
    """
    cap = min(awgn_capacity(snr), 1.0)
    return math.sqrt((k - 1) / (16.0 * math.log(2.0) * t * cap))


# --- discrete divergences ----------------------------------------------------


@dataclass(frozen=True)
class DiscreteDistribution:
    """Probability vector over a finite alphabet."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise ValueError("probabilities must form a non-empty 1-d vector")
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise ValueError("probabilities must be finite and non-negative")
        if abs(p.sum() - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {p.sum()!r}, not 1")
        object.__setattr__(self, "probs", p)

    def __len__(self) -> int:
        return self.probs.size


def _pair(p, q) -> tuple[np.ndarray, np.ndarray]:
    p = p.probs if isinstance(p, DiscreteDistribution) else DiscreteDistribution(p).probs
    q = q.probs if isinstance(q, DiscreteDistribution) else DiscreteDistribution(q).probs
    if p.shape != q.shape:
        raise ValueError(f"alphabet mismatch: {p.size} vs {q.size} symbols")
    return p, q


def kl_divergence(p, q) -> float:
    """``sum p ln(p / q)`` in nats, with ``0 ln 0 = 0``; infinite if p is not << q."""
    p, q = _pair(p, q)
    support = p > 0
    if np.any(q[support] == 0):
        return math.inf
    return float(np.sum(p[support] * np.log(p[support] / q[support])))


def chi_square(p, q) -> float:
    """``sum (p - q)^2 / q``; an atom with q = 0 and p > 0 makes it infinite."""
    p, q = _pair(p, q)
    diff = p - q
    if np.any((q == 0) & (diff != 0)):
        return math.inf
    live = q > 0
    return float(np.sum(diff[live] ** 2 / q[live]))


def total_variation(p, q) -> float:
    p, q = _pair(p, q)
    return float(0.5 * np.sum(np.abs(p - q)))


def max_likelihood_ratio(p, q) -> float:
    """``max_x p(x) / q(x)``, the constant ``c`` in ``dP/dQ <= c``."""
    p, q = _pair(p, q)
    if np.any((q == 0) & (p > 0)):
        return math.inf
    live = q > 0
    return float(np.max(p[live] / q[live]))


def random_distribution_pairs(
    n_pairs: int,
    rng: np.random.Generator,
    sizes: Sequence[int] = range(2, 17),
    floor: float = 1e-3,
):
    """Yield ``(p, q)`` pairs with every entry at least ``floor``.

    Alphabet size is uniform over ``sizes``; each vector is
    ``floor + (1 - n * floor) * Dirichlet(1, ..., 1)``.
    """
    sizes = list(sizes)
    for _ in range(n_pairs):
        n = int(rng.choice(sizes))
        p = floor + (1.0 - n * floor) * rng.dirichlet(np.ones(n))
        q = floor + (1.0 - n * floor) * rng.dirichlet(np.ones(n))
        yield p / p.sum(), q / q.sum()


# --- binary-input AWGN mutual information -----------------------------------


def binary_input_mi(amplitude: float, noise_variance: float, nodes: int = 10_000) -> float:
    """``I(V; Y)`` in bits for V uniform on ``{-a, +a}`` and ``Y = V + N(0, sigma^2)``.

    Computed as ``h(Y) - h(Y | V)``: the output entropy is a trapezoidal
    integral of the two-component mixture density over a fixed uniform grid
    on ``+-(a + 8 sigma)``; ``h(Y | V)`` is the Gaussian entropy in closed
    form. The grid is fixed, so the result is reproducible bit for bit.
    """
    if nodes < MIN_MI_NODES:
        raise ValueError(f"quadrature needs at least {MIN_MI_NODES} nodes, got {nodes}")
    if amplitude < 0:
        raise ValueError("amplitude must be >= 0")
    if not noise_variance > 0:
        raise ValueError("noise variance must be > 0")
    sigma = math.sqrt(noise_variance)
    half_width = amplitude + 8.0 * sigma
    y = np.linspace(-half_width, half_width, nodes)
    log_norm = -0.5 * math.log(2.0 * math.pi * noise_variance)
    log_plus = log_norm - (y - amplitude) ** 2 / (2.0 * noise_variance)
    log_minus = log_norm - (y + amplitude) ** 2 / (2.0 * noise_variance)
    log_mix = np.logaddexp(log_plus, log_minus) - math.log(2.0)
    h_y = -np.trapezoid(np.exp(log_mix) * log_mix, y)
    h_y_given_v = 0.5 * math.log(2.0 * math.pi * math.e * noise_variance)
    return float((h_y - h_y_given_v) / math.log(2.0))
