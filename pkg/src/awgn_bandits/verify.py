"""Numerical check suites behind ``awgn-bandits verify``.

Each check reports a margin: the smallest slack ``rhs - lhs`` over its grid.
A check passes when the margin is at least its tolerance floor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .infotheory import (
    awgn_capacity,
    b_sequence,
    binary_input_mi,
    chi_square,
    contraction_fixed_point,
    kl_divergence,
    max_likelihood_ratio,
    random_distribution_pairs,
    total_variation,
)
from .link import CasParams, ChannelParams, cas_decode, cas_encode
from .policies import Algorithm, UcbState, build_schedule, select_arm

DIVERGENCE_PAIRS = 10_000
DIVERGENCE_FLOOR = -1e-12
MI_SNR_GRID = (0.1, 0.5, 1.0, 2.0, 4.0, 10.0)
MI_TOLERANCE = 1e-6
RECURSION_B_GRID = tuple(range(2, 1025, 2))
RECURSION_SNR_GRID = (0.01, 0.1, 1.0, 10.0, 100.0)
RECURSION_EXAMPLE = (16.0, 9.5, 6.25, 4.625, 3.8125)
LINK_REL_TOL = 1e-12


@dataclass(frozen=True)
class CheckResult:
    suite: str
    name: str
    passed: bool
    margin: float
    detail: str = ""

    def __str__(self) -> str:
        verdict = "ok  " if self.passed else "FAIL"
        label = f"{self.suite}/{self.name}"
        line = f"[{verdict}] {label:<32} margin {self.margin: .3e}"
        return f"{line}  {self.detail}" if self.detail else line


def _check(suite, name, margin, floor, detail="") -> CheckResult:
    return CheckResult(suite, name, bool(margin >= floor), float(margin), detail)


# --- divergences -------------------------------------------------------------


def divergence_suite(
    n_pairs: int = DIVERGENCE_PAIRS, seed: int = 0, chi2: Callable = chi_square
) -> list[CheckResult]:
    """KL <= chi^2, chi^2 <= c KL with c = max p/q, and Pinsker, on random pairs.

    ``chi2`` can be swapped for a faulty implementation as a negative control.
    """
    rng = np.random.default_rng(seed)
    slack = {"kl-le-chi2": [], "chi2-le-c-kl": [], "pinsker": []}
    worst = {}
    for p, q in random_distribution_pairs(n_pairs, rng):
        kl, x2 = kl_divergence(p, q), chi2(p, q)
        c = max_likelihood_ratio(p, q)
        tv = total_variation(p, q)
        for name, value in (
            ("kl-le-chi2", x2 - kl),
            ("chi2-le-c-kl", c * kl - x2),
            ("pinsker", math.sqrt(kl / 2.0) - tv),
        ):
            slack[name].append(value)
            if value < worst.get(name, (math.inf,))[0]:
                worst[name] = (value, np.round(p, 4).tolist(), np.round(q, 4).tolist())
    results = []
    for name, values in slack.items():
        values = np.asarray(values)
        bad = int(np.sum(values < DIVERGENCE_FLOOR))
        detail = f"{bad}/{n_pairs} pairs violate"
        if bad:
            detail += f"; worst p={worst[name][1]} q={worst[name][2]}"
        results.append(_check("divergence", name, values.min(), DIVERGENCE_FLOOR, detail))
    return results


# --- capacity ---------------------------------------------------------------


def capacity_suite(snr_grid=MI_SNR_GRID) -> list[CheckResult]:
    """Binary-input MI below ``min(1, capacity)`` and exact capacity spot values (bits)."""
    slacks = []
    for snr in snr_grid:
        mi = binary_input_mi(1.0, 1.0 / snr)
        slacks.append(min(1.0, awgn_capacity(snr)) + MI_TOLERANCE - mi)
    spots = ((0.0, 0.0), (1.0, 0.5), (3.0, 1.0))
    spot_err = max(abs(awgn_capacity(s) - v) for s, v in spots)
    return [
        _check("capacity", "mi-le-capacity", min(slacks), 0.0,
               f"SNR grid {list(snr_grid)}, tolerance {MI_TOLERANCE:g} bits"),
        _check("capacity", "capacity-spot-values", -spot_err, 0.0, "SNR 0, 1, 3 -> 0, 0.5, 1 bits"),
    ]


# --- sub-phase recursion -----------------------------------------------------


def recursion_suite(b_grid=RECURSION_B_GRID, snr_grid=RECURSION_SNR_GRID) -> list[CheckResult]:
    """Final bound <= 4, per-step contraction toward the fixed point, and the B=4 example."""
    max_final, arg_final = -math.inf, None
    contraction = math.inf
    for snr in snr_grid:
        fixed = contraction_fixed_point(snr)
        for b in b_grid:
            seq = b_sequence(b, snr)
            if seq[-1] > max_final:
                max_final, arg_final = seq[-1], (b, snr)
            for prev, nxt in zip(seq, seq[1:]):
                # equality when tau = 2 / SNR exactly, so compare relative to the scale of B^2
                slack = ((prev - fixed) / 2.0 - (nxt - fixed)) / max(1.0, prev)
                contraction = min(contraction, slack)
    example = b_sequence(4, 1.0)
    example_ok = example == RECURSION_EXAMPLE
    return [
        _check("recursion", "final-le-4", 4.0 - max_final, 0.0,
               f"max B_(L+1)^2 = {max_final!r} at (B, SNR) = {arg_final}"),
        _check("recursion", "contraction", contraction, -1e-12,
               f"relative slack, {len(b_grid)} x {len(snr_grid)} grid"),
        _check("recursion", "example-b4-snr1", 0.0 if example_ok else -1.0, 0.0,
               f"got {example}"),
    ]


# --- CAS link ----------------------------------------------------------------


def link_suite(n: int = 10_000, seed: int = 0) -> list[CheckResult]:
    """Decode inverts encode, and channel noise passes through as ``z / theta``."""
    rng = np.random.default_rng(seed)
    worst_trip, worst_lin = 0.0, 0.0
    for _ in range(n):
        x, s, z = rng.normal(0.0, 10.0, size=3)
        params = CasParams(float(10.0 ** rng.uniform(-3, 3)), float(s))
        c = cas_encode(float(x), params)
        scale = max(1.0, abs(x), abs(s))
        worst_trip = max(worst_trip, abs(cas_decode(c, params) - x) / scale)
        err = cas_decode(c + float(z), params) - x - z / params.theta
        worst_lin = max(worst_lin, abs(err) / max(scale, abs(z) / params.theta))
    tol = LINK_REL_TOL
    return [
        _check("link", "round-trip", tol - worst_trip, 0.0, f"max relative error {worst_trip:.2e}"),
        _check("link", "noise-linearity", tol - worst_lin, 0.0, f"max relative error {worst_lin:.2e}"),
    ]


# --- schedules and the UCB rule -----------------------------------------------


def policies_suite(seed: int = 0) -> list[CheckResult]:
    """Schedule power soundness, round accounting and argmax shift invariance."""
    power_slack, accounting = math.inf, 0
    cases = 0
    for alg in Algorithm:
        for b in (1.0, 2.0, 4.0, 16.0, 64.0):
            for snr in (0.1, 0.5, 1.0, 4.0, 10.0):
                for power in (0.5, 1.0, 3.0):
                    ch = ChannelParams.from_snr(snr, power=power)
                    sch = build_schedule(alg, 3, 10**9, b, ch)
                    pairs = list(zip(sch.thetas, sch.b_squared))
                    pairs.append((sch.theta_ucb, sch.b_squared[-1]))
                    for theta, v in pairs:
                        power_slack = min(power_slack, (power - theta * theta * v) / power)
                    cases += 1
                    small = build_schedule(alg, 3, sch.phase1_length + 7, b, ch)
                    seen = {}
                    for t in range(1, small.horizon + 1):
                        key = small.locate(t)[:2]
                        seen[key] = seen.get(key, 0) + 1
                    expected = {(l, a): small.tau for l in range(1, small.n_subphases + 1) for a in range(3)}
                    expected[(0, -1)] = 7
                    accounting += seen != expected
    rng = np.random.default_rng(seed)
    shift_failures = 0
    for _ in range(2000):
        k = int(rng.integers(2, 8))
        counts = rng.integers(1, 50, size=k)
        sums = rng.normal(size=k) * counts
        shift = float(rng.choice([-3.0, 0.5, 4.0]))
        a = UcbState(counts, sums, eta=2.0, horizon=1000)
        b = UcbState(counts, sums + shift * counts, eta=2.0, horizon=1000)
        shift_failures += select_arm(a) != select_arm(b)
    return [
        _check("policies", "power-soundness", power_slack, -1e-12,
               f"theta^2 * bound <= P over {cases} schedules"),
        _check("policies", "round-accounting", -float(accounting), 0.0,
               "each (sub-phase, arm) gets tau rounds, the rest is UCB"),
        _check("policies", "argmax-shift", -float(shift_failures), 0.0,
               "shifting every mean by c keeps the chosen arm"),
    ]


SUITES: dict[str, Callable[[], list[CheckResult]]] = {
    "divergence": divergence_suite,
    "capacity": capacity_suite,
    "recursion": recursion_suite,
    "link": link_suite,
    "policies": policies_suite,
}


def faulty_chi_square(p, q) -> float:
    """Negative control: a chi-square four times too small."""
    return 0.25 * chi_square(p, q)


def run_suites(names=None, inject_fault: str | None = None) -> list[CheckResult]:
    names = list(SUITES) if not names or "all" in names else list(names)
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise KeyError(f"unknown suite(s) {unknown}; choose from {sorted(SUITES)}")
    if inject_fault not in (None, "chi2"):
        raise KeyError(f"unknown fault {inject_fault!r}")
    results = []
    for name in names:
        if name == "divergence" and inject_fault == "chi2":
            results.extend(divergence_suite(chi2=faulty_chi_square))
        else:
            results.extend(SUITES[name]())
    return results
