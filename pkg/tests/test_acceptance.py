"""Acceptance criteria, one test each; every test logs a PASS/FAIL line.

The lines are printed again in the terminal summary (see ``conftest.py``).
"""

import math
import time

import numpy as np
import pytest

from awgn_bandits.cli import cmd_run
from awgn_bandits.config import ExperimentConfig
from awgn_bandits.core import (
    deterministic_hard_instance,
    gap_instance,
    gaussian_instance,
    rademacher_instance,
)
from awgn_bandits.harness import run_episode, run_monte_carlo
from awgn_bandits.infotheory import b_recursion, ucb0_bound, ue_ucb_bound, ue_ucb_pp_bound
from awgn_bandits.link import ChannelParams, audit_check
from awgn_bandits.policies import build_schedule
from awgn_bandits.verify import capacity_suite, divergence_suite, recursion_suite

pytestmark = pytest.mark.acceptance

SNR1 = ChannelParams.from_snr(1.0)


def test_criterion_01_ucb0_bound(acceptance_log):
    start = time.perf_counter()
    mc = run_monte_carlo(gap_instance(2, 0.2), "ucb0", SNR1, 20_000, 200, base_seed=1)
    bound = ucb0_bound(2, 20_000, 1, 1).value
    upper = mc.mean_final + 3 * mc.stderr_final
    ok = upper <= bound
    acceptance_log(1, ok, f"ucb0 mean+3se {upper:.2f} <= bound {bound:.1f} "
                          f"({time.perf_counter() - start:.1f}s)")
    assert ok


def test_criterion_02_ue_bounds(acceptance_log):
    start = time.perf_counter()
    inst = gaussian_instance([0.2, 0.0], 4)
    parts, ok = [], True
    for alg, bound_fn in (("ue-ucb", ue_ucb_bound), ("ue-ucb++", ue_ucb_pp_bound)):
        mc = run_monte_carlo(inst, alg, SNR1, 50_000, 100, base_seed=2)
        upper = mc.mean_final + 3 * mc.stderr_final
        bound = bound_fn(2, 50_000, 4, 1).value
        ok &= upper <= bound
        parts.append(f"{alg} {upper:.1f} <= {bound:.1f}")
    acceptance_log(2, ok, "; ".join(parts) + f" ({time.perf_counter() - start:.1f}s)")
    assert ok


def test_criterion_03_ordering_at_large_b(acceptance_log):
    start = time.perf_counter()
    inst = gaussian_instance([0.5, 0.0, 0.0, 0.0, 0.0], 64)
    res = {alg: run_monte_carlo(inst, alg, SNR1, 100_000, 50, base_seed=2024) for alg in ("ucb0", "ue-ucb++")}
    lo_ucb0 = res["ucb0"].mean_final - 1.96 * res["ucb0"].stderr_final
    hi_pp = res["ue-ucb++"].mean_final + 1.96 * res["ue-ucb++"].stderr_final
    ok = hi_pp < lo_ucb0
    acceptance_log(3, ok, f"ue-ucb++ CI upper {hi_pp:.1f} < ucb0 CI lower {lo_ucb0:.1f} "
                          f"({time.perf_counter() - start:.1f}s)")
    assert ok


def test_criterion_04_snr_scaling(acceptance_log):
    start = time.perf_counter()
    inst = gaussian_instance([0.2, 0.0], 4)
    means = {snr: run_monte_carlo(inst, "ue-ucb++", ChannelParams.from_snr(snr), 50_000, 100,
                                  base_seed=2024).mean_final
             for snr in (0.25, 1.0, 4.0)}
    ratio = means[0.25] / means[1.0]
    ok = means[0.25] > means[1.0] > means[4.0] and 1.2 <= ratio <= 3.0
    acceptance_log(4, ok, "regret " + ", ".join(f"SNR {s:g}: {m:.1f}" for s, m in means.items())
                   + f"; ratio {ratio:.2f} in [1.2, 3.0] ({time.perf_counter() - start:.1f}s)")
    assert ok


def test_criterion_05_recursion(acceptance_log):
    start = time.perf_counter()
    finals = [b_recursion(b, snr)[-1] for b in range(2, 1025, 2) for snr in (0.01, 0.1, 1, 10, 100)]
    example = b_recursion(4, 1)
    checks = recursion_suite()
    ok = max(finals) <= 4.0 and example == (16.0, 9.5, 6.25, 4.625, 3.8125) and all(c.passed for c in checks)
    acceptance_log(5, ok, f"max B_(L+1)^2 {max(finals):.7f} <= 4; B=4 sequence {example} "
                          f"({time.perf_counter() - start:.2f}s)")
    assert ok


def audit_instance(family, b):
    if family == "gaussian":
        return gaussian_instance([min(0.2, math.sqrt(b * b - 1)), 0.0], b)
    if family == "rademacher":
        return rademacher_instance([0.2, 0.0], b)
    return deterministic_hard_instance(2, b, 0)


def test_criterion_06_power_audit(acceptance_log):
    # one run = 1000 replications, audit pooled over them (the budget is an expectation)
    start = time.perf_counter()
    worst, failures = (0.0, None), []
    for family in ("gaussian", "rademacher", "deterministic"):
        for b in (1.0, 4.0, 16.0):
            for snr in (0.5, 1.0, 4.0):
                for alg in ("ucb0", "ue-ucb", "ue-ucb++"):
                    mc = run_monte_carlo(audit_instance(family, b), alg, ChannelParams.from_snr(snr),
                                         10_000, 1000, base_seed=6)
                    report = audit_check(mc.audit, 0.1)
                    if report.empirical_moment > worst[0]:
                        worst = (report.empirical_moment, (family, b, snr, alg))
                    if not report.passed:
                        failures.append((family, b, snr, alg, report.empirical_moment))
    ok = not failures
    acceptance_log(6, ok, f"81 runs, max E[C^2] {worst[0]:.4f} at {worst[1]}, limit 1.1 "
                          f"({time.perf_counter() - start:.1f}s)")
    assert ok, failures


def test_criterion_07_decoded_variance(acceptance_log):
    start = time.perf_counter()
    inst = gaussian_instance([0.2, 0.0], 4)
    horizon = 200_000
    sch = build_schedule("ucb0", 2, horizon, 4, SNR1)
    ep = run_episode(inst, sch, SNR1, horizon, seed=7, stream=1)
    means = inst.means
    err = np.array([r.decoded - means[r.arm] for r in ep.transcript])
    var = err.var()
    ok = abs(var / 17.0 - 1.0) <= 0.05
    acceptance_log(7, ok, f"variance {var:.3f} vs 17 (rel {var / 17 - 1:+.3%}) "
                          f"({time.perf_counter() - start:.1f}s)")
    assert ok


def test_criterion_08_information_suite(acceptance_log):
    start = time.perf_counter()
    results = divergence_suite() + capacity_suite()
    ok = all(r.passed for r in results)
    summary = ", ".join(f"{r.name} {'ok' if r.passed else 'FAIL'} ({r.margin:.2e})" for r in results)
    acceptance_log(8, ok, f"{summary} ({time.perf_counter() - start:.1f}s)")
    for r in results:
        print(r)
    assert ok, [str(r) for r in results if not r.passed]


def test_criterion_09_determinism(acceptance_log, tmp_path):
    base = ExperimentConfig(instance="gaussian", k=3, means=[0.3, 0.1, 0.0], b=2.0, algorithm="ue-ucb++",
                            horizon=2000, replications=200, seed=99, snr=0.5)
    codes = [cmd_run(base.replace(out=str(tmp_path / "a"))),
             cmd_run(base.replace(out=str(tmp_path / "b"))),
             cmd_run(base.replace(out=str(tmp_path / "c"), parallel=2))]
    data = [(tmp_path / d / "trace.csv").read_bytes() for d in "abc"]
    ok = data[0] == data[1] == data[2] and len(data[0]) > 0
    acceptance_log(9, ok, f"3 runs (one with 2 workers) byte-identical: {ok}, {len(data[0])} bytes, exits {codes}")
    assert ok


def replay_oracle(values, k, n_sub, tau, horizon):
    """Zero-noise UE-UCB++ replay: ``n_sub`` round-robin sub-phases of ``tau`` pulls per arm, then UCB.

    In phase 2 the centred rewards are decoded exactly and the UCB exploration
    factor is 1 up to the clamped SNR, so the index is mean + sqrt(4 ln T / N).
    """
    arms = [a for _ in range(n_sub) for a in range(k) for _ in range(tau)]
    counts, sums = [0] * k, [0.0] * k
    while len(arms) < horizon:
        idx = [math.inf if counts[i] == 0 else sums[i] / counts[i] + math.sqrt(4 * math.log(horizon) / counts[i])
               for i in range(k)]
        a = idx.index(max(idx))
        counts[a] += 1
        sums[a] += values[a]
        arms.append(a)
    best = max(values)
    return arms, math.fsum(best - values[a] for a in arms)


def test_criterion_10_zero_noise(acceptance_log):
    inst = deterministic_hard_instance(3, 2.0, good_arm=1)
    ch = ChannelParams(1.0, 0.0)
    horizon = 100
    sch = build_schedule("ue-ucb++", 3, horizon, 2.0, ch)
    ep = run_episode(inst, sch, ch, horizon, seed=0)
    arms = [r.arm for r in ep.transcript]
    phase1 = sch.phase1_length
    explore_regret = math.fsum(inst.gaps[a] for a in arms[:phase1])
    # B = 2: ceil(2 log2 B) = 2 sub-phases; SNR clamped to 1e12: tau = max(ceil(2e-12), 2) = 2
    oracle_arms, oracle_regret = replay_oracle(inst.means.tolist(), 3, 2, 2, horizon)
    phase2 = arms[phase1:]
    ok = (arms == oracle_arms
          and sorted(phase2[:3]) == [0, 1, 2]
          and set(phase2[3:]) == {1}
          and ep.trace.final == explore_regret + 2 * 4.0 == oracle_regret)
    acceptance_log(10, ok, f"T={horizon}: regret {ep.trace.final:g} = exploration {explore_regret:g} "
                           f"+ 2 forced pulls x gap 4; oracle {oracle_regret:g}")
    assert ok
