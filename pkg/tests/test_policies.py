import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from awgn_bandits.core import deterministic_hard_instance, deterministic_instance, gaussian_instance
from awgn_bandits.harness import run_episode
from awgn_bandits.infotheory import contraction_fixed_point
from awgn_bandits.link import ChannelParams
from awgn_bandits.policies import (
    Algorithm,
    PolicyState,
    ScheduleError,
    UcbState,
    build_schedule,
    learner_step,
    learner_update,
    select_arm,
    ucb_index,
)

SNR1 = ChannelParams.from_snr(1.0)
NOISELESS = ChannelParams(1.0, 0.0)


def test_ucb_index_unpulled_is_infinite():
    assert ucb_index(UcbState.fresh(3, 1.0, 100), 1) == math.inf


def test_ucb_index_formula():
    state = UcbState(np.array([4]), np.array([2.0]), eta=1.0, horizon=math.e)
    assert ucb_index(state, 0) == pytest.approx(1.5)


def test_ucb_index_zero_eta():
    state = UcbState(np.array([1]), np.array([0.0]), eta=0.0, horizon=10)
    assert ucb_index(state, 0) == 0.0


def test_ucb_state_rejects_short_horizon():
    with pytest.raises(ValueError):
        UcbState.fresh(2, 1.0, 1)


def means_state(values):
    # eta = 0 makes every index equal to the arm's mean
    values = np.asarray(values, dtype=float)
    return UcbState(np.ones(values.size, dtype=np.int64), values, eta=0.0, horizon=10)


def test_select_arm_all_unpulled():
    assert select_arm(UcbState.fresh(4, 2.0, 100)) == 0


@pytest.mark.parametrize("values,arm", [((1.2, 3.4, 3.4), 1), ((0.1, 0.9), 1)])
def test_select_arm_examples(values, arm):
    assert select_arm(means_state(values)) == arm


@given(
    st.lists(st.integers(-50, 50), min_size=1, max_size=8),
    st.integers(-100, 100),
)
def test_select_arm_shift_invariant(values, shift):
    # integer-valued means keep the shifted comparison exact
    assert select_arm(means_state(values)) == select_arm(means_state([v + shift for v in values]))


def test_schedule_ue_ucb_pp_b4():
    sch = build_schedule("ue-ucb++", 5, 1000, 4, SNR1)
    assert (sch.n_subphases, sch.tau) == (4, 2)
    assert sch.b_squared == (16.0, 9.5, 6.25, 4.625, 3.8125)
    assert sch.phase1_length == 40
    assert sch.thetas[0] == pytest.approx(0.25)
    assert sch.theta_ucb == pytest.approx(1 / math.sqrt(3.8125))
    assert sch.eta == pytest.approx(4.8125)


def test_schedule_ucb0():
    sch = build_schedule("ucb0", 2, 100, 1, ChannelParams(1.0, 1.0))
    assert (sch.theta_ucb, sch.eta, sch.phase1_length) == (1.0, 2.0, 0)


def test_schedule_ue_ucb():
    sch = build_schedule("ue-ucb", 3, 1000, 4, SNR1)
    assert (sch.n_subphases, sch.tau) == (1, 17)
    assert sch.thetas == (0.25,)
    assert sch.theta_ucb == pytest.approx(math.sqrt(0.5))
    assert sch.eta == 3.0


def test_schedule_too_short_carries_min_horizon():
    with pytest.raises(ScheduleError) as err:
        build_schedule("ue-ucb++", 5, 40, 4, SNR1)
    assert err.value.min_horizon == 41
    build_schedule("ue-ucb++", 5, 41, 4, SNR1)
    with pytest.raises(ScheduleError):
        build_schedule("ucb0", 2, 1, 1, SNR1)


def test_algorithm_aliases():
    assert Algorithm.parse("UCB++") is Algorithm.UE_UCB_PP
    assert Algorithm.parse("ue_ucb") is Algorithm.UE_UCB
    with pytest.raises(ValueError):
        Algorithm.parse("thompson")


def test_noiseless_schedule_uses_clamped_snr():
    sch = build_schedule("ue-ucb++", 3, 100, 2, NOISELESS)
    assert sch.snr == 1e12
    assert sch.tau == 2


def drive(schedule, rewards):
    """Feed ``rewards[arm]`` as the decoded value each round; returns the steps."""
    state = PolicyState.initial(schedule)
    steps = []
    for t in range(1, schedule.horizon + 1):
        step = learner_step(schedule, state, t)
        steps.append(step)
        learner_update(schedule, state, t, step.arm, rewards[step.arm])
    return state, steps


def test_ucb0_side_info_is_zero():
    sch = build_schedule("ucb0", 3, 50, 2, SNR1)
    _, steps = drive(sch, [0.1, 0.5, -0.2])
    assert all(s.side_info == 0.0 for s in steps)
    assert all(s.cas.theta == sch.theta_ucb for s in steps)


def test_first_subphase_side_info_is_zero():
    sch = build_schedule("ue-ucb++", 2, 100, 4, SNR1)
    _, steps = drive(sch, [1.0, 2.0])
    assert all(s.side_info == 0.0 for s in steps[: sch.subphase_rounds])


def test_second_subphase_side_info_replays_transcript():
    inst = gaussian_instance([0.3, -0.1], 4)
    sch = build_schedule("ue-ucb++", 2, 60, 4, SNR1)
    rec = run_episode(inst, sch, SNR1, 60, seed=3).transcript
    first = rec[sch.subphase_rounds]  # round 5: sub-phase 2, arm 0
    assert first.arm == 0
    assert first.side_info == pytest.approx((rec[0].decoded + rec[1].decoded) / 2, rel=1e-15)
    assert first.theta == pytest.approx(1 / math.sqrt(9.5))


def test_subphase_estimate_is_mean():
    sch = build_schedule("ue-ucb++", 1, 100, 4, SNR1)
    state = PolicyState.initial(sch)
    for t, y in ((1, 1.0), (2, 3.0)):
        step = learner_step(sch, state, t)
        learner_update(sch, state, t, step.arm, y)
    assert state.estimates[1, 0] == 2.0


def test_ucb_update_increments_count():
    state = UcbState(np.array([4]), np.array([2.0]), eta=1.0, horizon=100)
    state.update(0, 0.5)
    assert state.counts[0] == 5
    assert state.means[0] == 0.5


def test_noiseless_deterministic_estimates_exact():
    values = [0.75, -1.5, 1.25]
    inst = deterministic_instance(values, 2.0)
    sch = build_schedule("ue-ucb++", 3, 40, 2.0, NOISELESS)
    ep = run_episode(inst, sch, NOISELESS, 40, seed=0)
    assert all(rec.decoded == rec.raw_reward for rec in ep.transcript)
    state, _ = drive(sch, values)
    assert state.estimates[1:].tolist() == [values] * sch.n_subphases


def test_out_of_order_update_rejected():
    sch = build_schedule("ucb0", 2, 10, 1, SNR1)
    state = PolicyState.initial(sch)
    step = learner_step(sch, state, 1)
    with pytest.raises(ValueError):
        learner_update(sch, state, 1, 1 - step.arm, 0.0)
    with pytest.raises(ValueError):
        learner_step(sch, state, 3)


def test_locate_out_of_range():
    sch = build_schedule("ucb0", 2, 10, 1, SNR1)
    with pytest.raises(IndexError):
        sch.locate(11)


@pytest.mark.parametrize("alg", list(Algorithm))
@pytest.mark.parametrize("b", [1.0, 2.0, 4.0, 9.0])
@pytest.mark.parametrize("snr", [0.1, 1.0, 10.0])
def test_round_accounting(alg, b, snr):
    sch = build_schedule(alg, 3, 10**6, b, ChannelParams.from_snr(snr))
    short = build_schedule(alg, 3, sch.phase1_length + 5, b, ChannelParams.from_snr(snr))
    _, steps = drive(short, [0.0, 0.0, 0.0])
    explore = [s.arm for s in steps[: short.phase1_length]]
    assert [explore.count(a) for a in range(3)] == [short.n_subphases * short.tau] * 3
    if alg is Algorithm.UE_UCB:
        assert short.n_subphases == 1


@pytest.mark.parametrize("alg", list(Algorithm))
@pytest.mark.parametrize("b", [1.0, 2.0, 16.0])
@pytest.mark.parametrize("snr", [0.05, 1.0, 20.0])
def test_schedule_power_soundness(alg, b, snr):
    power = 3.0
    sch = build_schedule(alg, 2, 10**7, b, ChannelParams.from_snr(snr, power=power))
    for t in [1, sch.phase1_length, sch.phase1_length + 1]:
        if t < 1:
            continue
        sub, _, _ = sch.locate(t)
        theta = sch.thetas[sub - 1] if sub else sch.theta_ucb
        assert theta**2 * sch.variance_bound(t) <= power * (1 + 1e-12)
    if alg is Algorithm.UE_UCB:
        assert sch.b_squared[-1] == 2.0


@pytest.mark.parametrize("snr", [0.01, 0.1, 1.0, 10.0, 100.0])
def test_b_sequence_monotone(snr):
    fixed = contraction_fixed_point(snr)
    for b in range(2, 1025, 2):
        seq = build_schedule("ue-ucb++", 2, 10**9, b, ChannelParams.from_snr(snr)).b_squared
        assert seq[-1] <= 4.0
        for prev, nxt in zip(seq, seq[1:]):
            if prev > fixed:
                assert nxt < prev


def test_noiseless_ue_ucb_pp_plays_best_after_forced_pulls():
    inst = deterministic_hard_instance(3, 2.0, good_arm=1)
    sch = build_schedule("ue-ucb++", 3, 100, 2.0, NOISELESS)
    ep = run_episode(inst, sch, NOISELESS, 100, seed=0)
    phase2 = [r.arm for r in ep.transcript[sch.phase1_length:]]
    assert sorted(phase2[:3]) == [0, 1, 2]
    assert set(phase2[3:]) == {1}
