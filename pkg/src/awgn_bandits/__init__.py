"""Multi-armed bandits whose rewards reach the learner through an AWGN channel."""

from .core import (
    BanditInstance,
    Deterministic,
    RandomSource,
    ShiftedRademacher,
    UnitGaussian,
    deterministic_hard_instance,
    deterministic_instance,
    gap_instance,
    gaussian_instance,
    rademacher_instance,
    sample_reward,
)
from .harness import (
    McSummary,
    RegretTrace,
    RoundRecord,
    run_episode,
    run_monte_carlo,
    simulate_batch,
    transcript_divergence_probe,
)
from .infotheory import (
    BoundReport,
    awgn_capacity,
    b_recursion,
    binary_input_mi,
    chi_square,
    kl_divergence,
    lower_bound_report,
    minimax_lower_bound,
    total_variation,
    ucb0_bound,
    ue_ucb_bound,
    ue_ucb_pp_bound,
)
from .link import AuditReport, CasParams, ChannelParams, PowerAudit, audit_check, cas_decode, cas_encode, transmit
from .policies import Algorithm, Schedule, ScheduleError, build_schedule, learner_step, learner_update

__version__ = "0.1.0"
