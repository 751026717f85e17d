"""Episode runner, Monte Carlo driver and the transcript-divergence probe.

Two execution paths share one random-stream contract. Round ``t`` of the
episode keyed by ``(seed, stream)`` consumes two uniforms, in order: one
for the reward, one for the channel noise.

* :func:`run_episode` is the reference path. It walks the protocol
  literally (``learner_step`` -> ``sample_reward`` -> ``cas_encode`` ->
  ``transmit`` -> ``cas_decode`` -> ``learner_update``) and keeps a full
  transcript.
* :func:`simulate_batch` advances many episodes at once with numpy. Each
  episode reads only its own stream and every operation is elementwise per
  episode, so its numbers equal the reference path's bit for bit.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy.special import ndtr, ndtri

from .core import BanditInstance, RandomSource, sample_reward
from .link import ChannelParams, PowerAudit, cas_decode, cas_encode, transmit
from .policies import Algorithm, PolicyState, Schedule, build_schedule, learner_step, learner_update

CHUNK_ROUNDS = 4096
MAX_RETAINED = 1000
PROBE_MIN_REPLICATIONS = 100_000


@dataclass(frozen=True)
class RoundRecord:
    t: int
    arm: int
    raw_reward: float
    side_info: float
    theta: float
    encoded: float
    channel_output: float
    decoded: float


Transcript = list  # list[RoundRecord], in round order


@dataclass
class RegretTrace:
    """Cumulative pseudo-regret ``sum_{s <= t} (mu* - mu_{A_s})`` at selected rounds."""

    rounds: np.ndarray
    cumulative: np.ndarray
    seed: int
    stream: int
    algorithm: str
    instance: str

    @property
    def final(self) -> float:
        return float(self.cumulative[-1])

    def at(self, rounds: Sequence[int]) -> np.ndarray:
        pos = np.searchsorted(self.rounds, rounds)
        if np.any(self.rounds[pos] != rounds):
            raise KeyError("requested rounds were not retained")
        return self.cumulative[pos]


class EpisodeResult(NamedTuple):
    transcript: Transcript | None
    trace: RegretTrace
    audit: PowerAudit


def retained_rounds(horizon: int, max_points: int = MAX_RETAINED) -> np.ndarray:
    """Every ``ceil(T / max_points)``-th round, plus the final round."""
    step = max(1, math.ceil(horizon / max_points))
    rounds = list(range(step, horizon + 1, step))
    if rounds[-1] != horizon:
        rounds.append(horizon)
    return np.array(rounds, dtype=np.int64)


def _check_compatible(instance: BanditInstance, schedule: Schedule, channel: ChannelParams, horizon: int):
    if instance.k != schedule.k:
        raise ValueError(f"instance has {instance.k} arms, schedule was built for {schedule.k}")
    if horizon != schedule.horizon:
        raise ValueError(f"schedule horizon {schedule.horizon} != requested horizon {horizon}")
    if channel != schedule.channel:
        raise ValueError("schedule was built for a different channel")


def run_episode(
    instance: BanditInstance,
    schedule: Schedule,
    channel: ChannelParams,
    horizon: int,
    seed: int,
    stream: int = 0,
    retain_transcript: bool = True,
) -> EpisodeResult:
    """Play one episode of the round protocol; deterministic in ``(seed, stream)``."""
    _check_compatible(instance, schedule, channel, horizon)
    rng = RandomSource(seed, stream)
    state = PolicyState.initial(schedule)
    audit = PowerAudit(channel.power)
    gaps = instance.gaps
    cumulative = np.empty(horizon)
    transcript = [] if retain_transcript else None
    regret = 0.0
    for t in range(1, horizon + 1):
        step = learner_step(schedule, state, t)
        x = sample_reward(instance.arms[step.arm], rng)
        encoded = cas_encode(x, step.cas, audit)
        y = transmit(encoded, channel, rng)
        decoded = cas_decode(y, step.cas)
        learner_update(schedule, state, t, step.arm, decoded)
        regret += gaps[step.arm]
        cumulative[t - 1] = regret
        if transcript is not None:
            transcript.append(
                RoundRecord(t, step.arm, x, step.side_info, step.cas.theta, encoded, y, decoded)
            )
    trace = RegretTrace(
        np.arange(1, horizon + 1), cumulative, seed, stream,
        schedule.algorithm.value, instance.digest(),
    )
    return EpisodeResult(transcript, trace, audit)


# --- vectorised engine -------------------------------------------------------

UniformFeed = Callable[[int], np.ndarray]
RECORD_FIELDS = ("arm", "raw_reward", "side_info", "encoded", "channel_output", "decoded")


@dataclass
class BatchResult:
    """Outcome of :func:`simulate_batch` for R episodes."""

    rounds: np.ndarray
    traces: np.ndarray  # (R, len(rounds)) cumulative pseudo-regret
    sum_sq: np.ndarray  # (R,) sum of squared encoded values
    pulls: np.ndarray  # (R, K)
    horizon: int
    records: dict = field(default_factory=dict)  # name -> (R, T) arrays

    @property
    def final(self) -> np.ndarray:
        return self.traces[:, -1]


def stream_feed(seed: int, streams: Sequence[int]) -> UniformFeed:
    """Uniform feed where episode ``i`` reads stream ``streams[i]``."""
    sources = [RandomSource(seed, s) for s in streams]

    def feed(n: int) -> np.ndarray:
        return np.stack([src.uniforms((n, 2)) for src in sources])

    return feed


def simulate_batch(
    instance: BanditInstance,
    schedule: Schedule,
    feed: UniformFeed,
    n_episodes: int,
    rounds: np.ndarray | None = None,
    record: Sequence[str] = (),
) -> BatchResult:
    """Run ``n_episodes`` episodes side by side.

    ``feed(n)`` must return an ``(n_episodes, n, 2)`` array of uniforms for
    the next ``n`` rounds. ``rounds`` selects which cumulative-regret values
    to keep (all rounds by default); ``record`` names per-round fields to keep
    in full, see ``RECORD_FIELDS``.
    """
    if instance.k != schedule.k:
        raise ValueError(f"instance has {instance.k} arms, schedule was built for {schedule.k}")
    unknown = set(record) - set(RECORD_FIELDS)
    if unknown:
        raise ValueError(f"unknown record fields {sorted(unknown)}")
    horizon, k, r = schedule.horizon, schedule.k, n_episodes
    rounds = np.arange(1, horizon + 1) if rounds is None else np.asarray(rounds, dtype=np.int64)
    keep_at = {int(t): i for i, t in enumerate(rounds)}
    noise_std = schedule.channel.noise_std
    gaps = instance.gaps
    rows = np.arange(r)
    arm_vectors = [np.full(r, a, dtype=np.intp) for a in range(k)]

    estimates = np.zeros((schedule.n_subphases + 1, r, k))
    accum = np.zeros((r, k))
    counts = np.zeros((r, k), dtype=np.int64)
    sums = np.zeros((r, k))
    pulls = np.zeros((r, k), dtype=np.int64)
    regret = np.zeros(r)
    sum_sq = np.zeros(r)
    traces = np.empty((r, len(rounds)))
    records = {name: np.empty((r, horizon), dtype=np.intp if name == "arm" else float) for name in record}
    coef = schedule.radius_coef
    theta_ucb = schedule.theta_ucb
    last_est = estimates[-1]

    t = 1
    while t <= horizon:
        n = min(CHUNK_ROUNDS, horizon - t + 1)
        block = feed(n)
        u_all = block[:, :, 0]
        z_all = ndtri(u_all)
        noise_all = noise_std * ndtri(block[:, :, 1])
        for j in range(n):
            u, z = u_all[:, j], z_all[:, j]
            sub, arm, pos = schedule.locate(t)
            if sub:
                theta = schedule.thetas[sub - 1]
                arms = arm_vectors[arm]
                side = estimates[sub - 1][:, arm]
                x = instance.batch_rewards(arms, u, z)
                encoded = theta * (x - side)
                y = encoded + noise_all[:, j]
                decoded = y / theta + side
                accum[:, arm] += decoded
                if pos == schedule.tau - 1:
                    estimates[sub][:, arm] = accum[:, arm] / schedule.tau
                    accum[:, arm] = 0.0
                pulls[:, arm] += 1
                regret += gaps[arm]
            else:
                with np.errstate(divide="ignore", invalid="ignore"):
                    index = sums / counts + np.sqrt(coef / counts)
                index = np.where(counts > 0, index, np.inf)
                arms = np.argmax(index, axis=1)
                side = last_est[rows, arms]
                x = instance.batch_rewards(arms, u, z)
                encoded = theta_ucb * (x - side)
                y = encoded + noise_all[:, j]
                decoded = y / theta_ucb + side
                counts[rows, arms] += 1
                sums[rows, arms] += decoded
                pulls[rows, arms] += 1
                regret += gaps[arms]
            sum_sq += encoded * encoded
            col = keep_at.get(t)
            if col is not None:
                traces[:, col] = regret
            if records:
                values = {"arm": arms, "raw_reward": x, "side_info": side, "encoded": encoded,
                          "channel_output": y, "decoded": decoded}
                for name, arr in records.items():
                    arr[:, t - 1] = values[name]
            t += 1
    return BatchResult(rounds, traces, sum_sq, pulls, horizon, records)


# --- Monte Carlo -------------------------------------------------------------


@dataclass
class McSummary:
    """Aggregate over replications ``r = 1 .. R`` on streams ``(base_seed, r)``."""

    algorithm: str
    instance: str
    schedule: dict
    base_seed: int
    replications: int
    rounds: np.ndarray
    traces: np.ndarray
    mean_trace: np.ndarray
    stderr_trace: np.ndarray
    final_regrets: np.ndarray
    audit: PowerAudit
    mean_pulls: np.ndarray
    records: dict = field(default_factory=dict)  # name -> (R, T), only when requested

    @property
    def mean_final(self) -> float:
        return float(self.mean_trace[-1])

    @property
    def stderr_final(self) -> float:
        return float(self.stderr_trace[-1])

    @property
    def quantiles(self) -> dict:
        p5, p50, p95 = np.percentile(self.final_regrets, [5, 50, 95])
        return {"p5": float(p5), "p50": float(p50), "p95": float(p95)}


def _batch_worker(args):
    instance, schedule, base_seed, streams, rounds, record = args
    return simulate_batch(instance, schedule, stream_feed(base_seed, streams), len(streams), rounds, record)


def run_monte_carlo(
    instance: BanditInstance,
    algorithm: Algorithm | str,
    channel: ChannelParams,
    horizon: int,
    replications: int,
    base_seed: int,
    rounds: np.ndarray | None = None,
    workers: int = 1,
    record: Sequence[str] = (),
) -> McSummary:
    """Replicate episodes and aggregate their regret traces and power audits.

    Replication ``r`` always uses stream ``(base_seed, r)``, so results do not
    depend on ``workers`` and adding replications leaves earlier ones intact.
    ``record`` keeps full per-round fields (see ``RECORD_FIELDS``).
    """
    if replications < 1:
        raise ValueError("replications must be >= 1")
    schedule = build_schedule(algorithm, instance.k, horizon, instance.b, channel)
    rounds = retained_rounds(horizon) if rounds is None else np.asarray(rounds, dtype=np.int64)
    streams = list(range(1, replications + 1))
    if workers > 1 and replications > 1:
        parts = [p.tolist() for p in np.array_split(np.array(streams), min(workers, replications))]
        jobs = [(instance, schedule, base_seed, p, rounds, tuple(record)) for p in parts]
        with ProcessPoolExecutor(max_workers=len(jobs)) as pool:
            results = list(pool.map(_batch_worker, jobs))
        traces = np.concatenate([res.traces for res in results])
        sum_sq = np.concatenate([res.sum_sq for res in results])
        pulls = np.concatenate([res.pulls for res in results])
        records = {name: np.concatenate([res.records[name] for res in results]) for name in record}
    else:
        res = _batch_worker((instance, schedule, base_seed, streams, rounds, tuple(record)))
        traces, sum_sq, pulls, records = res.traces, res.sum_sq, res.pulls, res.records
    return summarize(instance, schedule, base_seed, rounds, traces, sum_sq, pulls, records)


def summarize(instance, schedule, base_seed, rounds, traces, sum_sq, pulls, records=None) -> McSummary:
    reps = traces.shape[0]
    # correctly rounded column sums: the mean does not depend on replication order
    mean_trace = np.array([math.fsum(col) for col in traces.T]) / reps
    if reps > 1:
        stderr = traces.std(axis=0, ddof=1) / math.sqrt(reps)
    else:
        stderr = np.full(len(rounds), np.nan)
    audit = PowerAudit(schedule.channel.power, math.fsum(sum_sq.tolist()), reps * schedule.horizon)
    return McSummary(
        algorithm=schedule.algorithm.value,
        instance=instance.digest(),
        schedule=schedule.describe(),
        base_seed=base_seed,
        replications=reps,
        rounds=rounds,
        traces=traces,
        mean_trace=mean_trace,
        stderr_trace=stderr,
        final_regrets=traces[:, -1].copy(),
        audit=audit,
        mean_pulls=pulls.mean(axis=0),
        records=records or {},
    )


# --- transcript divergence probe ---------------------------------------------


@dataclass
class ProbeResult:
    estimated_kl: float
    rhs: float
    rhs_expected: float
    expected_pulls: dict
    replications: int
    horizon: int
    bins: int
    warnings: list
    cells: int = 0  # transcript cells observed under either instance

    @property
    def bias_scale(self) -> float:
        """First-order bias of the two-sample plug-in KL, ``(cells - 1) / replications``."""
        return (self.cells - 1) / self.replications

    def __str__(self) -> str:
        return (
            f"binned transcript KL ~ {self.estimated_kl:.5g} nats; "
            f"E[N_j] * sup KL = {self.rhs:.5g}; sum_t E[1{{A_t=j}} KL_t] = {self.rhs_expected:.5g}"
        )


def output_bin_probs(family, theta, side, noise_std: float, edges: np.ndarray) -> np.ndarray:
    """Law of the binned channel output ``theta (X - S) + Z`` for one arm.

    ``theta`` and ``side`` broadcast; the result has a trailing axis of
    ``len(edges) - 1`` bins whose outer two absorb the tails.
    """
    theta = np.asarray(theta, dtype=float)[..., None]
    side = np.asarray(side, dtype=float)[..., None]
    cuts = np.concatenate([[-np.inf], edges[1:-1], [np.inf]])

    def normal_bins(loc, scale):
        cdf = ndtr((cuts - loc) / scale)
        return np.diff(cdf, axis=-1)

    name = type(family).__name__
    if name == "UnitGaussian":
        return normal_bins(theta * (family.mean - side), np.sqrt(theta**2 + noise_std**2))
    if name == "ShiftedRademacher":
        hi = normal_bins(theta * (1.0 - side), noise_std)
        lo = normal_bins(theta * (-1.0 - side), noise_std)
        return family.p_plus * hi + (1.0 - family.p_plus) * lo
    return normal_bins(theta * (family.value - side), noise_std)


def _kl_rows(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * np.log(p / q), 0.0)
    return terms.sum(axis=-1)


def transcript_divergence_probe(
    nu: BanditInstance,
    nu_prime: BanditInstance,
    algorithm: Algorithm | str,
    channel: ChannelParams,
    horizon: int = 2,
    replications: int = 200_000,
    bins: int = 32,
    span: float = 6.0,
    seed: int = 0,
) -> ProbeResult:
    """Plug-in KL between binned transcripts ``(A_1, bin(Y_1), ..)`` under two instances.

    Alongside it, two versions of the divergence-decomposition right-hand side
    on the same binned per-round output laws: ``E[N_j] * max KL`` over the
    encoders actually used, and ``sum_t E[1{A_t = j} KL_t]``. Cell
    probabilities get add-1/2 smoothing over the cells observed under either
    instance so that empty cells do not make the estimate infinite.
    """
    if horizon > 6:
        raise ValueError("the probe enumerates transcripts; horizon must be <= 6")
    if nu.k != 2 or nu_prime.k != 2:
        raise ValueError("the probe is defined for K = 2")
    if nu.b != nu_prime.b:
        raise ValueError("both instances must share B so that they share the encoder")
    if channel.noise_variance <= 0:
        raise ValueError("the probe needs a noisy channel")
    notes = []
    if replications < PROBE_MIN_REPLICATIONS:
        notes.append(
            f"{replications} replications < {PROBE_MIN_REPLICATIONS}: plug-in estimate is unreliable"
        )
    schedule = build_schedule(algorithm, 2, horizon, nu.b, channel)
    sigma = channel.noise_std
    edges = np.linspace(-span * sigma, span * sigma, bins + 1)
    radix = nu.k * bins
    fields = ("arm", "channel_output", "side_info")

    codes, runs = [], []
    for stream, inst in enumerate((nu, nu_prime)):
        src = RandomSource(seed, stream)
        res = simulate_batch(inst, schedule, lambda n: src.uniforms((replications, n, 2)),
                             replications, rounds=np.array([horizon]), record=fields)
        arms = res.records["arm"]
        cell = np.digitize(res.records["channel_output"], edges[1:-1])
        symbols = arms * bins + cell
        code = np.zeros(replications, dtype=np.int64)
        for t in range(horizon):
            code = code * radix + symbols[:, t]
        codes.append(code)
        runs.append(res)

    support = np.union1d(codes[0], codes[1])
    p_counts = np.zeros(support.size)
    q_counts = np.zeros(support.size)
    for counts, code in ((p_counts, codes[0]), (q_counts, codes[1])):
        cells, n = np.unique(code, return_counts=True)
        counts[np.searchsorted(support, cells)] = n
    p_hat = (p_counts + 0.5) / (replications + 0.5 * support.size)
    q_hat = (q_counts + 0.5) / (replications + 0.5 * support.size)
    estimate = float(np.sum(p_hat * np.log(p_hat / q_hat)))

    differing = [j for j in range(2) if nu.arms[j] != nu_prime.arms[j]]
    thetas = np.array([schedule.thetas[schedule.locate(t)[0] - 1] if schedule.locate(t)[0]
                       else schedule.theta_ucb for t in range(1, horizon + 1)])
    records = runs[0].records
    rhs_sup, rhs_expected, pulls = 0.0, 0.0, {}
    for j in differing:
        mask = records["arm"] == j
        pulls[j] = float(mask.sum() / replications)
        if not mask.any():
            continue
        theta_j = np.broadcast_to(thetas, mask.shape)[mask]
        side_j = records["side_info"][mask]
        kl = _kl_rows(output_bin_probs(nu.arms[j], theta_j, side_j, sigma, edges),
                      output_bin_probs(nu_prime.arms[j], theta_j, side_j, sigma, edges))
        rhs_sup += pulls[j] * float(kl.max())
        rhs_expected += float(kl.sum()) / replications
    return ProbeResult(estimate, rhs_sup, rhs_expected, pulls, replications, horizon, bins, notes,
                       int(support.size))
