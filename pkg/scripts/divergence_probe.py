"""Binned transcript KL between a null and a gap instance, against the per-pull decomposition."""

import argparse

from awgn_bandits import ChannelParams, gap_instance, rademacher_instance, transcript_divergence_probe


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--delta", type=float, default=0.2)
    p.add_argument("--horizon", type=int, default=2)
    p.add_argument("--noise", type=float, nargs="+", default=[0.5, 1.0, 2.0, 4.0, 8.0])
    p.add_argument("--reps", type=int, default=200_000)
    p.add_argument("--algorithm", default="ucb0")
    args = p.parse_args()

    null, alt = rademacher_instance([0.0, 0.0]), gap_instance(2, args.delta)
    print(f"{'sigma^2':>8} {'KL est':>10} {'bias':>8} {'E[N]*supKL':>11} {'sum E KL_t':>11}")
    for s2 in args.noise:
        r = transcript_divergence_probe(null, alt, args.algorithm, ChannelParams(1.0, s2),
                                        horizon=args.horizon, replications=args.reps)
        print(f"{s2:8g} {r.estimated_kl:10.5f} {r.bias_scale:8.5f} {r.rhs:11.5f} {r.rhs_expected:11.5f}")


if __name__ == "__main__":
    main()
