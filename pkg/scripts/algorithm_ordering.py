"""UCB0 against UE-UCB++ as B grows: the multiplicative B in UCB0's rate shows up quickly."""

import argparse

from awgn_bandits import ChannelParams, gaussian_instance, run_monte_carlo


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--b", type=float, nargs="+", default=[2.0, 8.0, 32.0, 64.0])
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--snr", type=float, default=1.0)
    p.add_argument("--horizon", type=int, default=100_000)
    p.add_argument("--reps", type=int, default=20)
    p.add_argument("--seed", type=int, default=2024)
    p.add_argument("--parallel", type=int, default=1)
    args = p.parse_args()

    ch = ChannelParams.from_snr(args.snr)
    print(f"{'B':>6} {'ucb0':>18} {'ue-ucb++':>18}")
    for b in args.b:
        inst = gaussian_instance([0.5] + [0.0] * (args.k - 1), b)
        cells = []
        for alg in ("ucb0", "ue-ucb++"):
            mc = run_monte_carlo(inst, alg, ch, args.horizon, args.reps, args.seed, workers=args.parallel)
            cells.append(f"{mc.mean_final:9.1f} +- {1.96 * mc.stderr_final:6.1f}")
        print(f"{b:6g} {cells[0]:>18} {cells[1]:>18}")


if __name__ == "__main__":
    main()
