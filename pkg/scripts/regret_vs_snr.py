"""Mean final regret of all three algorithms over an SNR grid, next to their bounds."""

import argparse
import csv

from awgn_bandits import ChannelParams, gaussian_instance, run_monte_carlo
from awgn_bandits.cli import bound_values

BOUND_KEY = {"ucb0": "ucb0", "ue-ucb": "ue_ucb", "ue-ucb++": "ue_ucb_pp"}


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--snr", type=float, nargs="+", default=[0.25, 0.5, 1.0, 2.0, 4.0])
    p.add_argument("--b", type=float, default=4.0)
    p.add_argument("--horizon", type=int, default=50_000)
    p.add_argument("--reps", type=int, default=50)
    p.add_argument("--seed", type=int, default=2024)
    p.add_argument("--out", default="regret_vs_snr.csv")
    args = p.parse_args()

    inst = gaussian_instance([0.2, 0.0], args.b)
    rows = []
    print(f"{'snr':>6} {'algorithm':<10} {'regret':>10} {'stderr':>8} {'bound':>10}")
    for snr in args.snr:
        bounds = bound_values(inst.k, args.horizon, inst.b, snr, 1 / 20, 1.0)
        for alg in BOUND_KEY:
            mc = run_monte_carlo(inst, alg, ChannelParams.from_snr(snr), args.horizon, args.reps, args.seed)
            bound = bounds[BOUND_KEY[alg]].value
            rows.append([snr, alg, mc.mean_final, mc.stderr_final, bound])
            print(f"{snr:6g} {alg:<10} {mc.mean_final:10.2f} {mc.stderr_final:8.2f} {bound:10.1f}")
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["snr", "algorithm", "mean_final_regret", "stderr", "upper_bound"])
        w.writerows(rows)


if __name__ == "__main__":
    main()
