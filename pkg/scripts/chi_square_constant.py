"""How large must the constant be in chi^2 <= const * c * KL, with c = max p/q?

Prints the worst ratio chi^2 / (c KL) over random pairs and along the
two-point family p = (1/2, 1/2), q = (1/2 - e, 1/2 + e), where it tends to 2.
"""

import argparse

import numpy as np

from awgn_bandits.infotheory import chi_square, kl_divergence, max_likelihood_ratio, random_distribution_pairs


def ratio(p, q):
    return chi_square(p, q) / (max_likelihood_ratio(p, q) * kl_divergence(p, q))


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--pairs", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()

    rng = np.random.default_rng(args.seed)
    ratios = np.array([ratio(a, b) for a, b in random_distribution_pairs(args.pairs, rng)])
    print(f"random pairs: {np.mean(ratios > 1):.2%} have ratio > 1, max ratio {ratios.max():.4f}")
    for e in (0.1, 0.01, 0.001):
        print(f"p=(0.5, 0.5), q=(0.5-{e:g}, 0.5+{e:g}): ratio {ratio([0.5, 0.5], [0.5 - e, 0.5 + e]):.5f}")


if __name__ == "__main__":
    main()
