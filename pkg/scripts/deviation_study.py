"""Expected-matrix deviation bound and Monte Carlo consensus bias for several group sizes."""

import argparse

import numpy as np

from aircons.consensus import ConsensusGroup, distances_from_alphas
from aircons.deviation import deviation_lower_bound, equal_spacing_alphas, expected_mixing_matrix, mc_deviation


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", default="3,5,10")
    ap.add_argument("--gap", type=float, default=5.0)
    ap.add_argument("--rho", type=float, default=0.9)
    ap.add_argument("--rounds", type=int, default=50)
    ap.add_argument("--reps", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--uneven", action="store_true", help="also try a clustered geometry")
    args = ap.parse_args()

    geometries = [("equal", equal_spacing_alphas(int(S), args.gap)) for S in args.sizes.split(",")]
    if args.uneven:
        geometries.append(("clustered", np.array([5.0, 6.0, 7.0, 30.0])))
    print(f"{'geometry':>10} {'S':>3} {'bound':>12} {'MC mean':>10} {'stderr':>9}")
    for name, alphas in geometries:
        S = len(alphas)
        rep = expected_mixing_matrix(distances_from_alphas(alphas), args.rho)
        bound = deviation_lower_bound(rep, alphas)
        members = tuple(range(1, S + 1))
        g = ConsensusGroup(owner=members[S // 2], members=members, rho=args.rho, rounds=args.rounds,
                           norm_len=max(55.0, float(alphas.max())))
        mean, se = mc_deviation(g, alphas, args.reps, np.random.default_rng(args.seed))
        print(f"{name:>10} {S:>3} {bound:>12.3e} {mean:>10.4f} {se:>9.4f}")


if __name__ == "__main__":
    main()
