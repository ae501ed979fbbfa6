"""Consensus trajectories for rho = 0.2 and 0.9 on a five-member equally spaced group."""

import argparse

import numpy as np

from aircons.harness.config import load_config
from aircons.harness.experiments import consensus_trace_experiment
from aircons.harness.output import write_text


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default=None)
    ap.add_argument("--rho", default="0.2,0.9")
    ap.add_argument("--seeds", type=int, default=100)
    ap.add_argument("--rounds", type=int, default=100)
    ap.add_argument("--out", default="results/consensus_trace.csv")
    args = ap.parse_args()

    rhos = [float(r) for r in args.rho.split(",")]
    rep = consensus_trace_experiment(rhos, load_config(args.config), seeds=range(args.seeds), rounds=args.rounds)
    write_text(args.out, rep.to_csv())
    for rho in rhos:
        k = rep.convergence_rounds(rho)
        print(f"rho={rho}: rounds to 1% spread mean {np.mean(k):.2f} (max {np.max(k):.0f}), "
              f"mean |bias| {rep.final_bias(rho).mean():.4f} m")
    if len(rhos) == 2:
        lo, hi = sorted(rhos)
        faster = np.mean(rep.convergence_rounds(hi) < rep.convergence_rounds(lo))
        print(f"rho={hi} converges faster than rho={lo} in {faster:.0%} of seeds")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
