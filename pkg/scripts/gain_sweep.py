"""Sweep controller gains and report accumulated error and string stability for both arms.

Each point is one full simulation per arm; collisions are reported instead of aborting the sweep.
"""

import argparse
import itertools

import numpy as np

from aircons.errors import CollisionError
from aircons.harness.config import load_config
from aircons.harness.simulation import run_simulation
from aircons.platoon import metrics


def evaluate(cfg, kind):
    try:
        m = metrics(run_simulation(cfg, kind), cfg.transient, cfg.stability_tol)
    except CollisionError as exc:
        return f"collision at t={exc.time:.2f}s"
    ratio = np.max(m.peak_error[1:] / m.peak_error[:-1])
    return f"E={m.accumulated_error:8.2f} ratio={ratio:.3f} {'stable' if m.string_stable else 'UNSTABLE'}"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default=None)
    ap.add_argument("--stiffness", default="0.1,1,4,10")
    ap.add_argument("--damping", default="2,10,60")
    ap.add_argument("--arms", default="benchmark,aircons")
    args = ap.parse_args()

    base = load_config(args.config)
    for k, c in itertools.product(map(float, args.stiffness.split(",")), map(float, args.damping.split(","))):
        cfg = base.replace(stiffness=k, damping=c)
        cells = [f"{arm}: {evaluate(cfg, arm)}" for arm in args.arms.split(",")]
        print(f"stiffness={k:<5g} damping={c:<5g} " + " | ".join(cells), flush=True)


if __name__ == "__main__":
    main()
