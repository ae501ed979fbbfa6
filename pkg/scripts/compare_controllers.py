"""Accumulated spacing error of the averaged-consensus controller against the predecessor benchmark."""

import argparse
import time

from aircons.harness.config import load_config
from aircons.harness.experiments import compare_experiment
from aircons.harness.output import write_text


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default=None)
    ap.add_argument("--seeds", default="0,1,2,3,4")
    ap.add_argument("--out", default="results/compare.csv")
    args = ap.parse_args()

    start = time.perf_counter()
    rep = compare_experiment(load_config(args.config), [int(s) for s in args.seeds.split(",")])
    write_text(args.out, rep.to_csv())
    print(rep.summary())
    print(f"{time.perf_counter() - start:.0f} s, wrote {args.out}")


if __name__ == "__main__":
    main()
