"""Desk-scale replication of the low-dimensional tables (models 1-9).

    python3 scripts/replicate_tables.py --models 1 6 --errors normal t3 --reps 50
"""

import argparse
import time
from pathlib import Path

import numpy as np

from uqimp.experiment import ExperimentConfig, replicate, write_table
from uqimp.io import write_json


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--models", type=int, nargs="+", default=list(range(1, 10)))
    ap.add_argument("--errors", nargs="+", default=["normal", "t3", "exp2", "cauchy"])
    ap.add_argument("--reps", type=int, default=50)
    ap.add_argument("--n", type=int, default=1000)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--out", default="results/tables")
    args = ap.parse_args()

    out = Path(args.out)
    np.set_printoptions(precision=2, suppress=True)
    for m in args.models:
        for err in args.errors:
            cfg = ExperimentConfig(model=m, error=err, n=args.n, reps=args.reps,
                                   threads=args.threads)
            t0 = time.perf_counter()
            s = replicate(cfg)
            stem = f"model{m}_{err}"
            write_table(s, out / f"{stem}.csv")
            write_json({"config": cfg.to_dict(), **s.to_dict()}, out / f"{stem}.json")
            print(f"model {m} {err}: {s.n_ok} ok, {s.n_failed} failed, "
                  f"{time.perf_counter() - t0:.1f}s")
            print("  mean\n", s.mean)
            print("  sd\n", s.sd)


if __name__ == "__main__":
    main()
