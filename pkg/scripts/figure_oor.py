"""Out-of-range fraction of q_tau - h(x_i) against tau for the linear benchmark."""

import argparse
from pathlib import Path

import numpy as np

from uqimp.experiment import ExperimentConfig, fit_predictor, make_dataset, oor_curve


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--out", default="results/oor.csv")
    args = ap.parse_args()

    cfg = ExperimentConfig(model="linear", n=args.n, fitter="ols", reps=1, seed_base=args.seed)
    data = make_dataset(cfg)
    taus, frac = oor_curve(data, fit_predictor(cfg, data))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(out, np.column_stack([taus, frac]), delimiter=",", header="tau,fraction",
               comments="", fmt="%.17g")
    k = int(np.argmin(frac))
    print(f"minimum {frac[k]:.3f} at tau={taus[k]:.2f}; "
          f"tau=0.05: {frac[4]:.3f}, tau=0.95: {frac[94]:.3f}")


if __name__ == "__main__":
    main()
