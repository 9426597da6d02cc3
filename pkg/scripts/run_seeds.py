"""Run a tracking config over several seeds and print interior-mean errors.

    python3 scripts/run_seeds.py configs/fig1_geodesic.yaml --seeds 5
"""

import argparse

import numpy as np

from grasstrack import cli
from grasstrack.config import load_config


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("config")
    ap.add_argument("--seeds", type=int, default=5)
    args = ap.parse_args()
    base = load_config(args.config)
    rows = []
    for s in range(args.seeds):
        rep = cli.track(base.with_overrides(seed=s))
        means = rep.interior_means()
        means["noise-floor"] = cli.interior_mean(rep.noise_floor, base.edge_margin)
        rows.append(means)
        print(f"seed {s}: " + "  ".join(f"{k} {v:.4f}" for k, v in means.items()))
    print("mean:   " + "  ".join(f"{k} {np.mean([r[k] for r in rows]):.4f}" for k in rows[0]))


if __name__ == "__main__":
    main()
