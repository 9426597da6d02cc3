"""Interior-mean error of chordal position RLS over a range of lambda.

Compares against geodesic position RLS at the config's own lambda, which
shows how the two regularizer scales line up.
"""

import argparse
import dataclasses

import numpy as np

from grasstrack import cli
from grasstrack.config import load_config


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default="configs/fig1_geodesic.yaml")
    ap.add_argument("--lams", type=float, nargs="+", default=[250, 500, 1000, 2000])
    ap.add_argument("--seeds", type=int, default=3)
    args = ap.parse_args()
    base = load_config(args.config)
    geo = next(t for t in base.trackers if t.type == "rls-pos-geodesic")
    cho = next(t for t in base.trackers if t.type == "rls-pos-chordal")
    trackers = [geo] + [
        dataclasses.replace(cho, name=f"chordal@{lam:g}", descent=dataclasses.replace(cho.descent, lam=lam))
        for lam in args.lams
    ]
    cfg = dataclasses.replace(base, trackers=tuple(trackers))
    means = [cli.track(cfg.with_overrides(seed=s)).interior_means() for s in range(args.seeds)]
    ref = np.mean([m[geo.name] for m in means])
    print(f"{geo.name} (lam {geo.descent.lam:g}): {ref:.5f}")
    for t in trackers[1:]:
        v = np.mean([m[t.name] for m in means])
        print(f"{t.name:>14}: {v:.5f}  ({(v - ref) / ref:+.1%} vs geodesic)")


if __name__ == "__main__":
    main()
