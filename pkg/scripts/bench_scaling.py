"""Geodesic / chordal descent-loop timing ratio as the ambient dimension grows."""

import argparse

from grasstrack import baselines as bl
from grasstrack import scenarios as sc
from grasstrack.objectives import RegularizerKind as K
from grasstrack.optimizer import DescentConfig, rls_descend


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dims", type=int, nargs="+", default=[32, 64, 128, 256])
    ap.add_argument("--iterations", type=int, default=50)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()
    print("   n   geodesic s   chordal s   ratio")
    for n in args.dims:
        truth, data = sc.geodesic_scenario(sc.GeodesicScenarioConfig(n=n))
        init = bl.windowed_svd_track(data, truth.d, bl.WindowSpec(2))
        secs = {}
        for kind in (K.POSITION_GEODESIC, K.POSITION_CHORDAL):
            cfg = DescentConfig(kind=kind, iterations=args.iterations)
            secs[kind] = min(rls_descend(init, data, cfg).seconds for _ in range(args.repeats))
        g, c = secs[K.POSITION_GEODESIC], secs[K.POSITION_CHORDAL]
        print(f"{n:4d}   {g:10.3f}   {c:9.3f}   {g / c:5.2f}")


if __name__ == "__main__":
    main()
