"""Experiment runner.

    grasstrack simulate --config cfg.yaml [--out DIR] [--seed N]
    grasstrack track    --config cfg.yaml [--out DIR] [--seed N] [--edge-margin K] [--parallel]
    grasstrack bench    --config cfg.yaml [--out DIR] [--seed N] [--repeats R] [--parallel]

Exit codes: 0 ok, 1 configuration error, 2 numerical error, 3 I/O error.
``--parallel`` evaluates RLS gradients on ``$GRASSTRACK_THREADS`` threads.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import baselines as bl
from . import manifold as mf
from . import scenarios as sc
from .config import RunConfig, TrackerSpec, dumps_config, load_config
from .errors import ConfigError, DimensionMismatch, GrassmannError
from .objectives import BatchSet, Trajectory
from .optimizer import default_workers, rls_descend

log = logging.getLogger("grasstrack")

EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO = 1, 2, 3


def subspace_error(estimate: Trajectory, truth: Trajectory) -> np.ndarray:
    """Per-batch geodesic distance between estimated and true subspaces."""
    if estimate.bases.shape != truth.bases.shape:
        raise DimensionMismatch(
            f"estimate {estimate.bases.shape} and truth {truth.bases.shape} differ in shape"
        )
    return mf.geodesic_distance_arrays(estimate.bases, truth.bases)


def interior_mean(errors: np.ndarray, margin: int) -> float:
    inner = errors[margin : len(errors) - margin] if margin else errors
    if inner.size == 0:
        raise ConfigError(f"edge margin {margin} leaves no interior batches", field="edge_margin")
    return float(np.mean(inner))


def noise_floor_errors(truth: Trajectory, data: BatchSet) -> np.ndarray:
    """First-order error of a single-batch rank-d SVD, per batch.

    Splitting X_t with the true projector gives the noise energy
    ||(I - P_t) X_t||_F^2 = sigma^2 (n - d) B and the signal energy
    ||P_t X_t||_F^2 = s^2 d B. The standard perturbation estimate of the SVD
    error, (sigma / s) sqrt(d (n - d) / B), then reads
    d ||(I - P_t) X_t||_F / (sqrt(B) ||P_t X_t||_F).
    """
    Y, X = truth.bases, data.data
    inside = mf._mT(Y) @ X
    outside = X - Y @ inside
    d, B = truth.d, data.B
    num = np.linalg.norm(outside, axis=(-2, -1))
    den = np.linalg.norm(inside, axis=(-2, -1))
    return d * num / (np.sqrt(B) * den)


def make_scenario(cfg: RunConfig) -> tuple[Trajectory, BatchSet]:
    if cfg.scenario_kind == "array":
        return sc.array_scenario(cfg.scenario)
    return sc.geodesic_scenario(cfg.scenario)


@dataclass
class TrackerResult:
    errors: np.ndarray
    seconds: float
    init_seconds: float = 0.0


@dataclass
class RunReport:
    config: RunConfig
    results: dict[str, TrackerResult] = field(default_factory=dict)
    noise_floor: np.ndarray | None = None

    def interior_means(self) -> dict[str, float]:
        return {k: interior_mean(r.errors, self.config.edge_margin) for k, r in self.results.items()}

    def summary(self) -> dict:
        return {
            "scenario": self.config.to_dict()["scenario"],
            "seed": self.config.seed,
            "T": self.config.scenario.T,
            "edge_margin": self.config.edge_margin,
            "interior_mean_error": self.interior_means(),
            "mean_error": {k: float(np.mean(r.errors)) for k, r in self.results.items()},
            "seconds": {k: r.seconds for k, r in self.results.items()},
            "init_seconds": {k: r.init_seconds for k, r in self.results.items()},
            "noise_floor": {
                "mean": float(np.mean(self.noise_floor)),
                "interior_mean": interior_mean(self.noise_floor, self.config.edge_margin),
            },
        }


def run_tracker(spec: TrackerSpec, data: BatchSet, d: int, init_cache=None) -> tuple[Trajectory, float, float]:
    """Fit one tracker; returns (trajectory, seconds, init_seconds).

    For RLS trackers ``seconds`` is the descent loop only and the windowed-SVD
    initialization is reported separately.
    """
    if spec.type == "windowed-svd":
        tic = time.perf_counter()
        est = bl.windowed_svd_track(data, d, bl.WindowSpec(spec.window_batches))
        return est, time.perf_counter() - tic, 0.0
    if spec.type == "single-geodesic":
        tic = time.perf_counter()
        est = bl.single_geodesic_fit(data, d, spec.endpoint_window)
        return est, time.perf_counter() - tic, 0.0
    tic = time.perf_counter()
    if init_cache is not None and spec.init_window in init_cache:
        init = init_cache[spec.init_window]
    else:
        init = bl.windowed_svd_track(data, d, bl.WindowSpec(spec.init_window))
        if init_cache is not None:
            init_cache[spec.init_window] = init
    init_seconds = time.perf_counter() - tic
    rep = rls_descend(init, data, spec.descent)
    return rep.trajectory, rep.seconds, init_seconds


def track(cfg: RunConfig) -> RunReport:
    truth, data = make_scenario(cfg)
    d = truth.d
    report = RunReport(config=cfg, noise_floor=noise_floor_errors(truth, data))
    cache = {}
    for spec in cfg.trackers:
        log.info("tracking with %s", spec.name)
        est, secs, init_secs = run_tracker(spec, data, d, cache)
        report.results[spec.name] = TrackerResult(subspace_error(est, truth), secs, init_secs)
    return report


def _fmt(x: float) -> str:
    return repr(float(x))


def write_errors_csv(report: RunReport, path: Path):
    names = list(report.results)
    T = report.config.scenario.T
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["batch_index", *names])
        for t in range(T):
            w.writerow([t, *(_fmt(report.results[k].errors[t]) for k in names)])


def _write_json(obj, path: Path):
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def run(cfg: RunConfig) -> RunReport:
    """Track, then write errors.csv, timing.json, report.json and config_echo.yaml."""
    report = track(cfg)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_errors_csv(report, out / "errors.csv")
    _write_json({k: r.seconds for k, r in report.results.items()}, out / "timing.json")
    _write_json(report.summary(), out / "report.json")
    (out / "config_echo.yaml").write_text(dumps_config(cfg))
    return report


def bench(cfg: RunConfig, repeats: int | None = None) -> dict:
    """Time every RLS tracker's descent loop from one shared initialization."""
    rls = [t for t in cfg.trackers if t.is_rls]
    if len(rls) < 2:
        raise ConfigError("bench needs at least two RLS trackers", field="trackers")
    repeats = cfg.bench_repeats if repeats is None else repeats
    truth, data = make_scenario(cfg)
    init = bl.windowed_svd_track(data, truth.d, bl.WindowSpec(rls[0].init_window))
    seconds = {}
    errors = {}
    for spec in rls:
        times = []
        for _ in range(repeats):
            rep = rls_descend(init, data, spec.descent)
            times.append(rep.seconds)
        seconds[spec.name] = min(times)
        errors[spec.name] = interior_mean(subspace_error(rep.trajectory, truth), cfg.edge_margin)
    ref = rls[0].name
    table = {
        "reference": ref,
        "repeats": repeats,
        "init_window": rls[0].init_window,
        "seconds": seconds,
        "speedup": {k: seconds[ref] / v for k, v in seconds.items()},
        "interior_mean_error": errors,
    }
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(table, out / "bench.json")
    return table


def simulate(cfg: RunConfig) -> tuple[Trajectory, BatchSet]:
    """Generate the scenario and export it as headered CSV files."""
    truth, data = make_scenario(cfg)
    out = Path(cfg.output_dir)
    (out / "truth").mkdir(parents=True, exist_ok=True)
    (out / "batches").mkdir(parents=True, exist_ok=True)
    width = len(str(truth.T - 1))
    for t in range(truth.T):
        np.savetxt(
            out / "truth" / f"point_{t:0{width}d}.csv", truth.bases[t], delimiter=",",
            fmt="%.17g", header=",".join(f"y{j}" for j in range(truth.d)), comments="",
        )
        np.savetxt(
            out / "batches" / f"batch_{t:0{width}d}.csv", data.data[t], delimiter=",",
            fmt="%.17g", header=",".join(f"x{j}" for j in range(data.B)), comments="",
        )
    if cfg.scenario_kind == "array":
        paths = sc.emitter_random_walk(cfg.scenario)
        cols = [np.arange(truth.T)]
        header = ["batch_index"]
        for i, p in enumerate(paths):
            cols += [p.azimuth, p.elevation]
            header += [f"azimuth_{i}", f"elevation_{i}"]
        with open(out / "emitters.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in zip(*cols):
                w.writerow([int(row[0]), *(_fmt(v) for v in row[1:])])
    (out / "config_echo.yaml").write_text(dumps_config(cfg))
    return truth, data


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="grasstrack", description=__doc__.splitlines()[0] or None)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in [
        ("simulate", "generate a scenario and export it as CSV"),
        ("track", "run every tracker and write errors/timing"),
        ("bench", "time RLS descent loops from a shared initialization"),
    ]:
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True, help="YAML run configuration")
        p.add_argument("--out", help="output directory (overrides output_dir)")
        p.add_argument("--seed", type=int, help="unsigned 64-bit seed (overrides seed)")
        p.add_argument("--edge-margin", type=int, help="batches excluded per side from interior means")
        p.add_argument("--parallel", action="store_true", help="parallel RLS gradient evaluation")
        if name == "bench":
            p.add_argument("--repeats", type=int, help="timing repeats; the minimum is reported")
    return parser


def _print_track(report: RunReport):
    means = report.interior_means()
    width = max(len(k) for k in means)
    print(f"{'tracker':<{width}}  interior-mean error   seconds")
    for k, r in report.results.items():
        print(f"{k:<{width}}  {means[k]:18.6f}  {r.seconds:8.3f}")
    print(f"noise floor (interior mean): {interior_mean(report.noise_floor, report.config.edge_margin):.6f}")


def _print_bench(table: dict):
    width = max(len(k) for k in table["seconds"])
    print(f"{'tracker':<{width}}  seconds   speedup vs {table['reference']}")
    for k, s in table["seconds"].items():
        print(f"{k:<{width}}  {s:7.3f}   {table['speedup'][k]:.2f}x")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer", field="--seed")
        cfg = load_config(args.config).with_overrides(
            seed=args.seed,
            output_dir=args.out,
            edge_margin=args.edge_margin,
            workers=default_workers() if args.parallel else None,
        )
        if args.command == "simulate":
            simulate(cfg)
            print(f"scenario written to {cfg.output_dir}")
        elif args.command == "track":
            _print_track(run(cfg))
        else:
            if args.repeats is not None and args.repeats < 1:
                raise ConfigError("repeats must be >= 1", field="--repeats")
            _print_bench(bench(cfg, args.repeats))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GrassmannError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return 0


if __name__ == "__main__":
    sys.exit(main())
