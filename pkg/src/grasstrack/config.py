"""Run configuration: YAML file -> validated dataclasses.

Schema (unknown keys are rejected)::

    seed: 0                  # drives scenario and noise generation
    output_dir: runs/fig1
    edge_margin: 5           # batches excluded per side from interior means
    scenario:
      kind: geodesic         # or: array
      ...                    # fields of GeodesicScenarioConfig / ArrayScenarioConfig
    trackers:
      - type: windowed-svd          # window_batches
      - type: single-geodesic       # endpoint_window
      - type: rls-pos-geodesic      # learning_rate, iterations, lam, init_window, retraction
      - type: rls-pos-chordal
      - type: rls-vel-chordal
        name: vel                   # optional label, defaults to the type
    bench:
      repeats: 3
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .errors import ConfigError
from .objectives import RegularizerKind
from .optimizer import DescentConfig
from .scenarios import ArrayScenarioConfig, GeodesicScenarioConfig

RLS_KINDS = {
    "rls-pos-geodesic": RegularizerKind.POSITION_GEODESIC,
    "rls-pos-chordal": RegularizerKind.POSITION_CHORDAL,
    "rls-vel-chordal": RegularizerKind.VELOCITY_CHORDAL,
}
TRACKER_TYPES = ("windowed-svd", "single-geodesic", *RLS_KINDS)

_TRACKER_FIELDS = {
    "windowed-svd": {"window_batches": int},
    "single-geodesic": {"endpoint_window": int},
}
_RLS_FIELDS = {
    "learning_rate": float,
    "iterations": int,
    "lam": float,
    "init_window": int,
    "retraction": str,
}


@dataclass(frozen=True)
class TrackerSpec:
    name: str
    type: str
    window_batches: int = 2
    endpoint_window: int = 2
    init_window: int = 2
    descent: DescentConfig | None = None

    @property
    def is_rls(self) -> bool:
        return self.type in RLS_KINDS


@dataclass(frozen=True)
class RunConfig:
    scenario: GeodesicScenarioConfig | ArrayScenarioConfig
    trackers: tuple[TrackerSpec, ...]
    output_dir: str = "runs/out"
    seed: int = 0
    edge_margin: int = 5
    bench_repeats: int = 3
    workers: int = 1

    @property
    def scenario_kind(self) -> str:
        return "array" if isinstance(self.scenario, ArrayScenarioConfig) else "geodesic"

    def with_overrides(self, seed=None, output_dir=None, edge_margin=None, workers=None) -> RunConfig:
        cfg = self
        if seed is not None:
            cfg = dataclasses.replace(cfg, seed=seed, scenario=dataclasses.replace(cfg.scenario, seed=seed))
        if output_dir is not None:
            cfg = dataclasses.replace(cfg, output_dir=str(output_dir))
        if edge_margin is not None:
            if edge_margin < 0:
                raise ConfigError("edge margin must be >= 0", field="edge_margin")
            cfg = dataclasses.replace(cfg, edge_margin=edge_margin)
        if workers is not None:
            trackers = tuple(
                dataclasses.replace(t, descent=dataclasses.replace(t.descent, workers=workers))
                if t.descent is not None
                else t
                for t in cfg.trackers
            )
            cfg = dataclasses.replace(cfg, workers=workers, trackers=trackers)
        return cfg

    def to_dict(self) -> dict[str, Any]:
        """Plain-data form that ``parse_config`` accepts back."""
        scen = dataclasses.asdict(self.scenario)
        scen.pop("seed")
        trackers = []
        for t in self.trackers:
            item = {"name": t.name, "type": t.type}
            if t.type == "windowed-svd":
                item["window_batches"] = t.window_batches
            elif t.type == "single-geodesic":
                item["endpoint_window"] = t.endpoint_window
            else:
                item.update(
                    learning_rate=t.descent.learning_rate,
                    iterations=t.descent.iterations,
                    lam=t.descent.lam,
                    init_window=t.init_window,
                    retraction=t.descent.retraction,
                )
            trackers.append(item)
        return {
            "seed": self.seed,
            "output_dir": self.output_dir,
            "edge_margin": self.edge_margin,
            "scenario": {"kind": self.scenario_kind, **scen},
            "trackers": trackers,
            "bench": {"repeats": self.bench_repeats},
        }


# ---------------------------------------------------------------------------


def _key_lines(node, prefix="", out=None) -> dict[str, int]:
    """Dotted path -> 1-based line of every key in a composed YAML tree."""
    if out is None:
        out = {}
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            path = f"{prefix}.{k.value}" if prefix else str(k.value)
            out[path] = k.start_mark.line + 1
            _key_lines(v, path, out)
    elif isinstance(node, yaml.SequenceNode):
        for i, v in enumerate(node.value):
            path = f"{prefix}[{i}]"
            out[path] = v.start_mark.line + 1
            _key_lines(v, path, out)
    return out


class _Reader:
    def __init__(self, lines: dict[str, int]):
        self.lines = lines

    def fail(self, msg: str, path: str):
        raise ConfigError(msg, field=path, line=self.lines.get(path))

    def mapping(self, value, path: str) -> dict:
        if not isinstance(value, dict):
            self.fail("expected a mapping", path)
        return value

    def check_keys(self, d: dict, allowed, path: str):
        for k in d:
            if k not in allowed:
                p = f"{path}.{k}" if path else str(k)
                self.fail(f"unknown key '{k}' (allowed: {', '.join(sorted(allowed))})", p)

    def coerce(self, value, typ, path: str):
        # PyYAML reads '1e-5' as a string, so numeric strings are accepted
        try:
            if typ is int:
                if isinstance(value, bool) or float(value) != int(float(value)):
                    raise ValueError
                return int(float(value))
            if typ is float:
                if isinstance(value, bool):
                    raise ValueError
                return float(value)
            if typ is str:
                if not isinstance(value, str):
                    raise ValueError
                return value
        except (TypeError, ValueError):
            self.fail(f"expected {typ.__name__}, got {value!r}", path)
        raise AssertionError(typ)


def _dataclass_fields(cls) -> dict[str, type]:
    hints = {"int": int, "float": float}
    return {f.name: hints[f.type] for f in dataclasses.fields(cls) if f.name != "seed"}


def _parse_scenario(r: _Reader, raw, seed: int):
    raw = r.mapping(raw, "scenario")
    kind = raw.get("kind", "geodesic")
    classes = {"geodesic": GeodesicScenarioConfig, "array": ArrayScenarioConfig}
    if kind not in classes:
        r.fail(f"scenario kind must be one of {sorted(classes)}, got {kind!r}", "scenario.kind")
    cls = classes[kind]
    fields = _dataclass_fields(cls)
    r.check_keys(raw, {"kind", *fields}, "scenario")
    kwargs = {k: r.coerce(v, fields[k], f"scenario.{k}") for k, v in raw.items() if k != "kind"}
    for k in ("T", "B", "n", "d", "grid", "num_emitters"):
        if k in kwargs and kwargs[k] < 1:
            r.fail(f"{k} must be >= 1", f"scenario.{k}")
    if kwargs.get("sigma", 0.0) < 0:
        r.fail("sigma must be >= 0", "scenario.sigma")
    cfg = cls(seed=seed, **kwargs)
    if kind == "geodesic" and not 1 <= cfg.d < cfg.n:
        r.fail(f"need 1 <= d < n, got n={cfg.n}, d={cfg.d}", "scenario.d")
    return cfg


def _parse_tracker(r: _Reader, raw, path: str) -> TrackerSpec:
    raw = r.mapping(raw, path)
    typ = raw.get("type")
    if typ not in TRACKER_TYPES:
        r.fail(f"tracker type must be one of {list(TRACKER_TYPES)}, got {typ!r}", f"{path}.type")
    fields = _RLS_FIELDS if typ in RLS_KINDS else _TRACKER_FIELDS[typ]
    r.check_keys(raw, {"name", "type", *fields}, path)
    name = r.coerce(raw.get("name", typ), str, f"{path}.name")
    vals = {k: r.coerce(v, fields[k], f"{path}.{k}") for k, v in raw.items() if k in fields}
    for k in ("window_batches", "endpoint_window", "init_window", "iterations"):
        if k in vals and vals[k] < 1:
            r.fail(f"{k} must be >= 1", f"{path}.{k}")
    if typ not in RLS_KINDS:
        return TrackerSpec(name=name, type=typ, **vals)
    init_window = vals.pop("init_window", 2)
    try:
        descent = DescentConfig(kind=RLS_KINDS[typ], **vals)
    except ValueError as exc:
        r.fail(str(exc), path)
    return TrackerSpec(name=name, type=typ, init_window=init_window, descent=descent)


def parse_config(raw: Any, lines: dict[str, int] | None = None) -> RunConfig:
    r = _Reader(lines or {})
    raw = r.mapping(raw, "")
    r.check_keys(raw, {"seed", "output_dir", "edge_margin", "scenario", "trackers", "bench"}, "")
    seed = r.coerce(raw.get("seed", 0), int, "seed")
    if not 0 <= seed < 2**64:
        r.fail("seed must be an unsigned 64-bit integer", "seed")
    edge_margin = r.coerce(raw.get("edge_margin", 5), int, "edge_margin")
    if edge_margin < 0:
        r.fail("edge_margin must be >= 0", "edge_margin")
    output_dir = r.coerce(raw.get("output_dir", "runs/out"), str, "output_dir")
    if "scenario" not in raw:
        r.fail("missing required section", "scenario")
    scenario = _parse_scenario(r, raw["scenario"], seed)

    trackers_raw = raw.get("trackers")
    if not isinstance(trackers_raw, list) or not trackers_raw:
        r.fail("at least one tracker is required", "trackers")
    trackers = tuple(_parse_tracker(r, t, f"trackers[{i}]") for i, t in enumerate(trackers_raw))
    names = [t.name for t in trackers]
    for i, nm in enumerate(names):
        if nm in names[:i]:
            r.fail(f"duplicate tracker name {nm!r}", f"trackers[{i}].name")
    for i, t in enumerate(trackers):
        if t.descent is not None and t.init_window > scenario.T:
            r.fail("init_window exceeds the number of batches", f"trackers[{i}].init_window")
        if t.type == "windowed-svd" and t.window_batches > scenario.T:
            r.fail("window_batches exceeds the number of batches", f"trackers[{i}].window_batches")

    bench = r.mapping(raw.get("bench", {}), "bench")
    r.check_keys(bench, {"repeats"}, "bench")
    repeats = r.coerce(bench.get("repeats", 3), int, "bench.repeats")
    if repeats < 1:
        r.fail("repeats must be >= 1", "bench.repeats")

    return RunConfig(
        scenario=scenario,
        trackers=trackers,
        output_dir=output_dir,
        seed=seed,
        edge_margin=edge_margin,
        bench_repeats=repeats,
    )


def loads_config(text: str) -> RunConfig:
    try:
        node = yaml.compose(text)
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"invalid YAML: {exc}", line=mark.line + 1 if mark else None) from None
    return parse_config(raw, _key_lines(node) if node is not None else {})


def load_config(path: str | Path) -> RunConfig:
    return loads_config(Path(path).read_text())


def dumps_config(cfg: RunConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=True)
