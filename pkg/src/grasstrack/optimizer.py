"""Simultaneous Riemannian gradient descent over a whole trajectory.

Every iteration evaluates all T gradients against the same snapshot of the
trajectory and only then moves every point along its own geodesic:

    Y_t <- exp_{Y_t}(-lr * grad_t)
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import manifold as mf
from . import objectives as obj
from .errors import DimensionMismatch, HistoryNotRecorded, UnsupportedGradient
from .objectives import BatchSet, RegularizerKind, Trajectory

THREADS_ENV = "GRASSTRACK_THREADS"


@dataclass(frozen=True)
class DescentConfig:
    learning_rate: float = 1e-5
    iterations: int = 100
    lam: float = 1000.0
    kind: RegularizerKind = RegularizerKind.POSITION_CHORDAL
    record_history: bool = False
    # "exp" is the exact update; "qr" is a cheaper retraction kept for benchmarks
    retraction: str = "exp"
    # >1 splits the per-iteration gradients over a thread pool
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "kind", RegularizerKind(self.kind))
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if int(self.iterations) != self.iterations or self.iterations < 1:
            raise ValueError(f"iterations must be a positive integer, got {self.iterations}")
        if not self.lam >= 0:
            raise ValueError(f"lam must be >= 0, got {self.lam}")
        if self.retraction not in ("exp", "qr"):
            raise ValueError(f"retraction must be 'exp' or 'qr', got {self.retraction!r}")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")


@dataclass
class DescentReport:
    trajectory: Trajectory
    objective: list[float] | None
    grad_norm: list[float]
    seconds: float
    config: DescentConfig = field(repr=False)


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "")))
    except ValueError:
        return os.cpu_count() or 1


def _chunks(T: int, reach: int, workers: int):
    """Index ranges [lo, hi) plus the padded slice each gradient chunk needs."""
    bounds = np.linspace(0, T, min(workers, T) + 1).astype(int)
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        if hi > lo:
            yield lo, hi, max(0, lo - reach), min(T, hi + reach)


def _parallel_gradients(Y, X, cfg: DescentConfig, pool: ThreadPoolExecutor) -> np.ndarray:
    T = Y.shape[0]
    reach = obj._REACH[cfg.kind]
    G = np.empty_like(Y)

    def work(lo, hi, plo, phi):
        # padding by the stencil reach gives [lo, hi) exactly its full set of terms
        g_reg = obj.regularizer_gradient_arrays(Y[plo:phi], cfg.kind) if cfg.lam else 0.0
        g_data = obj.grad_batch_arrays(Y[lo:hi], X[lo:hi])
        reg = g_reg[lo - plo : hi - plo] if cfg.lam else 0.0
        G[lo:hi] = mf.tangent_project_arrays(Y[lo:hi], g_data) + cfg.lam * reg

    list(pool.map(lambda c: work(*c), _chunks(T, reach, cfg.workers)))
    return G


def _retract(Y: np.ndarray, step: np.ndarray, how: str) -> np.ndarray:
    if how == "exp":
        return mf.exp_arrays(Y, step)
    return np.linalg.qr(Y + step)[0]


def rls_descend(init: Trajectory, data: BatchSet, cfg: DescentConfig) -> DescentReport:
    """Run exactly ``cfg.iterations`` simultaneous descent steps from ``init``."""
    if init.T != data.T or init.n != data.n:
        raise DimensionMismatch(
            f"initial trajectory {init.bases.shape} does not fit data {data.data.shape}"
        )
    if not cfg.kind.has_gradient:
        raise UnsupportedGradient(f"regularizer '{cfg.kind.value}' supports evaluation only")

    Y = np.array(init.bases)
    X = data.data
    history = [] if cfg.record_history else None
    grad_norm = []
    elapsed = 0.0
    pool = ThreadPoolExecutor(cfg.workers) if cfg.workers > 1 else None
    try:
        for _ in range(cfg.iterations):
            tic = time.perf_counter()
            if pool is None:
                G = obj.gradient_arrays(Y, X, cfg.lam, cfg.kind)
            else:
                G = _parallel_gradients(Y, X, cfg, pool)
            Y = _retract(Y, -cfg.learning_rate * G, cfg.retraction)
            elapsed += time.perf_counter() - tic

            grad_norm.append(float(np.max(np.linalg.norm(G, axis=(-2, -1)))))
            if history is not None:
                history.append(obj.objective_arrays(Y, X, cfg.lam, cfg.kind))
    finally:
        if pool is not None:
            pool.shutdown()

    return DescentReport(
        trajectory=Trajectory(Y),
        objective=history,
        grad_norm=grad_norm,
        seconds=elapsed,
        config=cfg,
    )


def objective_trace(report: DescentReport) -> list[float]:
    """Total objective after each iteration."""
    if report.objective is None:
        raise HistoryNotRecorded("run the descent with record_history=True")
    return list(report.objective)
