"""Comparison trackers: windowed truncated SVD and an endpoint single-geodesic fit."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import manifold as mf
from .errors import RankDeficient
from .objectives import BatchSet, Trajectory


@dataclass(frozen=True)
class WindowSpec:
    window_batches: int = 2

    def __post_init__(self):
        if self.window_batches < 1:
            raise ValueError(f"window_batches must be >= 1, got {self.window_batches}")


def top_subspace(X: np.ndarray, d: int) -> np.ndarray:
    """Leading d left singular vectors of X."""
    if X.shape[1] < d:
        raise RankDeficient(f"{X.shape[1]} samples cannot determine a {d}-dimensional subspace")
    U, s, _ = np.linalg.svd(X, full_matrices=False)
    if s[d - 1] <= mf.RANK_RTOL * s[0]:
        raise RankDeficient(f"data has numerical rank below {d}")
    return U[:, :d]


def window_bounds(t: int, T: int, w: int) -> tuple[int, int]:
    """Window of w batches centred on t, shifted (not shrunk) at the ends."""
    lo = min(max(t - w // 2, 0), T - w)
    return lo, lo + w


def windowed_svd_track(data: BatchSet, d: int, spec: WindowSpec = WindowSpec()) -> Trajectory:
    T = data.T
    w = spec.window_batches
    if w > T:
        raise ValueError(f"window of {w} batches is longer than the {T} available")
    out = np.empty((T, data.n, d))
    cache = {}
    for t in range(T):
        lo, hi = window_bounds(t, T, w)
        if (lo, hi) not in cache:
            pooled = data.data[lo:hi].transpose(1, 0, 2).reshape(data.n, -1)
            cache[(lo, hi)] = top_subspace(pooled, d)
        out[t] = cache[(lo, hi)]
    return Trajectory(out)


def single_geodesic_fit(data: BatchSet, d: int, endpoint_window: int = 2) -> Trajectory:
    """Constant-speed geodesic through SVD estimates at both ends of the data.

    A is estimated from the first ``endpoint_window`` batches, Z from the last;
    Y_t = exp_A((t / (T - 1)) log_A(Z)).
    """
    T = data.T
    if T < 2 * endpoint_window:
        raise ValueError(f"need T >= {2 * endpoint_window} batches, got {T}")
    pool = lambda X: X.transpose(1, 0, 2).reshape(data.n, -1)
    A = top_subspace(pool(data.data[:endpoint_window]), d)
    Z = top_subspace(pool(data.data[T - endpoint_window :]), d)
    H = mf.log_arrays(A, Z)
    U, s, Vt = np.linalg.svd(H, full_matrices=False)
    ts = (np.arange(T) / (T - 1))[:, None, None]
    bases = ((A @ Vt.T) * np.cos(ts * s) + U * np.sin(ts * s)) @ Vt
    return Trajectory(mf.reorthonormalize_arrays(bases))
