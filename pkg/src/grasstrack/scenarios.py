"""Synthetic ground truth and noisy batches for the two tracking experiments.

* ``geodesic``: a random constant-speed geodesic on G(n, d).
* ``array``: narrowband emitters drifting in azimuth/elevation in front of a
  planar, half-wavelength spaced antenna grid. The complex steering subspace
  is realified by putting real and imaginary parts side by side, so 5
  emitters give a 10-dimensional real subspace of R^64.

Units are wavelength-normalized: receiver positions are in wavelengths and
wavevectors have magnitude 2*pi.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import manifold as mf
from .errors import RankDeficient
from .objectives import BatchSet, Trajectory


def _streams(seed: int, k: int) -> list[np.random.Generator]:
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(k)]


@dataclass(frozen=True)
class GeodesicScenarioConfig:
    n: int = 64
    d: int = 10
    T: int = 100
    tangent_norm: float = 1e-2
    sigma: float = 1e-2
    B: int = 10
    seed: int = 0


@dataclass(frozen=True)
class ArrayScenarioConfig:
    grid: int = 8  # elements per side
    spacing: float = 0.5  # wavelengths
    num_emitters: int = 5
    T: int = 100
    B: int = 10
    sigma: float = 1e-2
    azimuth_step: float = 5e-3  # random-walk std per batch, radians
    elevation_step: float = 5e-3
    azimuth_range: float = np.pi / 3  # initial azimuth ~ U(-range, range)
    elevation_range: float = np.pi / 6
    elevation_limit: float = 1.2  # reflect the elevation walk at +-limit
    seed: int = 0

    @property
    def n(self) -> int:
        return self.grid * self.grid

    @property
    def d(self) -> int:
        return 2 * self.num_emitters


@dataclass(frozen=True)
class EmitterPath:
    azimuth: np.ndarray
    elevation: np.ndarray


def random_geodesic_trajectory(cfg: GeodesicScenarioConfig) -> Trajectory:
    """Y_t = exp_{Y_0}(t H_0) for t = 0..T-1 with ||H_0||_F = tangent_norm."""
    if cfg.tangent_norm * (cfg.T - 1) >= np.pi / 2:
        warnings.warn(
            "tangent_norm * (T - 1) >= pi/2: the far end of the geodesic leaves the "
            "injectivity radius of its start",
            stacklevel=2,
        )
    rng, _ = _streams(cfg.seed, 2)
    Y0 = mf.orthonormalize_arrays(rng.standard_normal((cfg.n, cfg.d)))
    H = mf.tangent_project_arrays(Y0, rng.standard_normal((cfg.n, cfg.d)))
    H *= cfg.tangent_norm / np.linalg.norm(H)
    # one SVD of H serves every point on the geodesic
    U, s, Vt = np.linalg.svd(H, full_matrices=False)
    ts = np.arange(cfg.T, dtype=float)[:, None, None]
    YV = Y0 @ Vt.T
    bases = (YV * np.cos(ts * s) + U * np.sin(ts * s)) @ Vt
    return Trajectory(mf.reorthonormalize_arrays(bases))


def synthesize_batches(truth: Trajectory, B: int, sigma: float, seed: int) -> BatchSet:
    """X_t = Y_t A_t + sigma N_t with standard normal A_t (d x B) and N_t (n x B)."""
    if B < 1 or sigma < 0:
        raise ValueError(f"need B >= 1 and sigma >= 0, got B={B}, sigma={sigma}")
    _, rng = _streams(seed, 2)
    T, n, d = truth.bases.shape
    coef = rng.standard_normal((T, d, B))
    noise = rng.standard_normal((T, n, B))
    return BatchSet(truth.bases @ coef + sigma * noise)


def emitter_random_walk(cfg: ArrayScenarioConfig) -> list[EmitterPath]:
    rng = _streams(cfg.seed, 3)[2]
    paths = []
    for _ in range(cfg.num_emitters):
        az0 = rng.uniform(-cfg.azimuth_range, cfg.azimuth_range)
        el0 = rng.uniform(-cfg.elevation_range, cfg.elevation_range)
        daz = cfg.azimuth_step * rng.standard_normal(cfg.T - 1)
        delv = cfg.elevation_step * rng.standard_normal(cfg.T - 1)
        az = az0 + np.concatenate([[0.0], np.cumsum(daz)])
        el = np.empty(cfg.T)
        el[0] = el0
        lim = cfg.elevation_limit
        for t in range(1, cfg.T):
            e = el[t - 1] + delv[t - 1]
            # reflect until back inside [-lim, lim]
            while abs(e) > lim:
                e = np.sign(e) * 2 * lim - e
            el[t] = e
        az = (az + np.pi) % (2 * np.pi) - np.pi
        paths.append(EmitterPath(azimuth=az, elevation=el))
    return paths


def grid_positions(grid: int = 8, spacing: float = 0.5) -> np.ndarray:
    """(grid^2, 3) receiver coordinates in the xy-plane, centred at the origin."""
    ax = (np.arange(grid) - (grid - 1) / 2) * spacing
    x, y = np.meshgrid(ax, ax, indexing="ij")
    return np.column_stack([x.ravel(), y.ravel(), np.zeros(grid * grid)])


def wavevectors(azimuth, elevation) -> np.ndarray:
    """(k, 3) wavevectors of magnitude 2*pi; azimuth = elevation = 0 is broadside (+z)."""
    az = np.atleast_1d(np.asarray(azimuth, dtype=float))
    el = np.atleast_1d(np.asarray(elevation, dtype=float))
    u = np.column_stack([np.cos(el) * np.sin(az), np.sin(el), np.cos(el) * np.cos(az)])
    return 2 * np.pi * u


def steering_matrix(positions: np.ndarray, wavevecs: np.ndarray) -> np.ndarray:
    """Entry (i, j) = exp(1j * r_i . k_j)."""
    return np.exp(1j * (np.asarray(positions) @ np.asarray(wavevecs).T))


def realify(U: np.ndarray) -> np.ndarray:
    """[Re U, Im U]: real n x 2k matrix with the real span of the complex columns."""
    return np.concatenate([U.real, U.imag], axis=-1)


def array_truth_trajectory(cfg: ArrayScenarioConfig, paths: list[EmitterPath] | None = None) -> Trajectory:
    if paths is None:
        paths = emitter_random_walk(cfg)
    pos = grid_positions(cfg.grid, cfg.spacing)
    bases = np.empty((cfg.T, cfg.n, cfg.d))
    for t in range(cfg.T):
        k = wavevectors([p.azimuth[t] for p in paths], [p.elevation[t] for p in paths])
        M = realify(steering_matrix(pos, k))
        try:
            bases[t] = mf.orthonormalize_arrays(M)
        except RankDeficient as exc:
            raise RankDeficient(f"steering subspace loses rank at batch {t}: {exc}") from None
    return Trajectory(bases)


def geodesic_scenario(cfg: GeodesicScenarioConfig) -> tuple[Trajectory, BatchSet]:
    truth = random_geodesic_trajectory(cfg)
    return truth, synthesize_batches(truth, cfg.B, cfg.sigma, cfg.seed)


def array_scenario(cfg: ArrayScenarioConfig) -> tuple[Trajectory, BatchSet]:
    truth = array_truth_trajectory(cfg)
    return truth, synthesize_batches(truth, cfg.B, cfg.sigma, cfg.seed)
