"""Regularized least-squares objective for subspace trajectories.

The data term for one batch is the projection residual ||X - Y Y^T X||_F^2.
The trajectory is regularized towards a dynamical model:

* position (static model): squared distance between neighbours, with the
  geodesic distance or the projector (chordal) form;
* velocity (constant-speed geodesic model): the chordal second difference of
  projectors, or its geodesic counterpart, which can only be evaluated.

All gradients are Riemannian, i.e. tangent-projected Euclidean gradients.
Near the ends of the trajectory only the regularizer terms that exist are
differentiated, so every gradient is the exact gradient of its objective.

Note the chordal position regularizer is sum ||P_{t+1} - P_t||_F^2, which is
*twice* the sum of squared chordal distances. A given lambda therefore
weighs the chordal position term about 2x as heavily as the geodesic one.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import manifold as mf
from .errors import (
    DimensionMismatch,
    GrassmannError,
    OutsideInjectivityRadius,
    TrajectoryTooShort,
    UnsupportedGradient,
)
from .manifold import GrassmannPoint, TangentVector


class RegularizerKind(str, enum.Enum):
    POSITION_GEODESIC = "pos-geodesic"
    POSITION_CHORDAL = "pos-chordal"
    VELOCITY_CHORDAL = "vel-chordal"
    VELOCITY_GEODESIC_EVAL_ONLY = "vel-geodesic"

    @property
    def has_gradient(self) -> bool:
        return self is not RegularizerKind.VELOCITY_GEODESIC_EVAL_ONLY


@dataclass(frozen=True, eq=False)
class Trajectory:
    """T points of G(n, d) stored as one (T, n, d) array."""

    bases: np.ndarray

    def __post_init__(self):
        b = np.array(self.bases, dtype=float)
        if b.ndim != 3:
            raise DimensionMismatch(f"trajectory bases must be (T, n, d), got {b.shape}")
        T, n, d = b.shape
        if T < 1 or not 1 <= d < n:
            raise DimensionMismatch(f"invalid trajectory shape {b.shape}")
        err = mf._ortho_error(b)
        if np.any(err > mf.ORTHO_TOL):
            t = int(np.argmax(err))
            raise GrassmannError(f"trajectory point {t} is not orthonormal (error {err[t]:.3e})")
        b.setflags(write=False)
        object.__setattr__(self, "bases", b)

    @classmethod
    def from_points(cls, points: Sequence[GrassmannPoint]) -> Trajectory:
        shapes = {p.shape for p in points}
        if len(shapes) != 1:
            raise DimensionMismatch(f"trajectory points have mixed shapes {sorted(shapes)}")
        return cls(np.stack([p.basis for p in points]))

    @property
    def T(self) -> int:
        return self.bases.shape[0]

    @property
    def n(self) -> int:
        return self.bases.shape[1]

    @property
    def d(self) -> int:
        return self.bases.shape[2]

    def __len__(self):
        return self.T

    def __getitem__(self, t: int) -> GrassmannPoint:
        return GrassmannPoint(self.bases[t])

    @property
    def points(self) -> list[GrassmannPoint]:
        return [self[t] for t in range(self.T)]


@dataclass(frozen=True, eq=False)
class BatchSet:
    """T data batches of B samples each, stored as a (T, n, B) array."""

    data: np.ndarray

    def __post_init__(self):
        x = np.array(self.data, dtype=float)
        if x.ndim != 3:
            raise DimensionMismatch(f"batches must be (T, n, B), got {x.shape}")
        x.setflags(write=False)
        object.__setattr__(self, "data", x)

    @classmethod
    def from_batches(cls, batches: Sequence[np.ndarray]) -> BatchSet:
        shapes = {np.shape(b) for b in batches}
        if len(shapes) != 1:
            raise DimensionMismatch(f"batches have mixed shapes {sorted(shapes)}")
        return cls(np.stack(batches))

    @property
    def T(self) -> int:
        return self.data.shape[0]

    @property
    def n(self) -> int:
        return self.data.shape[1]

    @property
    def B(self) -> int:
        return self.data.shape[2]

    def __len__(self):
        return self.T

    def __getitem__(self, t: int) -> np.ndarray:
        return self.data[t]

    @property
    def batches(self) -> list[np.ndarray]:
        return list(self.data)


def _check_fit(traj: Trajectory, data: BatchSet):
    if traj.T != data.T:
        raise DimensionMismatch(f"trajectory has {traj.T} points but there are {data.T} batches")
    if traj.n != data.n:
        raise DimensionMismatch(f"trajectory is in R^{traj.n} but data in R^{data.n}")


# ---------------------------------------------------------------------------
# data term


def batch_loss_arrays(Y: np.ndarray, X: np.ndarray) -> np.ndarray:
    R = X - Y @ (mf._mT(Y) @ X)
    return np.sum(R * R, axis=(-2, -1))


def grad_batch_arrays(Y: np.ndarray, X: np.ndarray) -> np.ndarray:
    # -2 (I - Y Y^T) X X^T Y, with the residual formed first
    R = X - Y @ (mf._mT(Y) @ X)
    return -2.0 * R @ (mf._mT(X) @ Y)


def _as_batch(Y: GrassmannPoint, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] != Y.n:
        raise DimensionMismatch(f"batch of shape {X.shape} does not match point in R^{Y.n}")
    return X


def batch_loss(Y: GrassmannPoint, X) -> float:
    return float(batch_loss_arrays(Y.basis, _as_batch(Y, X)))


def grad_batch(Y: GrassmannPoint, X) -> TangentVector:
    G = grad_batch_arrays(Y.basis, _as_batch(Y, X))
    return TangentVector(mf.tangent_project_arrays(Y.basis, G), Y)


# ---------------------------------------------------------------------------
# geodesic regularizers


def _pair_logs(A: np.ndarray, B: np.ndarray, offset: int = 0) -> np.ndarray:
    try:
        return mf.log_arrays(A, B)
    except OutsideInjectivityRadius as exc:
        idx = None if exc.index is None else exc.index + offset
        raise OutsideInjectivityRadius(
            f"consecutive points {idx} and {idx + 1} are outside the injectivity radius"
            if idx is not None
            else str(exc),
            index=idx,
        ) from None


def pos_reg_geodesic_arrays(Y: np.ndarray) -> float:
    # ||log||_F = ||theta||_2, but arctan keeps tiny angles that arccos rounds away
    if Y.shape[0] < 2:
        return 0.0
    L = _pair_logs(Y[:-1], Y[1:])
    return float(np.sum(L * L))


def grad_pos_geodesic_arrays(Y: np.ndarray) -> np.ndarray:
    G = np.zeros_like(Y)
    if Y.shape[0] < 2:
        return G
    fwd = _pair_logs(Y[:-1], Y[1:])  # log_{Y_t}(Y_{t+1})
    bwd = _pair_logs(Y[1:], Y[:-1])  # log_{Y_{t+1}}(Y_t)
    G[:-1] -= 2.0 * fwd
    G[1:] -= 2.0 * bwd
    return G


def vel_reg_geodesic_arrays(Y: np.ndarray) -> float:
    T = Y.shape[0]
    if T < 3:
        raise TrajectoryTooShort(f"velocity regularizer needs T >= 3, got {T}")
    ahead = _pair_logs(Y[1:-1], Y[2:], offset=1)
    behind = _pair_logs(Y[1:-1], Y[:-2], offset=1)
    D = ahead + behind
    return float(np.sum(D * D))


# ---------------------------------------------------------------------------
# chordal (projector) regularizers
#
# Both chordal regularizers have the form sum_s ||sum_a c_a P_{s+a}||_F^2 for a
# finite-difference stencil c. The Riemannian gradient at t is
# 4 (I - P_t) sum_u W[t, u] P_u Y_t, where W[t, u] collects c_a c_b over the
# terms containing both t and u.

FIRST_DIFFERENCE = (-1.0, 1.0)
SECOND_DIFFERENCE = (1.0, -2.0, 1.0)


def stencil_weights(T: int, stencil: Sequence[float]) -> np.ndarray:
    """W[t, r + k] = coefficient of P_{t+k} in the gradient at t, |k| <= r."""
    m = len(stencil)
    r = m - 1
    W = np.zeros((T, 2 * r + 1))
    for s in range(T - m + 1):
        for a in range(m):
            for b in range(m):
                W[s + a, r + b - a] += stencil[a] * stencil[b]
    return W


def _stencil_value(Y: np.ndarray, stencil: Sequence[float]) -> float:
    T = Y.shape[0]
    m = len(stencil)
    if T < m:
        return 0.0
    P = Y @ mf._mT(Y)
    D = sum(c * P[a : T - m + 1 + a] for a, c in enumerate(stencil))
    return float(np.sum(D * D))


def _stencil_gradient(Y: np.ndarray, stencil: Sequence[float]) -> np.ndarray:
    T = Y.shape[0]
    r = len(stencil) - 1
    W = stencil_weights(T, stencil)
    acc = np.zeros_like(Y)
    for k in range(-r, r + 1):
        if k == 0 or abs(k) >= T:
            continue
        lo, hi = max(0, -k), min(T, T - k)  # t with t + k in range
        w = W[lo:hi, r + k]
        Yt = Y[lo:hi]
        Yk = Y[lo + k : hi + k]
        acc[lo:hi] += w[:, None, None] * (Yk @ (mf._mT(Yk) @ Yt))
    return 4.0 * mf.tangent_project_arrays(Y, acc)


def pos_reg_chordal_arrays(Y: np.ndarray) -> float:
    return _stencil_value(Y, FIRST_DIFFERENCE)


def grad_pos_chordal_arrays(Y: np.ndarray) -> np.ndarray:
    return _stencil_gradient(Y, FIRST_DIFFERENCE)


def vel_reg_chordal_arrays(Y: np.ndarray) -> float:
    if Y.shape[0] < 3:
        raise TrajectoryTooShort(f"velocity regularizer needs T >= 3, got {Y.shape[0]}")
    return _stencil_value(Y, SECOND_DIFFERENCE)


def grad_vel_chordal_arrays(Y: np.ndarray) -> np.ndarray:
    if Y.shape[0] < 3:
        raise TrajectoryTooShort(f"velocity regularizer needs T >= 3, got {Y.shape[0]}")
    return _stencil_gradient(Y, SECOND_DIFFERENCE)


def vel_reg_chordal_terms(traj: Trajectory) -> np.ndarray:
    """Per-window values ||P_{t+2} - 2 P_{t+1} + P_t||_F^2, t = 0..T-3."""
    Y = traj.bases
    if traj.T < 3:
        raise TrajectoryTooShort(f"velocity regularizer needs T >= 3, got {traj.T}")
    P = Y @ mf._mT(Y)
    D = P[2:] - 2.0 * P[1:-1] + P[:-2]
    return np.sum(D * D, axis=(-2, -1))


# ---------------------------------------------------------------------------
# dispatch

_VALUES = {
    RegularizerKind.POSITION_GEODESIC: pos_reg_geodesic_arrays,
    RegularizerKind.POSITION_CHORDAL: pos_reg_chordal_arrays,
    RegularizerKind.VELOCITY_CHORDAL: vel_reg_chordal_arrays,
    RegularizerKind.VELOCITY_GEODESIC_EVAL_ONLY: vel_reg_geodesic_arrays,
}

_GRADIENTS = {
    RegularizerKind.POSITION_GEODESIC: grad_pos_geodesic_arrays,
    RegularizerKind.POSITION_CHORDAL: grad_pos_chordal_arrays,
    RegularizerKind.VELOCITY_CHORDAL: grad_vel_chordal_arrays,
}

# how far a gradient at t reaches along the trajectory
_REACH = {
    RegularizerKind.POSITION_GEODESIC: 1,
    RegularizerKind.POSITION_CHORDAL: 1,
    RegularizerKind.VELOCITY_CHORDAL: 2,
}


def regularizer_value_arrays(Y: np.ndarray, kind: RegularizerKind) -> float:
    return _VALUES[RegularizerKind(kind)](Y)


def regularizer_gradient_arrays(Y: np.ndarray, kind: RegularizerKind) -> np.ndarray:
    kind = RegularizerKind(kind)
    if not kind.has_gradient:
        raise UnsupportedGradient(f"regularizer '{kind.value}' supports evaluation only")
    return _GRADIENTS[kind](Y)


def objective_arrays(Y: np.ndarray, X: np.ndarray, lam: float, kind: RegularizerKind) -> float:
    data_term = float(np.sum(batch_loss_arrays(Y, X)))
    if lam == 0:
        return data_term
    return data_term + lam * regularizer_value_arrays(Y, kind)


def gradient_arrays(Y: np.ndarray, X: np.ndarray, lam: float, kind: RegularizerKind) -> np.ndarray:
    """Riemannian gradients of the total objective at every t, shape (T, n, d)."""
    kind = RegularizerKind(kind)
    if not kind.has_gradient:
        raise UnsupportedGradient(f"regularizer '{kind.value}' supports evaluation only")
    G = mf.tangent_project_arrays(Y, grad_batch_arrays(Y, X))
    if lam != 0:
        G += lam * regularizer_gradient_arrays(Y, kind)
    return G


def _local_gradient(traj: Trajectory, t: int, kind: RegularizerKind) -> np.ndarray:
    """Regularizer gradient at t from the neighbours it actually depends on."""
    T = traj.T
    if not 0 <= t < T:
        raise IndexError(f"index {t} outside trajectory of length {T}")
    reach = _REACH[kind]
    lo, hi = max(0, t - reach), min(T, t + reach + 1)
    try:
        G = regularizer_gradient_arrays(traj.bases[lo:hi], kind)
    except OutsideInjectivityRadius as exc:
        idx = None if exc.index is None else exc.index + lo
        raise OutsideInjectivityRadius(str(exc), index=idx) from None
    return G[t - lo]


def _tangent(traj: Trajectory, t: int, G: np.ndarray) -> TangentVector:
    Y = traj[t]
    return TangentVector(mf.tangent_project_arrays(Y.basis, G), Y)


# ---------------------------------------------------------------------------
# typed API


def pos_reg_geodesic(traj: Trajectory) -> float:
    return pos_reg_geodesic_arrays(traj.bases)


def grad_pos_geodesic(traj: Trajectory, t: int) -> TangentVector:
    return _tangent(traj, t, _local_gradient(traj, t, RegularizerKind.POSITION_GEODESIC))


def pos_reg_chordal(traj: Trajectory) -> float:
    return pos_reg_chordal_arrays(traj.bases)


def grad_pos_chordal(traj: Trajectory, t: int) -> TangentVector:
    return _tangent(traj, t, _local_gradient(traj, t, RegularizerKind.POSITION_CHORDAL))


def vel_reg_chordal(traj: Trajectory) -> float:
    return vel_reg_chordal_arrays(traj.bases)


def grad_vel_chordal(traj: Trajectory, t: int) -> TangentVector:
    if traj.T < 3:
        raise TrajectoryTooShort(f"velocity regularizer needs T >= 3, got {traj.T}")
    return _tangent(traj, t, _local_gradient(traj, t, RegularizerKind.VELOCITY_CHORDAL))


def vel_reg_geodesic_eval(traj: Trajectory) -> float:
    """Geodesic velocity regularizer, sum ||log_{Y_{t+1}}(Y_{t+2}) + log_{Y_{t+1}}(Y_t)||^2.

    No gradient is provided for this regularizer.
    """
    return vel_reg_geodesic_arrays(traj.bases)


def regularizer_value(traj: Trajectory, kind: RegularizerKind) -> float:
    return regularizer_value_arrays(traj.bases, kind)


def total_objective(traj: Trajectory, data: BatchSet, lam: float, kind: RegularizerKind) -> float:
    _check_fit(traj, data)
    if lam < 0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    return objective_arrays(traj.bases, data.data, lam, kind)


def total_gradient(
    traj: Trajectory, data: BatchSet, lam: float, kind: RegularizerKind, t: int
) -> TangentVector:
    _check_fit(traj, data)
    kind = RegularizerKind(kind)
    if not kind.has_gradient:
        raise UnsupportedGradient(f"regularizer '{kind.value}' supports evaluation only")
    G = grad_batch_arrays(traj.bases[t], data.data[t])
    if lam != 0:
        G = G + lam * _local_gradient(traj, t, kind)
    return _tangent(traj, t, G)
