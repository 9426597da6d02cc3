"""Grassmann manifold G(n, d): points, tangent vectors and closed-form geometry.

A point is stored as an n x d matrix with orthonormal columns (any basis of
the subspace will do). A tangent vector at Y is an n x d matrix H with
Y^T H = 0.

The ``*_arrays`` kernels work on stacks of shape (..., n, d) so that the
objectives and the optimizer can evaluate a whole trajectory with one LAPACK
call per operation; the typed functions are thin wrappers around them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    GrassmannError,
    NotAnchored,
    OutsideInjectivityRadius,
    RankDeficient,
)

ORTHO_TOL = 1e-10
TANGENT_TOL = 1e-10
# exp_map output is re-orthonormalized above this drift
REORTHO_TOL = 1e-12
RANK_RTOL = 1e-12
INJECTIVITY_TOL = 1e-10


def _mT(A: np.ndarray) -> np.ndarray:
    return np.swapaxes(A, -1, -2)


def _ortho_error(Y: np.ndarray) -> np.ndarray:
    d = Y.shape[-1]
    return np.linalg.norm(_mT(Y) @ Y - np.eye(d), axis=(-2, -1))


@dataclass(frozen=True, eq=False)
class GrassmannPoint:
    """Subspace in G(n, d) represented by an orthonormal basis."""

    basis: np.ndarray

    def __post_init__(self):
        b = np.array(self.basis, dtype=float)
        if b.ndim != 2:
            raise DimensionMismatch(f"basis must be a matrix, got shape {b.shape}")
        n, d = b.shape
        if not 1 <= d < n:
            raise DimensionMismatch(f"need 1 <= d < n, got n={n}, d={d}")
        err = float(_ortho_error(b))
        if err > ORTHO_TOL:
            raise GrassmannError(f"basis is not orthonormal (||Y^T Y - I||_F = {err:.3e})")
        b.setflags(write=False)
        object.__setattr__(self, "basis", b)

    @property
    def n(self) -> int:
        return self.basis.shape[0]

    @property
    def d(self) -> int:
        return self.basis.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.basis.shape

    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.T


@dataclass(frozen=True, eq=False)
class TangentVector:
    """Direction H at ``base`` with base^T H = 0."""

    direction: np.ndarray
    base: GrassmannPoint

    def __post_init__(self):
        h = np.array(self.direction, dtype=float)
        if h.shape != self.base.shape:
            raise DimensionMismatch(
                f"tangent shape {h.shape} does not match base shape {self.base.shape}"
            )
        # absolute tolerance for unit-scale vectors, relative for large gradients
        err = np.linalg.norm(self.base.basis.T @ h)
        if err > TANGENT_TOL * max(1.0, np.linalg.norm(h)):
            raise GrassmannError(f"direction is not tangent at base (||Y^T H||_F = {err:.3e})")
        h.setflags(write=False)
        object.__setattr__(self, "direction", h)

    def norm(self) -> float:
        return float(np.linalg.norm(self.direction))

    def __mul__(self, c: float) -> TangentVector:
        return TangentVector(c * self.direction, self.base)

    __rmul__ = __mul__

    def __neg__(self) -> TangentVector:
        return TangentVector(-self.direction, self.base)

    def __add__(self, other: TangentVector) -> TangentVector:
        _check_anchor(self.base, other)
        return TangentVector(self.direction + other.direction, self.base)


@dataclass(frozen=True)
class PrincipalAngles:
    angles: np.ndarray

    def __len__(self):
        return len(self.angles)


def _check_same_shape(Y: GrassmannPoint, Z: GrassmannPoint):
    if Y.shape != Z.shape:
        raise DimensionMismatch(f"points live on different Grassmannians: {Y.shape} vs {Z.shape}")


def _check_anchor(Y: GrassmannPoint, H: TangentVector):
    if H.base is Y:
        return
    if H.base.shape != Y.shape:
        raise DimensionMismatch(f"tangent shape {H.base.shape} does not match point {Y.shape}")
    if not np.array_equal(H.base.basis, Y.basis):
        raise NotAnchored("tangent vector is anchored at a different point")


# ---------------------------------------------------------------------------
# stacked array kernels


def orthonormalize_arrays(M: np.ndarray) -> np.ndarray:
    """Orthogonal polar factor U V^T of each M = U S V^T.

    The polar factor is the orthonormal basis closest to M, so already
    orthonormal (or orthogonal-column) inputs come back unchanged up to
    scaling of the columns.
    """
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    small = s[..., -1] <= RANK_RTOL * s[..., 0]
    if np.any(small):
        raise RankDeficient(
            f"matrix is numerically rank deficient (sigma_min/sigma_max = "
            f"{float(np.min(s[..., -1] / np.maximum(s[..., 0], np.finfo(float).tiny))):.3e})"
        )
    return U @ Vt


def reorthonormalize_arrays(Y: np.ndarray, tol: float = REORTHO_TOL) -> np.ndarray:
    drift = _ortho_error(Y)
    if np.any(drift > tol):
        return orthonormalize_arrays(Y)
    return Y


def tangent_project_arrays(Y: np.ndarray, G: np.ndarray) -> np.ndarray:
    return G - Y @ (_mT(Y) @ G)


def principal_angles_arrays(Y: np.ndarray, Z: np.ndarray) -> np.ndarray:
    """Ascending principal angles, shape (..., d)."""
    s = np.linalg.svd(_mT(Y) @ Z, compute_uv=False)
    # singular values come sorted descending, so the angles ascend
    return np.arccos(np.clip(s, 0.0, 1.0))


def geodesic_distance_arrays(Y: np.ndarray, Z: np.ndarray) -> np.ndarray:
    return np.linalg.norm(principal_angles_arrays(Y, Z), axis=-1)


def chordal_distance_arrays(Y: np.ndarray, Z: np.ndarray) -> np.ndarray:
    """||sin theta||_2 from the projector difference (no SVD)."""
    D = Z @ _mT(Z) - Y @ _mT(Y)
    return np.linalg.norm(D, axis=(-2, -1)) / np.sqrt(2.0)


def exp_arrays(Y: np.ndarray, H: np.ndarray) -> np.ndarray:
    U, s, Vt = np.linalg.svd(H, full_matrices=False)
    V = _mT(Vt)
    Z = (Y @ V) * np.cos(s)[..., None, :] @ Vt + (U * np.sin(s)[..., None, :]) @ Vt
    return reorthonormalize_arrays(Z)


def log_arrays(Y: np.ndarray, Z: np.ndarray) -> np.ndarray:
    """Closed-form log map: tangent at Y pointing to span(Z).

    With M = Y^T Z, L = (I - Y Y^T) Z M^{-1} = U S V^T gives
    H = U arctan(S) V^T.
    """
    M = _mT(Y) @ Z
    P, m, Qt = np.linalg.svd(M)
    bad = m[..., -1] <= INJECTIVITY_TOL
    if np.any(bad):
        index = None
        if bad.ndim:
            index = int(np.flatnonzero(bad.ravel())[0])
        raise OutsideInjectivityRadius(
            "subspaces are outside the injectivity radius (Y^T Z is singular)", index=index
        )
    # M^{-1} = Q diag(1/m) P^T
    Minv = (_mT(Qt) / m[..., None, :]) @ _mT(P)
    L = (Z - Y @ M) @ Minv
    U, s, Vt = np.linalg.svd(L, full_matrices=False)
    return (U * np.arctan(s)[..., None, :]) @ Vt


def geodesic_step_arrays(Y: np.ndarray, H: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Follow H for one unit of time and transport H along its own geodesic."""
    U, s, Vt = np.linalg.svd(H, full_matrices=False)
    YV = Y @ _mT(Vt)
    c = np.cos(s)[..., None, :]
    sn = np.sin(s)[..., None, :]
    Z = (YV * c + U * sn) @ Vt
    G = ((-YV * sn + U * c) * s[..., None, :]) @ Vt
    if np.any(_ortho_error(Z) > REORTHO_TOL):
        # Z -> Z R with R = (Z^T Z)^{-1/2}; the tangent rides along with the basis
        w, Q = np.linalg.eigh(_mT(Z) @ Z)
        R = (Q / np.sqrt(w)[..., None, :]) @ _mT(Q)
        Z = Z @ R
        G = tangent_project_arrays(Z, G @ R)
    return Z, G


# ---------------------------------------------------------------------------
# typed API


def orthonormalize(M) -> GrassmannPoint:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise DimensionMismatch(f"expected a matrix, got shape {M.shape}")
    return GrassmannPoint(orthonormalize_arrays(M))


def principal_angles(Y: GrassmannPoint, Z: GrassmannPoint) -> PrincipalAngles:
    _check_same_shape(Y, Z)
    return PrincipalAngles(principal_angles_arrays(Y.basis, Z.basis))


def geodesic_distance(Y: GrassmannPoint, Z: GrassmannPoint) -> float:
    _check_same_shape(Y, Z)
    return float(geodesic_distance_arrays(Y.basis, Z.basis))


def chordal_distance(Y: GrassmannPoint, Z: GrassmannPoint) -> float:
    _check_same_shape(Y, Z)
    return float(chordal_distance_arrays(Y.basis, Z.basis))


def tangent_project(Y: GrassmannPoint, G) -> TangentVector:
    G = np.asarray(G, dtype=float)
    if G.shape != Y.shape:
        raise DimensionMismatch(f"G has shape {G.shape}, expected {Y.shape}")
    return TangentVector(tangent_project_arrays(Y.basis, G), Y)


def exp_map(Y: GrassmannPoint, H: TangentVector) -> GrassmannPoint:
    _check_anchor(Y, H)
    return GrassmannPoint(exp_arrays(Y.basis, H.direction))


def log_map(Y: GrassmannPoint, Z: GrassmannPoint) -> TangentVector:
    _check_same_shape(Y, Z)
    return TangentVector(tangent_project_arrays(Y.basis, log_arrays(Y.basis, Z.basis)), Y)


def projector_difference(Y: GrassmannPoint, Z: GrassmannPoint) -> np.ndarray:
    """Z Z^T - Y Y^T, a first-order stand-in for log_Y(Z) Y^T + Y log_Y(Z)^T."""
    _check_same_shape(Y, Z)
    return Z.projector() - Y.projector()


def geodesic_step(Y: GrassmannPoint, H: TangentVector) -> tuple[GrassmannPoint, TangentVector]:
    """Constant-velocity motion: (exp_Y(H), H transported to the new point)."""
    _check_anchor(Y, H)
    Z, G = geodesic_step_arrays(Y.basis, H.direction)
    Zp = GrassmannPoint(Z)
    return Zp, TangentVector(G, Zp)


def random_point(n: int, d: int, rng: np.random.Generator) -> GrassmannPoint:
    return orthonormalize(rng.standard_normal((n, d)))


def random_tangent(Y: GrassmannPoint, rng: np.random.Generator, norm: float | None = None) -> TangentVector:
    H = tangent_project_arrays(Y.basis, rng.standard_normal(Y.shape))
    if norm is not None:
        H = H * (norm / np.linalg.norm(H))
    return TangentVector(H, Y)
