import numpy as np
import pytest

from grasstrack import manifold as mf
from grasstrack.objectives import BatchSet, Trajectory


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def rand_point(rng, n, d):
    return mf.orthonormalize_arrays(rng.standard_normal((n, d)))


def rand_tangent(rng, Y, norm=None):
    H = mf.tangent_project_arrays(Y, rng.standard_normal(Y.shape))
    if norm is not None:
        H *= norm / np.linalg.norm(H)
    return H


def rand_trajectory(rng, T, n, d, step=0.3):
    """Random walk on G(n, d) with geodesic steps of norm ``step``."""
    Y = [rand_point(rng, n, d)]
    for _ in range(T - 1):
        Y.append(mf.exp_arrays(Y[-1], rand_tangent(rng, Y[-1], step)))
    return Trajectory(np.stack(Y))


def rand_batches(rng, T, n, B):
    return BatchSet(rng.standard_normal((T, n, B)))


def qr_retract(Y, H):
    """Retraction used by the finite-difference oracle (independent of exp_map)."""
    Q, R = np.linalg.qr(Y + H)
    return Q


def fd_directional(f, bases, t, H, h=1e-6):
    """Central difference of f(trajectory) moving only point t along H."""
    plus = np.array(bases)
    minus = np.array(bases)
    plus[t] = qr_retract(bases[t], h * H)
    minus[t] = qr_retract(bases[t], -h * H)
    return (f(plus) - f(minus)) / (2 * h)


def fd_relative_error(f, grad_at, bases, t, rng, directions=20, h=1e-6):
    """max_k |fd_k - <g, H_k>| / max_k |<g, H_k>| over random tangent directions."""
    g = grad_at(bases, t)
    fd, an = [], []
    for _ in range(directions):
        H = rand_tangent(rng, bases[t], 1.0)
        fd.append(fd_directional(f, bases, t, H, h))
        an.append(np.sum(g * H))
    fd, an = np.array(fd), np.array(an)
    return np.max(np.abs(fd - an)) / np.max(np.abs(an))


# acceptance summary -------------------------------------------------------

ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_log():
    def record(number, title, ok, detail=""):
        line = f"[criterion {number}] {'PASS' if ok else 'FAIL'}  {title}  {detail}".rstrip()
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
