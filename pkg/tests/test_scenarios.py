import dataclasses

import numpy as np
import pytest

from grasstrack import manifold as mf
from grasstrack import objectives as ob
from grasstrack import scenarios as sc
from grasstrack import baselines as bl
from grasstrack.errors import RankDeficient

GEO = sc.GeodesicScenarioConfig
ARR = sc.ArrayScenarioConfig


def test_geodesic_defaults():
    cfg = GEO()
    assert (cfg.n, cfg.d, cfg.tangent_norm, cfg.sigma, cfg.B) == (64, 10, 1e-2, 1e-2, 10)


def test_geodesic_zero_speed_is_constant():
    tr = sc.random_geodesic_trajectory(GEO(T=5, tangent_norm=0.0))
    assert np.max(np.abs(tr.bases - tr.bases[0])) == 0.0


def test_geodesic_steps_are_equal():
    cfg = GEO(n=16, d=4, T=20, tangent_norm=0.05, seed=3)
    tr = sc.random_geodesic_trajectory(cfg)
    steps = mf.geodesic_distance_arrays(tr.bases[1:], tr.bases[:-1])
    np.testing.assert_allclose(steps, 0.05, atol=1e-9)
    from_start = mf.geodesic_distance_arrays(tr.bases[0], tr.bases)
    np.testing.assert_allclose(from_start[1:], 0.05 * np.arange(1, 20), atol=1e-8)


def test_geodesic_truth_has_zero_velocity_penalty():
    tr = sc.random_geodesic_trajectory(GEO(T=30))
    assert ob.vel_reg_geodesic_eval(tr) <= 1e-16


def test_geodesic_warns_past_injectivity():
    with pytest.warns(UserWarning):
        sc.random_geodesic_trajectory(GEO(n=8, d=2, T=5, tangent_norm=1.0))


def test_generation_is_reproducible():
    a = sc.geodesic_scenario(GEO(T=10, seed=9))
    b = sc.geodesic_scenario(GEO(T=10, seed=9))
    assert a[0].bases.tobytes() == b[0].bases.tobytes()
    assert a[1].data.tobytes() == b[1].data.tobytes()
    c = sc.geodesic_scenario(GEO(T=10, seed=10))
    assert not np.array_equal(a[1].data, c[1].data)


def test_noiseless_batches_lie_in_truth():
    truth = sc.random_geodesic_trajectory(GEO(T=6))
    X = sc.synthesize_batches(truth, 12, 0.0, seed=1)
    losses = ob.batch_loss_arrays(truth.bases, X.data)
    assert np.max(losses) <= 1e-24
    for t in range(6):
        est = bl.top_subspace(X[t], 10)
        assert mf.chordal_distance_arrays(est, truth.bases[t]) <= 1e-8


@pytest.mark.filterwarnings("ignore:tangent_norm")
def test_residual_energy_matches_noise_level():
    cfg = GEO(T=200, seed=4)
    truth, X = sc.geodesic_scenario(cfg)
    per_sample = ob.batch_loss_arrays(truth.bases, X.data) / cfg.B
    expected = cfg.sigma**2 * (cfg.n - cfg.d)
    assert expected == pytest.approx(5.4e-3)
    assert np.mean(per_sample) == pytest.approx(expected, rel=0.2)


# --- array scenario ---------------------------------------------------------------


def test_array_dimensions():
    cfg = ARR()
    assert (cfg.n, cfg.d) == (64, 10)
    assert sc.grid_positions().shape == (64, 3)


def test_static_emitters_constant_paths():
    cfg = ARR(T=6, azimuth_step=0.0, elevation_step=0.0)
    for p in sc.emitter_random_walk(cfg):
        assert np.all(p.azimuth == p.azimuth[0]) and np.all(p.elevation == p.elevation[0])
    tr = sc.array_truth_trajectory(cfg)
    assert np.max(np.abs(tr.bases - tr.bases[0])) == 0.0


def test_emitter_paths_reproducible():
    a = sc.emitter_random_walk(ARR(seed=5))
    b = sc.emitter_random_walk(ARR(seed=5))
    for p, q in zip(a, b):
        np.testing.assert_array_equal(p.azimuth, q.azimuth)
        np.testing.assert_array_equal(p.elevation, q.elevation)


def test_emitter_increment_std():
    cfg = ARR(T=10_000, azimuth_step=0.01, elevation_step=0.02, seed=2)
    for p in sc.emitter_random_walk(cfg):
        daz = np.angle(np.exp(1j * np.diff(p.azimuth)))  # undo the wrap
        assert np.std(daz) == pytest.approx(0.01, rel=0.1)
        assert np.std(np.diff(p.elevation)) == pytest.approx(0.02, rel=0.1)
        assert np.all(np.abs(p.elevation) <= cfg.elevation_limit)
        assert np.all((p.azimuth >= -np.pi) & (p.azimuth < np.pi))


def test_elevation_reflects_at_limit():
    cfg = ARR(T=2000, elevation_step=0.2, elevation_limit=0.5, seed=1)
    for p in sc.emitter_random_walk(cfg):
        assert np.all(np.abs(p.elevation) <= 0.5)


def test_broadside_column_is_ones():
    U = sc.steering_matrix(sc.grid_positions(), sc.wavevectors(0.0, 0.0))
    np.testing.assert_allclose(U[:, 0], 1.0, atol=1e-15)


def test_steering_entries_unit_modulus():
    rng = np.random.default_rng(0)
    k = sc.wavevectors(rng.uniform(-1, 1, 5), rng.uniform(-1, 1, 5))
    np.testing.assert_allclose(np.linalg.norm(k, axis=1), 2 * np.pi)
    U = sc.steering_matrix(sc.grid_positions(), k)
    assert U.shape == (64, 5)
    np.testing.assert_allclose(np.abs(U), 1.0, atol=1e-12)


def test_steering_inner_product_direct_sum():
    pos = sc.grid_positions()
    k = sc.wavevectors([0.3, -0.5], [0.1, 0.4])
    U = sc.steering_matrix(pos, k)
    direct = 0j
    for r in pos:
        direct += np.conj(np.exp(1j * np.dot(r, k[0]))) * np.exp(1j * np.dot(r, k[1]))
    ip = np.vdot(U[:, 0], U[:, 1])
    assert ip == pytest.approx(direct, abs=1e-10)
    assert abs(ip) / 64 < 1


def test_array_truth_orthonormal_and_contains_snapshots():
    cfg = ARR(T=8, seed=3)
    tr = sc.array_truth_trajectory(cfg)
    err = np.linalg.norm(np.swapaxes(tr.bases, 1, 2) @ tr.bases - np.eye(10), axis=(1, 2))
    assert np.max(err) <= 1e-10
    paths = sc.emitter_random_walk(cfg)
    rng = np.random.default_rng(1)
    for t in range(cfg.T):
        U = sc.steering_matrix(
            sc.grid_positions(), sc.wavevectors([p.azimuth[t] for p in paths], [p.elevation[t] for p in paths])
        )
        s = rng.standard_normal(5) + 1j * rng.standard_normal(5)
        x = (U @ s).real
        Y = tr.bases[t]
        assert np.linalg.norm(x - Y @ (Y.T @ x)) <= 1e-10


def test_coinciding_emitters_raise():
    cfg = ARR(T=3, num_emitters=2)
    same = sc.EmitterPath(azimuth=np.full(3, 0.2), elevation=np.full(3, 0.1))
    with pytest.raises(RankDeficient):
        sc.array_truth_trajectory(cfg, paths=[same, same])


def test_array_truth_is_not_a_geodesic():
    cfg = ARR(T=60, sigma=0.0, seed=2)
    truth, X = sc.array_scenario(cfg)
    assert ob.vel_reg_geodesic_eval(truth) > 1e-4
    fit = bl.single_geodesic_fit(X, cfg.d, endpoint_window=1)
    assert np.mean(mf.geodesic_distance_arrays(fit.bases, truth.bases)) > 1e-2


def test_array_generation_reproducible():
    a = sc.array_scenario(ARR(T=5, seed=11))
    b = sc.array_scenario(dataclasses.replace(ARR(T=5), seed=11))
    assert a[0].bases.tobytes() == b[0].bases.tobytes()
    assert a[1].data.tobytes() == b[1].data.tobytes()
