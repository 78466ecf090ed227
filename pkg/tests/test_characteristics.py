import numpy as np
import pytest

from muhs.characteristics import (
    advect,
    conserved_density_residual,
    default_seeds,
    order_preserved,
    qx_finite_difference,
)
from muhs.evolution import SolverConfig, simulate
from muhs.grid import make_grid
from muhs.initial_data import cosine_data


def constant_track(c, lam, t_end=1.0):
    ic = cosine_data(make_grid(32), c, 0.0)
    config = SolverConfig(lam=lam, n_points=32, t_end=t_end, dt=0.01, snapshot_stride=5)
    return advect(config, ic, default_seeds(8))


def test_constant_data_undamped_translates():
    track = constant_track(0.8, 0.0)
    expected = track.seeds[None, :] + 0.8 * track.times[:, None]
    np.testing.assert_allclose(track.q, expected, atol=1e-13)
    np.testing.assert_allclose(track.qx, 1.0, atol=1e-13)


def test_constant_data_damped_drift():
    c, lam = 0.8, 0.5
    track = constant_track(c, lam)
    drift = c * (1 - np.exp(-lam * track.times)) / lam
    np.testing.assert_allclose(track.q, track.seeds[None, :] + drift[:, None], atol=1e-10)
    assert np.max(np.abs(conserved_density_residual(track))) <= 1e-10


def test_zero_data_leaves_seeds_fixed():
    track = constant_track(0.0, 0.3)
    np.testing.assert_array_equal(track.q, np.broadcast_to(track.seeds, track.q.shape))


def test_residual_vanishes_at_start():
    ic = cosine_data(make_grid(64), 1.0, 0.02)
    track = advect(SolverConfig(lam=0.5, n_points=64, t_end=0.1, dt=1e-3), ic)
    assert np.max(np.abs(conserved_density_residual(track)[0])) <= 1e-12


def test_cosine_density_residual_small():
    ic = cosine_data(make_grid(128), 1.0, 0.02)
    track = advect(SolverConfig(lam=0.5, n_points=128, t_end=1.0, dt=1e-3), ic)
    assert np.max(np.abs(conserved_density_residual(track))) <= 1e-6
    assert order_preserved(track)
    assert np.all(track.qx > 0)


def test_qx_matches_finite_differences_at_second_order():
    ic = cosine_data(make_grid(64), 1.0, 0.1)
    config = SolverConfig(lam=0.5, n_points=64, t_end=0.5, dt=2e-3, snapshot_stride=50)
    errs = []
    for count in (16, 32):
        track = advect(config, ic, default_seeds(count))
        errs.append(np.max(np.abs(qx_finite_difference(track) - track.qx)))
    assert errs[0] < 1e-2
    assert 3.5 < errs[0] / errs[1] < 4.5


def test_finite_difference_needs_equispaced_seeds():
    ic = cosine_data(make_grid(32), 1.0, 0.0)
    track = advect(SolverConfig(lam=0.0, n_points=32, t_end=0.1, dt=0.01), ic, [0.0, 0.1, 0.5])
    with pytest.raises(ValueError):
        qx_finite_difference(track)


@pytest.mark.parametrize("seeds", [[], [1.0], [-0.1, 0.2], [[0.1, 0.2]]])
def test_seed_validation(seeds):
    ic = cosine_data(make_grid(32), 1.0, 0.0)
    with pytest.raises(ValueError):
        advect(SolverConfig(lam=0.0, n_points=32, t_end=0.1, dt=0.01), ic, seeds)


def test_residual_rejects_foreign_trajectory():
    ic = cosine_data(make_grid(32), 1.0, 0.01)
    track = advect(SolverConfig(lam=0.0, n_points=32, t_end=0.1, dt=0.01), ic)
    other = simulate(SolverConfig(lam=0.0, n_points=32, t_end=0.1, dt=0.01, snapshot_stride=1), ic)
    with pytest.raises(ValueError):
        conserved_density_residual(track, other)


def test_tracked_trajectory_matches_plain_run():
    ic = cosine_data(make_grid(64), 1.0, 0.02)
    config = SolverConfig(lam=0.5, n_points=64, t_end=0.2, dt=1e-3)
    track = advect(config, ic)
    np.testing.assert_array_equal(track.trajectory.snapshots, simulate(config, ic).snapshots)
