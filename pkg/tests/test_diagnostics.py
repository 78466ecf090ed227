import dataclasses
import math

import numpy as np
import pytest

from muhs.diagnostics import (
    DIAGNOSTICS_HEADER,
    SOBOLEV,
    energy_balance,
    energy_balance_differential,
    energy_terms,
    expected_row,
    record,
    sup_bound,
    trajectory_records,
    tv_bound,
    verify_decay,
    verify_trajectory,
)
from muhs.evolution import SolverConfig, SolverState, simulate
from muhs.grid import derivative, make_grid
from muhs.initial_data import cosine_data
from muhs.operators import green_function


def state_of(u, t=0.0):
    return SolverState(t, np.asarray(u, dtype=float), float(np.mean(u)), 0.0)


def test_sobolev_constant_value():
    # sup |f - mean f| <= ||f'||_2 sqrt(1/12) for zero-mean periodic f on [0, 1)
    assert SOBOLEV == pytest.approx(math.sqrt(1 / 12), abs=1e-16)


def test_record_of_constant():
    rec = record(state_of(np.full(64, -0.6)))
    assert rec.mean_u == pytest.approx(-0.6)
    assert rec.grad_l2_sq == 0 and rec.sup_ux == 0 and rec.tv_ux == 0
    assert rec.sup_u == pytest.approx(0.6) and rec.l1_u == pytest.approx(0.6)
    assert rec.l1_y == pytest.approx(0.6) and rec.min_y == pytest.approx(-0.6)


def test_record_of_cosine():
    b = 0.1
    x = make_grid(256).nodes
    rec = record(state_of(1 + b * np.cos(2 * np.pi * x)))
    assert rec.grad_l2_sq == pytest.approx(2 * np.pi**2 * b**2, rel=1e-12)
    assert rec.sup_ux == pytest.approx(2 * np.pi * b, rel=1e-12)
    assert rec.tv_ux == pytest.approx(8 * np.pi * b, rel=1e-12)
    # second derivative roundoff grows like N^2 eps
    assert rec.min_y == pytest.approx(1 - 4 * np.pi**2 * b, abs=1e-9)
    assert rec.sup_u == pytest.approx(1 + b)


def test_record_of_green_function():
    rec = record(state_of(green_function(make_grid(512).nodes)))
    assert rec.sup_u == pytest.approx(13 / 12, abs=1e-15)
    assert rec.mean_u == pytest.approx(1 + 1 / (12 * 512**2), abs=1e-14)


def test_bounds():
    assert sup_bound(-2.0, 3.0) == pytest.approx(2 + 3 * SOBOLEV)
    assert tv_bound(-2.0, 3.0) == pytest.approx(4 + 3 * SOBOLEV)


def test_sup_bound_holds_for_random_fields():
    rng = np.random.default_rng(9)
    for _ in range(20):
        u = rng.standard_normal(64)
        mu0 = np.mean(u)
        mu1 = np.sqrt(np.mean(derivative(u) ** 2))
        assert np.max(np.abs(u)) <= sup_bound(mu0, mu1) + 1e-12


def test_expected_row_keys_match_header():
    rec = record(state_of(np.full(16, 1.0), t=0.5))
    row = expected_row(rec, 1.0, 0.0, 2.0)
    assert tuple(row) == DIAGNOSTICS_HEADER
    assert row["mean_expected"] == pytest.approx(math.exp(-1.0))


def test_constant_run_satisfies_every_law_to_roundoff():
    ic = cosine_data(make_grid(32), 0.8, 0.0)
    traj = simulate(SolverConfig(lam=0.4, n_points=32, t_end=1.0, dt=0.01), ic)
    report = verify_trajectory(traj, ic.sign_class)
    assert report.passed
    for name in ("mean", "l1_y", "l1_u"):
        assert report.laws[name].max_defect <= 1e-10


def test_cosine_run_satisfies_decay_laws(cosine_run, cosine_ic):
    report = verify_trajectory(cosine_run, cosine_ic.sign_class)
    assert report.passed, report.to_dict()
    assert not any(c.skipped for c in report.laws.values())


def test_mixed_data_skips_gated_laws():
    ic = cosine_data(make_grid(64), 0.0, 0.1)
    traj = simulate(SolverConfig(lam=0.2, n_points=64, t_end=0.2, dt=1e-3), ic)
    report = verify_trajectory(traj, "mixed")
    assert report.laws["sign_preservation"].skipped
    assert report.laws["l1_y"].skipped and report.laws["l1_y"].passed
    assert not report.laws["mean"].skipped and report.laws["mean"].passed
    assert not report.laws["gradient_energy"].skipped


def test_verify_detects_sign_violation():
    rec = record(state_of(np.full(16, 1.0)))
    bad = dataclasses.replace(rec, min_y=-1e-3)
    report = verify_decay([rec, bad], 1.0, 0.0, 0.0, sign_class="y_nonneg")
    assert not report.passed
    assert not report.laws["sign_preservation"].passed
    assert report.laws["sign_preservation"].max_defect == pytest.approx(1e-3)


def test_verify_tolerance_override():
    rec = record(state_of(np.full(16, 1.0)))
    shifted = dataclasses.replace(rec, mean_u=1.0 + 1e-5)
    assert not verify_decay([shifted], 1.0, 0.0, 0.0).laws["mean"].passed
    assert verify_decay([shifted], 1.0, 0.0, 0.0, tolerances={"mean": 1e-4}).laws["mean"].passed


def test_report_serializes():
    rec = record(state_of(np.full(16, 1.0)))
    d = verify_decay([rec], 1.0, 0.0, 0.0).to_dict()
    assert d["passed"] and set(d["laws"]) >= {"mean", "gradient_energy", "bv_bound"}


def test_energy_terms_of_constant_vanish():
    assert energy_terms(np.full(64, 2.0), 8) == (0.0, 0.0)


def test_mollified_energy_below_gradient_energy(cosine_run):
    for u in cosine_run.snapshots[::10]:
        f, _ = energy_terms(u, 16)
        assert f <= np.mean(derivative(u) ** 2) + 1e-15


def test_energy_balance_constant_run():
    ic = cosine_data(make_grid(32), 0.5, 0.0)
    traj = simulate(SolverConfig(lam=0.3, n_points=32, t_end=0.5, dt=0.01), ic)
    assert energy_balance(traj, 8).sup_residual == 0.0


def test_energy_balance_undamped():
    ic = cosine_data(make_grid(128), 1.0, 0.05)
    traj = simulate(SolverConfig(lam=0.0, n_points=128, t_end=0.5, dt=1e-3, snapshot_stride=1), ic)
    balance = energy_balance(traj, 16)
    assert balance.residual[0] == 0.0
    assert balance.sup_residual <= 1e-8


def test_energy_balance_forms_agree(cosine_run):
    balance = energy_balance(cosine_run, 32)
    diff = energy_balance_differential(balance, 0.5)
    assert balance.sup_residual <= 1e-4
    assert np.max(np.abs(diff)) <= 1e-4 * max(1.0, np.max(np.abs(balance.g_n)))


def test_trajectory_records_length(cosine_run):
    assert len(trajectory_records(cosine_run)) == len(cosine_run.times)
