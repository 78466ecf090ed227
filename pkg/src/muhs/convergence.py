"""Families of mollified runs u^n: uniform bounds, space-time bounds, Helly
hypotheses and sup-norm distances between members.

Every member shares the solver config except ``mollify_n``; mu0 and mu1 are
those of the raw (unmollified) data, so the bounds are uniform in n.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid

from .diagnostics import SIGN_DEFINITE, SOBOLEV, DiagnosticsRecord, trajectory_records, tv_bound
from .evolution import SolverConfig, Trajectory, rhs, simulate, with_mollification
from .grid import derivative
from .initial_data import InitialCondition
from .operators import dx_Ainv

BOUND_TOL = 1e-6


@dataclass
class BoundCheck:
    """``value`` is the worst case over time; margin = allowed - value."""

    value: float
    allowed: float
    passed: bool
    kind: str = "upper"
    skipped: bool = False

    @property
    def margin(self) -> float:
        return self.allowed - self.value


@dataclass
class SpaceTimeBounds:
    """Space-time norms of one member over [0, T], trapezoid rule over snapshots."""

    u_l2_sq: float
    ux_l2_sq: float
    uux_l2: float
    nonlocal_l2: float
    ut_l2_sq: float
    K: float
    checks: dict[str, BoundCheck] = field(default_factory=dict)


@dataclass
class MemberReport:
    n: int
    trajectory: Trajectory = field(repr=False)
    records: list[DiagnosticsRecord] = field(repr=False)
    bounds: dict[str, BoundCheck]
    spacetime: SpaceTimeBounds

    @property
    def passed(self) -> bool:
        return self.trajectory.completed and all(b.passed for b in self.bounds.values())


@dataclass
class ConvergenceReport:
    ns: list[int]
    mu0: float
    mu1: float
    lam: float
    t_end: float
    sign_class: str
    per_n: dict[int, MemberReport]
    reference: str
    sup_distances: dict[int, float]
    consecutive_distances: list[float]
    failures: dict[int, str] = field(default_factory=dict)

    @property
    def bounds_hold(self) -> bool:
        return not self.failures and all(m.passed for m in self.per_n.values())

    @property
    def consecutive_decreasing(self) -> bool:
        d = self.consecutive_distances
        return all(b < a for a, b in zip(d, d[1:]))

    def to_dict(self) -> dict:
        members = {}
        for n, m in self.per_n.items():
            members[str(n)] = {
                "status": m.trajectory.status,
                "bounds": {k: _check_dict(c) for k, c in m.bounds.items()},
                "spacetime": {
                    "u_l2_sq": m.spacetime.u_l2_sq,
                    "ux_l2_sq": m.spacetime.ux_l2_sq,
                    "uux_l2": m.spacetime.uux_l2,
                    "nonlocal_l2": m.spacetime.nonlocal_l2,
                    "ut_l2_sq": m.spacetime.ut_l2_sq,
                    "K": m.spacetime.K,
                    "checks": {k: _check_dict(c) for k, c in m.spacetime.checks.items()},
                },
            }
        return {
            "ns": list(self.ns),
            "mu0": self.mu0,
            "mu1": self.mu1,
            "lambda": self.lam,
            "t_end": self.t_end,
            "sign_class": self.sign_class,
            "reference": self.reference,
            "sup_distances": {str(n): d for n, d in self.sup_distances.items()},
            "consecutive_sup_distances": list(self.consecutive_distances),
            "consecutive_decreasing": self.consecutive_decreasing,
            "bounds_hold": self.bounds_hold,
            "failures": {str(n): msg for n, msg in self.failures.items()},
            "members": members,
        }


def _check_dict(c: BoundCheck) -> dict:
    return {"value": c.value, "allowed": c.allowed, "margin": c.margin,
            "passed": c.passed, "kind": c.kind, "skipped": c.skipped}


def _upper(values, allowed) -> BoundCheck:
    worst = float(np.max(values))
    return BoundCheck(worst, float(allowed), bool(worst <= allowed))


def _equality(defects, tol) -> BoundCheck:
    worst = float(np.max(defects))
    return BoundCheck(worst, tol, bool(worst <= tol), kind="equality")


def _skipped(allowed) -> BoundCheck:
    return BoundCheck(float("nan"), allowed, True, skipped=True)


def uniform_bounds(records, mu0: float, mu1: float, lam: float, sign_class: str,
                   tol: float = BOUND_TOL) -> dict[str, BoundCheck]:
    """The per-member bounds, each uniform in n because mu0, mu1 come from the raw data."""
    t = np.array([r.t for r in records])
    decay = np.exp(-lam * t)
    col = lambda name: np.array([getattr(r, name) for r in records])  # noqa: E731
    checks = {
        "mean": _equality(np.abs(col("mean_u") - mu0 * decay), tol),
        "gradient_energy": _upper(col("grad_l2_sq"), mu1**2 + tol),
        "sup": _upper(col("sup_u"), abs(mu0) + SOBOLEV * mu1 + tol),
    }
    if sign_class in SIGN_DEFINITE:
        checks["gradient_sup"] = _upper(col("sup_ux"), abs(mu0) + tol)
        checks["l1_y"] = _equality(np.abs(col("l1_y") - abs(mu0) * decay), tol)
        checks["l1_u"] = _equality(np.abs(col("l1_u") - abs(mu0) * decay), tol)
    else:
        checks["gradient_sup"] = _skipped(abs(mu0) + tol)
        checks["l1_y"] = _skipped(tol)
        checks["l1_u"] = _skipped(tol)
    return checks


def spacetime_bounds(traj: Trajectory, mu0: float, mu1: float) -> SpaceTimeBounds:
    """Integrals over [0, T] x S with u_t taken from the right-hand side.

    The checked inequalities are
        int int u^2      <= S^2 T,              S = |mu0| + sqrt(3)/6 mu1
        int int u_x^2    <= mu1^2 T
        ||u u_x||        <= sqrt(T) S |mu0|     (also reported without sqrt(T))
        ||d_x g * F||    <= T^2/12 (mu0^2 + S^2 + mu1^2),  F = 2 mu0 e^{-lt} u + u_x^2/2
    and K <= K_bound, where K_bound follows from the triangle inequality on
    u_t = -u u_x - d_x g * F - lambda u.
    """
    cfg = traj.config
    lam = cfg.lam
    times = np.asarray(traj.times, dtype=float)
    T = float(times[-1])
    rows = []
    for t, u in zip(times, traj.snapshots):
        ux = derivative(u)
        forcing = 2.0 * traj.mu0 * math.exp(-lam * t) * u + 0.5 * ux * ux
        ut = rhs(t, u, traj.mu0, lam, cfg.dealias)
        rows.append((np.mean(u * u), np.mean(ux * ux), np.mean((u * ux) ** 2),
                     np.mean(dx_Ainv(forcing) ** 2), np.mean(ut * ut)))
    rows = np.array(rows, dtype=float)
    if times.size > 1:
        u2, ux2, uux2, nl2, ut2 = (float(trapezoid(rows[:, j], times)) for j in range(5))
    else:
        u2 = ux2 = uux2 = nl2 = ut2 = 0.0
    S = abs(mu0) + SOBOLEV * mu1
    nonlocal_bound = T**2 / 12.0 * (mu0**2 + S**2 + mu1**2)
    K = u2 + ux2 + ut2
    ut_bound = math.sqrt(T) * S * abs(mu0) + nonlocal_bound + lam * S * math.sqrt(T)
    K_bound = S**2 * T + mu1**2 * T + ut_bound**2
    tol = BOUND_TOL
    checks = {
        "u_l2": _upper([u2], S**2 * T + tol),
        "ux_l2": _upper([ux2], mu1**2 * T + tol),
        "uux_l2": _upper([math.sqrt(uux2)], math.sqrt(T) * S * abs(mu0) + tol),
        "uux_l2_literal": _upper([math.sqrt(uux2)], S * abs(mu0) + tol),
        "nonlocal_l2": _upper([math.sqrt(nl2)], nonlocal_bound + tol),
        "K": _upper([K], K_bound + tol),
    }
    return SpaceTimeBounds(u2, ux2, math.sqrt(uux2), math.sqrt(nl2), ut2, K, checks)


def sup_distance(traj_a: Trajectory, traj_b: Trajectory) -> float:
    """max over recorded times and nodes of |u_a - u_b|."""
    a, b = np.asarray(traj_a.snapshots), np.asarray(traj_b.snapshots)
    if a.shape != b.shape:
        raise ValueError(f"trajectories have different shapes {a.shape} and {b.shape}")
    if not np.array_equal(traj_a.times, traj_b.times):
        raise ValueError("trajectories are recorded at different times")
    return float(np.max(np.abs(a - b)))


def _run_member(config: SolverConfig, ic: InitialCondition, n: int | None) -> Trajectory:
    return simulate(with_mollification(config, n), ic)


def _check_ns(ns) -> list[int]:
    out = sorted(int(n) for n in ns)
    if not out:
        raise ValueError("ns must not be empty")
    if len(set(out)) != len(out):
        raise ValueError(f"ns contains duplicates: {list(ns)}")
    if out[0] < 3:
        raise ValueError("every mollifier index must be >= 3")
    return out


def family_run(config: SolverConfig, ic: InitialCondition, ns, jobs: int | None = 1,
               reference: str = "finest", tol: float = BOUND_TOL) -> ConvergenceReport:
    """Run u^n for every n in ns and collect bounds and distances.

    ``reference`` is "finest" (the largest n) or "raw" (an unmollified run,
    smooth data only).  ``jobs`` > 1 runs members in separate processes;
    None means one per core.
    """
    ns = _check_ns(ns)
    if reference not in ("finest", "raw"):
        raise ValueError("reference must be 'finest' or 'raw'")
    if reference == "raw" and ic.is_measure:
        raise ValueError("a raw reference needs smooth data")
    jobs = (os.cpu_count() or 1) if jobs is None else int(jobs)
    if jobs < 1:
        raise ValueError("jobs must be >= 1")

    wanted: list[int | None] = list(ns) + ([None] if reference == "raw" else [])
    results: dict[int | None, Trajectory] = {}
    failures: dict[int, str] = {}  # a failed raw reference is keyed 0
    if jobs == 1:
        for n in wanted:
            try:
                results[n] = _run_member(config, ic, n)
            except (ValueError, FloatingPointError) as exc:
                failures[n if n is not None else 0] = str(exc)
    else:
        with ProcessPoolExecutor(max_workers=min(jobs, len(wanted))) as pool:
            futures = {n: pool.submit(_run_member, config, ic, n) for n in wanted}
            for n, fut in futures.items():
                try:
                    results[n] = fut.result()
                except (ValueError, FloatingPointError) as exc:
                    failures[n if n is not None else 0] = str(exc)

    per_n = {}
    for n in ns:
        if n not in results:
            continue
        traj = results[n]
        recs = trajectory_records(traj)
        per_n[n] = MemberReport(n, traj, recs,
                                uniform_bounds(recs, ic.mu0, ic.mu1, config.lam, ic.sign_class, tol),
                                spacetime_bounds(traj, ic.mu0, ic.mu1))

    ref_key = ns[-1] if reference == "finest" else None
    sup_distances, consecutive = {}, []
    if ref_key in results and all(m.trajectory.completed for m in per_n.values()):
        ref = results[ref_key]
        sup_distances = {n: sup_distance(per_n[n].trajectory, ref) for n in per_n}
        done = [n for n in ns if n in per_n]
        consecutive = [sup_distance(per_n[a].trajectory, per_n[b].trajectory)
                       for a, b in zip(done, done[1:])]
    return ConvergenceReport(ns, ic.mu0, ic.mu1, config.lam, config.t_end, ic.sign_class,
                             per_n, "n=%d" % ns[-1] if reference == "finest" else "raw",
                             sup_distances, consecutive, failures)


@dataclass
class HellyViolation:
    n: int
    t: float
    quantity: str
    value: float


@dataclass
class HellyVerdict:
    passed: bool
    constant: float
    slack: float
    max_tv: float
    max_sup: float
    violations: list[HellyViolation] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed, "constant": self.constant, "slack": self.slack,
            "max_tv": self.max_tv, "max_sup": self.max_sup,
            "violations": [vars(v) for v in self.violations],
        }


def helly_report(family: ConvergenceReport, slack: float = BOUND_TOL) -> HellyVerdict:
    """Both Helly hypotheses for u^n_x(t, .): sup|u_x| and TV(u_x) below one
    constant 2|mu0| + sqrt(3)/6 mu1, uniformly over n and recorded t."""
    constant = tv_bound(family.mu0, family.mu1)
    limit = constant + slack
    violations = []
    max_tv = max_sup = 0.0
    for n, member in sorted(family.per_n.items()):
        for r in member.records:
            max_tv = max(max_tv, r.tv_ux)
            max_sup = max(max_sup, r.sup_ux)
            if r.tv_ux > limit:
                violations.append(HellyViolation(n, r.t, "tv_ux", r.tv_ux))
            if r.sup_ux > limit:
                violations.append(HellyViolation(n, r.t, "sup_ux", r.sup_ux))
    passed = not violations and not family.failures and bool(family.per_n)
    return HellyVerdict(passed, constant, slack, max_tv, max_sup, violations)
