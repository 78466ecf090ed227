"""muhs command line: simulate, kernel-check, characteristics, converge,
energy-balance and invariants.

Exit codes: 0 success, 2 configuration error, 3 blow-up guard triggered,
4 verification failure, 64 usage error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import io
from .characteristics import advect, conserved_density_residual, default_seeds, order_preserved
from .config import ConfigError, RunConfig, parse_config
from .convergence import family_run, helly_report
from .diagnostics import (
    DIAGNOSTICS_HEADER,
    energy_balance,
    energy_balance_differential,
    expected_row,
    trajectory_records,
    verify_decay,
)
from .evolution import Trajectory, simulate
from .operators import kernel_check

log = logging.getLogger("muhs")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_GUARD = 3
EXIT_VERIFY = 4
EXIT_USAGE = 64

KERNEL_TOL = 1e-8
CHARACTERISTICS_TOL = 1e-6
ENERGY_TOL = 1e-4
VERIFY_TOL = 1e-6


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _int_list(text: str) -> list[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("expected at least one integer")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="muhs", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def with_config(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="run configuration (JSON)")
        p.add_argument("--out", help="output directory (overrides output.dir)")
        return p

    with_config("simulate", "evolve the data and verify the decay laws")
    p = sub.add_parser("kernel-check", help="compare the three inverse routes")
    p.add_argument("--n", type=_positive_int, default=256, help="grid size (default 256)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--config", help="ignored except for output.dir")
    p = with_config("characteristics", "track characteristics and the conserved density")
    p.add_argument("--seeds", type=_positive_int, default=16, help="number of equispaced seeds")
    p = with_config("converge", "run a mollified family")
    p.add_argument("--ns", type=_int_list, default=[8, 16, 32, 64], help="mollifier indices")
    p.add_argument("--jobs", type=_positive_int, default=None, help="worker processes (default: cores)")
    p.add_argument("--helly-slack", type=float, default=1e-6, help="slack on the Helly constant")
    p = with_config("energy-balance", "check the mollified energy balance")
    p.add_argument("--mollify-n", type=_positive_int, default=32, help="mollifier index n")
    with_config("invariants", "decay laws plus characteristics on one run")
    return parser


def _output_dir(args, run: RunConfig | None) -> Path:
    if getattr(args, "out", None):
        out = Path(args.out)
    elif run is not None and run.output_dir:
        out = Path(run.output_dir)
        if not out.is_absolute() and run.source is not None:
            out = run.source.parent / out
    else:
        out = Path("out")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _require_smooth(run: RunConfig):
    if run.initial.is_measure and run.solver.mollify_n is None:
        raise ConfigError("initial.mollify_n", "peakon data must be mollified before it is evolved")


def _diagnostics_rows(traj: Trajectory, records=None):
    records = trajectory_records(traj) if records is None else records
    for r in records:
        row = expected_row(r, traj.mu0, traj.mu1, traj.config.lam)
        yield [row[h] for h in DIAGNOSTICS_HEADER]


def _write_diagnostics(out: Path, traj: Trajectory, name="diagnostics.csv", records=None) -> Path:
    return io.write_csv(out / name, DIAGNOSTICS_HEADER, _diagnostics_rows(traj, records))


def _simulate_and_verify(run: RunConfig, out: Path, outputs: list):
    traj = simulate(run.solver, run.initial)
    outputs += [p.name for p in io.write_trajectory(out, traj)]
    records = trajectory_records(traj)
    outputs.append(_write_diagnostics(out, traj, records=records).name)
    report = verify_decay(records, traj.mu0, traj.mu1, traj.config.lam, VERIFY_TOL,
                          run.initial.sign_class)
    return traj, report


def cmd_simulate(args, run, out, outputs) -> int:
    _require_smooth(run)
    traj, report = _simulate_and_verify(run, out, outputs)
    summary = report.to_dict()
    summary["status"] = traj.status
    outputs.append(io.write_json(out / "verify.json", summary).name)
    if not traj.completed:
        return EXIT_GUARD
    return EXIT_OK if report.passed else EXIT_VERIFY


def cmd_kernel_check(args, run, out, outputs) -> int:
    try:
        report = kernel_check(args.n)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"--n: {exc}") from None
    ok = (max(report["route_differences"].values()) <= KERNEL_TOL
          and report["identity_residual"] <= KERNEL_TOL)
    report["tolerance"] = KERNEL_TOL
    report["passed"] = ok
    outputs.append(io.write_json(out / "kernel_check.json", report).name)
    return EXIT_OK if ok else EXIT_VERIFY


def _characteristics_rows(track, residual):
    for i, t in enumerate(track.times):
        for j, seed in enumerate(track.seeds):
            yield [t, seed, track.q[i, j], track.qx[i, j], track.y_along[i, j], residual[i, j]]


def cmd_characteristics(args, run, out, outputs) -> int:
    _require_smooth(run)
    try:
        track = advect(run.solver, run.initial, default_seeds(args.seeds))
    except FloatingPointError as exc:
        log.error("%s", exc)
        return EXIT_VERIFY
    residual = conserved_density_residual(track)
    outputs.append(io.write_csv(out / "characteristics.csv",
                                ("t", "seed", "q", "qx", "y_along", "residual"),
                                _characteristics_rows(track, residual)).name)
    if not track.trajectory.completed:
        return EXIT_GUARD
    ok = order_preserved(track) and float(np.max(np.abs(residual))) <= CHARACTERISTICS_TOL
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_converge(args, run, out, outputs) -> int:
    try:
        family = family_run(run.solver, run.initial, args.ns, jobs=args.jobs,
                            reference="finest" if run.initial.is_measure else "raw")
    except ValueError as exc:
        raise UsageError(f"--ns: {exc}") from None
    verdict = helly_report(family, args.helly_slack)
    summary = family.to_dict()
    summary["helly"] = verdict.to_dict()
    outputs.append(io.write_json(out / "convergence.json", summary).name)
    for n, member in family.per_n.items():
        outputs.append(_write_diagnostics(out, member.trajectory, f"diagnostics_n{n}.csv",
                                          member.records).name)
    if any(not m.trajectory.completed for m in family.per_n.values()):
        return EXIT_GUARD
    ok = family.bounds_hold and verdict.passed
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_energy_balance(args, run, out, outputs) -> int:
    _require_smooth(run)
    traj = simulate(run.solver, run.initial)
    if not traj.completed:
        return EXIT_GUARD
    balance = energy_balance(traj, args.mollify_n)
    differential = energy_balance_differential(balance, traj.config.lam)
    rows = zip(balance.times, balance.f_n, balance.g_n, balance.residual, differential)
    outputs.append(io.write_csv(out / "energy_balance.csv",
                                ("t", "f_n", "g_n", "residual", "differential_residual"),
                                rows).name)
    grad = np.array([r.grad_l2_sq for r in trajectory_records(traj)])
    summary = {
        "n": balance.n,
        "sup_residual": balance.sup_residual,
        "sup_differential_residual": float(np.max(np.abs(differential))),
        "tolerance": ENERGY_TOL,
        "f_n_below_gradient_energy": bool(np.all(balance.f_n <= grad + VERIFY_TOL)),
    }
    summary["passed"] = summary["sup_residual"] <= ENERGY_TOL and summary["f_n_below_gradient_energy"]
    outputs.append(io.write_json(out / "energy_balance.json", summary).name)
    return EXIT_OK if summary["passed"] else EXIT_VERIFY


def cmd_invariants(args, run, out, outputs) -> int:
    _require_smooth(run)
    traj, report = _simulate_and_verify(run, out, outputs)
    summary = {"status": traj.status, "decay": report.to_dict()}
    ok = report.passed
    if traj.completed:
        try:
            track = advect(run.solver, run.initial)
            residual = float(np.max(np.abs(conserved_density_residual(track))))
            summary["characteristics"] = {
                "seeds": int(track.seeds.size),
                "min_qx": float(np.min(track.qx)),
                "order_preserved": order_preserved(track),
                "sup_residual": residual,
                "tolerance": CHARACTERISTICS_TOL,
            }
            ok = ok and order_preserved(track) and residual <= CHARACTERISTICS_TOL
        except FloatingPointError as exc:
            summary["characteristics"] = {"error": str(exc)}
            ok = False
    summary["passed"] = ok
    outputs.append(io.write_json(out / "invariants.json", summary).name)
    if not traj.completed:
        return EXIT_GUARD
    return EXIT_OK if ok else EXIT_VERIFY


COMMANDS = {
    "simulate": cmd_simulate,
    "kernel-check": cmd_kernel_check,
    "characteristics": cmd_characteristics,
    "converge": cmd_converge,
    "energy-balance": cmd_energy_balance,
    "invariants": cmd_invariants,
}


def run(argv=None) -> int:
    """Parse ``argv``, execute one command and write its manifest; returns the exit code."""
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = parse_config(args.config) if args.config else None
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = _output_dir(args, config)
    manifest = io.RunManifest(config.config_hash if config else None, args.command, str(out),
                              _now())
    outputs: list[str] = []
    try:
        code = COMMANDS[args.command](args, config, out, outputs)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        code = EXIT_CONFIG
    except UsageError as exc:
        print(exc, file=sys.stderr)
        code = EXIT_USAGE
    manifest.outputs = outputs
    manifest.exit_code = code
    manifest.status = {EXIT_OK: "completed", EXIT_GUARD: "blowup_guard_triggered",
                       EXIT_VERIFY: "verification_failed", EXIT_CONFIG: "config_error",
                       EXIT_USAGE: "usage_error"}[code]
    manifest.finished = _now()
    manifest.write()
    if code == EXIT_OK and manifest.missing_outputs():
        log.error("missing outputs: %s", manifest.missing_outputs())
        return EXIT_VERIFY
    return code


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
