"""Command-line experiment runner.

Subcommands::

    hallmhd simulate --config run.yaml [--out DIR] [--seed N] [--strict-deterministic]
    hallmhd verify --suite {identities,scaling,picard,friedrichs,inequalities}
    hallmhd analyze RUN_DIR [--out DIR] [--rho RHO]
    hallmhd compare RUN_A RUN_B --mode {rescaling,galerkin,schemes} [--out FILE]

Exit codes: 0 success, 1 usage or input error, 2 failed check (including a
non-converged Picard construction), 3 blow-up flagged.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import dataclasses
import json
import logging
import math
import platform
import sys
import time
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy

from . import __version__
from .config import ConfigError, RunConfig, load_config
from .diagnostics import blowup_monitors, smallness_check, write_diagnostics_csv
from .equations import ExtendedState, PhysParams, contract_modes, rescale, to_extended
from .initial import make_initial_state
from .io import SnapshotError, load_run, read_checkpoint, write_checkpoint
from .littlewood_paley import BesovSpec, NormRow, besov_norm, write_norm_csv
from .solver import Trajectory, run
from .spectral import Grid, SpectralField, strict_deterministic
from .verify import SUITES, run_suite

__all__ = ["main", "EXIT_OK", "EXIT_USAGE", "EXIT_CHECK", "EXIT_BLOWUP"]

EXIT_OK, EXIT_USAGE, EXIT_CHECK, EXIT_BLOWUP = 0, 1, 2, 3
COMPARE_MODES = ("rescaling", "galerkin", "schemes")

log = logging.getLogger("hallmhd")


class UsageError(Exception):
    """Bad arguments or incompatible inputs (exit code 1)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        raise UsageError(message)


# simulate


def initial_state(config: RunConfig) -> ExtendedState:
    """Build the initial extended state described by ``config``."""
    spec, solver = config.initial, config.solver
    grid = Grid(solver.n, config.length)
    if spec.snapshot is not None:
        try:
            ckpt = read_checkpoint(spec.snapshot)
        except (OSError, SnapshotError) as exc:
            raise UsageError(f"cannot read initial snapshot: {exc}") from None
        state = ckpt.state
        if not isinstance(state, ExtendedState):
            state = to_extended(state, ckpt.params.h)
        if state.grid != grid:
            raise UsageError(f"snapshot grid {state.grid} does not match n={grid.n}")
        return ExtendedState(*state.fields, t=0.0)
    if spec.family == "zero":
        zero = SpectralField.zeros(grid)
        return ExtendedState(zero, zero, zero)
    state = make_initial_state(grid, spec.family, spec.amplitude, spec.modes, config.seed,
                               spec.band)
    if spec.rescale_m:
        source = PhysParams(spec.rescale_mu, spec.rescale_mu, 2.0**spec.rescale_m)
        try:
            state = rescale(state, source, spec.rescale_m)[0]
        except ValueError as exc:
            raise UsageError(f"initial.rescale: {exc}") from None
    return state


def _select_saved(traj: Trajectory, stride: int) -> list[int]:
    """Indices of states to checkpoint: every ``stride``-th plus the last."""
    if traj.report is None:
        return list(range(len(traj.states)))
    keep = list(range(0, len(traj.states), stride))
    if keep[-1] != len(traj.states) - 1:
        keep.append(len(traj.states) - 1)
    return keep


def _picard_summary(report) -> dict | None:
    if report is None:
        return None
    return {
        "converged": report.converged,
        "iterations": report.iterations,
        "message": report.message,
        "contraction_ratios": report.contraction_ratios,
        "norm_x": report.norm_x,
        "norm_y": report.norm_y,
        "lemma_bound_holds": report.lemma_bound_holds,
        "operator_norm": report.operator_norm,
    }


def simulate(config: RunConfig, out: Path, strict: bool, argv: Sequence[str]) -> int:
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    U0 = initial_state(config)
    ctx = strict_deterministic() if strict else contextlib.nullcontext()
    with ctx:
        traj = run(U0, config.solver)
    wall = time.perf_counter() - start
    write_diagnostics_csv(traj.diagnostics, out / "diagnostics.csv")
    solver = config.solver
    checkpoints = []
    for i in _select_saved(traj, solver.save_every):
        state = traj.states[i]
        step = round(state.t / solver.dt)
        path = write_checkpoint(
            out / "checkpoints" / f"step_{step:07d}", state, traj.params, config.config_hash, step
        )
        checkpoints.append(str(path.relative_to(out)))
    status = "ok"
    code = EXIT_OK
    if traj.blowup:
        status, code = f"blowup: {traj.blowup_reason}", EXIT_BLOWUP
    elif traj.report is not None and not traj.report.converged:
        status, code = traj.report.message, EXIT_CHECK
    manifest = {
        "version": __version__,
        "command": ["hallmhd", *argv],
        "config_text": config.text,
        "config": config.data,
        "config_hash": config.config_hash,
        "seed": config.seed,
        "strict_deterministic": strict,
        "wall_time_s": wall,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "status": status,
        "blowup": traj.blowup,
        "picard": _picard_summary(traj.report),
        "outputs": {"diagnostics": "diagnostics.csv", "checkpoints": checkpoints},
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    print(f"{status}; {len(traj.diagnostics)} diagnostics rows, "
          f"{len(checkpoints)} checkpoints in {out} ({wall:.2f} s)")
    return code


def cmd_simulate(args) -> int:
    if args.config is None:
        raise UsageError("simulate needs --config")
    try:
        config = load_config(args.config)
    except ConfigError as exc:
        raise UsageError(str(exc)) from None
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    out = args.out or config.output_dir
    if out is None:
        raise UsageError("no output directory: pass --out or set output.directory")
    return simulate(config, Path(out), args.strict_deterministic, args.argv)


# verify


def cmd_verify(args) -> int:
    if args.suite is None:
        raise UsageError(f"verify needs --suite ({', '.join(SUITES)})")
    if args.suite not in SUITES:
        raise UsageError(f"unknown suite {args.suite!r}; expected one of {', '.join(SUITES)}")
    start = time.perf_counter()
    ctx = strict_deterministic() if args.strict_deterministic else contextlib.nullcontext()
    with ctx:
        checks = run_suite(args.suite)
    for check in checks:
        print(check.line())
    failed = sum(not c.passed for c in checks)
    print(f"{args.suite}: {len(checks) - failed}/{len(checks)} passed "
          f"in {time.perf_counter() - start:.2f} s")
    return EXIT_CHECK if failed else EXIT_OK


# analyze


def _load(run_dir: str):
    try:
        return load_run(run_dir)
    except (OSError, SnapshotError, json.JSONDecodeError) as exc:
        raise UsageError(str(exc)) from None


def _as_extended(state, params: PhysParams) -> ExtendedState:
    return state if isinstance(state, ExtendedState) else to_extended(state, params.h)


def cmd_analyze(args) -> int:
    data = _load(args.run)
    out = Path(args.out or args.run)
    out.mkdir(parents=True, exist_ok=True)
    states = [_as_extended(s, data.params) for s in data.states]
    traj = Trajectory(list(data.times), states, [], data.params)
    blow = blowup_monitors(traj, args.rho)
    with open(out / "blowup.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "I1", "I2", "I3"])
        for row in zip(blow.times, blow.cumulative_I1, blow.cumulative_I2, blow.cumulative_I3):
            writer.writerow([repr(float(x)) for x in row])
    rows = []
    for label, state in (("initial", states[0]), ("final", states[-1])):
        for name, f in zip(("u", "B", "J"), state.fields):
            for s, p, r in ((0.5, 2.0, 1.0), (2.5, 2.0, 1.0), (0.0, 2.0, 2.0)):
                spec = BesovSpec(s, p, r)
                rows.append(NormRow(f"{label}_{name}", s, p, r, spec.profile.label,
                                    besov_norm(f, spec)))
    write_norm_csv(rows, out / "norms.csv")
    small = smallness_check(states[0], data.params)
    summary = {
        "run": str(args.run),
        "times": [data.times[0], data.times[-1]],
        "rho": args.rho,
        "blowup_integrals": {"I1": blow.I1, "I2": blow.I2, "I3": blow.I3},
        "blowup_tails": {"I1": blow.tail_I1, "I2": blow.tail_I2, "I3": blow.tail_I3},
        "smallness": {"critical": small.critical, "electron": small.electron},
    }
    diag = Path(args.run) / "diagnostics.csv"
    if diag.is_file():
        with open(diag) as fh:
            rel = [float(row["energy_defect_rel"]) for row in csv.DictReader(fh)]
        summary["max_energy_defect_rel"] = max(rel, default=0.0)
    (out / "analysis.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(json.dumps(summary, indent=2))
    return EXIT_OK


# compare


def _rescaling_map(a, b):
    """Map run B (unit parameters) onto the variables of run A (h = 2**m)."""
    pa, pb = a.params, b.params
    m = math.log2(pa.h) if pa.h > 0 else -1.0
    if m < 1 or m != int(m):
        raise UsageError(f"rescaling needs run A with h = 2**m, m >= 1; got h = {pa.h}")
    m = int(m)
    expected = PhysParams(1.0, pa.nu / pa.mu, 1.0)
    if not np.allclose([pb.mu, pb.nu, pb.h], [expected.mu, expected.nu, expected.h], rtol=1e-12):
        raise UsageError(f"run B must use params {expected}, got {pb}")
    ga, gb = a.states[0].grid, b.states[0].grid
    if gb.n != ga.n:
        raise UsageError(f"grid sizes differ: {ga.n} vs {gb.n}")
    h, mu = pa.h, pa.mu
    regrid = math.isclose(gb.length, ga.length / h, rel_tol=1e-12)
    if not regrid and not math.isclose(gb.length, ga.length, rel_tol=1e-12):
        raise UsageError(f"run B period {gb.length} is neither {ga.length} nor {ga.length / h}")

    def mapping(state: ExtendedState) -> ExtendedState:
        fields = [SpectralField(ga, f.coeffs) if regrid else contract_modes(f, m)
                  for f in state.fields]
        u, B, J = fields
        return ExtendedState((mu / h) * u, (mu / h) * B, (mu / h**2) * J, t=h * h * state.t / mu)

    return mapping


def _identity_map(a, b):
    if a.states[0].grid != b.states[0].grid:
        raise UsageError(f"grids differ: {a.states[0].grid} vs {b.states[0].grid}")
    if a.params != b.params:
        raise UsageError(f"parameters differ: {a.params} vs {b.params}")
    return lambda s: s


def compare_runs(a, b, mode: str) -> list[list[float]]:
    """Distance rows ``[t, |du|, |dB|, |dJ|, |dU|, |dU| / |U_A|]`` at common times."""
    a_states = [_as_extended(s, a.params) for s in a.states]
    b_states = [_as_extended(s, b.params) for s in b.states]
    a = type(a)(a.manifest, a.times, a_states, a.params)
    b = type(b)(b.manifest, b.times, b_states, b.params)
    mapping = _rescaling_map(a, b) if mode == "rescaling" else _identity_map(a, b)
    mapped = [mapping(s) for s in b_states]
    rows = []
    for sa in a_states:
        match = [sb for sb in mapped if math.isclose(sb.t, sa.t, rel_tol=1e-9, abs_tol=1e-12)]
        if not match:
            continue
        sb = match[0]
        d = [(fa - fb).norm() for fa, fb in zip(sa.fields, sb.fields)]
        total = math.sqrt(sum(x * x for x in d))
        size = math.sqrt(sum(f.norm() ** 2 for f in sa.fields))
        rows.append([sa.t, *d, total, total / size if size > 0 else total])
    if not rows:
        raise UsageError("the runs share no common (mapped) output times")
    return rows


def cmd_compare(args) -> int:
    a, b = _load(args.run_a), _load(args.run_b)
    rows = compare_runs(a, b, args.mode)
    header = ["t", "dist_u", "dist_B", "dist_J", "dist", "rel_dist"]
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(x)) for x in row])
    finally:
        if args.out:
            fh.close()
    return EXIT_OK


# entry point


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hallmhd", description="Hall-MHD spectral experiments")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("simulate", help="run a configured simulation")
    p.add_argument("--config", help="YAML run configuration")
    p.add_argument("--out", help="output directory (overrides output.directory)")
    p.add_argument("--seed", type=int, help="override the configured seed")
    p.add_argument("--strict-deterministic", action="store_true",
                   help="single-threaded transforms for bit-reproducible output")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="run an invariant suite")
    p.add_argument("--suite", help=f"one of: {', '.join(SUITES)}")
    p.add_argument("--strict-deterministic", action="store_true")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("analyze", help="post-process a run directory")
    p.add_argument("run", help="run directory written by simulate")
    p.add_argument("--out", help="directory for analysis files (default: the run)")
    p.add_argument("--rho", type=float, default=4.0, help="exponent of the third monitor")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("compare", help="distance between two runs")
    p.add_argument("run_a")
    p.add_argument("run_b")
    p.add_argument("--mode", required=True, choices=COMPARE_MODES)
    p.add_argument("--out", help="CSV path (default: stdout)")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        args.argv = argv
        return args.func(args)
    except UsageError as exc:
        print(f"hallmhd: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        # --help and --version
        return int(exc.code or 0)
