"""Batch front end: solve, verify, sweep, and game-value experiments.

Four subcommands share one configuration format (see ``config``):

    mfglab solve  --config run.json --out results/
    mfglab verify --config run.json --out results/ solution.mfgs [other.mfgs]
    mfglab sweep  --config run.json --out results/ --jobs 4
    mfglab isaacs --config run.json --out results/

Exit codes: 0 success, 1 configuration or IO error (the message names the
offending key), 2 solver non-convergence, 3 verification failure (the report
and stderr list the failing checks by name).

Outputs are deterministic: identical config and seed produce byte-identical
files. JSON is written with sorted keys and two-space indentation, CSV with
17-significant-digit floats and newline line endings, and no report embeds
timestamps or host details. Non-finite numbers are serialized as null in
JSON and as ``nan``/``inf`` text in CSV.

The environment variable MFGLAB_LOG (error, warn, info, debug) sets the log
level; unknown values fall back to warn with a complaint.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .config import (
    build_guesses,
    build_problem,
    build_solver_config,
    load_config,
)
from .diagnostics import (
    default_residual_gate,
    density_bounds_check,
    energy_inequalities,
    gradient_bound_check,
    uniqueness_energy_series,
)
from .errors import (
    BlowUpError,
    ConfigError,
    GameHasNoValueError,
    NotConvergedError,
    ResidualTooLargeError,
)
from .fixed_point import solve_mfg, uniqueness_probe
from .fp import fp_residual
from .hamiltonian import (
    DiscreteGame,
    check_uniqueness_smallness,
    game_hamiltonian,
    isaacs_lower,
    isaacs_upper,
)
from .hjb import hjb_residual
from .solution_io import read_solution, write_solution

__all__ = ["main"]

log = logging.getLogger(__name__)

_LOG_LEVELS = {
    "error": logging.ERROR,
    "warn": logging.WARNING,
    "info": logging.INFO,
    "debug": logging.DEBUG,
}

VALUE_TOL = 1e-12
SWEEP_COLUMNS = ("c0", "threshold_1_over_12M", "converged", "iters", "dispersion")


def _setup_logging() -> None:
    raw = os.environ.get("MFGLAB_LOG", "warn").strip().lower()
    level = _LOG_LEVELS.get(raw, logging.WARNING)
    logging.basicConfig(
        level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s"
    )
    logging.getLogger().setLevel(level)
    if raw not in _LOG_LEVELS:
        log.warning(
            "MFGLAB_LOG=%r is not one of error/warn/info/debug; using warn", raw
        )


# -- deterministic serialization -------------------------------------------


def _sanitize(obj):
    """JSON-native copy: numpy scalars unwrapped, non-finite floats -> null."""
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, np.ndarray):
        return _sanitize(obj.tolist())
    return obj


def _write_json(path: Path, doc: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_sanitize(doc), fh, sort_keys=True, indent=2, allow_nan=False)
        fh.write("\n")


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return "%.17g" % float(value)


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


# -- solve -------------------------------------------------------------------


def _cmd_solve(doc: dict, out: Path, seed: int) -> int:
    problem = build_problem(doc)
    solver_cfg = build_solver_config(doc, problem.grid)
    try:
        sol = solve_mfg(problem, solver_cfg)
    except BlowUpError as exc:
        print(f"error: iteration left the trust region: {exc}", file=sys.stderr)
        return 2
    write_solution(out / "solution.mfgs", problem.grid, sol.u, sol.m)
    _write_csv(
        out / "residual_history.csv",
        ("iteration", "residual"),
        [(k + 1, r) for k, r in enumerate(sol.residual_history)],
    )
    report = {
        "config": doc,
        "seed": seed,
        "converged": sol.converged,
        "iterations": sol.iterations,
        "final_residual": sol.final_residual,
        "tol": solver_cfg.tol,
        "density_bounds": density_bounds_check(
            problem.grid, sol.m, problem.m_cap
        ).to_json_dict(),
        "gradient_bound": gradient_bound_check(sol.u, problem).to_json_dict(),
        "smallness": check_uniqueness_smallness(
            problem.hamiltonian, problem.m_cap
        ).to_json_dict(),
        "uniqueness_guarded": sol.uniqueness_guarded,
    }
    _write_json(out / "solve_report.json", report)
    if not sol.converged:
        print(
            f"not converged after {sol.iterations} sweeps "
            f"(final residual {sol.final_residual:.3e} > tol {solver_cfg.tol:.3e})",
            file=sys.stderr,
        )
        return 2
    log.info("solve converged in %d sweeps", sol.iterations)
    return 0


# -- verify --------------------------------------------------------------------


def _cmd_verify(doc: dict, out: Path, seed: int, paths) -> int:
    if not 1 <= len(paths) <= 2:
        raise ConfigError("verify takes one or two solution paths")
    problem = build_problem(doc)
    grid = problem.grid
    tolerance = grid.dt + grid.h
    gate_override = doc.get("verify", {}).get("max_residual")

    loaded = []
    for path in paths:
        g, u, m = read_solution(path)
        if g != grid:
            raise ConfigError(
                f"{path}: solution grid (dim={g.dim}, n={g.n}, nt={g.nt}, "
                f"t_final={g.t_final:g}) does not match the configured grid"
            )
        loaded.append((str(path), u, m))

    failing = []
    blocks = []
    gates = []
    for idx, (path, u, m) in enumerate(loaded, start=1):
        tag = f"solution{idx}"
        density = density_bounds_check(grid, m, problem.m_cap)
        gradient = gradient_bound_check(u, problem)
        res_u = hjb_residual(problem, u, m)
        res_m = fp_residual(problem, u, m)
        gate = (
            float(gate_override)
            if gate_override is not None
            else default_residual_gate(problem, u, m)
        )
        gates.append(gate)
        checks = {
            "density_bounds": bool(density.holds),
            "gradient_bound": bool(gradient.holds),
            "hjb_residual": bool(res_u <= gate),
            "fp_residual": bool(res_m <= gate),
        }
        failing.extend(f"{tag}.{name}" for name, ok in checks.items() if not ok)
        blocks.append(
            {
                "path": path,
                "density_bounds": density.to_json_dict(),
                "gradient_bound": gradient.to_json_dict(),
                "hjb_residual": res_u,
                "fp_residual": res_m,
                "residual_gate": gate,
                "checks": checks,
            }
        )

    pair = None
    if len(loaded) == 2 and not failing:
        (_, u1, m1), (_, u2, m2) = loaded
        gate = max(gates)
        try:
            series = uniqueness_energy_series(
                u1, m1, u2, m2, problem, max_residual=gate
            )
            energy = energy_inequalities(u1, m1, u2, m2, problem, max_residual=gate)
        except ResidualTooLargeError as exc:
            log.warning("pair checks skipped: %s", exc)
            failing.append("pair.residual_gate")
        else:
            _write_csv(
                out / "phi_series.csv",
                ("time", "phi", "weighted_phi"),
                list(zip(series.times, series.values, series.weighted)),
            )
            checks = {
                "phi_decay": bool(series.decay_violation <= tolerance),
                "energy_cross": bool(energy.cross_violation <= tolerance),
                "energy_value": bool(energy.value_violation <= tolerance),
                "energy_density": bool(energy.density_violation <= tolerance),
            }
            failing.extend(f"pair.{name}" for name, ok in checks.items() if not ok)
            pair = {
                "phi_initial": float(series.values[0]),
                "phi_terminal": float(series.values[-1]),
                "decay_violation": series.decay_violation,
                "energy": energy.to_json_dict(),
                "checks": checks,
            }

    report = {
        "config": doc,
        "seed": seed,
        "passed": not failing,
        "failing_checks": sorted(failing),
        "tolerance": tolerance,
        "solutions": blocks,
        "pair": pair,
    }
    _write_json(out / "verify_report.json", report)
    if failing:
        print("verification failed: " + ", ".join(sorted(failing)), file=sys.stderr)
        return 3
    return 0


# -- sweep -----------------------------------------------------------------------


def _sweep_row(payload) -> tuple:
    """One sweep row; module-level so process pools can pickle it.

    Rows run undamped by default (sweep.theta overrides): the iteration
    count of the raw map is the contraction-rate readout the sweep is after,
    and damping would pin it near log(tol)/log(1-theta) for every small c0.
    """
    doc_json, c0 = payload
    doc = json.loads(doc_json)
    dim = doc["grid"]["dim"]
    if c0 > 0.0:
        doc["hamiltonian"] = {"family": "sine", "c": 2.0 * c0 / (math.sqrt(dim) + 1.0)}
    else:
        doc["hamiltonian"] = {"family": "zero"}
    doc.setdefault("solver", {})["theta"] = doc.get("sweep", {}).get("theta", 1.0)
    problem = build_problem(doc)
    solver_cfg = build_solver_config(doc, problem.grid)
    guesses = build_guesses(doc, problem)
    threshold = 1.0 / (12.0 * max(problem.m_cap, 1.0))
    try:
        report = uniqueness_probe(problem, guesses, solver_cfg)
    except NotConvergedError as exc:
        iters = (
            max(exc.report.branch_iterations)
            if exc.report is not None and exc.report.branch_iterations
            else solver_cfg.max_iter
        )
        return (c0, threshold, False, iters, math.nan)
    except BlowUpError:
        return (c0, threshold, False, solver_cfg.max_iter, math.nan)
    return (c0, threshold, True, max(report.branch_iterations), report.dispersion)


def _cmd_sweep(doc: dict, out: Path, jobs: int, seed: int) -> int:
    section = doc.get("sweep")
    if section is None:
        raise ConfigError("config error at sweep: required section is missing")
    payload_doc = json.dumps(doc, sort_keys=True)
    payloads = [(payload_doc, float(c0)) for c0 in section["c0_values"]]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_row, payloads))
    else:
        rows = [_sweep_row(p) for p in payloads]
    _write_csv(out / "sweep.csv", SWEEP_COLUMNS, rows)
    log.info("sweep finished: %d rows", len(rows))
    return 0


# -- game values --------------------------------------------------------------


def _cmd_isaacs(doc: dict, out: Path, seed: int) -> int:
    section = doc.get("isaacs")
    if section is None:
        raise ConfigError("config error at isaacs: required section is missing")
    path = section["game_path"]
    try:
        game = DiscreteGame.load(path)
    except OSError as exc:
        raise ConfigError(f"cannot read game {path}: {exc}") from exc
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        raise ConfigError(f"malformed game {path}: {exc}") from exc

    p_min = float(section.get("p_min", -math.pi))
    p_max = float(section.get("p_max", math.pi))
    if not p_min < p_max:
        raise ConfigError(
            f"config error at isaacs.p_min: need p_min < p_max, got [{p_min}, {p_max}]"
        )
    p_count = int(section.get("p_count", 33))
    axes = [np.linspace(p_min, p_max, p_count) for _ in range(game.dim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    samples = np.stack([ax.ravel() for ax in mesh])

    lower = np.atleast_1d(isaacs_lower(game, samples))
    upper = np.atleast_1d(isaacs_upper(game, samples))
    gap = lower - upper
    worst = int(np.argmax(gap))
    has_value = bool(gap[worst] <= VALUE_TOL)

    header = tuple(f"p{i + 1}" for i in range(game.dim)) + ("lower", "upper", "gap")
    rows = [
        tuple(samples[:, j]) + (lower[j], upper[j], gap[j])
        for j in range(samples.shape[1])
    ]
    _write_csv(out / "isaacs_table.csv", header, rows)

    induced_exported = False
    if section.get("export_induced", False):
        if has_value:
            try:
                model = game_hamiltonian(
                    game, samples, fd_step=float(section.get("fd_step", 1e-4))
                )
            except GameHasNoValueError:
                has_value = False
            else:
                _write_json(
                    out / "induced_hamiltonian.json",
                    {
                        "dim": game.dim,
                        "c0": model.c0,
                        "c0_certified": False,
                        "p": [samples[i] for i in range(game.dim)],
                        "value": np.atleast_1d(model.value(samples)),
                        "grad": [g for g in np.atleast_2d(model.grad(samples))],
                    },
                )
                induced_exported = True
        else:
            log.warning(
                "induced Hamiltonian not exported: game has no value "
                "(max gap %.3e at p=%s)",
                gap[worst],
                samples[:, worst],
            )

    _write_json(
        out / "isaacs_report.json",
        {
            "config": doc,
            "seed": seed,
            "dim": game.dim,
            "num_actions": list(game.num_actions),
            "lattice": {
                "p_min": p_min,
                "p_max": p_max,
                "p_count": p_count,
                "points": samples.shape[1],
            },
            "has_value": has_value,
            "max_gap": float(gap[worst]),
            "gap_argmax": samples[:, worst],
            "induced_exported": induced_exported,
        },
    )
    return 0


# -- entry point ---------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mfglab",
        description="Coupled value/density solver and verification toolbox.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", required=True, help="run configuration JSON")
        p.add_argument("--out", default=".", help="output directory (default: .)")
        p.add_argument("--jobs", type=int, default=1, help="worker processes")
        p.add_argument("--seed", type=int, default=0, help="RNG seed, unsigned 64-bit")

    p_solve = sub.add_parser("solve", help="run the coupled solver")
    common(p_solve)
    p_verify = sub.add_parser("verify", help="check exported solutions")
    common(p_verify)
    p_verify.add_argument(
        "solutions", nargs="+", help="one or two solution files to verify"
    )
    p_sweep = sub.add_parser("sweep", help="smallness-threshold sweep")
    common(p_sweep)
    p_isaacs = sub.add_parser("isaacs", help="tabulate game values over momenta")
    common(p_isaacs)
    return parser


def main(argv=None) -> int:
    _setup_logging()
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1

    if not 0 <= args.seed < 2**64:
        print(f"error: --seed must be unsigned 64-bit, got {args.seed}", file=sys.stderr)
        return 1
    if args.jobs < 1:
        print(f"error: --jobs must be at least 1, got {args.jobs}", file=sys.stderr)
        return 1

    try:
        doc = load_config(args.config)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "solve":
            return _cmd_solve(doc, out, args.seed)
        if args.command == "verify":
            return _cmd_verify(doc, out, args.seed, args.solutions)
        if args.command == "sweep":
            return _cmd_sweep(doc, out, args.jobs, args.seed)
        return _cmd_isaacs(doc, out, args.seed)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
