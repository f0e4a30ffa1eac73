"""Run-configuration loading: presets, schema validation, object building.

A run configuration is a single JSON document. A ``preset`` key names one of
the documents shipped under ``mfglab/presets``; the named document is loaded
first and the remaining user keys are deep-merged over it, so a config of
``{"preset": "sine-a4", "grid": {"n": 128}}`` is the preset at doubled
spatial resolution. The merged document is validated against the published
schema (``mfglab/schemas/run_config.schema.json``) before anything is built;
validation failures carry the dotted path of the offending key.
"""

from __future__ import annotations

import json
from importlib import resources

import jsonschema
import numpy as np

from .coupling import Kernel, make_kernel, zero_kernel
from .errors import ConfigError, GridMismatchError, InvalidDensityError
from .fixed_point import SolverConfig
from .grid import TorusGrid
from .hamiltonian import (
    DiscreteGame,
    HamiltonianModel,
    game_hamiltonian,
    make_drift_plus,
    make_nonconvex_sine,
    make_zero,
)
from .problem import MfgProblem

__all__ = [
    "load_config",
    "validate_config",
    "load_schema",
    "build_grid",
    "build_hamiltonian",
    "build_kernel",
    "build_initial_value",
    "build_terminal_density",
    "build_problem",
    "build_solver_config",
    "build_guesses",
    "PRESET_NAMES",
    "GUESS_KINDS",
]

PRESET_NAMES = ("trivial", "sine-a4", "drift")
GUESS_KINDS = ("uniform", "terminal_constant", "mix")

_GAME_SAMPLES_DEFAULT = 129
_GAME_FD_STEP_DEFAULT = 1e-4


def load_schema(name: str) -> dict:
    """Load a published schema document by file name stem."""
    path = resources.files("mfglab") / "schemas" / f"{name}.schema.json"
    with path.open("r", encoding="utf-8") as fh:
        return json.load(fh)


def _load_preset(name: str) -> dict:
    if name not in PRESET_NAMES:
        raise ConfigError(
            f"config error at preset: unknown preset {name!r}, "
            f"expected one of {', '.join(PRESET_NAMES)}"
        )
    path = resources.files("mfglab") / "presets" / f"{name}.json"
    with path.open("r", encoding="utf-8") as fh:
        return json.load(fh)


def _deep_merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = value
    return out


def _dotted(error: jsonschema.ValidationError) -> str:
    parts = [str(p) for p in error.absolute_path]
    return ".".join(parts) if parts else "config"


def validate_config(doc: dict) -> dict:
    """Validate a merged config document; raise ConfigError with dotted path."""
    schema = load_schema("run_config")
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(doc), key=lambda e: len(list(e.absolute_path)))
    if errors:
        best = jsonschema.exceptions.best_match(errors)
        raise ConfigError(f"config error at {_dotted(best)}: {best.message}")
    return doc


def load_config(source) -> dict:
    """Load, preset-resolve, and validate a run configuration.

    ``source`` is a file path or an already-parsed dict. Returns the merged,
    validated document.
    """
    if isinstance(source, dict):
        doc = dict(source)
    else:
        try:
            with open(source, "r", encoding="utf-8") as fh:
                doc = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {source}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {source} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config error at config: document must be a JSON object")
    preset = doc.pop("preset", None)
    if preset is not None:
        if not isinstance(preset, str):
            raise ConfigError("config error at preset: must be a string")
        doc = _deep_merge(_load_preset(preset), doc)
    return validate_config(doc)


def _require(doc: dict, key: str) -> dict:
    if key not in doc:
        raise ConfigError(f"config error at {key}: required section is missing")
    return doc[key]


def _load_array(path: str, what: str) -> np.ndarray:
    try:
        return np.load(path, allow_pickle=False)
    except OSError as exc:
        raise ConfigError(f"config error at {what}.path: cannot read {path}: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"config error at {what}.path: {path} is not a plain array: {exc}") from exc


def build_grid(doc: dict) -> TorusGrid:
    spec = _require(doc, "grid")
    try:
        return TorusGrid(
            dim=spec["dim"], n=spec["n"], t_final=spec["t_final"], nt=spec["nt"]
        )
    except ValueError as exc:
        raise ConfigError(f"config error at grid: {exc}") from exc


def build_hamiltonian(doc: dict, dim: int) -> HamiltonianModel:
    spec = _require(doc, "hamiltonian")
    family = spec["family"]
    if family == "zero":
        return make_zero(dim)
    if family == "sine":
        return make_nonconvex_sine(c=spec["c"], dim=dim)
    if family == "drift":
        part = spec["kernel_part"]
        if part["family"] == "sine":
            inner = make_nonconvex_sine(c=part["c"], dim=dim)
        else:
            inner = make_zero(dim)
        b = spec["b"]
        if len(b) != dim:
            raise ConfigError(
                f"config error at hamiltonian.b: got {len(b)} components for dim {dim}"
            )
        return make_drift_plus(b=b, k=inner)
    if family == "game":
        try:
            game = DiscreteGame.load(spec["path"])
        except OSError as exc:
            raise ConfigError(
                f"config error at hamiltonian.path: cannot read {spec['path']}: {exc}"
            ) from exc
        except (ValueError, KeyError, json.JSONDecodeError) as exc:
            raise ConfigError(
                f"config error at hamiltonian.path: malformed game document: {exc}"
            ) from exc
        if game.dim != dim:
            raise ConfigError(
                f"config error at hamiltonian.path: game dim {game.dim} != grid dim {dim}"
            )
        samples = _sample_lattice(
            spec.get("p_min", -np.pi),
            spec.get("p_max", np.pi),
            spec.get("samples", _GAME_SAMPLES_DEFAULT),
            dim,
        )
        return game_hamiltonian(
            game, samples, fd_step=spec.get("fd_step", _GAME_FD_STEP_DEFAULT)
        )
    raise ConfigError(f"config error at hamiltonian.family: unknown family {family!r}")


def _sample_lattice(p_min: float, p_max: float, count: int, dim: int) -> np.ndarray:
    axes = [np.linspace(p_min, p_max, count) for _ in range(dim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([ax.ravel() for ax in mesh])


def build_kernel(doc: dict, grid: TorusGrid) -> Kernel:
    spec = _require(doc, "kernel")
    kind = spec["kind"]
    if kind == "zero":
        return zero_kernel(grid)
    if kind == "bump":
        try:
            return make_kernel(grid, width=spec["width"])
        except ValueError as exc:
            raise ConfigError(f"config error at kernel.width: {exc}") from exc
    if kind == "file":
        try:
            return Kernel.load(spec["path"], grid)
        except OSError as exc:
            raise ConfigError(
                f"config error at kernel.path: cannot read {spec['path']}: {exc}"
            ) from exc
        except (ValueError, KeyError, json.JSONDecodeError) as exc:
            raise ConfigError(
                f"config error at kernel.path: malformed kernel document: {exc}"
            ) from exc
    raise ConfigError(f"config error at kernel.kind: unknown kind {kind!r}")


def _trig_field(grid: TorusGrid, modes: list, base: float) -> np.ndarray:
    coords = grid.coords()
    field = np.full(grid.shape, base)
    for mode in modes:
        freq = np.asarray(mode["frequency"], dtype=float)
        if freq.shape != (grid.dim,):
            raise ConfigError(
                "config error at m_terminal.modes: frequency must have "
                f"{grid.dim} components, got {freq.tolist()}"
            )
        phase = float(mode.get("phase", 0.0))
        arg = 2.0 * np.pi * sum(freq[i] * coords[i] for i in range(grid.dim)) + phase
        field = field + float(mode["amplitude"]) * np.cos(arg)
    return field


def build_initial_value(doc: dict, grid: TorusGrid) -> np.ndarray:
    spec = _require(doc, "u0")
    kind = spec["kind"]
    if kind == "zero":
        return np.zeros(grid.shape)
    if kind == "cosine":
        field = _trig_field(
            grid,
            [
                {
                    "frequency": spec["frequency"],
                    "amplitude": spec["amplitude"],
                    "phase": spec.get("phase", 0.0),
                }
            ],
            base=0.0,
        )
        return field
    if kind == "file":
        arr = _load_array(spec["path"], "u0")
        if arr.shape != grid.shape:
            raise ConfigError(
                f"config error at u0.path: array shape {arr.shape} != grid shape {grid.shape}"
            )
        return np.asarray(arr, dtype=float)
    raise ConfigError(f"config error at u0.kind: unknown kind {kind!r}")


def build_terminal_density(doc: dict, grid: TorusGrid) -> np.ndarray:
    spec = _require(doc, "m_terminal")
    kind = spec["kind"]
    if kind == "uniform":
        return np.ones(grid.shape)
    if kind == "trig-mixture":
        field = _trig_field(grid, spec["modes"], base=1.0)
        lo = float(np.min(field))
        if lo <= 0.0:
            raise ConfigError(
                f"config error at m_terminal.modes: mixture has min {lo:.3e} <= 0; "
                "reduce the amplitudes"
            )
        return field / float(grid.integrate(field))
    if kind == "file":
        arr = _load_array(spec["path"], "m_terminal")
        if arr.shape != grid.shape:
            raise ConfigError(
                f"config error at m_terminal.path: array shape {arr.shape} != "
                f"grid shape {grid.shape}"
            )
        return np.asarray(arr, dtype=float)
    raise ConfigError(f"config error at m_terminal.kind: unknown kind {kind!r}")


def build_problem(doc: dict) -> MfgProblem:
    """Assemble the full problem from a validated config document."""
    grid = build_grid(doc)
    hamiltonian = build_hamiltonian(doc, grid.dim)
    kernel = build_kernel(doc, grid)
    u0 = build_initial_value(doc, grid)
    m_terminal = build_terminal_density(doc, grid)
    try:
        return MfgProblem(
            grid=grid,
            hamiltonian=hamiltonian,
            kernel=kernel,
            u0=u0,
            m_terminal=m_terminal,
        )
    except (InvalidDensityError, GridMismatchError) as exc:
        raise ConfigError(f"config error at m_terminal: {exc}") from exc


def build_solver_config(doc: dict, grid: TorusGrid) -> SolverConfig:
    spec = doc.get("solver", {})
    custom = None
    if "custom_guess_path" in spec:
        custom = _load_array(spec["custom_guess_path"], "solver.custom_guess_path")
        expected = (grid.nt + 1,) + grid.shape
        if custom.shape != expected:
            raise ConfigError(
                "config error at solver.custom_guess_path: array shape "
                f"{custom.shape} != space-time shape {expected}"
            )
    try:
        return SolverConfig(
            theta=spec.get("theta", 0.5),
            tol=spec.get("tol", 1e-9),
            max_iter=spec.get("max_iter", 50),
            initial_guess=spec.get("initial_guess", "uniform"),
            custom_guess=custom,
            record_history=spec.get("record_history", True),
            anderson_depth=spec.get("anderson_depth", 0),
        )
    except ValueError as exc:
        raise ConfigError(f"config error at solver: {exc}") from exc


def build_guesses(doc: dict, problem: MfgProblem) -> list:
    """Starting trajectories for multi-start runs, from solver.guesses."""
    names = doc.get("solver", {}).get("guesses", list(GUESS_KINDS))
    shape = (problem.grid.nt + 1,) + problem.grid.shape
    out = []
    for name in names:
        if name == "uniform":
            out.append(np.ones(shape))
        elif name == "terminal_constant":
            out.append(np.broadcast_to(problem.m_terminal, shape).copy())
        elif name == "mix":
            out.append(
                np.broadcast_to(0.5 * (1.0 + problem.m_terminal), shape).copy()
            )
        else:
            raise ConfigError(
                f"config error at solver.guesses: unknown guess kind {name!r}"
            )
    return out
