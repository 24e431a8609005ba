"""Strict YAML run configuration.

Schema (every key optional unless marked; unknown keys are errors)::

    grid:
      n: 32                    # points per axis
      length: 6.283185307179586
    time:
      dt: 1.0e-3
      T: 1.0
      save_every: 100          # steps between checkpoints
    solver:
      scheme: etd2             # etd2 | picard | picard_split | galerkin
      formulation: extended    # extended | electron (etd2 only)
      tol: 1.0e-10             # Picard tolerance
      max_iter: 50             # Picard iteration cap
      friedrichs_n: null       # Galerkin band radius
      dealias: true
    params:
      mu: 1.0
      nu: 1.0
      h: 1.0
    initial:
      family: single_mode      # or zero, two_mode_interaction, ...
      amplitude: 1.0e-3
      modes: [[1, 0, 0], [0, 1, 0]]
      band: 3                  # random_bandlimited only
      snapshot: null           # checkpoint directory; replaces family
      rescale:                 # optional: map the data to unit parameters
        m: 1                   # source Hall number h = 2**m
        mu: 1.0                # source viscosity
    diagnostics:
      besov: [[0.5, 2, 1], [2.5, 2, 1]]
      rho: 4.0                 # exponent of the third blow-up monitor
    output:
      directory: runs/example
    seed: 0

Errors carry the file name and the line of the offending node.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import yaml

from .equations import PhysParams
from .initial import FAMILIES
from .solver import FORMULATIONS, SCHEMES, SolverConfig

__all__ = ["ConfigError", "InitialSpec", "RunConfig", "load_config", "parse_config"]

INITIAL_FAMILIES = ("zero",) + FAMILIES


class ConfigError(ValueError):
    """Invalid configuration; the message names the file and line."""


@dataclass(frozen=True)
class InitialSpec:
    family: str = "single_mode"
    amplitude: float = 1e-3
    modes: tuple[tuple[int, int, int], ...] | None = None
    band: int = 3
    snapshot: str | None = None
    rescale_m: int = 0
    rescale_mu: float = 1.0


@dataclass(frozen=True)
class RunConfig:
    """Everything needed to reproduce a run."""

    solver: SolverConfig
    initial: InitialSpec = field(default_factory=InitialSpec)
    length: float = 2 * math.pi
    rho: float = 4.0
    output_dir: str | None = None
    seed: int = 0
    data: dict = field(default_factory=dict)
    text: str = ""

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(self.text.encode()).hexdigest()


# Node validation


def _where(source: str, node: yaml.Node) -> str:
    return f"{source}:{node.start_mark.line + 1}"


def _scalar(node: yaml.Node, source: str, key: str) -> Any:
    if not isinstance(node, yaml.ScalarNode):
        raise ConfigError(f"{_where(source, node)}: '{key}' must be a scalar")
    return yaml.safe_load(yaml.serialize(node))


def _as_int(node, source, key):
    value = _scalar(node, source, key)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{_where(source, node)}: '{key}' must be an integer, got {value!r}")
    return value


def _as_float(node, source, key):
    value = _scalar(node, source, key)
    if isinstance(value, str):
        # YAML 1.1 reads exponents without a dot (1e-3) as strings
        try:
            value = float(value)
        except ValueError:
            pass
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{_where(source, node)}: '{key}' must be a number, got {value!r}")
    return float(value)


def _as_bool(node, source, key):
    value = _scalar(node, source, key)
    if not isinstance(value, bool):
        raise ConfigError(f"{_where(source, node)}: '{key}' must be true or false")
    return value


def _as_str(node, source, key):
    value = _scalar(node, source, key)
    if not isinstance(value, str):
        raise ConfigError(f"{_where(source, node)}: '{key}' must be a string")
    return value


def _nullable(convert: Callable) -> Callable:
    def inner(node, source, key):
        if isinstance(node, yaml.ScalarNode) and _scalar(node, source, key) is None:
            return None
        return convert(node, source, key)
    return inner


def _choice(options: tuple[str, ...]) -> Callable:
    def inner(node, source, key):
        value = _as_str(node, source, key)
        if value not in options:
            raise ConfigError(
                f"{_where(source, node)}: '{key}' must be one of {', '.join(options)}; got {value!r}"
            )
        return value
    return inner


def _triples(convert: Callable) -> Callable:
    def inner(node, source, key):
        if not isinstance(node, yaml.SequenceNode):
            raise ConfigError(f"{_where(source, node)}: '{key}' must be a list of triples")
        out = []
        for item in node.value:
            if not isinstance(item, yaml.SequenceNode) or len(item.value) != 3:
                raise ConfigError(f"{_where(source, item)}: '{key}' entries must have 3 numbers")
            out.append(tuple(convert(c, source, key) for c in item.value))
        return tuple(out)
    return inner


SCHEMA: dict[str, Any] = {
    "grid": {"n": _as_int, "length": _as_float},
    "time": {"dt": _as_float, "T": _as_float, "save_every": _as_int},
    "solver": {
        "scheme": _choice(SCHEMES),
        "formulation": _choice(FORMULATIONS),
        "tol": _as_float,
        "max_iter": _as_int,
        "friedrichs_n": _nullable(_as_float),
        "dealias": _as_bool,
    },
    "params": {"mu": _as_float, "nu": _as_float, "h": _as_float},
    "initial": {
        "family": _choice(INITIAL_FAMILIES),
        "amplitude": _as_float,
        "modes": _nullable(_triples(_as_int)),
        "band": _as_int,
        "snapshot": _nullable(_as_str),
        "rescale": {"m": _as_int, "mu": _as_float},
    },
    "diagnostics": {"besov": _triples(_as_float), "rho": _as_float},
    "output": {"directory": _nullable(_as_str)},
    "seed": _as_int,
}


def _walk(node: yaml.Node, schema: dict, source: str, path: str) -> dict:
    if not isinstance(node, yaml.MappingNode):
        raise ConfigError(f"{_where(source, node)}: '{path or 'document'}' must be a mapping")
    out: dict[str, Any] = {}
    for key_node, value_node in node.value:
        key = _scalar(key_node, source, "key")
        name = f"{path}.{key}" if path else str(key)
        if key not in schema:
            allowed = ", ".join(schema)
            raise ConfigError(f"{_where(source, key_node)}: unknown key '{name}' (allowed: {allowed})")
        if key in out:
            raise ConfigError(f"{_where(source, key_node)}: duplicate key '{name}'")
        spec = schema[key]
        if isinstance(spec, dict):
            out[key] = _walk(value_node, spec, source, name)
        else:
            out[key] = spec(value_node, source, name)
    return out


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    """Parse and validate configuration text."""
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = f":{mark.line + 1}" if mark is not None else ""
        raise ConfigError(f"{source}{line}: {getattr(exc, 'problem', exc)}") from None
    data = {} if root is None else _walk(root, SCHEMA, source, "")
    grid = data.get("grid", {})
    time = data.get("time", {})
    solver = data.get("solver", {})
    initial = dict(data.get("initial", {}))
    diagnostics = data.get("diagnostics", {})
    try:
        params = PhysParams(**data.get("params", {}))
        kwargs = {**{k: v for k, v in grid.items() if k == "n"}, **time, **solver}
        if "besov" in diagnostics:
            kwargs["besov_specs"] = diagnostics["besov"]
        solver_config = SolverConfig(params=params, **kwargs)
        rescale = initial.pop("rescale", {})
        spec = InitialSpec(
            **initial, rescale_m=rescale.get("m", 0), rescale_mu=rescale.get("mu", 1.0)
        )
        if spec.rescale_m < 0 or spec.rescale_mu <= 0:
            raise ValueError("initial.rescale needs m >= 0 and mu > 0")
        length = grid.get("length", 2 * math.pi)
        if not length > 0:
            raise ValueError("grid.length must be positive")
        rho = diagnostics.get("rho", 4.0)
        if not 2 < rho < math.inf:
            raise ValueError("diagnostics.rho must lie in (2, inf)")
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{source}: {exc}") from None
    return RunConfig(
        solver=solver_config,
        initial=spec,
        length=length,
        rho=rho,
        output_dir=data.get("output", {}).get("directory"),
        seed=data.get("seed", 0),
        data=data,
        text=text,
    )


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    return parse_config(text, str(path))
